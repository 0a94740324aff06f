"""Guided bi-directional GRU scorers for cover-frame and word selection.

Forward pass only: parameters are loaded from a file or default to zero,
in which case every score vector is exactly uniform and the tie rules
below pick the first frame and the first k words. All indices returned to
callers are 1-based.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import SceneSpan, SentenceSpan
from .hier_encode import HierEncoding
from .fusion import FusedContext


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-x))


def softmax(logits: np.ndarray) -> np.ndarray:
    z = np.exp(logits - np.max(logits))
    return z / z.sum()


@dataclass
class GruGates:
    """Update/reset/candidate gate weights for one direction."""

    w_z: np.ndarray
    w_r: np.ndarray
    w_h: np.ndarray
    u_z: np.ndarray
    u_r: np.ndarray
    u_h: np.ndarray
    b_z: np.ndarray
    b_r: np.ndarray
    b_h: np.ndarray

    @classmethod
    def zeros(cls, input_dim: int, hidden: int) -> "GruGates":
        return cls(
            w_z=np.zeros((hidden, input_dim)),
            w_r=np.zeros((hidden, input_dim)),
            w_h=np.zeros((hidden, input_dim)),
            u_z=np.zeros((hidden, hidden)),
            u_r=np.zeros((hidden, hidden)),
            u_h=np.zeros((hidden, hidden)),
            b_z=np.zeros(hidden),
            b_r=np.zeros(hidden),
            b_h=np.zeros(hidden),
        )

    @property
    def hidden(self) -> int:
        return self.w_z.shape[0]

    @property
    def input_dim(self) -> int:
        return self.w_z.shape[1]


@dataclass
class GruParams:
    """Bi-directional GRU plus the guidance projection that seeds both directions."""

    forward: GruGates
    backward: GruGates
    guidance_proj: np.ndarray  # (hidden, guidance_dim)

    @classmethod
    def zeros(cls, input_dim: int, hidden: int, guidance_dim: int) -> "GruParams":
        return cls(
            forward=GruGates.zeros(input_dim, hidden),
            backward=GruGates.zeros(input_dim, hidden),
            guidance_proj=np.zeros((hidden, guidance_dim)),
        )

    @property
    def hidden(self) -> int:
        return self.forward.hidden


def _gru_direction(inputs: np.ndarray, h0: np.ndarray, g: GruGates) -> np.ndarray:
    out = np.empty((inputs.shape[0], g.hidden))
    h = h0
    for t, x in enumerate(inputs):
        z = _sigmoid(g.w_z @ x + g.u_z @ h + g.b_z)
        r = _sigmoid(g.w_r @ x + g.u_r @ h + g.b_r)
        cand = np.tanh(g.w_h @ x + g.u_h @ (r * h) + g.b_h)
        h = (1.0 - z) * h + z * cand
        out[t] = h
    return out


def bigru_forward(inputs: np.ndarray, guidance: np.ndarray, params: GruParams) -> np.ndarray:
    """Run the GRU in both directions from a guidance-projected initial state.

    Returns the per-step concatenation (N, 2*hidden); the backward half at
    step t equals the forward recurrence applied to the reversed sequence.
    """
    inputs = np.asarray(inputs, dtype=np.float64)
    guidance = np.asarray(guidance, dtype=np.float64)
    if inputs.ndim != 2 or inputs.shape[0] == 0:
        raise ValueError(f"bigru_forward needs a non-empty (N, d) input, got shape {inputs.shape}")
    if inputs.shape[1] != params.forward.input_dim:
        raise ValueError(
            f"input dim {inputs.shape[1]} does not match GRU input dim {params.forward.input_dim}"
        )
    if guidance.shape != (params.guidance_proj.shape[1],):
        raise ValueError(
            f"guidance shape {guidance.shape} does not match projection {params.guidance_proj.shape}"
        )
    h0 = params.guidance_proj @ guidance
    fwd = _gru_direction(inputs, h0, params.forward)
    bwd = _gru_direction(inputs[::-1], h0, params.backward)[::-1]
    return np.concatenate([fwd, bwd], axis=1)


@dataclass
class StageParams:
    """The three guided GRUs plus the final linear layer of one decoder."""

    scene: GruParams      # per-segment pass, guided by the fused local context
    sequence: GruParams   # full-sequence pass, guided by the unimodal global embedding
    global_: GruParams    # pass over the sequence latents, guided by the fused global embedding
    linear_w: np.ndarray  # (2*hidden,)
    linear_b: float

    @classmethod
    def zeros(cls, input_dim: int, hidden: int, guidance_dim: int) -> "StageParams":
        return cls(
            scene=GruParams.zeros(input_dim, hidden, guidance_dim),
            sequence=GruParams.zeros(input_dim, hidden, guidance_dim),
            global_=GruParams.zeros(2 * hidden, hidden, guidance_dim),
            linear_w=np.zeros(2 * hidden),
            linear_b=0.0,
        )


def _score_sequence(
    embs: np.ndarray,
    spans: list[tuple[int, int]],
    local_guidance: np.ndarray,
    global_unimodal: np.ndarray,
    global_fused: np.ndarray,
    params: StageParams,
) -> np.ndarray:
    # Stage 1 runs per segment with its local fused guidance; its latents are
    # a side product of the three-stage scheme and do not feed stages 2-3.
    for j, (start, end) in enumerate(spans):
        bigru_forward(embs[start - 1:end], local_guidance[j], params.scene)
    stage2 = bigru_forward(embs, global_unimodal, params.sequence)
    stage3 = bigru_forward(stage2, global_fused, params.global_)
    logits = stage3 @ params.linear_w + params.linear_b
    return softmax(logits)


def score_frames(
    frame_embs: np.ndarray,
    scenes: list[SceneSpan],
    hier: HierEncoding,
    fused: FusedContext,
    params: StageParams,
) -> np.ndarray:
    """Cover-frame probability for every frame (sums to 1)."""
    return _score_sequence(
        np.asarray(frame_embs, dtype=np.float64),
        [(s.start_frame, s.end_frame) for s in scenes],
        fused.fused_scenes,
        hier.video_emb,
        fused.fused_global,
        params,
    )


def score_words(
    word_embs: np.ndarray,
    sentences: list[SentenceSpan],
    hier: HierEncoding,
    fused: FusedContext,
    params: StageParams,
) -> np.ndarray:
    """Selection probability for every word (sums to 1)."""
    return _score_sequence(
        np.asarray(word_embs, dtype=np.float64),
        [(s.start_word, s.end_word) for s in sentences],
        fused.fused_sentences,
        hier.doc_emb,
        fused.fused_global,
        params,
    )


def select_frame(scores: np.ndarray) -> int:
    """1-based argmax; ties break to the lowest index."""
    scores = np.asarray(scores)
    if scores.ndim != 1 or scores.shape[0] == 0:
        raise ValueError("select_frame needs a non-empty score vector")
    return int(np.argmax(scores)) + 1


def select_words(scores: np.ndarray, k: int) -> list[int]:
    """1-based indices of the k best-scoring words, emitted in document order.

    Ties break to the lowest index, so zero parameters select words
    1..k.
    """
    scores = np.asarray(scores)
    if scores.ndim != 1 or scores.shape[0] == 0:
        raise ValueError("select_words needs a non-empty score vector")
    if not 1 <= k <= scores.shape[0]:
        raise ValueError(f"k must be in [1, {scores.shape[0]}], got {k}")
    ranked = np.argsort(-scores, kind="stable")  # stable: equal scores keep index order
    return sorted(int(i) + 1 for i in ranked[:k])
