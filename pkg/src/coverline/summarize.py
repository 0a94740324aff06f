"""Produce the (cover frame, k-word sentence) summary for one pair.

Engines:

* ``neural`` — the forward scoring path: hierarchical pooling, cross-modal
  attention fusion, guided recurrent scoring, argmax/top-k selection.
  With no parameter file this degenerates to uniform scores, so the tie
  rules pick frame 1 and words 1..k.
* ``greedy`` / ``beam`` — two-stage direct minimisation of the loss: a
  beam over word subsets scored by the text-only terms, then the best
  frame per surviving subset, then optional alternating refinement.
  Greedy is exactly beam with width 1.
* ``exhaustive`` — every subset × frame, global minimum, for small pairs.

All engines score candidates through one shared, memoised set of loss
primitives, so equal candidates get bit-identical totals in every engine
and ties resolve the same way: lexicographically smallest
(word_indices, frame_index).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

import numpy as np

from .corpus import VideoDocPair
from .decode import score_frames, score_words, select_frame, select_words
from .embed import EmbeddingMatrix, toy_embed_frame, toy_embed_tokens
from .errors import CapacityError, ValidationError
from .fusion import fuse_pair
from .hier_encode import PoolParams, encode_pair, gpo_pool
from .objective import (
    LossBreakdown,
    LossWeights,
    NgramLM,
    color_signature,
    coverage_cost,
    cross_modal,
    lm_train,
    mean_frame,
    quartet_loss,
    tf_distribution,
)
from .params import ModelParams, load_params
from .transport import SolverConfig, cosine_cost, euclidean_cost

_ORACLE_CELL_CAP = 1_000_000


@dataclass(frozen=True)
class SummaryConfig:
    """Knobs shared by every engine; defaults favour the beam path."""

    k: int = 12
    engine: str = "beam"
    beam_width: int = 4
    weights: LossWeights = field(default_factory=LossWeights)
    clusters: int = 8
    solver: SolverConfig = field(default_factory=SolverConfig)
    refine_rounds: int = 1
    embed_dim: int = 512
    hidden_size: int = 512
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.beam_width < 1:
            raise ValueError(f"beam_width must be >= 1, got {self.beam_width}")
        if self.engine not in ("neural", "greedy", "beam", "exhaustive"):
            raise ValueError(f"unknown engine {self.engine!r}")


@dataclass(frozen=True)
class ExtremeSummary:
    frame_index: int          # 1-based cover frame
    word_indices: list[int]   # 1-based, strictly increasing, length k
    sentence_text: str
    losses: LossBreakdown


class PairContext:
    """A pair plus its embeddings, language model, and memoised loss terms.

    Every engine asks this object for loss values, which caches by
    candidate content. Cached scalars are what make beam totals and
    oracle totals comparable with ``==`` rather than a tolerance.
    """

    def __init__(
        self,
        pair: VideoDocPair,
        frame_embs: np.ndarray,
        word_embs: np.ndarray,
        token_embs: EmbeddingMatrix,
        lm: NgramLM,
        clusters: int = 8,
        seed: int = 0,
        solver: SolverConfig | None = None,
    ):
        if frame_embs.shape[0] != len(pair.frames):
            raise ValidationError(
                f"{frame_embs.shape[0]} frame embeddings for {len(pair.frames)} frames"
            )
        if word_embs.shape[0] != len(pair.words):
            raise ValidationError(f"{word_embs.shape[0]} word embeddings for {len(pair.words)} words")
        if frame_embs.shape[1] != word_embs.shape[1]:
            raise ValidationError(
                f"frame embeddings are {frame_embs.shape[1]}-dimensional but word "
                f"embeddings are {word_embs.shape[1]}-dimensional"
            )
        missing = sorted(set(pair.words) - set(token_embs.ids))
        if missing:
            raise ValidationError(f"token embeddings missing document types: {missing[:5]}")
        self.pair = pair
        self.frame_embs = np.asarray(frame_embs, dtype=np.float64)
        self.word_embs = np.asarray(word_embs, dtype=np.float64)
        self.token_embs = token_embs
        self.lm = lm
        self.clusters = clusters
        self.seed = seed
        self.solver = solver or SolverConfig()

        vocab = sorted(set(pair.words))
        self._vocab_index = {tok: i for i, tok in enumerate(vocab)}
        embs = np.stack([token_embs.row(tok) for tok in vocab]).astype(np.float64)
        self._token_cost = cosine_cost(embs, embs)
        self._doc_tf = tf_distribution(list(pair.words), self._vocab_index)

        self._mean_sig = None
        self._frame_sigs: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        self._doc_cache: dict[tuple[str, ...], float] = {}
        self._flu_cache: dict[tuple[str, ...], float] = {}
        self._vid_cache: dict[int, float] = {}
        self._cm_cache: dict[tuple[int, tuple[int, ...]], float] = {}

    # -- loss primitives (1-based indices throughout) -----------------------

    def tokens_at(self, words: tuple[int, ...]) -> list[str]:
        return [self.pair.words[i - 1] for i in words]

    def doc_loss(self, words: tuple[int, ...]) -> float:
        key = tuple(sorted(self.tokens_at(words)))
        if key not in self._doc_cache:
            mu = tf_distribution(list(key), self._vocab_index)
            self._doc_cache[key] = coverage_cost(mu, self._doc_tf, self._token_cost, self.solver)
        return self._doc_cache[key]

    def flu_loss(self, words: tuple[int, ...]) -> float:
        key = tuple(self.tokens_at(words))
        if key not in self._flu_cache:
            self._flu_cache[key] = self.lm.score(list(key))
        return self._flu_cache[key]

    def vid_loss(self, frame: int) -> float:
        if frame not in self._vid_cache:
            if self._mean_sig is None:
                self._mean_sig = color_signature(mean_frame(self.pair.frames), self.clusters, self.seed)
            if frame not in self._frame_sigs:
                self._frame_sigs[frame] = color_signature(
                    self.pair.frames[frame - 1], self.clusters, self.seed
                )
            w_cover, c_cover = self._frame_sigs[frame]
            w_mean, c_mean = self._mean_sig
            cost = euclidean_cost(c_cover, c_mean)
            self._vid_cache[frame] = coverage_cost(w_cover, w_mean, cost, self.solver)
        return self._vid_cache[frame]

    def cm_loss(self, frame: int, words: tuple[int, ...]) -> float:
        key = (frame, words)
        if key not in self._cm_cache:
            sentence_emb = gpo_pool(self.word_embs[[i - 1 for i in words]], PoolParams())
            self._cm_cache[key] = cross_modal(self.frame_embs[frame - 1], sentence_emb)
        return self._cm_cache[key]

    def breakdown(self, frame: int, words: tuple[int, ...], weights: LossWeights) -> LossBreakdown:
        return quartet_loss(
            self.doc_loss(words),
            self.vid_loss(frame),
            self.flu_loss(words),
            self.cm_loss(frame, words),
            weights,
        )


def build_context(
    pair: VideoDocPair,
    config: SummaryConfig | None = None,
    frame_embs: np.ndarray | None = None,
    word_embs: np.ndarray | None = None,
    token_embs: EmbeddingMatrix | None = None,
    lm: NgramLM | None = None,
) -> PairContext:
    """Assemble a PairContext, falling back to toy embeddings and a
    pair-local trigram model for anything not supplied."""
    config = config or SummaryConfig()
    if token_embs is None:
        token_embs = toy_embed_tokens(list(pair.words), config.embed_dim, config.seed)
    if frame_embs is None:
        frame_embs = np.stack([toy_embed_frame(f, config.embed_dim) for f in pair.frames])
    if word_embs is None:
        word_embs = np.stack([token_embs.row(tok) for tok in pair.words])
    if lm is None:
        sentences = [list(pair.words[s.start_word - 1 : s.end_word]) for s in pair.sentences]
        lm = lm_train(sentences)
    return PairContext(
        pair,
        np.asarray(frame_embs, dtype=np.float64),
        np.asarray(word_embs, dtype=np.float64),
        token_embs,
        lm,
        clusters=config.clusters,
        seed=config.seed,
        solver=config.solver,
    )


def _finish(ctx: PairContext, frame: int, words: tuple[int, ...], config: SummaryConfig) -> ExtremeSummary:
    return ExtremeSummary(
        frame_index=frame,
        word_indices=list(words),
        sentence_text=" ".join(ctx.tokens_at(words)),
        losses=ctx.breakdown(frame, words, config.weights),
    )


# ---------------------------------------------------------------------------
# neural engine


def summarize_neural(
    ctx: PairContext,
    params: ModelParams | str | Path | None = None,
    config: SummaryConfig | None = None,
) -> ExtremeSummary:
    """Forward scoring path: pool, fuse, score, select; losses post-hoc."""
    config = config or SummaryConfig()
    if params is None:
        model = ModelParams.defaults(ctx.frame_embs.shape[1], config.hidden_size)
    elif isinstance(params, (str, Path)):
        model = load_params(params)
    else:
        model = params
    pair = ctx.pair
    hier = encode_pair(ctx.frame_embs, pair.scenes, ctx.word_embs, pair.sentences, model.pools)
    fused = fuse_pair(hier, model.gats)
    frame_scores = score_frames(ctx.frame_embs, pair.scenes, hier, fused, model.frame_stage)
    word_scores = score_words(ctx.word_embs, pair.sentences, hier, fused, model.word_stage)
    frame = select_frame(frame_scores)
    words = tuple(select_words(word_scores, config.k))
    return _finish(ctx, frame, words, config)


# ---------------------------------------------------------------------------
# search engines


def _beam_states(ctx: PairContext, config: SummaryConfig, width: int,
                 fixed_frame: int | None = None) -> list[tuple[int, ...]]:
    """Beam over word subsets; returns the surviving size-k states in
    lexicographic order. Partial subsets are scored by the text terms,
    plus the cross-modal term against ``fixed_frame`` during refinement."""
    w = config.weights

    def partial_score(state: tuple[int, ...]) -> float:
        score = w.lambda_document * ctx.doc_loss(state) + w.lambda_fluency * ctx.flu_loss(state)
        if fixed_frame is not None:
            score += w.lambda_cross_modal * ctx.cm_loss(fixed_frame, state)
        return score

    n_words = len(ctx.pair.words)
    beam: list[tuple[int, ...]] = [()]
    for _ in range(config.k):
        seen: set[tuple[int, ...]] = set()
        for state in beam:
            held = set(state)
            for idx in range(1, n_words + 1):
                if idx not in held:
                    seen.add(tuple(sorted(state + (idx,))))
        scored = sorted((partial_score(s), s) for s in seen)
        beam = [s for _, s in scored[:width]]
    return sorted(beam)


def _best_assignment(
    ctx: PairContext, states: list[tuple[int, ...]], config: SummaryConfig
) -> tuple[int, tuple[int, ...], float]:
    """First minimum of the full loss over states × frames, scanned in
    lexicographic order — the same tie rule the exhaustive oracle uses."""
    best = None
    for state in states:
        for frame in range(1, len(ctx.pair.frames) + 1):
            total = ctx.breakdown(frame, state, config.weights).total
            if best is None or total < best[2]:
                best = (frame, state, total)
    return best


def summarize_search(ctx: PairContext, config: SummaryConfig | None = None) -> ExtremeSummary:
    """Two-stage minimisation: beam over word subsets, then frame choice,
    then alternating refinement that only ever accepts improvements."""
    config = config or SummaryConfig()
    n_words = len(ctx.pair.words)
    if not 1 <= config.k <= n_words:
        raise ValueError(f"k must be in [1, {n_words}], got {config.k}")
    width = 1 if config.engine == "greedy" else config.beam_width

    states = _beam_states(ctx, config, width)
    frame, words, total = _best_assignment(ctx, states, config)

    for _ in range(max(config.refine_rounds, 0)):
        re_states = _beam_states(ctx, config, width, fixed_frame=frame)
        cand_frame, cand_words, cand_total = _best_assignment(ctx, re_states, config)
        better = cand_total < total
        tied_smaller = cand_total == total and (cand_words, cand_frame) < (words, frame)
        if not (better or tied_smaller):
            break
        frame, words, total = cand_frame, cand_words, cand_total
    return _finish(ctx, frame, words, config)


def exhaustive_oracle(ctx: PairContext, config: SummaryConfig | None = None) -> ExtremeSummary:
    """Global minimum by brute force; guarded by a work cap."""
    config = config or SummaryConfig()
    n_words = len(ctx.pair.words)
    n_frames = len(ctx.pair.frames)
    if not 1 <= config.k <= n_words:
        raise ValueError(f"k must be in [1, {n_words}], got {config.k}")
    cells = math.comb(n_words, config.k) * n_frames
    if cells > _ORACLE_CELL_CAP:
        raise CapacityError(
            f"exhaustive search needs {cells} evaluations, cap is {_ORACLE_CELL_CAP}"
        )
    best = None
    for words in combinations(range(1, n_words + 1), config.k):
        for frame in range(1, n_frames + 1):
            total = ctx.breakdown(frame, words, config.weights).total
            if best is None or total < best[2]:
                best = (frame, words, total)
    frame, words, _ = best
    return _finish(ctx, frame, words, config)


def summarize(ctx: PairContext, config: SummaryConfig | None = None,
              params: ModelParams | str | Path | None = None) -> ExtremeSummary:
    """Dispatch on ``config.engine``."""
    config = config or SummaryConfig()
    if config.engine == "neural":
        return summarize_neural(ctx, params, config)
    if config.engine == "exhaustive":
        return exhaustive_oracle(ctx, config)
    return summarize_search(ctx, config)
