"""Cross-modal fusion via single-head graph attention.

Local fusion lets every scene attend over each sentence (and vice versa)
and averages the attended outputs; global fusion runs a two-node graph
over the video and document embeddings and averages the two node updates.
With the default identity/zero parameters the whole layer collapses to
cross-modal averaging, which the tests use as a closed-form oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .hier_encode import HierEncoding
from .errors import EmptyInputError


@dataclass
class GatParams:
    """Projection, attention vector, and leaky-relu slope of one attention module.

    ``w`` is the d x d projection (identity by default), ``a`` the length-2d
    attention vector (zero by default, making attention uniform).
    """

    w: np.ndarray | None = None
    a: np.ndarray | None = None
    leaky_slope: float = 0.2

    def resolved(self, dim: int) -> tuple[np.ndarray, np.ndarray]:
        w = np.eye(dim) if self.w is None else np.asarray(self.w, dtype=np.float64)
        a = np.zeros(2 * dim) if self.a is None else np.asarray(self.a, dtype=np.float64)
        if w.shape != (dim, dim):
            raise ValueError(f"projection shape {w.shape} does not match dim {dim}")
        if a.shape != (2 * dim,):
            raise ValueError(f"attention vector shape {a.shape} does not match 2*dim {2 * dim}")
        return w, a


@dataclass
class FusedContext:
    """Per-scene, per-sentence, and global fused representations."""

    fused_scenes: np.ndarray
    fused_sentences: np.ndarray
    fused_global: np.ndarray


def _leaky_relu(x: np.ndarray, slope: float) -> np.ndarray:
    return np.where(x >= 0, x, slope * x)


def gat_attend(query: np.ndarray, neighbors: np.ndarray, params: GatParams | None = None) -> np.ndarray:
    """Attend ``query`` over ``neighbors``; returns the attention-weighted sum.

    Scores are leaky-relu(a . [Wq || Wn_j]) softmaxed over neighbors; the
    output is sum_j alpha_j W n_j. The caller chooses whether the query
    itself appears among the neighbors.
    """
    query = np.asarray(query, dtype=np.float64)
    neighbors = np.asarray(neighbors, dtype=np.float64)
    if neighbors.ndim != 2 or neighbors.shape[0] == 0:
        raise EmptyInputError("gat_attend needs at least one neighbor")
    params = params or GatParams()
    dim = query.shape[0]
    w, a = params.resolved(dim)
    wq = w @ query
    wn = neighbors @ w.T
    scores = _leaky_relu(a[:dim] @ wq + wn @ a[dim:], params.leaky_slope)
    scores = scores - scores.max()  # softmax shift for stability
    alpha = np.exp(scores)
    alpha /= alpha.sum()
    return alpha @ wn


def fuse_local(
    scene_embs: np.ndarray,
    sentence_embs: np.ndarray,
    scene_params: GatParams | None = None,
    sentence_params: GatParams | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Exchange information between the scene and sentence levels.

    Each scene attends over every sentence separately and the outputs are
    averaged (and symmetrically for sentences), so the fused value of one
    side is order-free in the other side.
    """
    scene_embs = np.asarray(scene_embs, dtype=np.float64)
    sentence_embs = np.asarray(sentence_embs, dtype=np.float64)
    if scene_embs.ndim != 2 or scene_embs.shape[0] == 0:
        raise EmptyInputError("fuse_local needs at least one scene embedding")
    if sentence_embs.ndim != 2 or sentence_embs.shape[0] == 0:
        raise EmptyInputError("fuse_local needs at least one sentence embedding")
    fused_scenes = np.stack([
        np.mean([gat_attend(q, sentence_embs[n:n + 1], scene_params)
                 for n in range(sentence_embs.shape[0])], axis=0)
        for q in scene_embs
    ])
    fused_sentences = np.stack([
        np.mean([gat_attend(q, scene_embs[j:j + 1], sentence_params)
                 for j in range(scene_embs.shape[0])], axis=0)
        for q in sentence_embs
    ])
    return fused_scenes, fused_sentences


def fuse_global(
    video_emb: np.ndarray,
    doc_emb: np.ndarray,
    params: GatParams | None = None,
) -> np.ndarray:
    """Two-node graph over the video and document embeddings.

    Both nodes attend over the full node set (self included) and the two
    updates are averaged, so swapping the inputs leaves the result
    unchanged.
    """
    video_emb = np.asarray(video_emb, dtype=np.float64)
    doc_emb = np.asarray(doc_emb, dtype=np.float64)
    nodes = np.stack([video_emb, doc_emb])
    updates = [gat_attend(q, nodes, params) for q in nodes]
    return np.mean(updates, axis=0)


def fuse_pair(
    hier: HierEncoding,
    params: dict[str, GatParams] | None = None,
) -> FusedContext:
    """Run local and global fusion; ``params`` may carry per-module parameters."""
    params = params or {}
    fused_scenes, fused_sentences = fuse_local(
        hier.scene_embs, hier.sentence_embs, params.get("scene"), params.get("sentence")
    )
    fused_global = fuse_global(hier.video_emb, hier.doc_emb, params.get("global"))
    return FusedContext(
        fused_scenes=fused_scenes,
        fused_sentences=fused_sentences,
        fused_global=fused_global,
    )
