"""Hierarchical pooling: frame -> scene -> video and word -> sentence -> document.

Each level pools with a rank-weighted operator: per output dimension the
input values are sorted descending and combined with a weight per rank.
Uniform weights reduce every level to an arithmetic mean, which is the
default when no parameter file is loaded.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import SceneSpan, SentenceSpan
from .errors import EmptyInputError


@dataclass(frozen=True)
class PoolParams:
    """Rank weights for sorted pooling; ``weights=None`` means uniform (mean).

    Stored weights have a fixed length L. For an input of k values the
    weights are resampled to length k by linear interpolation and rescaled
    to preserve their sum, so uniform weights stay an exact mean at every
    length.
    """

    weights: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=np.float64)
            if w.ndim != 1 or w.shape[0] == 0:
                raise ValueError(f"rank weights must be a non-empty vector, got shape {w.shape}")
            if not np.all(np.isfinite(w)):
                raise ValueError("rank weights must be finite")
            object.__setattr__(self, "weights", w)

    def for_length(self, k: int) -> np.ndarray:
        if self.weights is None:
            return np.full(k, 1.0 / k)
        w = self.weights
        if w.shape[0] == k:
            return w
        positions = np.linspace(0.0, 1.0, k) if k > 1 else np.array([0.0])
        source = np.linspace(0.0, 1.0, w.shape[0]) if w.shape[0] > 1 else np.array([0.0])
        resampled = np.interp(positions, source, w)
        total = resampled.sum()
        if abs(total) > 1e-12:
            resampled = resampled * (w.sum() / total)
        return resampled


@dataclass
class HierEncoding:
    """Scene/video and sentence/document representations for one pair."""

    scene_embs: np.ndarray
    video_emb: np.ndarray
    sentence_embs: np.ndarray
    doc_emb: np.ndarray


def gpo_pool(vectors: np.ndarray, params: PoolParams | None = None) -> np.ndarray:
    """Rank-weighted pool of k vectors down to one vector.

    Per dimension, the k values are sorted descending and dotted with the
    rank weights (resampled to length k). ``params=None`` or uniform
    weights give the mean; weights (1, 0, ..., 0) give the per-dimension
    max.
    """
    vectors = np.asarray(vectors, dtype=np.float64)
    if vectors.ndim != 2 or vectors.shape[0] == 0:
        raise EmptyInputError(f"gpo_pool needs a non-empty (k, d) array, got shape {vectors.shape}")
    params = params or PoolParams()
    weights = params.for_length(vectors.shape[0])
    ordered = -np.sort(-vectors, axis=0)  # descending per dimension
    return weights @ ordered


def encode_video(
    frame_embs: np.ndarray,
    scenes: list[SceneSpan],
    scene_pool: PoolParams | None = None,
    video_pool: PoolParams | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Pool frames into scene embeddings, then scenes into one video embedding."""
    frame_embs = np.asarray(frame_embs, dtype=np.float64)
    for span in scenes:
        if span.end_frame > frame_embs.shape[0]:
            raise ValueError(f"scene span {span} out of range for {frame_embs.shape[0]} frames")
    scene_embs = np.stack([gpo_pool(frame_embs[span.slice], scene_pool) for span in scenes])
    video_emb = gpo_pool(scene_embs, video_pool)
    return scene_embs, video_emb


def encode_document(
    word_embs: np.ndarray,
    sentences: list[SentenceSpan],
    sentence_pool: PoolParams | None = None,
    document_pool: PoolParams | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Pool words into sentence embeddings, then sentences into one document embedding."""
    word_embs = np.asarray(word_embs, dtype=np.float64)
    for span in sentences:
        if span.end_word > word_embs.shape[0]:
            raise ValueError(f"sentence span {span} out of range for {word_embs.shape[0]} words")
    sentence_embs = np.stack([gpo_pool(word_embs[span.slice], sentence_pool) for span in sentences])
    doc_emb = gpo_pool(sentence_embs, document_pool)
    return sentence_embs, doc_emb


def encode_pair(
    frame_embs: np.ndarray,
    scenes: list[SceneSpan],
    word_embs: np.ndarray,
    sentences: list[SentenceSpan],
    pools: dict[str, PoolParams] | None = None,
) -> HierEncoding:
    """Run both hierarchical encoders; ``pools`` may carry per-level parameters."""
    pools = pools or {}
    scene_embs, video_emb = encode_video(
        frame_embs, scenes, pools.get("scene"), pools.get("video")
    )
    sentence_embs, doc_emb = encode_document(
        word_embs, sentences, pools.get("sentence"), pools.get("document")
    )
    return HierEncoding(
        scene_embs=scene_embs,
        video_emb=video_emb,
        sentence_embs=sentence_embs,
        doc_emb=doc_emb,
    )
