"""Evaluation metrics: ROUGE, frame accuracy, concept IoU, overall score."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .embed import EmbeddingMatrix, toy_embed_frame


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def rouge_n(candidate: list[str], reference: list[str], n: int) -> RougeScore:
    """Clipped n-gram overlap F-score."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    cand = _ngrams(candidate, n)
    ref = _ngrams(reference, n)
    overlap = sum(min(count, ref[gram]) for gram, count in cand.items())
    total_cand = sum(cand.values())
    total_ref = sum(ref.values())
    precision = overlap / total_cand if total_cand else 0.0
    recall = overlap / total_ref if total_ref else 0.0
    return RougeScore(precision, recall, _f1(precision, recall))


def _lcs_length(a: list[str], b: list[str]) -> int:
    # One-row DP; b runs along the inner loop.
    prev = [0] * (len(b) + 1)
    for tok_a in a:
        row = [0]
        for j, tok_b in enumerate(b):
            row.append(prev[j] + 1 if tok_a == tok_b else max(row[j], prev[j + 1]))
        prev = row
    return prev[-1]


def rouge_l(candidate: list[str], reference: list[str]) -> RougeScore:
    """Longest-common-subsequence F-score."""
    if not candidate or not reference:
        return RougeScore(0.0, 0.0, 0.0)
    lcs = _lcs_length(candidate, reference)
    precision = lcs / len(candidate)
    recall = lcs / len(reference)
    return RougeScore(precision, recall, _f1(precision, recall))


def _resize_to(frame: np.ndarray, height: int, width: int) -> np.ndarray:
    channels = [
        np.asarray(
            Image.fromarray(frame[:, :, c].astype(np.float32), mode="F").resize(
                (width, height), Image.BILINEAR
            )
        )
        for c in range(3)
    ]
    return np.stack(channels, axis=-1).astype(np.float64)


def frame_accuracy(candidate: np.ndarray, reference: np.ndarray, threshold: float = 0.3) -> bool:
    """True when the mean per-pixel RGB distance falls under the threshold.

    Distances live in [0, sqrt(3)] for unit-cube colours, so the default
    threshold of 0.3 accepts only close matches. A candidate at a
    different resolution is resampled to the reference's first.
    """
    cand = np.asarray(candidate, dtype=np.float64)
    ref = np.asarray(reference, dtype=np.float64)
    if cand.ndim != 3 or ref.ndim != 3 or cand.shape[-1] != 3 or ref.shape[-1] != 3:
        raise ValueError("frames must be (H, W, 3) arrays")
    if cand.shape != ref.shape:
        cand = _resize_to(cand, ref.shape[0], ref.shape[1])
    distance = float(np.sqrt(((cand - ref) ** 2).sum(axis=-1)).mean())
    return distance < threshold


def _top_concepts(frame_emb: np.ndarray, concepts: EmbeddingMatrix, c: int) -> frozenset[int]:
    data = concepts.data.astype(np.float64)
    norms = np.linalg.norm(data, axis=1)
    norms = np.where(norms > 0, norms, 1.0)
    emb_norm = float(np.linalg.norm(frame_emb))
    sims = (data @ frame_emb) / (norms * (emb_norm if emb_norm > 0 else 1.0))
    ranked = np.argsort(-sims, kind="stable")  # ties keep the lower concept row
    return frozenset(int(i) for i in ranked[:c])


def iou_concepts(
    candidate: np.ndarray,
    reference: np.ndarray,
    concepts: EmbeddingMatrix,
    c: int = 5,
    frame_embedder=None,
) -> float:
    """Jaccard overlap of the two frames' nearest concept sets.

    A frame's concepts are the ``c`` concept-vocabulary rows closest in
    cosine to its embedding. ``frame_embedder`` maps a frame to a vector
    in the concept space; by default the deterministic toy embedder at
    the vocabulary's dimension.
    """
    if len(concepts.ids) == 0:
        raise ValueError("concept vocabulary is empty")
    if not 1 <= c <= len(concepts.ids):
        raise ValueError(f"c must be in [1, {len(concepts.ids)}], got {c}")
    if frame_embedder is None:
        frame_embedder = lambda frame: toy_embed_frame(frame, concepts.dim)
    set_a = _top_concepts(np.asarray(frame_embedder(candidate), dtype=np.float64), concepts, c)
    set_b = _top_concepts(np.asarray(frame_embedder(reference), dtype=np.float64), concepts, c)
    return len(set_a & set_b) / len(set_a | set_b)


def overall(rouge_l_score: float, iou: float, best_rouge_l: float, best_iou: float) -> float:
    """Average of the two ratios against the per-metric best systems."""
    if best_rouge_l <= 0 or best_iou <= 0:
        raise ValueError("per-metric bests must be positive")
    return 0.5 * iou / best_iou + 0.5 * rouge_l_score / best_rouge_l
