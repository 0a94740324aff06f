"""Loss terms scored against a candidate (cover frame, sentence) pair.

Four ingredients, combined by :func:`quartet_loss`:

* document coverage — transport cost between the term-frequency
  distributions of the candidate sentence and the full document, with
  ground cost 1 - cosine between token embeddings;
* video coverage — transport cost between colour signatures of the
  selected frame and of the video's mean frame, with Euclidean RGB cost;
* fluency — mean per-token negative log-likelihood under an add-k n-gram
  language model;
* cross-modal agreement — cosine distance between the frame embedding and
  the mean embedding of the selected words.
"""

from __future__ import annotations

import math
import struct
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .embed import EmbeddingMatrix, _seeded_rng
from .errors import EmptyInputError, FormatError
from .transport import SolverConfig, cosine_cost, euclidean_cost, solve_ot, wasserstein

BOS = "<s>"
EOS = "</s>"

_LM_MAGIC = b"NGLM"
_LM_VERSION = 1


# ---------------------------------------------------------------------------
# document coverage


def tf_distribution(tokens: list[str], vocab_index: dict[str, int]) -> np.ndarray:
    """Term-frequency measure over a fixed vocabulary, summing to 1.

    Tokens outside the vocabulary contribute nothing; if none of the
    tokens are in the vocabulary there is no distribution to build.
    """
    weights = np.zeros(len(vocab_index))
    hit = False
    for tok in tokens:
        row = vocab_index.get(tok)
        if row is not None:
            weights[row] += 1.0
            hit = True
    if not hit:
        raise EmptyInputError("no token fell inside the distribution vocabulary")
    return weights / weights.sum()


def coverage_cost(mu: np.ndarray, nu: np.ndarray, cost: np.ndarray, config: SolverConfig | None = None) -> float:
    """Transport cost between two measures under ``cost``."""
    plan = solve_ot(mu, nu, cost, config)
    return wasserstein(plan, cost)


def document_coverage(
    doc_tokens: list[str],
    summary_tokens: list[str],
    token_embs: EmbeddingMatrix,
    config: SolverConfig | None = None,
) -> float:
    """How far the summary's word usage sits from the document's.

    Both texts are reduced to term-frequency distributions over the union
    of their token types; the reported value is the optimal transport cost
    between them with 1 - cosine ground cost, so a summary reusing the
    document's distribution exactly scores 0.
    """
    vocab = sorted(set(doc_tokens) | set(summary_tokens))
    if not vocab:
        raise EmptyInputError("no tokens on either side")
    index = {tok: i for i, tok in enumerate(vocab)}
    embs = np.stack([token_embs.row(tok) for tok in vocab]).astype(np.float64)
    cost = cosine_cost(embs, embs)
    mu = tf_distribution(summary_tokens, index)
    nu = tf_distribution(doc_tokens, index)
    return coverage_cost(mu, nu, cost, config)


# ---------------------------------------------------------------------------
# video coverage


def mean_frame(frames) -> np.ndarray:
    """Pixel-wise average frame of a (T, H, W, 3) stack."""
    items = [np.asarray(f, dtype=np.float64) for f in frames]
    if not items:
        raise EmptyInputError("expected at least one frame")
    shapes = {f.shape for f in items}
    if len(shapes) > 1:
        raise ValueError(f"frames disagree on resolution: {sorted(shapes)}")
    stack = np.stack(items)
    if stack.ndim != 4 or stack.shape[-1] != 3:
        raise ValueError(f"expected (H, W, 3) frames, got shape {stack.shape[1:]}")
    return stack.mean(axis=0)


def _kmeans_pp(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    first = int(rng.integers(points.shape[0]))
    centroids = [points[first]]
    d2 = np.sum((points - points[first]) ** 2, axis=1)
    while len(centroids) < k:
        total = float(d2.sum())
        if total <= 1e-24:
            break  # every pixel already coincides with a centroid
        nxt = int(rng.choice(points.shape[0], p=d2 / total))
        centroids.append(points[nxt])
        d2 = np.minimum(d2, np.sum((points - points[nxt]) ** 2, axis=1))
    return np.stack(centroids)


def color_signature(frame: np.ndarray, clusters: int = 8, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Cluster a frame's pixels into a weighted colour palette.

    Returns ``(weights, centroids)`` where weights are pixel fractions and
    centroids are RGB rows sorted lexicographically. Seeding and iteration
    are fully deterministic for a given (frame, clusters, seed). Clusters
    that collapse onto one another are merged, so fewer than ``clusters``
    colours come back for flat images.
    """
    frame = np.asarray(frame, dtype=np.float64)
    if frame.ndim != 3 or frame.shape[-1] != 3 or frame.size == 0:
        raise EmptyInputError(f"expected a non-empty (H, W, 3) frame, got shape {frame.shape}")
    if clusters < 1:
        raise ValueError(f"clusters must be >= 1, got {clusters}")
    points = frame.reshape(-1, 3)
    rng = _seeded_rng("color-signature", clusters, seed)
    cents = _kmeans_pp(points, min(clusters, points.shape[0]), rng)

    for _ in range(100):
        d2 = ((points[:, None, :] - cents[None, :, :]) ** 2).sum(axis=2)
        assign = np.argmin(d2, axis=1)
        counts = np.bincount(assign, minlength=cents.shape[0])
        new = cents.copy()
        for ci in np.flatnonzero(counts):
            new[ci] = points[assign == ci].mean(axis=0)
        if float(np.max(np.abs(new - cents))) < 1e-10:
            cents = new
            break
        cents = new

    d2 = ((points[:, None, :] - cents[None, :, :]) ** 2).sum(axis=2)
    assign = np.argmin(d2, axis=1)
    counts = np.bincount(assign, minlength=cents.shape[0]).astype(np.float64)
    keep = counts > 0
    cents, counts = cents[keep], counts[keep]

    # Merge centroids that landed on (numerically) the same colour.
    merged_c: list[np.ndarray] = []
    merged_w: list[float] = []
    for cent, cnt in zip(cents, counts):
        for mi, existing in enumerate(merged_c):
            if float(np.max(np.abs(existing - cent))) < 1e-8:
                w = merged_w[mi]
                merged_c[mi] = (existing * w + cent * cnt) / (w + cnt)
                merged_w[mi] = w + cnt
                break
        else:
            merged_c.append(cent)
            merged_w.append(float(cnt))

    cents = np.stack(merged_c)
    weights = np.asarray(merged_w) / points.shape[0]
    order = np.lexsort((cents[:, 2], cents[:, 1], cents[:, 0]))
    return weights[order], cents[order]


def video_coverage(
    frames: np.ndarray,
    cover: np.ndarray,
    clusters: int = 8,
    seed: int = 0,
    config: SolverConfig | None = None,
) -> float:
    """Transport cost between the cover frame's palette and the video's.

    The video side is the colour signature of the mean frame; ground cost
    is Euclidean distance in RGB, so a pure-black cover against a
    pure-white video costs sqrt(3).
    """
    w_video, c_video = color_signature(mean_frame(frames), clusters, seed)
    w_cover, c_cover = color_signature(cover, clusters, seed)
    cost = euclidean_cost(c_cover, c_video)
    return coverage_cost(w_cover, w_video, cost, config)


# ---------------------------------------------------------------------------
# fluency


class NgramLM:
    """Add-k smoothed n-gram model scoring mean per-token NLL.

    Orders >= 2 pad each sequence with ``order - 1`` start symbols and one
    end symbol, and the end symbol is scored like any other target. Order 1
    uses no padding at all: the score of a sequence is just the mean
    unigram surprisal of its tokens.
    """

    def __init__(self, order: int = 3, add_k: float = 0.1):
        if order < 1:
            raise ValueError(f"order must be >= 1, got {order}")
        if add_k < 0:
            raise ValueError(f"add_k must be >= 0, got {add_k}")
        self.order = order
        self.add_k = float(add_k)
        self.ngram_counts: Counter[tuple[str, ...]] = Counter()
        self.context_counts: Counter[tuple[str, ...]] = Counter()
        self.vocab: set[str] = set()

    def _padded(self, tokens: list[str]) -> list[str]:
        if self.order == 1:
            return list(tokens)
        return [BOS] * (self.order - 1) + list(tokens) + [EOS]

    def fit(self, sequences: list[list[str]]) -> "NgramLM":
        total = 0
        for seq in sequences:
            padded = self._padded(seq)
            self.vocab.update(seq)
            if self.order > 1:
                self.vocab.add(EOS)
            for pos in range(self.order - 1, len(padded)):
                gram = tuple(padded[pos - self.order + 1 : pos + 1])
                self.ngram_counts[gram] += 1
                self.context_counts[gram[:-1]] += 1
                total += 1
        if total == 0:
            raise EmptyInputError("cannot fit a language model on zero tokens")
        return self

    def _nll(self, gram: tuple[str, ...]) -> float:
        num = self.ngram_counts.get(gram, 0) + self.add_k
        den = self.context_counts.get(gram[:-1], 0) + self.add_k * len(self.vocab)
        if num <= 0.0 or den <= 0.0:
            return math.inf
        return -math.log(num / den)

    def score(self, tokens: list[str]) -> float:
        """Mean negative log-likelihood per scored position."""
        if not self.vocab:
            raise ValueError("language model has not been fitted")
        padded = self._padded(tokens)
        if len(padded) == self.order - 1:
            raise EmptyInputError("cannot score an empty sequence with an unpadded model")
        nll = 0.0
        count = 0
        for pos in range(self.order - 1, len(padded)):
            nll += self._nll(tuple(padded[pos - self.order + 1 : pos + 1]))
            count += 1
        return nll / count

    # -- persistence --------------------------------------------------------

    def save(self, path) -> None:
        vocab = sorted(self.vocab)
        index = {tok: i for i, tok in enumerate(vocab)}
        index[BOS] = len(vocab)  # start symbol never appears as a target
        chunks = [struct.pack("<4sIId", _LM_MAGIC, _LM_VERSION, self.order, self.add_k)]
        chunks.append(struct.pack("<I", len(vocab)))
        for tok in vocab:
            raw = tok.encode("utf-8")
            chunks.append(struct.pack("<H", len(raw)) + raw)
        grams = sorted(self.ngram_counts.items())
        chunks.append(struct.pack("<I", len(grams)))
        for gram, count in grams:
            chunks.append(struct.pack(f"<{self.order}IQ", *(index[t] for t in gram), count))
        with open(path, "wb") as fh:
            fh.write(b"".join(chunks))

    @classmethod
    def load(cls, path) -> "NgramLM":
        with open(path, "rb") as fh:
            data = fh.read()
        head = struct.Struct("<4sIId")
        if len(data) < head.size:
            raise FormatError("language model file is truncated")
        magic, version, order, add_k = head.unpack_from(data, 0)
        if magic != _LM_MAGIC:
            raise FormatError(f"bad magic {magic!r}, expected {_LM_MAGIC!r}")
        if version != _LM_VERSION:
            raise FormatError(f"unsupported language model version {version}")
        offset = head.size
        try:
            (n_vocab,) = struct.unpack_from("<I", data, offset)
            offset += 4
            vocab = []
            for _ in range(n_vocab):
                (tok_len,) = struct.unpack_from("<H", data, offset)
                offset += 2
                if offset + tok_len > len(data):
                    raise FormatError(f"language model file truncated at offset {offset}")
                vocab.append(data[offset : offset + tok_len].decode("utf-8"))
                offset += tok_len
            lm = cls(order=order, add_k=add_k)
            lm.vocab = set(vocab)
            lookup = list(vocab) + [BOS]
            (n_grams,) = struct.unpack_from("<I", data, offset)
            offset += 4
            entry = struct.Struct(f"<{order}IQ")
            for _ in range(n_grams):
                fields = entry.unpack_from(data, offset)
                offset += entry.size
                gram = tuple(lookup[i] for i in fields[:-1])
                lm.ngram_counts[gram] = fields[-1]
                lm.context_counts[gram[:-1]] += fields[-1]
        except struct.error as exc:
            raise FormatError(f"language model file truncated at offset {offset}") from exc
        if offset != len(data):
            raise FormatError(f"trailing bytes after offset {offset}")
        return lm


# ---------------------------------------------------------------------------
# cross-modal agreement and the combined loss


def cross_modal(frame_emb: np.ndarray, sentence_emb: np.ndarray) -> float:
    """Cosine distance between a frame embedding and a sentence embedding."""
    f = np.asarray(frame_emb, dtype=np.float64)
    s = np.asarray(sentence_emb, dtype=np.float64)
    nf, ns = float(np.linalg.norm(f)), float(np.linalg.norm(s))
    if nf == 0.0 or ns == 0.0:
        raise ValueError("cross-modal term is undefined for zero vectors")
    return min(max(float(1.0 - (f @ s) / (nf * ns)), 0.0), 2.0)


def lm_train(corpus: list[list[str]], order: int = 3, add_k: float = 0.1) -> NgramLM:
    """Fit an add-k n-gram model on a list of token sequences."""
    return NgramLM(order=order, add_k=add_k).fit(corpus)


def lm_score(lm: NgramLM, tokens: list[str]) -> float:
    """Mean per-token NLL of ``tokens`` under ``lm`` (lower reads as more fluent)."""
    return lm.score(tokens)


@dataclass(frozen=True)
class LossWeights:
    lambda_document: float = 1.0
    lambda_video: float = 1.0
    lambda_fluency: float = 1.0
    lambda_cross_modal: float = 1.0

    def __post_init__(self):
        for name in ("lambda_document", "lambda_video", "lambda_fluency", "lambda_cross_modal"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be finite and nonnegative, got {value}")


@dataclass(frozen=True)
class LossBreakdown:
    document: float
    video: float
    fluency: float
    cross_modal: float
    total: float


def quartet_loss(
    document: float,
    video: float,
    fluency: float,
    cross_modal: float,
    weights: LossWeights = LossWeights(),
) -> LossBreakdown:
    """Weighted sum of the four loss terms, keeping the parts alongside."""
    total = (
        weights.lambda_document * document
        + weights.lambda_video * video
        + weights.lambda_fluency * fluency
        + weights.lambda_cross_modal * cross_modal
    )
    return LossBreakdown(document, video, fluency, cross_modal, total)
