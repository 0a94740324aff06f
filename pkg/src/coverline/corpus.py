"""Dataset ingestion: manifests, tokenisation, sentence and scene structure.

A corpus is a JSON Lines manifest; every entry points at a directory of
frame images and a document text file, optionally with a reference title
and reference cover image. Loading an entry produces a
:class:`VideoDocPair` whose sentence spans partition the word sequence and
whose scene spans partition the frame sequence. All span indices are
1-based and inclusive, matching the record formats emitted by the CLI.
"""

from __future__ import annotations

import json
import re
import string
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np
from PIL import Image

from .errors import EmptyInputError

IMAGE_EXTENSIONS = {".png", ".jpg", ".jpeg", ".bmp", ".webp"}

_PUNCT_TABLE = str.maketrans({c: " " for c in string.punctuation})
_SENTENCE_SPLIT = re.compile(r"[.!?]+")

Tokenizer = Callable[[str], list[str]]


@dataclass(frozen=True)
class SentenceSpan:
    """Inclusive 1-based word range of one sentence."""

    start_word: int
    end_word: int

    def __post_init__(self) -> None:
        if not 1 <= self.start_word <= self.end_word:
            raise ValueError(f"bad sentence span ({self.start_word}, {self.end_word})")

    @property
    def slice(self) -> slice:
        return slice(self.start_word - 1, self.end_word)


@dataclass(frozen=True)
class SceneSpan:
    """Inclusive 1-based frame range of one scene."""

    start_frame: int
    end_frame: int

    def __post_init__(self) -> None:
        if not 1 <= self.start_frame <= self.end_frame:
            raise ValueError(f"bad scene span ({self.start_frame}, {self.end_frame})")

    @property
    def slice(self) -> slice:
        return slice(self.start_frame - 1, self.end_frame)


@dataclass(frozen=True)
class ManifestEntry:
    id: str
    frames_dir: Path
    document_path: Path
    ref_title: str | None = None
    ref_cover_path: Path | None = None


@dataclass
class Manifest:
    """Ordered collection of dataset entries with unique, non-empty ids."""

    entries: list[ManifestEntry]

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for entry in self.entries:
            if not entry.id:
                raise ValueError("manifest entry with empty id")
            if entry.id in seen:
                raise ValueError(f"duplicate manifest id {entry.id!r}")
            seen.add(entry.id)
            if not str(entry.frames_dir) or not str(entry.document_path):
                raise ValueError(f"manifest entry {entry.id!r} has an empty path")

    def __iter__(self):
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    @classmethod
    def load(cls, path: str | Path) -> "Manifest":
        """Read a JSON Lines manifest; relative paths resolve against its directory."""
        path = Path(path)
        if not path.is_file():
            raise FileNotFoundError(f"manifest not found: {path}")
        base = path.parent
        entries = []
        with path.open("r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    raw = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ValueError(f"{path}:{lineno}: invalid JSON ({exc})") from exc
                try:
                    entries.append(
                        ManifestEntry(
                            id=str(raw["id"]),
                            frames_dir=_resolve(base, raw["frames_dir"]),
                            document_path=_resolve(base, raw["document_path"]),
                            ref_title=raw.get("ref_title"),
                            ref_cover_path=(
                                _resolve(base, raw["ref_cover_path"])
                                if raw.get("ref_cover_path")
                                else None
                            ),
                        )
                    )
                except KeyError as exc:
                    raise ValueError(f"{path}:{lineno}: missing field {exc}") from exc
        return cls(entries)


def _resolve(base: Path, value: str) -> Path:
    p = Path(value)
    return p if p.is_absolute() else base / p


@dataclass
class VideoDocPair:
    """One video/document pair with its hierarchical index structure.

    ``frames`` holds T RGB images as float32 arrays (H, W, 3) in [0, 1],
    all at one resolution; ``scenes`` partitions 1..T. ``words`` holds U
    tokens and ``sentences`` partitions 1..U.
    """

    id: str
    frames: list[np.ndarray]
    scenes: list[SceneSpan]
    words: list[str]
    sentences: list[SentenceSpan]
    ref_title: list[str] | None = None
    ref_cover: np.ndarray | None = None
    frame_paths: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.frames:
            raise EmptyInputError(f"pair {self.id!r} has no frames")
        if not self.words:
            raise EmptyInputError(f"pair {self.id!r} has no words")
        shapes = {f.shape for f in self.frames}
        if len(shapes) != 1:
            raise ValueError(f"pair {self.id!r} mixes frame resolutions: {sorted(shapes)}")
        _check_partition([(s.start_frame, s.end_frame) for s in self.scenes], len(self.frames), "scene")
        _check_partition([(s.start_word, s.end_word) for s in self.sentences], len(self.words), "sentence")

    @property
    def num_frames(self) -> int:
        return len(self.frames)

    @property
    def num_words(self) -> int:
        return len(self.words)


def _check_partition(spans: Sequence[tuple[int, int]], total: int, what: str) -> None:
    expected = 1
    for start, end in spans:
        if start != expected:
            raise ValueError(f"{what} spans do not partition 1..{total} (gap/overlap at {start})")
        expected = end + 1
    if expected != total + 1:
        raise ValueError(f"{what} spans cover 1..{expected - 1}, expected 1..{total}")


def tokenize(text: str) -> list[str]:
    """Lowercase, replace punctuation with spaces, split on whitespace."""
    return text.lower().translate(_PUNCT_TABLE).split()


def split_sentences(text: str, tokenizer: Tokenizer = tokenize) -> tuple[list[str], list[SentenceSpan]]:
    """Tokenise ``text`` and delimit sentences at terminal punctuation.

    Segments are cut at runs of ``. ! ?``; a trailing unterminated segment
    forms the final sentence, so text with no terminal punctuation comes
    back as a single sentence. Segments that tokenise to nothing are
    dropped. Returns the flat token list plus spans that partition it.
    """
    words: list[str] = []
    spans: list[SentenceSpan] = []
    for segment in _SENTENCE_SPLIT.split(text):
        tokens = tokenizer(segment)
        if not tokens:
            continue
        start = len(words) + 1
        words.extend(tokens)
        spans.append(SentenceSpan(start, len(words)))
    return words, spans


def cosine_distance(a: np.ndarray, b: np.ndarray) -> float:
    """1 - cosine similarity, in [0, 2]. Zero-norm inputs count as distance 1."""
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 1.0
    return float(1.0 - np.dot(a, b) / (na * nb))


def segment_scenes(frame_embeddings: np.ndarray | Sequence[np.ndarray], threshold: float) -> list[SceneSpan]:
    """Cut scene boundaries where consecutive frames drift apart.

    A boundary opens after frame ``i`` iff the cosine distance between the
    embeddings of frames ``i`` and ``i+1`` exceeds ``threshold``. The
    returned spans partition ``1..T``.
    """
    if not 0.0 <= threshold <= 2.0:
        raise ValueError(f"scene threshold must be in [0, 2], got {threshold}")
    embs = np.asarray(frame_embeddings, dtype=np.float64)
    if embs.ndim != 2 or embs.shape[0] == 0:
        raise EmptyInputError("segment_scenes needs at least one frame embedding")
    spans: list[SceneSpan] = []
    start = 1
    for i in range(embs.shape[0] - 1):
        if cosine_distance(embs[i], embs[i + 1]) > threshold:
            spans.append(SceneSpan(start, i + 1))
            start = i + 2
    spans.append(SceneSpan(start, embs.shape[0]))
    return spans


@dataclass
class LoadOptions:
    """Frame sampling, resizing, and scene segmentation knobs.

    Defaults follow the 1-in-360 sampling with a 120-frame candidate cap
    and 640x360 resize; directories that already contain pre-sampled
    frames should be loaded with ``stride=1``. ``resize=None`` keeps the
    source resolution (all frames must then agree).
    """

    stride: int = 360
    cap: int = 120
    resize: tuple[int, int] | None = (640, 360)
    scene_threshold: float = 0.35
    embed_dim: int = 512
    seed: int = 0
    frame_embeddings: np.ndarray | None = None
    tokenizer: Tokenizer = tokenize

    def __post_init__(self) -> None:
        if self.stride < 1:
            raise ValueError(f"stride must be >= 1, got {self.stride}")
        if self.cap < 1:
            raise ValueError(f"cap must be >= 1, got {self.cap}")


def sample_frame_paths(frames_dir: str | Path, stride: int = 360, cap: int = 120) -> list[Path]:
    """List frame image files in name order, then apply stride and cap."""
    frames_dir = Path(frames_dir)
    if not frames_dir.is_dir():
        raise FileNotFoundError(f"frames directory not found: {frames_dir}")
    files = sorted(p for p in frames_dir.iterdir() if p.suffix.lower() in IMAGE_EXTENSIONS)
    return files[::stride][:cap]


def load_image(path: str | Path, resize: tuple[int, int] | None = None) -> np.ndarray:
    """Load an RGB image as float32 (H, W, 3) in [0, 1], optionally resized to (W, H)."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"image not found: {path}")
    with Image.open(path) as img:
        img = img.convert("RGB")
        if resize is not None:
            img = img.resize(resize, Image.BILINEAR)
        return np.asarray(img, dtype=np.float32) / 255.0


def load_pair(entry: ManifestEntry, options: LoadOptions | None = None) -> VideoDocPair:
    """Materialise a manifest entry: sampled frames, tokens, spans, scenes.

    Scene spans are computed on the sampled frame sequence, from the
    provided embeddings when ``options.frame_embeddings`` is set and from
    the deterministic toy frame embedder otherwise.
    """
    from .embed import toy_embed_frame  # local import to avoid a cycle

    options = options or LoadOptions()
    paths = sample_frame_paths(entry.frames_dir, options.stride, options.cap)
    if not paths:
        raise EmptyInputError(f"no frame images under {entry.frames_dir}")
    frames = [load_image(p, options.resize) for p in paths]

    if not entry.document_path.is_file():
        raise FileNotFoundError(f"document not found: {entry.document_path}")
    text = entry.document_path.read_text(encoding="utf-8")
    words, sentences = split_sentences(text, options.tokenizer)
    if not words:
        raise EmptyInputError(f"document {entry.document_path} has no tokens")

    if options.frame_embeddings is not None:
        embs = np.asarray(options.frame_embeddings, dtype=np.float64)
        if embs.shape[0] != len(frames):
            raise ValueError(
                f"pair {entry.id!r}: {embs.shape[0]} frame embeddings for {len(frames)} frames"
            )
    else:
        embs = np.stack([toy_embed_frame(f, options.embed_dim) for f in frames])
    scenes = segment_scenes(embs, options.scene_threshold)

    ref_title = tokenize(entry.ref_title) if entry.ref_title else None
    ref_cover = load_image(entry.ref_cover_path, options.resize) if entry.ref_cover_path else None
    return VideoDocPair(
        id=entry.id,
        frames=frames,
        scenes=scenes,
        words=words,
        sentences=sentences,
        ref_title=ref_title,
        ref_cover=ref_cover,
        frame_paths=[str(p) for p in paths],
    )


def corpus_stats(manifest: Manifest, options: LoadOptions | None = None) -> dict:
    """Per-corpus means: frames/video, tokens/document, tokens/summary.

    Counts sampled frame files without decoding them, so this stays cheap
    on large corpora.
    """
    options = options or LoadOptions()
    frame_counts: list[int] = []
    doc_tokens: list[int] = []
    summary_tokens: list[int] = []
    for entry in manifest:
        frame_counts.append(len(sample_frame_paths(entry.frames_dir, options.stride, options.cap)))
        text = entry.document_path.read_text(encoding="utf-8")
        doc_tokens.append(len(options.tokenizer(text)))
        if entry.ref_title:
            summary_tokens.append(len(options.tokenizer(entry.ref_title)))
    def _mean(xs: Iterable[int]) -> float | None:
        xs = list(xs)
        return float(np.mean(xs)) if xs else None
    return {
        "pairs": len(manifest),
        "frames_per_video": _mean(frame_counts),
        "tokens_per_document": _mean(doc_tokens),
        "tokens_per_summary": _mean(summary_tokens),
    }
