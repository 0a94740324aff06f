"""Embedding matrices, the XMEB on-disk format, and deterministic toy embedders.

XMEB layout (little-endian, no padding)::

    magic   4 bytes  b"XMEB"
    version u32      1
    n       u32      row count
    d       u32      embedding dimension
    records n times: id_len u16, id bytes (UTF-8), d * f32

The toy embedders stand in for pretrained models so the whole primary
pipeline runs offline: they are pure functions of their arguments and
always return unit vectors.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from io import BytesIO
from pathlib import Path
from typing import BinaryIO

import numpy as np

from .errors import EmptyInputError, FormatError

XMEB_MAGIC = b"XMEB"
XMEB_VERSION = 1

_HEADER = struct.Struct("<4sIII")
_ID_LEN = struct.Struct("<H")


@dataclass
class EmbeddingMatrix:
    """Row-per-id embedding matrix; float32 so file round-trips are bit-exact."""

    ids: list[str]
    data: np.ndarray

    def __post_init__(self) -> None:
        self.data = np.ascontiguousarray(self.data, dtype=np.float32)
        if self.data.ndim != 2:
            raise ValueError(f"embedding data must be 2-D, got shape {self.data.shape}")
        if len(self.ids) != self.data.shape[0]:
            raise ValueError(f"{len(self.ids)} ids for {self.data.shape[0]} rows")
        if len(set(self.ids)) != len(self.ids):
            raise ValueError("embedding ids must be unique")
        if self.data.size and not np.all(np.isfinite(self.data)):
            raise ValueError("embedding data contains non-finite values")
        self._index = {id_: i for i, id_ in enumerate(self.ids)}

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    def __len__(self) -> int:
        return self.data.shape[0]

    def __contains__(self, id_: str) -> bool:
        return id_ in self._index

    def row(self, id_: str) -> np.ndarray:
        try:
            return self.data[self._index[id_]]
        except KeyError:
            raise KeyError(f"no embedding for id {id_!r}") from None


def write_embeddings(matrix: EmbeddingMatrix, sink: str | Path | BinaryIO) -> int:
    """Serialise ``matrix`` as XMEB; returns the number of bytes written."""
    if isinstance(sink, (str, Path)):
        with open(sink, "wb") as fh:
            return write_embeddings(matrix, fh)
    n, d = matrix.data.shape
    written = sink.write(_HEADER.pack(XMEB_MAGIC, XMEB_VERSION, n, d))
    for id_, row in zip(matrix.ids, matrix.data):
        raw = id_.encode("utf-8")
        if len(raw) > 0xFFFF:
            raise ValueError(f"id too long for XMEB: {id_!r}")
        written += sink.write(_ID_LEN.pack(len(raw)))
        written += sink.write(raw)
        written += sink.write(row.tobytes())
    return written


def read_embeddings(source: str | Path | BinaryIO | bytes) -> EmbeddingMatrix:
    """Parse an XMEB stream; exact inverse of :func:`write_embeddings`."""
    if isinstance(source, (str, Path)):
        with open(source, "rb") as fh:
            return read_embeddings(fh)
    if isinstance(source, bytes):
        return read_embeddings(BytesIO(source))

    def take(count: int, what: str) -> bytes:
        offset = source.tell()
        chunk = source.read(count)
        if len(chunk) != count:
            raise FormatError(f"truncated XMEB: wanted {count} bytes for {what} at offset {offset}")
        return chunk

    magic, version, n, d = _HEADER.unpack(take(_HEADER.size, "header"))
    if magic != XMEB_MAGIC:
        raise FormatError(f"bad magic {magic!r} at offset 0, expected {XMEB_MAGIC!r}")
    if version != XMEB_VERSION:
        raise FormatError(f"unsupported XMEB version {version} at offset 4")
    ids: list[str] = []
    seen: set[str] = set()
    data = np.empty((n, d), dtype=np.float32)
    for i in range(n):
        (id_len,) = _ID_LEN.unpack(take(_ID_LEN.size, f"id length of record {i}"))
        offset = source.tell()
        try:
            id_ = take(id_len, f"id of record {i}").decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError(f"invalid UTF-8 id in record {i} at offset {offset}") from exc
        if id_ in seen:
            raise FormatError(f"duplicate id {id_!r} in record {i} at offset {offset}")
        seen.add(id_)
        ids.append(id_)
        data[i] = np.frombuffer(take(4 * d, f"row of record {i}"), dtype="<f4")
    return EmbeddingMatrix(ids=ids, data=data)


def _seeded_rng(*key_parts: object) -> np.random.Generator:
    """RNG keyed by a stable hash of the parts; identical across runs and platforms."""
    digest = hashlib.sha256("\x1f".join(map(str, key_parts)).encode("utf-8")).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "little"))


def toy_embed_token(token: str, dim: int, seed: int = 0) -> np.ndarray:
    """Deterministic pseudo-random unit vector keyed by (token, seed)."""
    if dim < 1:
        raise ValueError(f"embedding dimension must be >= 1, got {dim}")
    rng = _seeded_rng("token", seed, token)
    v = rng.standard_normal(dim)
    norm = np.linalg.norm(v)
    while norm == 0.0:  # astronomically unlikely, but normalisation must hold
        v = rng.standard_normal(dim)
        norm = np.linalg.norm(v)
    return (v / norm).astype(np.float64)


_GRID = 4


def _grid_features(frame: np.ndarray) -> np.ndarray:
    """Mean-pool a (H, W, 3) image onto a fixed 4x4 grid, flattened, plus a bias."""
    h, w = frame.shape[:2]
    feats = np.empty(_GRID * _GRID * 3 + 1)
    rows = np.linspace(0, h, _GRID + 1).astype(int)
    cols = np.linspace(0, w, _GRID + 1).astype(int)
    idx = 0
    for r in range(_GRID):
        r0, r1 = rows[r], max(rows[r + 1], rows[r] + 1)
        for c in range(_GRID):
            c0, c1 = cols[c], max(cols[c + 1], cols[c] + 1)
            cell = frame[min(r0, h - 1):min(r1, h), min(c0, w - 1):min(c1, w)]
            feats[idx:idx + 3] = cell.reshape(-1, 3).mean(axis=0)
            idx += 3
    feats[-1] = 1.0  # keeps all-black frames away from the zero vector
    return feats


def toy_embed_frame(frame: np.ndarray, dim: int) -> np.ndarray:
    """Deterministic unit embedding of an RGB image via a fixed random projection."""
    if dim < 1:
        raise ValueError(f"embedding dimension must be >= 1, got {dim}")
    frame = np.asarray(frame, dtype=np.float64)
    if frame.ndim != 3 or frame.shape[2] != 3 or frame.shape[0] == 0 or frame.shape[1] == 0:
        raise ValueError(f"expected a non-empty (H, W, 3) image, got shape {frame.shape}")
    feats = _grid_features(frame)
    projection = _seeded_rng("frame-projection", dim).standard_normal((feats.shape[0], dim))
    v = feats @ projection
    norm = np.linalg.norm(v)
    if norm == 0.0:
        raise ValueError("degenerate frame features projected to the zero vector")
    return v / norm


def toy_embed_tokens(tokens: list[str], dim: int, seed: int = 0) -> EmbeddingMatrix:
    """Embed distinct tokens, keyed by token string (cost-model convention)."""
    uniq = sorted(set(tokens))
    if not uniq:
        raise EmptyInputError("no tokens to embed")
    data = np.stack([toy_embed_token(t, dim, seed) for t in uniq])
    return EmbeddingMatrix(ids=uniq, data=data)
