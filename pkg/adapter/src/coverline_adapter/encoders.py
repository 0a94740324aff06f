"""Joint image-text encoders behind one small interface.

Both encoders map images and token sequences into a shared space of
unit-norm rows, so a frame and the words describing it land near each
other. ``TinyColorEncoder`` needs nothing beyond numpy: it describes an
image by how its pixels distribute over a fixed palette of colour
prototypes, describes a token by the prototype its surface form names
(or a stable pseudo-random mix for non-colour words), and sends both
through one shared orthonormal projection. ``ClipEncoder`` defers to a
pretrained checkpoint loaded through ``transformers``.
"""

from __future__ import annotations

import hashlib
from typing import Iterable, Iterator, Sequence

import numpy as np

from coverline import tokenize

_DEFAULT_CLIP = "openai/clip-vit-base-patch32"

# Palette of named colour prototypes (RGB in [0, 1]); the tiny shared
# space has one axis per entry before projection.
_PROTOTYPES: tuple[tuple[str, tuple[float, float, float]], ...] = (
    ("red", (0.80, 0.12, 0.10)),
    ("orange", (0.95, 0.55, 0.10)),
    ("yellow", (0.95, 0.90, 0.15)),
    ("green", (0.15, 0.62, 0.20)),
    ("teal", (0.10, 0.58, 0.58)),
    ("blue", (0.16, 0.25, 0.78)),
    ("purple", (0.52, 0.20, 0.68)),
    ("pink", (0.95, 0.60, 0.75)),
    ("brown", (0.44, 0.29, 0.15)),
    ("black", (0.04, 0.04, 0.04)),
    ("white", (0.96, 0.96, 0.96)),
    ("gray", (0.50, 0.50, 0.50)),
)

_ALIASES = {"grey": "gray", "crimson": "red", "scarlet": "red", "navy": "blue", "violet": "purple"}


class ModelLoadError(RuntimeError):
    """An encoder's runtime or weights could not be loaded."""


def _seeded_rng(*key_parts: object) -> np.random.Generator:
    """RNG keyed by a stable hash of the parts; identical across runs."""
    digest = hashlib.sha256("\x1f".join(map(str, key_parts)).encode("utf-8")).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "little"))


def _chunks(items: Sequence, size: int) -> Iterator[Sequence]:
    for start in range(0, len(items), size):
        yield items[start : start + size]


def _unit_rows(rows: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(rows, axis=1, keepdims=True)
    if np.any(norms == 0.0):
        raise ValueError("encoder produced a zero-norm embedding row")
    return rows / norms


def _softmax_rows(logits: np.ndarray) -> np.ndarray:
    shifted = np.exp(logits - logits.max(axis=1, keepdims=True))
    return shifted / shifted.sum(axis=1, keepdims=True)


def _check_frame(frame: np.ndarray, position: int) -> np.ndarray:
    arr = np.asarray(frame, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"image {position} must have shape (H, W, 3), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"image {position} contains non-finite values")
    return arr


class TinyColorEncoder:
    """Deterministic colour-prototype encoder; no model weights needed.

    An image becomes the mean over pixels of a softmax assignment to the
    palette prototypes (temperature ``temperature``); a colour-naming
    token becomes the matching one-hot palette vector, any other token a
    pseudo-random point on the palette simplex keyed by its string; a
    text becomes the mean of its token vectors. Both towers share one
    orthonormal projection to ``dim`` axes, so palette-space cosines are
    preserved exactly, and every output row is unit-norm.
    """

    name = "tiny"

    def __init__(self, dim: int = 32, temperature: float = 0.08, seed: int = 0):
        k = len(_PROTOTYPES)
        if dim < k:
            raise ValueError(f"tiny encoder dim must be >= {k}, got {dim}")
        if temperature <= 0:
            raise ValueError(f"temperature must be positive, got {temperature}")
        self._dim = dim
        self.temperature = temperature
        self.seed = seed
        self._names = [name for name, _ in _PROTOTYPES]
        self._index = {name: i for i, name in enumerate(self._names)}
        self._palette = np.array([rgb for _, rgb in _PROTOTYPES], dtype=np.float64)
        gauss = _seeded_rng("tiny-projection", seed).standard_normal((dim, k))
        q, r = np.linalg.qr(gauss)
        # fix the QR sign convention so the projection is reproducible
        self._projection = q * np.sign(np.diag(r))

    @property
    def dim(self) -> int:
        return self._dim

    def _finish(self, palette_rows: np.ndarray) -> np.ndarray:
        return _unit_rows(palette_rows @ self._projection.T)

    def _image_activation(self, frame: np.ndarray) -> np.ndarray:
        pixels = frame.reshape(-1, 3)
        d2 = (
            (pixels**2).sum(axis=1, keepdims=True)
            + (self._palette**2).sum(axis=1)[None, :]
            - 2.0 * pixels @ self._palette.T
        )
        return _softmax_rows(-d2 / self.temperature).mean(axis=0)

    def _token_activation(self, token: str) -> np.ndarray:
        canonical = _ALIASES.get(token, token)
        if canonical in self._index:
            activation = np.zeros(len(self._names))
            activation[self._index[canonical]] = 1.0
            return activation
        logits = _seeded_rng("tiny-token", self.seed, canonical).standard_normal(len(self._names))
        return _softmax_rows(logits[None, :])[0]

    def encode_images(self, frames: Sequence[np.ndarray], batch_size: int = 16) -> np.ndarray:
        frames = list(frames)
        if not frames:
            raise ValueError("no images to encode")
        rows = []
        for chunk in _chunks(frames, batch_size):
            offset = len(rows)
            rows.extend(
                self._image_activation(_check_frame(f, offset + i)) for i, f in enumerate(chunk)
            )
        return self._finish(np.stack(rows))

    def encode_tokens(self, tokens: Sequence[str], batch_size: int = 16) -> np.ndarray:
        tokens = list(tokens)
        if not tokens:
            raise ValueError("no tokens to encode")
        rows = []
        for chunk in _chunks(tokens, batch_size):
            rows.extend(self._token_activation(t) for t in chunk)
        return self._finish(np.stack(rows))

    def encode_texts(self, texts: Sequence[str], batch_size: int = 16) -> np.ndarray:
        texts = list(texts)
        if not texts:
            raise ValueError("no texts to encode")
        rows = []
        for text in texts:
            tokens = tokenize(text)
            if not tokens:
                raise ValueError(f"text has no tokens: {text!r}")
            rows.append(np.mean([self._token_activation(t) for t in tokens], axis=0))
        return self._finish(np.stack(rows))

    def metadata(self) -> dict:
        return {
            "model": self.name,
            "dim": self.dim,
            "prototypes": len(self._names),
            "temperature": self.temperature,
            "seed": self.seed,
            "image_pooling": "mean over pixels of softmax palette assignment",
            "word_pooling": "one-hot palette vector per colour token, hashed simplex point otherwise",
            "text_pooling": "mean of token vectors",
        }


def _import_clip_runtime():
    try:
        import torch
        from transformers import CLIPModel, CLIPProcessor
    except Exception as exc:  # noqa: BLE001 - any import failure means no runtime
        raise ModelLoadError(f"clip runtime unavailable (needs torch and transformers): {exc}") from exc
    return torch, CLIPModel, CLIPProcessor


class ClipEncoder:
    """Pretrained joint encoder: CLIP's image and text towers.

    Token-level rows come from single-token passes through the text
    tower; image and text rows are the pooled projection outputs,
    re-normalised to unit length.
    """

    name = "clip"

    def __init__(self, checkpoint: str = _DEFAULT_CLIP, device: str = "cpu"):
        torch, model_cls, processor_cls = _import_clip_runtime()
        self._torch = torch
        try:
            self._model = model_cls.from_pretrained(checkpoint).to(device).eval()
            self._processor = processor_cls.from_pretrained(checkpoint)
        except Exception as exc:  # noqa: BLE001 - report any load failure uniformly
            raise ModelLoadError(f"could not load clip checkpoint {checkpoint!r}: {exc}") from exc
        self.checkpoint = checkpoint
        self.device = device
        self._dim = int(self._model.config.projection_dim)

    @property
    def dim(self) -> int:
        return self._dim

    def encode_images(self, frames: Sequence[np.ndarray], batch_size: int = 16) -> np.ndarray:
        frames = list(frames)
        if not frames:
            raise ValueError("no images to encode")
        rows = []
        with self._torch.no_grad():
            for chunk in _chunks(frames, batch_size):
                images = [
                    np.clip(_check_frame(f, i) * 255.0, 0.0, 255.0).astype(np.uint8)
                    for i, f in enumerate(chunk)
                ]
                inputs = self._processor(images=images, return_tensors="pt").to(self.device)
                feats = self._model.get_image_features(**inputs)
                rows.append(feats.cpu().numpy().astype(np.float64))
        return _unit_rows(np.vstack(rows))

    def encode_texts(self, texts: Sequence[str], batch_size: int = 16) -> np.ndarray:
        texts = list(texts)
        if not texts:
            raise ValueError("no texts to encode")
        rows = []
        with self._torch.no_grad():
            for chunk in _chunks(texts, batch_size):
                inputs = self._processor(
                    text=list(chunk), return_tensors="pt", padding=True, truncation=True
                ).to(self.device)
                feats = self._model.get_text_features(**inputs)
                rows.append(feats.cpu().numpy().astype(np.float64))
        return _unit_rows(np.vstack(rows))

    def encode_tokens(self, tokens: Sequence[str], batch_size: int = 16) -> np.ndarray:
        return self.encode_texts(list(tokens), batch_size)

    def metadata(self) -> dict:
        return {
            "model": self.name,
            "checkpoint": self.checkpoint,
            "dim": self.dim,
            "device": self.device,
            "image_pooling": "pooled projection output",
            "word_pooling": "single-token text tower pass",
            "text_pooling": "pooled projection output",
        }


def load_encoder(
    model: str,
    *,
    device: str = "cpu",
    dim: int = 32,
    clip_checkpoint: str = _DEFAULT_CLIP,
):
    """Build the encoder named by ``model`` ('tiny' or 'clip')."""
    if model == "tiny":
        return TinyColorEncoder(dim=dim)
    if model == "clip":
        return ClipEncoder(checkpoint=clip_checkpoint, device=device)
    raise ValueError(f"unknown model {model!r}: choose 'tiny' or 'clip'")
