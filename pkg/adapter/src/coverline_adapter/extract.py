"""Manifest-driven extraction: one directory of XMEB tables per pair.

For every manifest entry this samples frames the same way the consumer
does, encodes frames, word occurrences, and distinct token types, and
writes ``frames.xmeb`` (ids ``f000``..), ``words.xmeb`` (ids ``w000``..),
and ``tokens.xmeb`` (ids are the token strings) under
``out_dir/<pair_id>/``. A ``meta.json`` at the top level records the
encoder choice and sampling settings. Failures of a single pair are
reported and skipped; the rest of the run continues.
"""

from __future__ import annotations

import json
import os
import re
import sys
from dataclasses import dataclass
from pathlib import Path

from coverline import (
    EmbeddingMatrix,
    Manifest,
    load_image,
    sample_frame_paths,
    split_sentences,
    write_embeddings,
)

from .encoders import load_encoder

_SAFE_ID = re.compile(r"[A-Za-z0-9._-]+")


@dataclass
class ExtractOptions:
    """Encoder choice plus the frame-sampling knobs of the consumer."""

    model: str = "tiny"
    batch_size: int = 16
    device: str = "cpu"
    dim: int = 32
    clip_checkpoint: str = "openai/clip-vit-base-patch32"
    stride: int = 360
    cap: int = 120
    resize: tuple[int, int] | None = (640, 360)

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise ValueError(f"batch size must be >= 1, got {self.batch_size}")
        if self.stride < 1:
            raise ValueError(f"stride must be >= 1, got {self.stride}")
        if self.cap < 1:
            raise ValueError(f"cap must be >= 1, got {self.cap}")


def _write_table_atomic(matrix: EmbeddingMatrix, path: Path) -> None:
    tmp = path.with_name(f"{path.name}.tmp{os.getpid()}")
    try:
        write_embeddings(matrix, tmp)
        os.replace(tmp, path)
    finally:
        tmp.unlink(missing_ok=True)


def _write_json_atomic(payload: dict, path: Path) -> None:
    tmp = path.with_name(f"{path.name}.tmp{os.getpid()}")
    try:
        tmp.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        os.replace(tmp, path)
    finally:
        tmp.unlink(missing_ok=True)


def _extract_pair(entry, encoder, options: ExtractOptions, pair_dir: Path) -> dict:
    paths = sample_frame_paths(entry.frames_dir, options.stride, options.cap)
    if not paths:
        raise ValueError(f"no frames sampled from {entry.frames_dir}")
    frames = [load_image(p, options.resize) for p in paths]
    text = Path(entry.document_path).read_text(encoding="utf-8")
    words, _ = split_sentences(text)
    if not words:
        raise ValueError(f"document has no tokens: {entry.document_path}")
    types = sorted(set(words))

    frame_embs = encoder.encode_images(frames, options.batch_size)
    word_embs = encoder.encode_tokens(words, options.batch_size)
    type_embs = encoder.encode_tokens(types, options.batch_size)

    pair_dir.mkdir(parents=True, exist_ok=True)
    frame_ids = [f"f{i:03d}" for i in range(len(frames))]
    word_ids = [f"w{i:03d}" for i in range(len(words))]
    _write_table_atomic(EmbeddingMatrix(frame_ids, frame_embs), pair_dir / "frames.xmeb")
    _write_table_atomic(EmbeddingMatrix(word_ids, word_embs), pair_dir / "words.xmeb")
    _write_table_atomic(EmbeddingMatrix(types, type_embs), pair_dir / "tokens.xmeb")
    return {
        "id": entry.id,
        "frames": len(frames),
        "words": len(words),
        "token_types": len(types),
        "dir": str(pair_dir),
    }


def extract(
    manifest_path: str | Path,
    out_dir: str | Path,
    options: ExtractOptions | None = None,
    encoder=None,
) -> list[dict]:
    """Run the encoder over every manifest pair; returns one record each.

    Successful records carry the table counts and output directory;
    failed pairs yield ``{"id", "error"}`` records instead, with the
    failure also logged to stderr. Encoder construction errors propagate
    (there is nothing useful to extract without a model).
    """
    options = options or ExtractOptions()
    manifest = Manifest.load(manifest_path)
    if encoder is None:
        encoder = load_encoder(
            options.model,
            device=options.device,
            dim=options.dim,
            clip_checkpoint=options.clip_checkpoint,
        )
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_json_atomic(
        {
            "generator": "coverline-adapter",
            "batch_size": options.batch_size,
            "stride": options.stride,
            "cap": options.cap,
            "resize": list(options.resize) if options.resize else None,
            **encoder.metadata(),
        },
        out_dir / "meta.json",
    )

    records = []
    for entry in manifest:
        try:
            if not _SAFE_ID.fullmatch(entry.id):
                raise ValueError(f"pair id {entry.id!r} is not filesystem-safe")
            records.append(_extract_pair(entry, encoder, options, out_dir / entry.id))
        except Exception as exc:  # noqa: BLE001 - isolate pair failures
            print(f"adapter: pair {entry.id!r} failed: {exc}", file=sys.stderr)
            records.append({"id": entry.id, "error": str(exc)})
    return records
