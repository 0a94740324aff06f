"""Corpus builders shared by the adapter tests."""

import json
from pathlib import Path

import numpy as np
from PIL import Image

# distinct palette hues, one per fixture pair
CORPUS_COLORS = {
    "red": (204, 31, 26),
    "green": (38, 158, 51),
    "blue": (41, 64, 199),
}


def solid_frame(rgb: tuple[int, int, int], jitter_seed: int, h: int = 12, w: int = 16) -> np.ndarray:
    """A solid-colour uint8 image with small deterministic pixel jitter."""
    rng = np.random.default_rng(jitter_seed)
    base = np.tile(np.array(rgb, dtype=np.int16), (h, w, 1))
    noisy = base + rng.integers(-12, 13, size=(h, w, 3), dtype=np.int16)
    return np.clip(noisy, 0, 255).astype(np.uint8)


def write_fixture_corpus(
    root: Path,
    colors: dict[str, tuple[int, int, int]] | None = None,
    frames_per_pair: int = 3,
) -> Path:
    """Write a tiny corpus of colour-themed pairs; returns the manifest path."""
    colors = colors or CORPUS_COLORS
    root.mkdir(parents=True, exist_ok=True)
    lines = []
    for idx, (color, rgb) in enumerate(colors.items()):
        pair_id = f"pair{idx}"
        frames_dir = root / pair_id / "frames"
        frames_dir.mkdir(parents=True)
        for j in range(frames_per_pair):
            frame = solid_frame(rgb, jitter_seed=100 * idx + j)
            Image.fromarray(frame, "RGB").save(frames_dir / f"{j:04d}.png")
        doc = root / pair_id / "doc.txt"
        doc.write_text(
            f"a {color} banner waves over the square. the big {color} sign glows at night.\n",
            encoding="utf-8",
        )
        lines.append(
            json.dumps(
                {
                    "id": pair_id,
                    "frames_dir": f"{pair_id}/frames",
                    "document_path": f"{pair_id}/doc.txt",
                }
            )
        )
    manifest = root / "manifest.jsonl"
    manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return manifest
