#!/usr/bin/env python3
"""Generate the frozen adapter fixture under tests/fixtures/.

Run once from the repository root with both packages installed. Ten
colour-themed images and ten matching captions go through the adapter's
tiny encoder; the resulting tables are written as XMEB files, and the
own-versus-shuffled caption comparison is measured from the files
exactly the way the test suite re-measures it, then recorded in
adapter_check.json. The test suite only ever reads these outputs.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from coverline import EmbeddingMatrix, read_embeddings, write_embeddings
from coverline_adapter import TinyColorEncoder

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"

# ten scenes: a dominant colour plus a caption naming it
SCENES = [
    ((0.78, 0.16, 0.12), "a red kite climbs over the dunes"),
    ((0.93, 0.52, 0.13), "an orange tram rattles through town"),
    ((0.92, 0.87, 0.20), "the yellow field shines at noon"),
    ((0.18, 0.60, 0.24), "a green hedge walls the garden"),
    ((0.12, 0.55, 0.56), "divers drift along the teal lagoon"),
    ((0.20, 0.28, 0.74), "a blue door faces the harbour"),
    ((0.50, 0.23, 0.64), "the purple robe hangs in the hall"),
    ((0.92, 0.58, 0.72), "a pink balloon drifts past the window"),
    ((0.42, 0.31, 0.18), "the brown mare waits by the fence"),
    ((0.52, 0.50, 0.49), "fog settles on the gray pier"),
]


def make_image(rgb: tuple[float, float, float], seed: int, h: int = 24, w: int = 32) -> np.ndarray:
    rng = np.random.default_rng(seed)
    base = np.tile(np.array(rgb, dtype=np.float64), (h, w, 1))
    return np.clip(base + rng.normal(0.0, 0.02, size=(h, w, 3)), 0.0, 1.0)


def derangement(n: int, rng: np.random.Generator) -> list[int]:
    while True:
        perm = rng.permutation(n)
        if not np.any(perm == np.arange(n)):
            return [int(p) for p in perm]


def main() -> None:
    encoder = TinyColorEncoder(dim=32)
    images = [make_image(rgb, seed=7000 + i) for i, (rgb, _) in enumerate(SCENES)]
    captions = [caption for _, caption in SCENES]

    frame_table = EmbeddingMatrix(
        [f"img{i:02d}" for i in range(len(images))], encoder.encode_images(images)
    )
    caption_table = EmbeddingMatrix(
        [f"cap{i:02d}" for i in range(len(captions))], encoder.encode_texts(captions)
    )
    write_embeddings(frame_table, FIXTURES / "adapter_frames.xmeb")
    write_embeddings(caption_table, FIXTURES / "adapter_captions.xmeb")

    # measure from the files, with the same float32 rows a reader sees
    frames = read_embeddings(FIXTURES / "adapter_frames.xmeb")
    caps = read_embeddings(FIXTURES / "adapter_captions.xmeb")
    perm = derangement(len(frames.ids), np.random.default_rng(20250825))
    wins = 0
    for i, (fid, cid) in enumerate(zip(frames.ids, caps.ids)):
        own = float(frames.row(fid) @ caps.row(cid))
        other = float(frames.row(fid) @ caps.row(caps.ids[perm[i]]))
        wins += own > other
    check = {"trials": len(frames.ids), "wins": wins, "shuffle": perm, "model": "tiny", "dim": 32}
    (FIXTURES / "adapter_check.json").write_text(
        json.dumps(check, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(f"adapter fixture frozen: wins={wins}/{len(frames.ids)}, shuffle={perm}")


if __name__ == "__main__":
    main()
