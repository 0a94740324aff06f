"""Shared fixture builders and the acceptance-criteria summary hook."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

import coverline as cl

FIXTURES = Path(__file__).parent / "fixtures"


def load_fixture(name: str) -> dict:
    return json.loads((FIXTURES / name).read_text())


def random_frames(rng: np.random.Generator, count: int, height: int = 6, width: int = 8):
    return [rng.random((height, width, 3)).astype(np.float32) for _ in range(count)]


def make_pair(
    rng: np.random.Generator,
    pair_id: str = "pair",
    n_frames: int = 4,
    text: str = "red fox runs far. blue bird sings loud. green tree grows tall today.",
    embed_dim: int = 16,
) -> cl.VideoDocPair:
    """In-memory pair with toy-embedding scene segmentation."""
    frames = random_frames(rng, n_frames)
    words, sentences = cl.split_sentences(text)
    embs = np.stack([cl.toy_embed_frame(f, embed_dim) for f in frames])
    scenes = cl.segment_scenes(embs, 0.35)
    return cl.VideoDocPair(
        id=pair_id,
        frames=frames,
        scenes=scenes,
        words=words,
        sentences=sentences,
        frame_paths=[f"mem://{pair_id}/{i}" for i in range(n_frames)],
    )


def write_corpus(root: Path, specs: list[dict], seed: int = 11) -> Path:
    """Materialise a corpus on disk: frame PNGs, documents, references.

    Each spec: {id, n_frames, text, ref_title (optional), height, width}.
    Returns the manifest path; entry paths are manifest-relative.
    """
    rng = np.random.default_rng(seed)
    lines = []
    for spec in specs:
        pid = spec["id"]
        pair_dir = root / pid
        (pair_dir / "frames").mkdir(parents=True, exist_ok=True)
        height = spec.get("height", 6)
        width = spec.get("width", 8)
        for i in range(spec.get("n_frames", 4)):
            arr = (rng.random((height, width, 3)) * 255).astype(np.uint8)
            Image.fromarray(arr).save(pair_dir / "frames" / f"{i:04d}.png")
        (pair_dir / "doc.txt").write_text(spec["text"], encoding="utf-8")
        entry = {
            "id": pid,
            "frames_dir": f"{pid}/frames",
            "document_path": f"{pid}/doc.txt",
        }
        if spec.get("ref_title"):
            ref = (rng.random((height, width, 3)) * 255).astype(np.uint8)
            Image.fromarray(ref).save(pair_dir / "ref.png")
            entry["ref_title"] = spec["ref_title"]
            entry["ref_cover_path"] = f"{pid}/ref.png"
        lines.append(json.dumps(entry))
    manifest = root / "manifest.jsonl"
    manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return manifest


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


# ---------------------------------------------------------------------------
# acceptance summary: one PASS/FAIL line per criterion


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "acceptance(criterion): marks a test as one acceptance criterion"
    )
    config._acceptance_results = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    criterion = marker.kwargs.get("criterion", item.name)
    results = item.config._acceptance_results
    if report.when == "setup" and report.skipped:
        results.append((criterion, "SKIP"))
    elif report.when == "call":
        results.append((criterion, "PASS" if report.passed else "FAIL"))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = getattr(config, "_acceptance_results", [])
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, verdict in results:
        terminalreporter.write_line(f"{verdict}  {criterion}")
