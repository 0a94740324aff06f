"""End-to-end extraction: file layout, consumer-side validity, rerun
determinism, and per-pair failure isolation."""

import json
import shutil

import numpy as np
import pytest

import coverline as cl
import coverline_adapter as ca

from _helpers import write_fixture_corpus

FAST = ca.ExtractOptions(stride=1, cap=16, resize=None)


def test_extract_writes_valid_tables_per_pair(tmp_path):
    manifest = write_fixture_corpus(tmp_path / "corpus")
    out = tmp_path / "embs"
    records = ca.extract(manifest, out, FAST)
    assert [r["id"] for r in records] == ["pair0", "pair1", "pair2"]

    meta = json.loads((out / "meta.json").read_text(encoding="utf-8"))
    assert meta["model"] == "tiny"
    assert meta["dim"] == 32
    assert meta["word_pooling"]

    for record in records:
        assert record["frames"] == 3
        frames = cl.read_embeddings(out / record["id"] / "frames.xmeb")
        words = cl.read_embeddings(out / record["id"] / "words.xmeb")
        tokens = cl.read_embeddings(out / record["id"] / "tokens.xmeb")
        assert frames.ids == ["f000", "f001", "f002"]
        assert words.ids == [f"w{i:03d}" for i in range(record["words"])]
        assert tokens.ids == sorted(tokens.ids) and len(tokens.ids) == record["token_types"]
        for table in (frames, words, tokens):
            assert table.dim == 32
            norms = np.linalg.norm(table.data.astype(np.float64), axis=1)
            assert np.abs(norms - 1.0).max() <= 1e-3


def test_extract_ids_follow_document_tokenisation(tmp_path):
    manifest = write_fixture_corpus(tmp_path / "corpus")
    out = tmp_path / "embs"
    ca.extract(manifest, out, FAST)
    entry = cl.Manifest.load(manifest).entries[0]
    doc_words, _ = cl.split_sentences(entry.document_path.read_text(encoding="utf-8"))
    words = cl.read_embeddings(out / entry.id / "words.xmeb")
    tokens = cl.read_embeddings(out / entry.id / "tokens.xmeb")
    assert len(words.ids) == len(doc_words)
    assert tokens.ids == sorted(set(doc_words))
    # repeated word occurrences carry the type row
    first_the = doc_words.index("the")
    np.testing.assert_array_equal(words.row(f"w{first_the:03d}"), tokens.row("the"))


def test_extract_feeds_the_consumer_pipeline(tmp_path):
    manifest = write_fixture_corpus(tmp_path / "corpus")
    out = tmp_path / "embs"
    ca.extract(manifest, out, FAST)
    entry = cl.Manifest.load(manifest).entries[0]
    frames = cl.read_embeddings(out / entry.id / "frames.xmeb")
    frame_embs = np.stack([frames.row(f"f{i:03d}") for i in range(3)]).astype(np.float64)
    pair = cl.load_pair(
        entry,
        cl.LoadOptions(stride=1, cap=16, resize=None, frame_embeddings=frame_embs),
    )
    tokens = cl.read_embeddings(out / entry.id / "tokens.xmeb")
    words_table = cl.read_embeddings(out / entry.id / "words.xmeb")
    word_embs = np.stack(
        [words_table.row(f"w{i:03d}") for i in range(pair.num_words)]
    ).astype(np.float64)
    config = cl.SummaryConfig(k=3, engine="greedy", embed_dim=32)
    ctx = cl.build_context(
        pair, config, frame_embs=frame_embs, word_embs=word_embs, token_embs=tokens
    )
    summary = cl.summarize(ctx, config)
    assert len(summary.word_indices) == 3
    assert np.isfinite(summary.losses.total)


def test_extract_rerun_is_bit_identical(tmp_path):
    manifest = write_fixture_corpus(tmp_path / "corpus")
    first = tmp_path / "first"
    second = tmp_path / "second"
    ca.extract(manifest, first, FAST)
    ca.extract(manifest, second, FAST)
    for name in ("frames.xmeb", "words.xmeb", "tokens.xmeb"):
        a = (first / "pair1" / name).read_bytes()
        b = (second / "pair1" / name).read_bytes()
        assert a == b


def test_extract_skips_failing_pairs_and_keeps_going(tmp_path, capsys):
    manifest = write_fixture_corpus(tmp_path / "corpus")
    shutil.rmtree(tmp_path / "corpus" / "pair1" / "frames")
    out = tmp_path / "embs"
    records = ca.extract(manifest, out, FAST)
    assert [r["id"] for r in records] == ["pair0", "pair1", "pair2"]
    assert "error" in records[1] and "frames" in records[1]["error"]
    assert not (out / "pair1").exists()
    for ok in ("pair0", "pair2"):
        assert (out / ok / "frames.xmeb").is_file()
    assert "pair1" in capsys.readouterr().err


def test_extract_rejects_unsafe_pair_ids(tmp_path):
    corpus = tmp_path / "corpus"
    manifest = write_fixture_corpus(corpus)
    lines = manifest.read_text(encoding="utf-8").splitlines()
    entry = json.loads(lines[0])
    entry["id"] = "../escape"
    lines[0] = json.dumps(entry)
    manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")
    records = ca.extract(manifest, tmp_path / "embs", FAST)
    assert "not filesystem-safe" in records[0]["error"]
    assert not (tmp_path / "escape").exists()


def test_extract_leaves_no_temp_files(tmp_path):
    manifest = write_fixture_corpus(tmp_path / "corpus")
    out = tmp_path / "embs"
    ca.extract(manifest, out, FAST)
    leftovers = [p for p in out.rglob("*") if ".tmp" in p.name]
    assert leftovers == []


def test_extract_validates_inputs(tmp_path):
    with pytest.raises(FileNotFoundError):
        ca.extract(tmp_path / "missing.jsonl", tmp_path / "out", FAST)
    with pytest.raises(ValueError):
        ca.ExtractOptions(batch_size=0)
    with pytest.raises(ValueError):
        ca.ExtractOptions(stride=0)
