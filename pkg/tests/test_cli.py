"""Command-line surface: exit codes, record schemas, determinism, and the
embedding/LM/figure side channels. Everything runs in-process through
``cli.main`` so coverage and tracebacks stay useful."""

import json
import shutil
from pathlib import Path

import numpy as np
import pytest

import coverline as cl
from coverline import cli

from conftest import write_corpus

TEXT_A = "red fox runs far past the old mill. blue bird sings loud at dawn."
TEXT_B = "green tree grows tall by the river bend. grey fog rolls in slow."

FAST = ["--stride", "1", "--resize", "0", "0", "--embed-dim", "12", "--seed", "0"]
ENGINE = ["--toy-embed", "--engine", "greedy", "--k", "3"]


def corpus(tmp_path, with_refs=False):
    specs = [
        {"id": "alpha", "n_frames": 4, "text": TEXT_A},
        {"id": "beta", "n_frames": 3, "text": TEXT_B},
    ]
    if with_refs:
        for spec in specs:
            spec["ref_title"] = spec["text"].split(".")[0]
    return write_corpus(tmp_path, specs)


def read_jsonl(path):
    return [json.loads(line) for line in Path(path).read_text().splitlines()]


def test_summarize_writes_schema_complete_records(tmp_path):
    manifest = corpus(tmp_path)
    out = tmp_path / "out.jsonl"
    rc = cli.main(["summarize", "--manifest", str(manifest), *FAST, *ENGINE,
                   "--out", str(out)])
    assert rc == 0
    records = read_jsonl(out)
    assert [r["id"] for r in records] == ["alpha", "beta"]
    for record in records:
        assert set(record) == {"id", "frame_index", "frame_path", "words",
                               "word_indices", "sentence", "losses"}
        assert len(record["words"]) == 3
        assert record["sentence"] == " ".join(record["words"])
        assert record["word_indices"] == sorted(record["word_indices"])
        assert Path(record["frame_path"]).is_file()
        losses = record["losses"]
        assert set(losses) == {"document", "video", "fluency", "cross_modal", "total"}
        parts = losses["document"] + losses["video"] + losses["fluency"] + losses["cross_modal"]
        assert abs(parts - losses["total"]) <= 1e-9


def test_summarize_streams_to_stdout_by_default(tmp_path, capsys):
    manifest = corpus(tmp_path)
    rc = cli.main(["summarize", "--manifest", str(manifest), *FAST, *ENGINE])
    assert rc == 0
    lines = [l for l in capsys.readouterr().out.splitlines() if l.strip()]
    assert [json.loads(l)["id"] for l in lines] == ["alpha", "beta"]


def test_summarize_output_is_deterministic_and_worker_independent(tmp_path):
    manifest = corpus(tmp_path)
    outs = []
    for name, workers in (("a", "1"), ("b", "1"), ("c", "3")):
        out = tmp_path / f"{name}.jsonl"
        rc = cli.main(["summarize", "--manifest", str(manifest), *FAST, *ENGINE,
                       "--workers", workers, "--out", str(out)])
        assert rc == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1] == outs[2]


def test_summarize_exit_codes_for_usage_errors(tmp_path, capsys):
    rc = cli.main(["summarize", "--manifest", str(tmp_path / "nope.jsonl"), "--toy-embed"])
    assert rc == 2
    assert "nope.jsonl" in capsys.readouterr().err

    manifest = corpus(tmp_path)
    rc = cli.main(["summarize", "--manifest", str(manifest)])  # no embedding source
    assert rc == 2
    assert "--toy-embed" in capsys.readouterr().err


def test_unknown_subcommand_is_a_usage_error():
    with pytest.raises(SystemExit) as info:
        cli.main(["frobnicate"])
    assert info.value.code == 2


def test_summarize_isolates_per_pair_failures(tmp_path, capsys):
    manifest = corpus(tmp_path)
    shutil.rmtree(tmp_path / "beta" / "frames")
    out = tmp_path / "out.jsonl"
    rc = cli.main(["summarize", "--manifest", str(manifest), *FAST, *ENGINE,
                   "--out", str(out)])
    assert rc == 1
    records = read_jsonl(out)
    assert [r["id"] for r in records] == ["alpha", "beta"]
    assert "error" not in records[0]
    assert "error" in records[1]
    assert "beta" in capsys.readouterr().err


def test_config_file_feeds_defaults_and_flags_win(tmp_path):
    manifest = corpus(tmp_path)
    config = tmp_path / "run.conf"
    config.write_text(
        "# fast settings\n"
        "stride=1\nresize=0x0\nembed-dim=12\n"
        "toy-embed=true\nengine=greedy\nk=2\n"
    )
    out_conf = tmp_path / "conf.jsonl"
    rc = cli.main(["summarize", "--manifest", str(manifest), "--config", str(config),
                   "--out", str(out_conf)])
    assert rc == 0
    assert all(len(r["words"]) == 2 for r in read_jsonl(out_conf))

    out_flag = tmp_path / "flag.jsonl"
    rc = cli.main(["summarize", "--manifest", str(manifest), "--config", str(config),
                   "--k", "3", "--out", str(out_flag)])
    assert rc == 0
    assert all(len(r["words"]) == 3 for r in read_jsonl(out_flag))


def test_embed_toy_files_reproduce_the_toy_run(tmp_path):
    manifest = corpus(tmp_path)
    emb_dir = tmp_path / "embs"
    rc = cli.main(["embed-toy", "--manifest", str(manifest), *FAST,
                   "--embeddings", str(emb_dir)])
    assert rc == 0
    for pair_id in ("alpha", "beta"):
        for name in ("frames.xmeb", "words.xmeb", "tokens.xmeb"):
            assert (emb_dir / pair_id / name).is_file()
    frames = cl.read_embeddings(emb_dir / "alpha" / "frames.xmeb")
    assert frames.ids == [f"f{i:03d}" for i in range(4)]

    out_files = tmp_path / "from_files.jsonl"
    rc = cli.main(["summarize", "--manifest", str(manifest), *FAST,
                   "--embeddings", str(emb_dir), "--engine", "greedy", "--k", "3",
                   "--out", str(out_files)])
    assert rc == 0
    out_toy = tmp_path / "from_toy.jsonl"
    rc = cli.main(["summarize", "--manifest", str(manifest), *FAST, *ENGINE,
                   "--out", str(out_toy)])
    assert rc == 0
    # file tables hold float32 rows while the in-process path stays float64,
    # so selections must agree but losses only to float32 resolution
    for from_file, from_toy in zip(read_jsonl(out_files), read_jsonl(out_toy)):
        assert from_file["word_indices"] == from_toy["word_indices"]
        assert from_file["frame_index"] == from_toy["frame_index"]
        assert from_file["sentence"] == from_toy["sentence"]
        assert from_file["losses"]["total"] == pytest.approx(
            from_toy["losses"]["total"], abs=1e-4)


def test_lm_train_then_reuse(tmp_path, capsys):
    manifest = corpus(tmp_path)
    model_path = tmp_path / "lm.bin"
    rc = cli.main(["lm-train", "--manifest", str(manifest), "--order", "2",
                   "--add-k", "0.5", "--out", str(model_path)])
    assert rc == 0
    capsys.readouterr()
    lm = cl.NgramLM.load(model_path)
    assert lm.order == 2

    rc = cli.main(["summarize", "--manifest", str(manifest), *FAST, *ENGINE,
                   "--lm", str(model_path), "--out", str(tmp_path / "out.jsonl")])
    assert rc == 0


def test_neural_engine_with_saved_params_matches_defaults(tmp_path):
    manifest = corpus(tmp_path)
    params_path = tmp_path / "params.xmeb"
    cl.save_params(cl.ModelParams.defaults(12, hidden_size=4), params_path)
    runs = []
    for extra in ([], ["--params", str(params_path)]):
        out = tmp_path / f"neural{len(extra)}.jsonl"
        rc = cli.main(["summarize", "--manifest", str(manifest), *FAST,
                       "--toy-embed", "--engine", "neural", "--k", "3", *extra,
                       "--out", str(out)])
        assert rc == 0
        runs.append(out.read_bytes())
    assert runs[0] == runs[1]
    first = json.loads(runs[0].splitlines()[0])
    assert first["frame_index"] == 1 and first["word_indices"] == [1, 2, 3]


def test_summary_figures_are_rendered(tmp_path):
    manifest = corpus(tmp_path)
    fig_dir = tmp_path / "figs"
    rc = cli.main(["summarize", "--manifest", str(manifest), *FAST, *ENGINE,
                   "--out", str(tmp_path / "out.jsonl"), "--figures", str(fig_dir)])
    assert rc == 0
    for pair_id in ("alpha", "beta"):
        png = fig_dir / f"{pair_id}.png"
        assert png.is_file()
        assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_evaluate_perfect_predictions(tmp_path, capsys):
    manifest = corpus(tmp_path, with_refs=True)
    entries = cl.Manifest.load(manifest).entries
    preds = tmp_path / "preds.jsonl"
    with preds.open("w") as fh:
        for entry in entries:
            words = cl.tokenize(entry.ref_title)
            fh.write(json.dumps({
                "id": entry.id,
                "frame_index": 1,
                "frame_path": str(entry.ref_cover_path),
                "words": words,
                "word_indices": list(range(1, len(words) + 1)),
                "sentence": " ".join(words),
                "losses": {},
            }) + "\n")
    report = tmp_path / "report.jsonl"
    fig_dir = tmp_path / "figs"
    rc = cli.main(["evaluate", "--manifest", str(manifest), "--predictions", str(preds),
                   *FAST, "--out", str(report), "--figures", str(fig_dir)])
    assert rc == 0
    assert "aggregate:" in capsys.readouterr().err
    rows = read_jsonl(report)
    assert [r["id"] for r in rows] == ["alpha", "beta", "aggregate"]
    for row in rows[:2]:
        assert row["rouge1"] == 1.0 and row["rougeL"] == 1.0
        assert row["frame_match"] is True
        assert row["iou"] == 1.0
    agg = rows[-1]
    assert agg["pairs"] == 2 and agg["rouge1"] == 1.0 and agg["frame_match"] == 1.0
    assert (fig_dir / "report.png").is_file()


def test_evaluate_rejects_id_mismatch_and_empty_predictions(tmp_path, capsys):
    manifest = corpus(tmp_path, with_refs=True)
    preds = tmp_path / "preds.jsonl"
    preds.write_text(json.dumps({"id": "gamma", "words": [], "frame_path": "x"}) + "\n")
    rc = cli.main(["evaluate", "--manifest", str(manifest), "--predictions", str(preds)])
    assert rc == 2
    err = capsys.readouterr().err
    assert "gamma" in err and "alpha" in err

    preds.write_text("")
    rc = cli.main(["evaluate", "--manifest", str(manifest), "--predictions", str(preds)])
    assert rc == 2


def test_evaluate_flags_per_pair_problems(tmp_path, capsys):
    manifest = corpus(tmp_path, with_refs=False)  # no references available
    entries = cl.Manifest.load(manifest).entries
    preds = tmp_path / "preds.jsonl"
    with preds.open("w") as fh:
        for entry in entries:
            fh.write(json.dumps({"id": entry.id, "words": ["x"],
                                 "frame_path": "missing.png"}) + "\n")
    report = tmp_path / "report.jsonl"
    rc = cli.main(["evaluate", "--manifest", str(manifest), "--predictions", str(preds),
                   "--out", str(report)])
    assert rc == 1
    capsys.readouterr()
    rows = read_jsonl(report)
    assert all("error" in row for row in rows[:2])
    assert rows[-1]["pairs"] == 0 and rows[-1]["rouge1"] is None


def test_stats_prints_corpus_means(tmp_path, capsys):
    manifest = corpus(tmp_path)
    rc = cli.main(["stats", "--manifest", str(manifest), "--stride", "1"])
    assert rc == 0
    out = capsys.readouterr().out
    parsed = dict(line.split(": ", 1) for line in out.splitlines() if ": " in line)
    assert parsed["pairs"] == "2"
    assert float(parsed["frames_per_video"]) == 3.5
    assert float(parsed["tokens_per_document"]) == 13.5
