"""Command-line front end: summarise, evaluate, and corpus utilities.

Subcommands
-----------
summarize   manifest -> per-pair summary records (JSON Lines)
evaluate    predictions + references -> metric report (JSON Lines)
embed-toy   manifest -> deterministic toy embedding files per pair
lm-train    manifest documents -> persisted n-gram language model
stats       manifest -> corpus-level means

Every flag can also be given in a ``key=value`` config file (see
``--config``); explicit flags win. Exit codes: 0 success, 1 when any pair
failed, 2 for usage or configuration problems.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .corpus import (
    LoadOptions,
    Manifest,
    load_image,
    load_pair,
    sample_frame_paths,
    corpus_stats,
    split_sentences,
    tokenize,
)
from .embed import (
    EmbeddingMatrix,
    read_embeddings,
    toy_embed_frame,
    toy_embed_tokens,
    write_embeddings,
    _seeded_rng,
)
from .errors import ConfigError, ValidationError
from .metrics import frame_accuracy, iou_concepts, rouge_l, rouge_n
from .objective import LossWeights, NgramLM, lm_train
from .params import load_params
from .summarize import SummaryConfig, build_context, summarize
from .transport import SolverConfig

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_USAGE = 2

_LOSS_KEYS = ("document", "video", "fluency", "cross_modal", "total")


# ---------------------------------------------------------------------------
# config file + flag layering


def _parse_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    for lineno, line in enumerate(p.read_text(encoding="utf-8").splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{p}:{lineno}: expected key=value, got {stripped!r}")
        key, _, value = stripped.partition("=")
        values[key.strip().replace("-", "_")] = value.strip().strip('"')
    return values


def _parse_bool(raw: str) -> bool:
    lowered = raw.lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"cannot read {raw!r} as a boolean")


def _parse_resize(raw: str) -> tuple[int, int]:
    parts = raw.lower().replace("x", " ").split()
    if len(parts) != 2:
        raise ConfigError(f"cannot read {raw!r} as WxH")
    return int(parts[0]), int(parts[1])


class _Settings:
    """Flag values merged over config-file values merged over defaults."""

    def __init__(self, args: argparse.Namespace):
        self._args = args
        self._cfg = _parse_config_file(args.config) if getattr(args, "config", None) else {}

    def get(self, name: str, default, cast=None):
        value = getattr(self._args, name, None)
        if value is not None:
            return value
        if name in self._cfg:
            raw = self._cfg[name]
            if cast is not None:
                return cast(raw)
            if isinstance(default, bool):
                return _parse_bool(raw)
            if isinstance(default, int):
                return int(raw)
            if isinstance(default, float):
                return float(raw)
            return raw
        return default


def _load_options(settings: _Settings) -> LoadOptions:
    resize = settings.get("resize", (640, 360), cast=_parse_resize)
    if tuple(resize) == (0, 0):
        resize = None
    return LoadOptions(
        stride=settings.get("stride", 360),
        cap=settings.get("cap", 120),
        resize=tuple(resize) if resize else None,
        scene_threshold=settings.get("scene_threshold", 0.35),
        embed_dim=settings.get("embed_dim", 512),
        seed=settings.get("seed", 0),
    )


def _out_stream(out: str):
    if out in (None, "-"):
        return sys.stdout, False
    return open(out, "w", encoding="utf-8"), True


# ---------------------------------------------------------------------------
# summarize


def _summary_config(settings: _Settings) -> SummaryConfig:
    weights = LossWeights(
        lambda_document=settings.get("lambda_d", 1.0),
        lambda_video=settings.get("lambda_v", 1.0),
        lambda_fluency=settings.get("lambda_f", 1.0),
        lambda_cross_modal=settings.get("lambda_c", 1.0),
    )
    return SummaryConfig(
        k=settings.get("k", 12),
        engine=settings.get("engine", "beam"),
        beam_width=settings.get("beam", 4),
        weights=weights,
        clusters=settings.get("clusters", 8),
        solver=SolverConfig(epsilon=settings.get("epsilon", 0.01)),
        refine_rounds=settings.get("refine_rounds", 1),
        embed_dim=settings.get("embed_dim", 512),
        hidden_size=settings.get("hidden_size", 512),
        seed=settings.get("seed", 0),
    )


def _load_pair_embeddings(emb_dir: Path, pair_id: str, n_frames: int, words: list[str]):
    pair_dir = emb_dir / pair_id
    frames = read_embeddings(pair_dir / "frames.xmeb")
    frame_embs = np.stack([frames.row(f"f{i:03d}") for i in range(n_frames)])
    word_matrix = read_embeddings(pair_dir / "words.xmeb")
    word_embs = np.stack([word_matrix.row(f"w{i:03d}") for i in range(len(words))])
    token_embs = read_embeddings(pair_dir / "tokens.xmeb")
    return frame_embs.astype(np.float64), word_embs.astype(np.float64), token_embs


def cmd_summarize(args: argparse.Namespace) -> int:
    try:
        settings = _Settings(args)
        manifest = Manifest.load(args.manifest)
        config = _summary_config(settings)
        opts = _load_options(settings)
        emb_dir = settings.get("embeddings", None)
        toy = settings.get("toy_embed", False)
        if emb_dir is None and not toy:
            raise ConfigError("provide --embeddings DIR or --toy-embed")
        model = load_params(settings.get("params", None)) if settings.get("params", None) else None
        lm = NgramLM.load(settings.get("lm", None)) if settings.get("lm", None) else None
    except (OSError, ValueError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    def run_one(entry):
        try:
            entry_opts = LoadOptions(
                stride=opts.stride,
                cap=opts.cap,
                resize=opts.resize,
                scene_threshold=opts.scene_threshold,
                embed_dim=opts.embed_dim,
                seed=opts.seed,
            )
            frame_embs = word_embs = token_embs = None
            if emb_dir is not None:
                paths = sample_frame_paths(entry.frames_dir, opts.stride, opts.cap)
                matrix = read_embeddings(Path(emb_dir) / entry.id / "frames.xmeb")
                frame_embs = np.stack(
                    [matrix.row(f"f{i:03d}") for i in range(len(paths))]
                ).astype(np.float64)
                entry_opts.frame_embeddings = frame_embs
            pair = load_pair(entry, entry_opts)
            if emb_dir is not None:
                frame_embs, word_embs, token_embs = _load_pair_embeddings(
                    Path(emb_dir), entry.id, pair.num_frames, pair.words
                )
            ctx = build_context(
                pair,
                config,
                frame_embs=frame_embs,
                word_embs=word_embs,
                token_embs=token_embs,
                lm=lm,
            )
            summary = summarize(ctx, config, model)
            record = {
                "id": pair.id,
                "frame_index": summary.frame_index,
                "frame_path": pair.frame_paths[summary.frame_index - 1],
                "words": [pair.words[i - 1] for i in summary.word_indices],
                "word_indices": summary.word_indices,
                "sentence": summary.sentence_text,
                "losses": {key: getattr(summary.losses, key) for key in _LOSS_KEYS},
            }
            return record, pair.frames[summary.frame_index - 1]
        except Exception as exc:  # noqa: BLE001 - per-pair isolation is the contract
            return {"id": entry.id, "error": f"{type(exc).__name__}: {exc}"}, None

    workers = settings.get("workers", 0) or os.cpu_count() or 1
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(run_one, manifest.entries))

    stream, owned = _out_stream(settings.get("out", "-"))
    try:
        for record, _ in results:
            stream.write(json.dumps(record) + "\n")
    finally:
        if owned:
            stream.close()

    figures = settings.get("figures", None)
    if figures:
        from .report import render_summary_figure

        fig_dir = Path(figures)
        fig_dir.mkdir(parents=True, exist_ok=True)
        for record, cover in results:
            if cover is not None:
                render_summary_figure(cover, record, fig_dir / f"{record['id']}.png")

    failures = sum(1 for record, _ in results if "error" in record)
    for record, _ in results:
        if "error" in record:
            print(f"{record['id']}: {record['error']}", file=sys.stderr)
    return EXIT_PARTIAL if failures else EXIT_OK


# ---------------------------------------------------------------------------
# evaluate


def _default_concepts(dim: int = 512, count: int = 64) -> EmbeddingMatrix:
    rng = _seeded_rng("concept-vocabulary", dim, count)
    data = rng.standard_normal((count, dim)).astype(np.float32)
    return EmbeddingMatrix(ids=[f"c{i:02d}" for i in range(count)], data=data)


def cmd_evaluate(args: argparse.Namespace) -> int:
    try:
        settings = _Settings(args)
        manifest = Manifest.load(args.manifest)
        pred_path = Path(args.predictions)
        if not pred_path.is_file():
            raise ConfigError(f"predictions file not found: {pred_path}")
        predictions = [
            json.loads(line)
            for line in pred_path.read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]
        if not predictions:
            raise ValidationError(f"predictions file {pred_path} is empty")
        pred_map = {record["id"]: record for record in predictions}
        manifest_ids = [entry.id for entry in manifest]
        missing = sorted(set(manifest_ids) - set(pred_map))
        extra = sorted(set(pred_map) - set(manifest_ids))
        if missing or extra:
            raise ValidationError(
                f"prediction ids do not match the manifest (missing: {missing}, extra: {extra})"
            )
        concepts_path = settings.get("concepts", None)
        concepts = read_embeddings(concepts_path) if concepts_path else _default_concepts()
        concept_count = settings.get("concept_count", 5)
        threshold = settings.get("frame_threshold", 0.3)
    except (OSError, ValueError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    rows = []
    failures = 0
    for entry in manifest:
        record = pred_map[entry.id]
        try:
            if "error" in record:
                raise ValidationError(f"prediction carries an error: {record['error']}")
            if not entry.ref_title or entry.ref_cover_path is None:
                raise ValidationError("manifest entry lacks reference title or cover")
            candidate = [str(w) for w in record["words"]]
            reference = tokenize(entry.ref_title)
            pred_frame = load_image(record["frame_path"])
            ref_frame = load_image(entry.ref_cover_path)
            rows.append(
                {
                    "id": entry.id,
                    "rouge1": rouge_n(candidate, reference, 1).f1,
                    "rouge2": rouge_n(candidate, reference, 2).f1,
                    "rougeL": rouge_l(candidate, reference).f1,
                    "frame_match": frame_accuracy(pred_frame, ref_frame, threshold),
                    "iou": iou_concepts(pred_frame, ref_frame, concepts, concept_count),
                }
            )
        except Exception as exc:  # noqa: BLE001 - per-pair isolation is the contract
            failures += 1
            rows.append({"id": entry.id, "error": f"{type(exc).__name__}: {exc}"})

    scored = [row for row in rows if "error" not in row]
    aggregate = {"id": "aggregate", "pairs": len(scored)}
    for key in ("rouge1", "rouge2", "rougeL", "iou"):
        aggregate[key] = float(np.mean([row[key] for row in scored])) if scored else None
    aggregate["frame_match"] = (
        float(np.mean([1.0 if row["frame_match"] else 0.0 for row in scored])) if scored else None
    )

    stream, owned = _out_stream(settings.get("out", "-"))
    try:
        for row in rows:
            stream.write(json.dumps(row) + "\n")
        stream.write(json.dumps(aggregate) + "\n")
    finally:
        if owned:
            stream.close()
    print(
        "aggregate: "
        + " ".join(
            f"{key}={aggregate[key]}" for key in ("rouge1", "rouge2", "rougeL", "frame_match", "iou")
        ),
        file=sys.stderr,
    )

    figures = settings.get("figures", None)
    if figures and scored:
        from .report import render_report_figure

        fig_dir = Path(figures)
        fig_dir.mkdir(parents=True, exist_ok=True)
        render_report_figure(scored, fig_dir / "report.png")

    for row in rows:
        if "error" in row:
            print(f"{row['id']}: {row['error']}", file=sys.stderr)
    return EXIT_PARTIAL if failures else EXIT_OK


# ---------------------------------------------------------------------------
# embed-toy / lm-train / stats


def cmd_embed_toy(args: argparse.Namespace) -> int:
    try:
        settings = _Settings(args)
        manifest = Manifest.load(args.manifest)
        opts = _load_options(settings)
        out_dir = Path(settings.get("embeddings", None) or "")
        if not str(out_dir):
            raise ConfigError("provide --embeddings DIR to write into")
    except (OSError, ValueError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    failures = 0
    for entry in manifest:
        try:
            pair = load_pair(entry, opts)
            pair_dir = out_dir / entry.id
            pair_dir.mkdir(parents=True, exist_ok=True)
            frame_rows = np.stack(
                [toy_embed_frame(f, opts.embed_dim) for f in pair.frames]
            ).astype(np.float32)
            write_embeddings(
                EmbeddingMatrix([f"f{i:03d}" for i in range(pair.num_frames)], frame_rows),
                pair_dir / "frames.xmeb",
            )
            token_matrix = toy_embed_tokens(pair.words, opts.embed_dim, opts.seed)
            word_rows = np.stack([token_matrix.row(tok) for tok in pair.words])
            write_embeddings(
                EmbeddingMatrix([f"w{i:03d}" for i in range(pair.num_words)], word_rows),
                pair_dir / "words.xmeb",
            )
            write_embeddings(token_matrix, pair_dir / "tokens.xmeb")
        except Exception as exc:  # noqa: BLE001
            failures += 1
            print(f"{entry.id}: {type(exc).__name__}: {exc}", file=sys.stderr)
    return EXIT_PARTIAL if failures else EXIT_OK


def cmd_lm_train(args: argparse.Namespace) -> int:
    try:
        settings = _Settings(args)
        manifest = Manifest.load(args.manifest)
        sequences = []
        for entry in manifest:
            text = entry.document_path.read_text(encoding="utf-8")
            words, spans = split_sentences(text)
            sequences.extend(words[span.slice] for span in spans)
        lm = lm_train(sequences, order=settings.get("order", 3), add_k=settings.get("add_k", 0.1))
        out = settings.get("out", None)
        if not out or out == "-":
            raise ConfigError("provide --out FILE for the trained model")
        lm.save(out)
    except (OSError, ValueError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(f"trained order-{lm.order} model on {len(sequences)} sentences "
          f"({len(lm.vocab)} types) -> {out}")
    return EXIT_OK


def cmd_stats(args: argparse.Namespace) -> int:
    try:
        settings = _Settings(args)
        manifest = Manifest.load(args.manifest)
        stats = corpus_stats(manifest, _load_options(settings))
    except (OSError, ValueError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for key in ("pairs", "frames_per_video", "tokens_per_document", "tokens_per_summary"):
        value = stats[key]
        print(f"{key}: {'n/a' if value is None else value}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument wiring


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--manifest", required=True, help="JSON Lines manifest path")
    parser.add_argument("--config", help="key=value file mirroring the flags; flags win")
    parser.add_argument("--seed", type=int, help="deterministic seed (default 0)")
    parser.add_argument("--stride", type=int, help="frame sampling stride (default 360)")
    parser.add_argument("--cap", type=int, help="max candidate frames (default 120)")
    parser.add_argument(
        "--resize", type=int, nargs=2, metavar=("W", "H"),
        help="frame resize, 0 0 keeps native (default 640 360)",
    )
    parser.add_argument("--embed-dim", type=int, dest="embed_dim",
                        help="toy embedding width (default 512)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coverline",
        description="Pick one cover frame and one k-word sentence per video/document pair.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sum = sub.add_parser("summarize", help="write summary records for every manifest entry")
    _add_common(p_sum)
    p_sum.add_argument("--embeddings", help="directory of per-pair .xmeb files")
    p_sum.add_argument("--toy-embed", action="store_true", default=None, dest="toy_embed",
                       help="use the deterministic toy embedders")
    p_sum.add_argument("--k", type=int, help="summary length (default 12)")
    p_sum.add_argument("--engine", choices=("neural", "greedy", "beam", "exhaustive"))
    p_sum.add_argument("--beam", type=int, help="beam width (default 4)")
    p_sum.add_argument("--lambda-d", type=float, dest="lambda_d", help="document coverage weight")
    p_sum.add_argument("--lambda-v", type=float, dest="lambda_v", help="video coverage weight")
    p_sum.add_argument("--lambda-f", type=float, dest="lambda_f", help="fluency weight")
    p_sum.add_argument("--lambda-c", type=float, dest="lambda_c", help="cross-modal weight")
    p_sum.add_argument("--clusters", type=int, help="colour clusters (default 8)")
    p_sum.add_argument("--epsilon", type=float, help="entropic regularisation (default 0.01)")
    p_sum.add_argument("--params", help="XMEB parameter file for the neural engine")
    p_sum.add_argument("--lm", help="persisted language model (default: per-pair training)")
    p_sum.add_argument("--out", help="output JSONL path, - for stdout")
    p_sum.add_argument("--workers", type=int, help="worker threads (default: logical CPUs)")
    p_sum.add_argument("--figures", help="directory for per-pair PNG figures")
    p_sum.set_defaults(func=cmd_summarize)

    p_eval = sub.add_parser("evaluate", help="score predictions against manifest references")
    _add_common(p_eval)
    p_eval.add_argument("--predictions", required=True, help="summary records to score")
    p_eval.add_argument("--concepts", help="concept vocabulary XMEB file")
    p_eval.add_argument("--concept-count", type=int, dest="concept_count",
                        help="concepts per frame (default 5)")
    p_eval.add_argument("--frame-threshold", type=float, dest="frame_threshold",
                        help="frame accuracy threshold (default 0.3)")
    p_eval.add_argument("--out", help="report JSONL path, - for stdout")
    p_eval.add_argument("--figures", help="directory for the report PNG")
    p_eval.set_defaults(func=cmd_evaluate)

    p_toy = sub.add_parser("embed-toy", help="write toy embeddings for every manifest entry")
    _add_common(p_toy)
    p_toy.add_argument("--embeddings", help="output directory for per-pair .xmeb files")
    p_toy.set_defaults(func=cmd_embed_toy)

    p_lm = sub.add_parser("lm-train", help="train the n-gram model on manifest documents")
    _add_common(p_lm)
    p_lm.add_argument("--order", type=int, help="n-gram order (default 3)")
    p_lm.add_argument("--add-k", type=float, dest="add_k", help="smoothing constant (default 0.1)")
    p_lm.add_argument("--out", help="model output path")
    p_lm.set_defaults(func=cmd_lm_train)

    p_stats = sub.add_parser("stats", help="print corpus-level means")
    _add_common(p_stats)
    p_stats.set_defaults(func=cmd_stats)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
