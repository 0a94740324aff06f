"""Command-line front end: ``coverline-adapter MANIFEST OUT_DIR [flags]``.

Prints one JSON record per pair to stdout and a human summary to
stderr. Exit codes: 0 all pairs extracted, 1 some pairs failed, 2 usage
or manifest problems, 3 model load failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from .encoders import ModelLoadError
from .extract import ExtractOptions, extract

EXIT_OK = 0
EXIT_PAIR_FAILURES = 1
EXIT_USAGE = 2
EXIT_MODEL = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coverline-adapter",
        description="Extract per-pair frame/word/token embeddings to XMEB files.",
    )
    parser.add_argument("manifest", help="JSON Lines manifest of video/document pairs")
    parser.add_argument("out_dir", help="directory that receives one subdirectory per pair")
    parser.add_argument("--model", choices=("tiny", "clip"), default="tiny",
                        help="encoder to run (default: tiny)")
    parser.add_argument("--device", default="cpu",
                        help="inference device for the clip model (default: cpu)")
    parser.add_argument("--batch", type=int, default=16, metavar="N",
                        help="inference batch size (default: 16)")
    parser.add_argument("--dim", type=int, default=32,
                        help="output dimension of the tiny encoder (default: 32)")
    parser.add_argument("--clip-checkpoint", default="openai/clip-vit-base-patch32",
                        help="pretrained checkpoint name for --model clip")
    parser.add_argument("--stride", type=int, default=360,
                        help="sample every Nth frame file (default: 360)")
    parser.add_argument("--cap", type=int, default=120,
                        help="maximum sampled frames per pair (default: 120)")
    parser.add_argument("--resize", type=int, nargs=2, default=(640, 360),
                        metavar=("W", "H"), help="resize frames to WxH; 0 0 keeps native size")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    resize = tuple(args.resize)
    try:
        options = ExtractOptions(
            model=args.model,
            batch_size=args.batch,
            device=args.device,
            dim=args.dim,
            clip_checkpoint=args.clip_checkpoint,
            stride=args.stride,
            cap=args.cap,
            resize=None if resize == (0, 0) else resize,
        )
        records = extract(args.manifest, args.out_dir, options)
    except ModelLoadError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    for record in records:
        print(json.dumps(record, sort_keys=True))
    failed = sum("error" in r for r in records)
    print(f"extracted {len(records) - failed}/{len(records)} pairs", file=sys.stderr)
    return EXIT_PAIR_FAILURES if failed else EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
