"""Entry point: parse flags, build the config, run the loop."""
from __future__ import annotations

import argparse
import sys

from .service import ServiceConfig, serve


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sam-backend",
        description="Promptable 2D segmenter speaking line-JSON on stdin/stdout.",
    )
    parser.add_argument("--mode", choices=["model", "echo"], default="echo")
    parser.add_argument("--checkpoint", default=None, help="Model checkpoint (mode=model).")
    parser.add_argument("--device", default="cpu", help="Torch device for mode=model.")
    parser.add_argument("--echo-threshold", type=int, default=128,
                        help="Pixel cutoff for the deterministic echo mode.")
    parser.add_argument("--model-type", default="auto",
                        help="Registry key (vit_h/vit_l/vit_b) or 'auto' from the filename.")
    return parser


def main(argv=None) -> None:
    args = build_parser().parse_args(argv)
    try:
        cfg = ServiceConfig(
            mode=args.mode,
            checkpoint=args.checkpoint,
            device=args.device,
            echo_threshold=args.echo_threshold,
            model_type=args.model_type,
        )
    except ValueError as exc:
        print(f"sam-backend: {exc}", file=sys.stderr)
        raise SystemExit(2)
    raise SystemExit(serve(cfg))


if __name__ == "__main__":
    main()
