"""Adapter entry points: serve the protocol, export offline embeddings."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .embedding import EncoderEmbedder, export_table
from .model import AdapterConfig, ScaffoldDecoder

logger = logging.getLogger("argex_adapter.cli")


def config_from(args) -> AdapterConfig:
    return AdapterConfig(
        model=args.model,
        device=args.device,
        top_k=args.top_k,
        max_length=args.max_length,
        seed=args.seed,
    )


def cmd_serve(args) -> int:
    import uvicorn

    from .app import create_app

    decoder = ScaffoldDecoder(config_from(args))
    logger.info("serving %s on %s:%d", decoder.model_name, args.host, args.port)
    uvicorn.run(create_app(decoder), host=args.host, port=args.port, log_level="info")
    return 0


def cmd_export_embeddings(args) -> int:
    texts = [
        line.rstrip("\n") for line in Path(args.texts).read_text(encoding="utf-8").splitlines()
    ]
    texts = [t for t in texts if t]
    decoder = ScaffoldDecoder(config_from(args))
    count = export_table(EncoderEmbedder(decoder.backend), texts, args.out)
    logger.info("wrote %d vectors to %s", count, args.out)
    return 0


def add_model_flags(parser) -> None:
    parser.add_argument("--model", default="tiny-random", help="checkpoint path or tiny-random")
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--top-k", dest="top_k", type=int, default=50)
    parser.add_argument("--max-length", dest="max_length", type=int, default=256)
    parser.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="argex-adapter",
        description="Wire-protocol generator wrapping a sequence-to-sequence model.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="serve /v1/generate and /v1/embed")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8500)
    add_model_flags(serve)
    serve.set_defaults(func=cmd_serve)

    export = sub.add_parser(
        "export-embeddings", help="write the offline (text-hash, vector) table"
    )
    export.add_argument("--texts", required=True, help="one text per line")
    export.add_argument("--out", required=True, help="output TSV path")
    add_model_flags(export)
    export.set_defaults(func=cmd_export_embeddings)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO)
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
