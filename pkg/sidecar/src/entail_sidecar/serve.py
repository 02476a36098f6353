"""Entry point: serve a checkpoint over HTTP.

Configuration through flags or the MODEL_ID / PORT / MAX_LENGTH
environment variables (flags win).

    MODEL_ID=runs/checkpoint entail-sidecar
    entail-sidecar --model runs/checkpoint --port 8400
"""

from __future__ import annotations

import argparse
import os

from .app import DEFAULT_MAX_BATCH, create_app
from .scoring import DEFAULT_MAX_LENGTH


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument(
        "--model",
        default=os.environ.get("MODEL_ID"),
        help="model id or checkpoint directory (env MODEL_ID)",
    )
    parser.add_argument(
        "--port",
        type=int,
        default=int(os.environ.get("PORT", "8400")),
        help="listen port (env PORT, default 8400)",
    )
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument(
        "--max-length",
        type=int,
        default=int(os.environ.get("MAX_LENGTH", str(DEFAULT_MAX_LENGTH))),
        help="token truncation length (env MAX_LENGTH, default 512)",
    )
    parser.add_argument("--max-batch", type=int, default=DEFAULT_MAX_BATCH)
    return parser


def main(argv: list[str] | None = None) -> int:
    import uvicorn

    args = build_parser().parse_args(argv)
    if not args.model:
        build_parser().error("--model or MODEL_ID is required")
    app = create_app(
        model_id=args.model, max_length=args.max_length, max_batch=args.max_batch
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
