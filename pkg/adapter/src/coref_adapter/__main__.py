"""Run the adapter: ``coref-adapter --port 8762 --resolver rule``."""

from __future__ import annotations

import argparse

import uvicorn

from .app import create_app
from .config import AdapterConfig


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(prog="coref-adapter", description=__doc__)
    ap.add_argument("--host", default="127.0.0.1")
    ap.add_argument("--port", type=int, default=AdapterConfig.port)
    ap.add_argument("--resolver", default="rule", choices=["rule", "maverick"])
    ap.add_argument("--tagger", default="rule", choices=["rule", "spacy"])
    ap.add_argument("--resolver-model", default=AdapterConfig.resolver_model)
    ap.add_argument("--tagger-model", default=AdapterConfig.tagger_model)
    ap.add_argument("--device", default="cpu")
    ap.add_argument("--max-input-length", type=int, default=AdapterConfig.max_input_length)
    args = ap.parse_args(argv)

    config = AdapterConfig(
        resolver_backend=args.resolver,
        tagger_backend=args.tagger,
        resolver_model=args.resolver_model,
        tagger_model=args.tagger_model,
        device=args.device,
        max_input_length=args.max_input_length,
        port=args.port,
    )
    uvicorn.run(create_app(config), host=args.host, port=args.port, log_level="info")


if __name__ == "__main__":
    main()
