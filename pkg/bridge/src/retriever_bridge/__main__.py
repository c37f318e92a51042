"""CLI: host a transformer retriever behind the ndjson wire protocol."""

from __future__ import annotations

import argparse
import sys

from .corpus import load_corpus
from .scorers import load_scorer
from .server import BridgeServer


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="retriever-bridge", description=__doc__)
    parser.add_argument("--model", required=True, help="local path or hub id of the model")
    parser.add_argument("--corpus", required=True, help="BEIR corpus.jsonl to index")
    parser.add_argument("--scorer", choices=("sparse", "dense"), default="sparse")
    parser.add_argument("--max-seq-len", type=int, default=256)
    parser.add_argument("--batch-size", type=int, default=16, help="document encoding batch size")
    parser.add_argument("--transport", choices=("stdio", "tcp"), default="stdio")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8731)
    args = parser.parse_args(argv)

    try:
        scorer = load_scorer(args.model, args.scorer, max_seq_len=args.max_seq_len)
        docs = load_corpus(args.corpus)
        scorer.index_documents(docs, batch_size=args.batch_size)
    except Exception as exc:  # noqa: BLE001 - startup failures must be loud
        print(f"startup error: {exc}", file=sys.stderr)
        return 1

    print(f"indexed {len(docs)} docs with {args.scorer} scorer {args.model}", file=sys.stderr)
    server = BridgeServer(scorer, model_name=args.model)
    if args.transport == "tcp":
        server.serve_tcp(args.host, args.port)
    else:
        server.serve_stdio()
    return 0


if __name__ == "__main__":
    sys.exit(main())
