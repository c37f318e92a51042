"""Command-line entry points.

Subcommands:
    index      build a retriever over a corpus and persist the snapshot
    attribute  print the token/score table for one query
    run        execute methods over the query set and write reports
    compare    merge per-method reports into one grid
    mock-llm   serve a scripted chat-completions endpoint
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import mockllm
from .attribution import IntegratedGradientsAttributor
from .config import RunConfig, load_config
from .corpus import Query, load_corpus, load_queries
from .metrics import load_report_jsonl
from .pipeline import build_retriever, compare_reports, run_and_report
from .retrievers import save_index

logger = logging.getLogger(__name__)


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="attriq", description=__doc__)
    parser.add_argument("--quiet", action="store_true", help="only warnings and errors")
    sub = parser.add_subparsers(required=True)

    p_index = sub.add_parser("index", help="build and persist a retriever index")
    _config_options(p_index)
    p_index.add_argument("--out", required=True, help="snapshot path (.json or .json.gz)")
    p_index.set_defaults(func=_cmd_index)

    p_attr = sub.add_parser("attribute", help="print a token/score table for one query")
    _config_options(p_attr)
    group = p_attr.add_mutually_exclusive_group(required=True)
    group.add_argument("--query-id", help="id of a query from the queries file")
    group.add_argument("--query-text", help="free-form query text")
    p_attr.set_defaults(func=_cmd_attribute)

    p_run = sub.add_parser("run", help="run one method (or all configured methods)")
    _config_options(p_run)
    p_run.add_argument("--method", help="Org, Tkn, LLM or GLLM; default: all configured")
    p_run.set_defaults(func=_cmd_run)

    p_cmp = sub.add_parser("compare", help="merge report.jsonl files into a grid")
    p_cmp.add_argument("reports", nargs="+", help="per-method report.jsonl paths")
    p_cmp.add_argument("--out", default="compare.txt", help="aligned-text output path")
    p_cmp.set_defaults(func=_cmd_compare)

    p_mock = sub.add_parser("mock-llm", help="serve a scripted chat-completions endpoint")
    p_mock.add_argument("--host", default="127.0.0.1")
    p_mock.add_argument("--port", type=int, default=8130)
    p_mock.add_argument("--script", help="JSON file mapping query text to rewrite")
    p_mock.set_defaults(func=_cmd_mock)
    return parser


def _config_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key = value config file")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override one config key (repeatable)",
    )
    parser.add_argument("--retriever", choices=("dense", "sparse", "bridge"), help="retriever kind")


def _resolve_config(args) -> RunConfig:
    overrides: dict[str, str] = {}
    for item in args.overrides:
        if "=" not in item:
            raise ValueError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key.strip()] = value.strip()
    if getattr(args, "retriever", None):
        overrides["retriever.kind"] = args.retriever
    return load_config(args.config, overrides)


def _cmd_index(args) -> int:
    config = _resolve_config(args)
    if config.retriever_kind == "bridge":
        raise ValueError("bridge retrievers keep their index remotely; nothing to persist")
    corpus = load_corpus(config.corpus_path)
    retriever = build_retriever(config, corpus)
    save_index(retriever, args.out)
    print(f"indexed {len(corpus)} documents -> {args.out}")
    return 0


def _cmd_attribute(args) -> int:
    config = _resolve_config(args)
    if args.query_id:
        queries = {q.id: q for q in load_queries(config.queries_path)}
        query = queries.get(args.query_id)
        if query is None:
            raise ValueError(f"query id {args.query_id!r} not found in {config.queries_path}")
    else:
        query = Query.from_text("cli", args.query_text)
        if not query.tokens:
            raise ValueError("query text has no tokens")
    corpus = load_corpus(config.corpus_path) if config.retriever_kind != "bridge" else None
    retriever = build_retriever(config, corpus)
    try:
        ranked = retriever.search(query.text, config.depth, query_id=query.id)
        attributor = IntegratedGradientsAttributor(
            scorer=retriever,
            top_k=config.k_docs,
            steps=config.steps,
            normalization=config.normalization,
        )
        attributed = attributor.attribute(query, ranked)
    finally:
        close = getattr(retriever, "close", None)
        if close:
            close()
    print(f"query {query.id}: {query.text}")
    print(f"top docs ({attributed.k_used}): {', '.join(attributed.doc_ids) or '-'}")
    if attributed.no_evidence:
        print("note: empty ranking; uniform fallback scores")
    width = max(len(t) for t in query.tokens)
    print(f"{'token':<{width}}  {'raw':>12}  {attributed.scheme:>12}")
    for token, raw, norm in zip(query.tokens, attributed.raw, attributed.normalized):
        print(f"{token:<{width}}  {raw:>12.6f}  {norm:>12.6f}")
    return 0


def _cmd_run(args) -> int:
    config = _resolve_config(args)
    methods = [args.method] if args.method else None
    if args.method and args.method not in ("Org", "Tkn", "LLM", "GLLM"):
        raise ValueError(f"unknown method {args.method!r}")
    reports = run_and_report(config, methods)
    for method, report in reports.items():
        out_dir = Path(config.output_dir) / method
        print(f"{method}: {report.evaluated} queries evaluated -> {out_dir}")
    return 0


def _cmd_compare(args) -> int:
    reports = [load_report_jsonl(path) for path in args.reports]
    table = compare_reports(reports)
    out = Path(args.out)
    out.write_text(table.to_text(), encoding="utf-8")
    out.with_suffix(".tsv").write_text(table.to_tsv(), encoding="utf-8")
    print(table.to_text())
    print(f"wrote {out} and {out.with_suffix('.tsv')}")
    return 0


def _cmd_mock(args) -> int:
    script = mockllm.load_script(args.script) if args.script else {}
    server = mockllm.create_server(script, host=args.host, port=args.port)
    host, port = server.server_address[:2]
    print(f"mock chat-completions endpoint on http://{host}:{port} ({len(script)} scripted rewrites)")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
