"""The one-shot closed loop over a query set, for each method.

Per query and method:

    Org   search the original query at depth max(cutoffs)
    Tkn   search, attribute over the top-k head, keep above-mean tokens,
          re-search the reduced query
    LLM   rewrite with the score-free prompt, re-search
    GLLM  search, attribute, rewrite with the guided prompt, re-search

Each issued query string is searched exactly once at full depth; the
attribution step reuses the head of that ranking.  A rewrite failure
degrades that query to its original ranking (with an error recorded in the
trace) instead of aborting the run.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import metrics as metrics_mod
from .attribution import AttributedQuery, IntegratedGradientsAttributor
from .bridge_client import BridgeRetriever
from .config import RunConfig
from .corpus import Corpus, Query, load_corpus, load_qrels, load_queries
from .metrics import EvalReport, RunResult, evaluate_run
from .prompts import build_guided_prompt, build_plain_prompt
from .retrievers import DenseRetriever, RankedList, SparseRetriever, load_index
from .rewrite import (
    METHOD_GLLM,
    METHOD_LLM,
    METHOD_ORG,
    METHOD_TKN,
    EndpointRewriter,
    IdentityRewriter,
    RewriteError,
    RewrittenQuery,
    ScriptedRewriter,
    original_query,
    rewrite,
    select_top_tokens,
)

logger = logging.getLogger(__name__)


@dataclass
class QueryTrace:
    """Everything recorded about one (query, method) execution."""

    query_id: str
    method: str
    original: str
    tokens: tuple[str, ...]
    alpha_raw: tuple[float, ...] | None = None
    alpha_normalized: tuple[float, ...] | None = None
    normalization: str | None = None
    degenerate: bool = False
    no_evidence: bool = False
    top_doc_ids: tuple[str, ...] = ()
    k_used: int = 0
    steps: int = 0
    prompt_hash: str | None = None
    rewrite_text: str | None = None
    rewrite_tokens: tuple[str, ...] | None = None
    rewrite_fallback: bool = False
    cache_hit: bool = False
    response_id: str | None = None
    error: str | None = None

    def to_json(self) -> str:
        record = {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}
        return json.dumps(record, sort_keys=True)


@dataclass
class MethodRun:
    method: str
    result: RunResult
    traces: list[QueryTrace] = field(default_factory=list)


def build_retriever(config: RunConfig, corpus: Corpus | None):
    if config.retriever_kind == "bridge":
        return BridgeRetriever(cmd=config.bridge_cmd).fit()
    if config.index_path:
        retriever = load_index(config.index_path)
        expected = {"dense": DenseRetriever, "sparse": SparseRetriever}[config.retriever_kind]
        if not isinstance(retriever, expected):
            raise ValueError(
                f"index at {config.index_path} is not a {config.retriever_kind} retriever"
            )
        return retriever
    if corpus is None:
        raise ValueError("a corpus is required to fit a local retriever")
    if config.retriever_kind == "dense":
        return DenseRetriever(dim=config.dim, seed=config.seed).fit(corpus)
    return SparseRetriever(seed=config.seed).fit(corpus)


def build_rewriter(config: RunConfig):
    if config.rewriter_kind == "identity":
        return IdentityRewriter()
    if config.rewriter_kind == "scripted":
        with open(config.rewriter_script, encoding="utf-8") as f:
            return ScriptedRewriter(json.load(f))
    return EndpointRewriter(
        endpoint=config.llm_endpoint,
        model=config.llm_model,
        temperature=config.llm_temperature,
        max_tokens=config.llm_max_tokens,
        cache_dir=config.llm_cache_dir or None,
        max_in_flight=config.concurrency,
    )


def run_method(
    config: RunConfig,
    method: str,
    queries: Sequence[Query],
    retriever,
    rewriter,
) -> MethodRun:
    """Run one method over the query set with a bounded worker pool.

    Results are collected keyed by query id and emitted in input order, so
    traces and rankings are deterministic regardless of thread scheduling.
    """
    attributor = IntegratedGradientsAttributor(
        scorer=retriever,
        top_k=config.k_docs,
        steps=config.steps,
        normalization=config.normalization,
    )

    def one(query: Query) -> tuple[RankedList, QueryTrace]:
        return _run_query(config, method, query, retriever, rewriter, attributor)

    if config.concurrency > 1:
        with ThreadPoolExecutor(max_workers=config.concurrency) as pool:
            outcomes = list(pool.map(one, queries))
    else:
        outcomes = [one(q) for q in queries]

    run = MethodRun(method=method, result=RunResult(method=method))
    for ranked, trace in outcomes:
        run.result.add(ranked)
        run.traces.append(trace)
    return run


def _run_query(
    config: RunConfig,
    method: str,
    query: Query,
    retriever,
    rewriter,
    attributor: IntegratedGradientsAttributor,
) -> tuple[RankedList, QueryTrace]:
    depth = config.depth
    trace = QueryTrace(
        query_id=query.id, method=method, original=query.text, tokens=tuple(query.tokens)
    )
    org_ranked = retriever.search(query.text, depth, query_id=query.id)
    if method == METHOD_ORG:
        return org_ranked, trace

    attributed: AttributedQuery | None = None
    if method in (METHOD_TKN, METHOD_GLLM):
        attributed = attributor.attribute(query, org_ranked)
        trace.alpha_raw = attributed.raw
        trace.alpha_normalized = attributed.normalized
        trace.normalization = attributed.scheme
        trace.degenerate = attributed.degenerate
        trace.no_evidence = attributed.no_evidence
        trace.top_doc_ids = attributed.doc_ids
        trace.k_used = attributed.k_used
        trace.steps = attributed.steps

    try:
        rewritten = _derive_rewrite(config, method, query, attributed, rewriter, trace)
    except RewriteError as exc:
        trace.error = f"{exc} (prompt {exc.prompt_hash[:12]})"
        logger.warning("query %s %s degraded to original ranking: %s", query.id, method, exc)
        return org_ranked, trace

    trace.rewrite_text = rewritten.text
    trace.rewrite_tokens = rewritten.tokens
    trace.rewrite_fallback = rewritten.fallback
    trace.cache_hit = rewritten.cache_hit
    trace.response_id = rewritten.response_id
    reranked = retriever.search(rewritten.text, depth, query_id=query.id)
    return reranked, trace


def _derive_rewrite(
    config: RunConfig,
    method: str,
    query: Query,
    attributed: AttributedQuery | None,
    rewriter,
    trace: QueryTrace,
) -> RewrittenQuery:
    if method == METHOD_TKN:
        return select_top_tokens(query, attributed.raw)
    if method == METHOD_LLM:
        prompt = build_plain_prompt(
            query,
            model=config.llm_model,
            temperature=config.llm_temperature,
            max_tokens=config.llm_max_tokens,
        )
    elif method == METHOD_GLLM:
        prompt = build_guided_prompt(
            query,
            attributed.normalized,
            model=config.llm_model,
            temperature=config.llm_temperature,
            max_tokens=config.llm_max_tokens,
        )
    else:
        return original_query(query)
    trace.prompt_hash = prompt.prompt_hash
    return rewrite(prompt, rewriter, query, method=method)


def write_trace(traces: Sequence[QueryTrace], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for trace in traces:
            f.write(trace.to_json() + "\n")


def run_and_report(
    config: RunConfig,
    methods: Sequence[str] | None = None,
) -> dict[str, EvalReport]:
    """Load data, run the configured methods, and write per-method outputs.

    Writes ``<output_dir>/<method>/trace.jsonl``, ``report.jsonl`` and
    ``report.tsv``; returns the evaluation reports keyed by method.
    """
    corpus = load_corpus(config.corpus_path) if config.retriever_kind != "bridge" else None
    queries = load_queries(config.queries_path)
    qrels = load_qrels(config.qrels_path)
    retriever = build_retriever(config, corpus)
    rewriter = build_rewriter(config)
    try:
        reports: dict[str, EvalReport] = {}
        for method in methods or config.methods:
            run = run_method(config, method, queries, retriever, rewriter)
            report = evaluate_run(run.result, qrels, config.cutoffs)
            out_dir = Path(config.output_dir) / method
            out_dir.mkdir(parents=True, exist_ok=True)
            write_trace(run.traces, out_dir / "trace.jsonl")
            metrics_mod.write_report_jsonl(report, out_dir / "report.jsonl", config.items())
            metrics_mod.write_report_tsv(report, out_dir / "report.tsv", config.items())
            reports[method] = report
            logger.info(
                "%s: evaluated %d queries (skipped %d without relevant docs)",
                method,
                report.evaluated,
                report.skipped_no_relevant,
            )
        return reports
    finally:
        if isinstance(retriever, BridgeRetriever):
            retriever.close()


def compare_reports(reports: Sequence[EvalReport]) -> "ComparisonTable":
    """Merge per-method reports into a metric x cutoff x method grid."""
    if not reports:
        raise ValueError("no reports to compare")
    base = reports[0]
    for other in reports[1:]:
        if other.cutoffs != base.cutoffs:
            raise ValueError(
                f"cutoff mismatch: {base.method}={base.cutoffs} vs {other.method}={other.cutoffs}"
            )
        missing = set(base.per_query) ^ set(other.per_query)
        if missing:
            raise ValueError(
                f"query sets differ between {base.method} and {other.method}: "
                f"{sorted(missing)}"
            )
    methods = [r.method for r in reports]
    if len(set(methods)) != len(methods):
        raise ValueError(f"duplicate method tags in reports: {methods}")
    cells: dict[tuple[str, int], dict[str, float]] = {}
    for metric in metrics_mod.METRICS:
        for cutoff in base.cutoffs:
            key = EvalReport.key(metric, cutoff)
            cells[(metric, cutoff)] = {r.method: r.macro[key] for r in reports}
    return ComparisonTable(methods=tuple(methods), cutoffs=base.cutoffs, cells=cells)


@dataclass(frozen=True)
class ComparisonTable:
    methods: tuple[str, ...]
    cutoffs: tuple[int, ...]
    cells: dict[tuple[str, int], dict[str, float]]

    def best(self, metric: str, cutoff: int) -> tuple[str, ...]:
        row = self.cells[(metric, cutoff)]
        top = max(row.values())
        return tuple(m for m in self.methods if row[m] == top)

    def to_tsv(self) -> str:
        lines = ["metric\tcutoff\t" + "\t".join(self.methods) + "\tbest"]
        for metric in metrics_mod.METRICS:
            for cutoff in self.cutoffs:
                row = self.cells[(metric, cutoff)]
                values = "\t".join(f"{row[m]:.6f}" for m in self.methods)
                lines.append(f"{metric}\t{cutoff}\t{values}\t{','.join(self.best(metric, cutoff))}")
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        width = max(10, *(len(m) for m in self.methods)) + 2
        header = f"{'metric':<12}" + "".join(f"{m:>{width}}" for m in self.methods)
        lines = [header, "-" * len(header)]
        for metric in metrics_mod.METRICS:
            for cutoff in self.cutoffs:
                row = self.cells[(metric, cutoff)]
                best = set(self.best(metric, cutoff))
                cells = "".join(
                    f"{row[m]:>{width - 1}.4f}{'*' if m in best else ' '}" for m in self.methods
                )
                lines.append(f"{metric + '@' + str(cutoff):<12}{cells}")
        lines.append("")
        lines.append("* best per (metric, cutoff)")
        return "\n".join(lines) + "\n"
