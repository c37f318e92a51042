"""Ranking metrics: nDCG@k, MAP@k, P@k, macro-averaged per query.

Conventions follow trec_eval: linear DCG gain ``grade / log2(rank + 1)``,
MAP's divisor is the total number of relevant documents for the query, and
queries without any relevant document are excluded from macro means.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .corpus import Qrels
from .retrievers import RankedList
from .validation import check_positive_int

METRICS = ("ndcg", "map", "p")
DEFAULT_CUTOFFS = (1, 3, 5, 10, 100)


def precision_at_k(ranking: Sequence[str], rels: Mapping[str, int], k: int) -> float:
    """Fraction of the top k that is relevant; denominator is always k."""
    check_positive_int(k, "k")
    hits = sum(1 for doc_id in ranking[:k] if rels.get(doc_id, 0) > 0)
    return hits / k


def ndcg_at_k(ranking: Sequence[str], rels: Mapping[str, int], k: int) -> float:
    check_positive_int(k, "k")
    positive = sorted((g for g in rels.values() if g > 0), reverse=True)
    if not positive:
        raise ValueError("ndcg undefined for a query with no relevant documents")
    dcg = 0.0
    for i, doc_id in enumerate(ranking[:k]):
        grade = rels.get(doc_id, 0)
        if grade > 0:
            dcg += grade / math.log2(i + 2)
    idcg = sum(g / math.log2(i + 2) for i, g in enumerate(positive[:k]))
    return dcg / idcg


def map_at_k(ranking: Sequence[str], rels: Mapping[str, int], k: int) -> float:
    check_positive_int(k, "k")
    total_relevant = sum(1 for g in rels.values() if g > 0)
    if total_relevant == 0:
        raise ValueError("map undefined for a query with no relevant documents")
    hits = 0
    precision_sum = 0.0
    for i, doc_id in enumerate(ranking[:k]):
        if rels.get(doc_id, 0) > 0:
            hits += 1
            precision_sum += hits / (i + 1)
    return precision_sum / total_relevant


@dataclass
class RunResult:
    """One method's rankings over the evaluation query set."""

    method: str
    rankings: dict[str, RankedList] = field(default_factory=dict)

    def add(self, ranked: RankedList) -> None:
        self.rankings[ranked.query_id] = ranked


@dataclass
class EvalReport:
    """Per-query metric values plus macro means over evaluated queries."""

    method: str
    cutoffs: tuple[int, ...]
    per_query: dict[str, dict[str, float]]
    macro: dict[str, float]
    evaluated: int
    skipped_no_relevant: int

    @staticmethod
    def key(metric: str, cutoff: int) -> str:
        return f"{metric}@{cutoff}"


def evaluate_run(run: RunResult, qrels: Qrels, cutoffs: Sequence[int] = DEFAULT_CUTOFFS) -> EvalReport:
    """Compute every metric at every cutoff, per query, then macro-average.

    Queries absent from the qrels, or with no positively graded document,
    are excluded from the macro mean and reported in the skip count.
    """
    if not cutoffs:
        raise ValueError("cutoffs must be non-empty")
    cutoffs = tuple(int(c) for c in cutoffs)
    per_query: dict[str, dict[str, float]] = {}
    skipped = 0
    for query_id in sorted(run.rankings):
        rels = qrels.get(query_id, {})
        if not any(g > 0 for g in rels.values()):
            skipped += 1
            continue
        ranking = run.rankings[query_id].doc_ids()
        values: dict[str, float] = {}
        for cutoff in cutoffs:
            values[EvalReport.key("ndcg", cutoff)] = ndcg_at_k(ranking, rels, cutoff)
            values[EvalReport.key("map", cutoff)] = map_at_k(ranking, rels, cutoff)
            values[EvalReport.key("p", cutoff)] = precision_at_k(ranking, rels, cutoff)
        per_query[query_id] = values

    macro: dict[str, float] = {}
    for metric in METRICS:
        for cutoff in cutoffs:
            key = EvalReport.key(metric, cutoff)
            if per_query:
                macro[key] = sum(v[key] for v in per_query.values()) / len(per_query)
            else:
                macro[key] = 0.0
    return EvalReport(
        method=run.method,
        cutoffs=cutoffs,
        per_query=per_query,
        macro=macro,
        evaluated=len(per_query),
        skipped_no_relevant=skipped,
    )


def write_report_jsonl(report: EvalReport, path: str | Path, config_items: Sequence[tuple[str, str]] = ()) -> None:
    """Per-query report: a meta line, then one line per evaluated query."""
    with open(path, "w", encoding="utf-8") as f:
        meta = {
            "type": "meta",
            "method": report.method,
            "cutoffs": list(report.cutoffs),
            "evaluated": report.evaluated,
            "skipped_no_relevant": report.skipped_no_relevant,
            "macro": report.macro,
            "config": {k: v for k, v in config_items},
        }
        f.write(json.dumps(meta, sort_keys=True) + "\n")
        for query_id in sorted(report.per_query):
            row = {"type": "query", "query_id": query_id, **report.per_query[query_id]}
            f.write(json.dumps(row, sort_keys=True) + "\n")


def load_report_jsonl(path: str | Path) -> EvalReport:
    with open(path, encoding="utf-8") as f:
        lines = [json.loads(line) for line in f if line.strip()]
    if not lines or lines[0].get("type") != "meta":
        raise ValueError(f"{path}: missing meta line")
    meta = lines[0]
    per_query = {}
    for row in lines[1:]:
        if row.get("type") != "query":
            continue
        per_query[row["query_id"]] = {
            k: v for k, v in row.items() if k not in ("type", "query_id")
        }
    return EvalReport(
        method=meta["method"],
        cutoffs=tuple(meta["cutoffs"]),
        per_query=per_query,
        macro=meta["macro"],
        evaluated=meta["evaluated"],
        skipped_no_relevant=meta["skipped_no_relevant"],
    )


def write_report_tsv(report: EvalReport, path: str | Path, config_items: Sequence[tuple[str, str]] = ()) -> None:
    """Aggregate TSV (method, metric, cutoff, value) with the resolved
    config embedded as leading comment lines."""
    with open(path, "w", encoding="utf-8") as f:
        for key, value in config_items:
            f.write(f"# {key} = {value}\n")
        f.write("method\tmetric\tcutoff\tvalue\n")
        for metric in METRICS:
            for cutoff in report.cutoffs:
                value = report.macro[EvalReport.key(metric, cutoff)]
                f.write(f"{report.method}\t{metric}\t{cutoff}\t{value:.6f}\n")
