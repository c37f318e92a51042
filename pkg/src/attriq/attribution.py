"""Token attribution via path-integrated gradients.

For one (query, document) pair, each token's attribution is the integral of
the score gradient along the straight line from the all-zeros baseline to
the query input, times the input-baseline difference, approximated with an
m-point midpoint rule:

    attr_i = (x_i - x'_i) . (1/m) * sum_{s=1..m} grad score(x' + ((s-0.5)/m)(x - x'))

summed over the token's input dimensions.  By construction the attributions
for one document sum to score(q, d) - score(baseline, d) up to quadrature
error (exactly, for scorers linear in their inputs).

A per-query token score is the elementwise mean over the top-k retrieved
documents, optionally normalized per query.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator

from .corpus import Query
from .retrievers import QueryScorer, RankedList
from .validation import check_positive_int, check_tokens

NORMALIZATION_SCHEMES = ("none", "l1", "minmax", "zscore")


@dataclass(frozen=True)
class AttributionVector:
    """Per-token attributions of one document's relevance score."""

    doc_id: str
    scores: tuple[float, ...]
    steps: int
    baseline: str = "zero"


@dataclass(frozen=True)
class AttributedQuery:
    """Token scores for one query, averaged over its top-ranked documents."""

    query: Query
    raw: tuple[float, ...]
    normalized: tuple[float, ...]
    scheme: str
    doc_ids: tuple[str, ...]
    k_used: int
    steps: int
    degenerate: bool = False
    no_evidence: bool = False
    per_doc: tuple[AttributionVector, ...] = field(default=(), repr=False)


def ig_single(
    tokens: Sequence[str],
    doc_id: str,
    scorer: QueryScorer,
    steps: int = 64,
) -> AttributionVector:
    """Midpoint-rule integrated gradients for one (query, document) pair."""
    tokens = check_tokens(tokens)
    check_positive_int(steps, "steps")
    x = np.asarray(scorer.input_of(tokens), dtype=float)
    baseline = np.asarray(scorer.baseline_of(tokens), dtype=float)
    diff = x - baseline
    total = np.zeros_like(x)
    for s in range(1, steps + 1):
        point = baseline + ((s - 0.5) / steps) * diff
        total += scorer.gradient(tokens, point, doc_id)
    contrib = diff * (total / steps)
    per_token = contrib.reshape(len(tokens), -1).sum(axis=1)
    return AttributionVector(doc_id=doc_id, scores=tuple(float(v) for v in per_token), steps=steps)


def aggregate(vectors: Sequence[Sequence[float]], k: int) -> list[float]:
    """Elementwise arithmetic mean of exactly k equal-length vectors.

    Accumulates in rank order so the reduction is deterministic and matches
    a plain left-to-right mean bit for bit.
    """
    check_positive_int(k, "k")
    if len(vectors) != k:
        raise ValueError(f"expected exactly {k} vectors, got {len(vectors)}")
    lengths = {len(v) for v in vectors}
    if len(lengths) != 1:
        raise ValueError(f"attribution vectors differ in length: {sorted(lengths)}")
    total = np.zeros(lengths.pop())
    for vec in vectors:
        total += np.asarray(vec, dtype=float)
    return [float(v) for v in total / k]


def normalize(raw: Sequence[float], scheme: str = "l1") -> tuple[list[float], bool]:
    """Normalize raw token scores per query.

    Returns (scores, degenerate).  When the scheme's denominator is
    degenerate (all-zero scores for l1, constant scores for minmax/zscore),
    the raw scores are returned unchanged with the flag set.
    """
    if scheme not in NORMALIZATION_SCHEMES:
        raise ValueError(f"unknown normalization scheme {scheme!r}")
    values = np.asarray(raw, dtype=float)
    if values.size == 0:
        raise ValueError("cannot normalize an empty score vector")
    if scheme == "none":
        return [float(v) for v in values], False
    if scheme == "l1":
        denom = np.abs(values).sum()
        if denom == 0.0:
            return [float(v) for v in values], True
        return [float(v) for v in values / denom], False
    if scheme == "minmax":
        lo, hi = values.min(), values.max()
        if hi == lo:
            return [float(v) for v in values], True
        return [float(v) for v in (values - lo) / (hi - lo)], False
    # zscore
    std = values.std()
    if std == 0.0:
        return [float(v) for v in values], True
    return [float(v) for v in (values - values.mean()) / std], False


class IntegratedGradientsAttributor(BaseEstimator):
    """Computes per-query token scores against a retriever's top documents.

    Parameters
    ----------
    scorer : a fitted `QueryScorer` (or any object exposing the remote
        ``attribute_docs`` protocol, e.g. a bridge client).
    top_k : number of top-ranked documents to average over.
    steps : midpoint quadrature steps per document.
    normalization : per-query scheme, one of ``none|l1|minmax|zscore``.
    """

    def __init__(
        self,
        scorer,
        top_k: int = 5,
        steps: int = 64,
        normalization: str = "l1",
    ):
        self.scorer = scorer
        self.top_k = top_k
        self.steps = steps
        self.normalization = normalization

    def attribute(self, query: Query, ranked: RankedList) -> AttributedQuery:
        """Token scores for ``query`` against the head of ``ranked``.

        An empty ranking yields uniform raw scores 1/n with the
        ``no_evidence`` flag set.
        """
        check_positive_int(self.top_k, "top_k")
        tokens = list(query.tokens)
        check_tokens(tokens)
        head = ranked.entries[: self.top_k]
        if not head:
            raw = [1.0 / len(tokens)] * len(tokens)
            normalized, degenerate = normalize(raw, self.normalization)
            return AttributedQuery(
                query=query,
                raw=tuple(raw),
                normalized=tuple(normalized),
                scheme=self.normalization,
                doc_ids=(),
                k_used=0,
                steps=self.steps,
                degenerate=degenerate,
                no_evidence=True,
            )
        doc_ids = [doc_id for doc_id, _ in head]
        vectors = self._per_doc_vectors(query, doc_ids)
        raw = aggregate([v.scores for v in vectors], k=len(vectors))
        normalized, degenerate = normalize(raw, self.normalization)
        return AttributedQuery(
            query=query,
            raw=tuple(raw),
            normalized=tuple(normalized),
            scheme=self.normalization,
            doc_ids=tuple(doc_ids),
            k_used=len(doc_ids),
            steps=self.steps,
            degenerate=degenerate,
            per_doc=tuple(vectors),
        )

    def _per_doc_vectors(self, query: Query, doc_ids: list[str]) -> list[AttributionVector]:
        remote = getattr(self.scorer, "attribute_docs", None)
        if remote is not None:
            words, vectors = remote(query.text, doc_ids, self.steps)
            if tuple(words) != tuple(query.tokens):
                raise ValueError(
                    f"scorer word tokens {words!r} do not match query tokens {list(query.tokens)!r}"
                )
            return list(vectors)
        # Summation order is fixed by rank position, so concurrent callers
        # still reduce deterministically.
        return [ig_single(list(query.tokens), doc_id, self.scorer, self.steps) for doc_id in doc_ids]
