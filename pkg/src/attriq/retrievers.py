"""Reference retrievers: seeded dense and learned-sparse scorers.

Both retrievers follow the estimator convention: hyperparameters in
``__init__``, state built by ``fit(corpus)``, fitted attributes carry a
trailing underscore.  Both are differentiable with respect to their
query-side inputs, which is what the attribution stage integrates over:

* the dense scorer embeds each query word, mean-pools, and takes a dot
  product with a mean-pooled document vector, so its score is linear in
  every token embedding;
* the sparse scorer expands each query word onto a handful of vocabulary
  terms and scores ``sum_v idf_v * tf_v(d) * ln(1 + sum_i u_i * A[t_i, v])``
  over per-token weights ``u`` (all ones at the true query), giving a
  saturating, concave score that is exactly zero at ``u = 0``.

Word embeddings and expansion tables are pure functions of (seed, word);
see `attriq._rng`.  Models are immutable after ``fit`` and safe to share
across threads.
"""

from __future__ import annotations

import gzip
import json
import math
from abc import ABC, abstractmethod
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._rng import word_stream
from .corpus import Corpus, tokenize
from .validation import check_positive_int, check_tokens

INDEX_FORMAT = "attriq-index"
INDEX_VERSION = 1

_EXTRA_EXPANSIONS = 3  # non-self expansion draws per word


@dataclass(frozen=True)
class RankedList:
    """Per-query document ranking, scores non-increasing.

    Ties are broken by ascending doc id; doc ids are unique.
    """

    query_id: str
    entries: tuple[tuple[str, float], ...]

    def __post_init__(self) -> None:
        seen = set()
        prev = math.inf
        for doc_id, score in self.entries:
            if score > prev:
                raise ValueError("scores must be non-increasing")
            if doc_id in seen:
                raise ValueError(f"duplicate doc id {doc_id!r} in ranking")
            seen.add(doc_id)
            prev = score

    def doc_ids(self) -> list[str]:
        return [doc_id for doc_id, _ in self.entries]

    def __len__(self) -> int:
        return len(self.entries)


def rank_entries(query_id: str, scored: dict[str, float], k: int) -> RankedList:
    """Top-k of a doc->score map under the (-score, doc id) order."""
    top = sorted(scored.items(), key=lambda item: (-item[1], item[0]))[:k]
    return RankedList(query_id=query_id, entries=tuple(top))


class QueryScorer(ABC):
    """Differentiable relevance scorer over query-side inputs.

    ``input_of`` maps query tokens to the point the score is evaluated at
    (token embeddings for dense, per-token weights for sparse); the zero
    point of the same shape is the attribution baseline.  ``gradient`` must
    match finite differences of ``score_at`` anywhere on the straight path
    between baseline and input.
    """

    @abstractmethod
    def input_of(self, tokens: list[str]) -> np.ndarray:
        """Query input point, first axis indexed by token position."""

    def baseline_of(self, tokens: list[str]) -> np.ndarray:
        return np.zeros_like(self.input_of(tokens))

    @abstractmethod
    def score_at(self, tokens: list[str], point: np.ndarray, doc_id: str) -> float:
        """Relevance score evaluated at an arbitrary query input point."""

    @abstractmethod
    def gradient(self, tokens: list[str], point: np.ndarray, doc_id: str) -> np.ndarray:
        """d score / d point, same shape as ``point``."""

    def score(self, tokens: list[str], doc_id: str) -> float:
        return self.score_at(tokens, self.input_of(tokens), doc_id)


class DenseRetriever(BaseEstimator, QueryScorer):
    """Mean-pooled embedding dot-product scorer with exhaustive search.

    Parameters
    ----------
    dim : embedding dimension.
    seed : global 64-bit seed for the per-word embedding streams.
    """

    def __init__(self, dim: int = 64, seed: int = 42):
        self.dim = dim
        self.seed = seed

    def fit(self, corpus: Corpus, y=None) -> "DenseRetriever":
        check_positive_int(self.dim, "dim")
        self.vocabulary_ = set(corpus.vocabulary)
        self.doc_terms_ = {doc_id: dict(t) for doc_id, t in corpus.doc_terms.items()}
        self.doc_ids_ = sorted(self.doc_terms_)
        self._embedding_cache: dict[str, np.ndarray] = {}
        vectors = np.zeros((len(self.doc_ids_), self.dim))
        for row, doc_id in enumerate(self.doc_ids_):
            terms = self.doc_terms_[doc_id]
            length = sum(terms.values())
            if length == 0:
                continue
            acc = np.zeros(self.dim)
            for word, count in terms.items():
                acc += count * self._embedding(word)
            vectors[row] = acc / length
        self.doc_vectors_ = vectors
        self._doc_row = {doc_id: row for row, doc_id in enumerate(self.doc_ids_)}
        return self

    def _embedding(self, word: str) -> np.ndarray:
        """Seeded embedding for in-vocabulary words, zeros otherwise."""
        cached = self._embedding_cache.get(word)
        if cached is not None:
            return cached
        if word in self.vocabulary_:
            stream = word_stream(word, self.seed)
            vec = np.array([stream.next_symmetric() for _ in range(self.dim)])
        else:
            vec = np.zeros(self.dim)
        self._embedding_cache[word] = vec
        return vec

    def doc_vector(self, doc_id: str) -> np.ndarray:
        check_is_fitted(self)
        row = self._doc_row.get(doc_id)
        if row is None:
            raise ValueError(f"unknown doc id {doc_id!r}")
        return self.doc_vectors_[row]

    def input_of(self, tokens: list[str]) -> np.ndarray:
        check_is_fitted(self)
        tokens = check_tokens(tokens, allow_empty=True)
        if not tokens:
            return np.zeros((0, self.dim))
        return np.stack([self._embedding(t) for t in tokens])

    def score_at(self, tokens: list[str], point: np.ndarray, doc_id: str) -> float:
        dvec = self.doc_vector(doc_id)
        if point.shape[0] == 0:
            return 0.0
        return float(point.mean(axis=0) @ dvec)

    def gradient(self, tokens: list[str], point: np.ndarray, doc_id: str) -> np.ndarray:
        dvec = self.doc_vector(doc_id)
        n = point.shape[0]
        if n == 0:
            return np.zeros((0, self.dim))
        return np.tile(dvec / n, (n, 1))

    def search(self, query: str | list[str], k: int, query_id: str = "") -> RankedList:
        """Exhaustive top-k over the whole corpus."""
        check_is_fitted(self)
        check_positive_int(k, "k")
        tokens = _as_tokens(query)
        if tokens:
            qvec = self.input_of(tokens).mean(axis=0)
        else:
            qvec = np.zeros(self.dim)
        scores = self.doc_vectors_ @ qvec
        scored = {doc_id: float(scores[row]) for doc_id, row in self._doc_row.items()}
        return rank_entries(query_id, scored, k)


class SparseRetriever(BaseEstimator, QueryScorer):
    """Expansion-based lexical scorer over an inverted index.

    Each query word expands onto up to four vocabulary terms (itself with
    weight exactly 1.0, plus up to three seeded terms with weights in
    (0, 0.5]).  Out-of-vocabulary words fall back to self-only expansion so
    rewritten queries containing new words still score cleanly.
    """

    def __init__(self, seed: int = 42):
        self.seed = seed

    def fit(self, corpus: Corpus, y=None) -> "SparseRetriever":
        self.vocabulary_ = list(corpus.vocabulary)
        self._vocab_set = set(self.vocabulary_)
        self.doc_terms_ = {doc_id: dict(t) for doc_id, t in corpus.doc_terms.items()}
        self.doc_count_ = len(self.doc_terms_)
        n = self.doc_count_
        self.idf_ = {
            word: math.log(1.0 + (n - df + 0.5) / (df + 0.5))
            for word, df in corpus.doc_frequency.items()
        }
        self.oov_idf_ = math.log(1.0 + (n + 0.5) / 0.5)
        self.postings_: dict[str, list[tuple[str, int]]] = {}
        for doc_id in sorted(self.doc_terms_):
            for word, count in self.doc_terms_[doc_id].items():
                self.postings_.setdefault(word, []).append((doc_id, count))
        self._expansion_cache: dict[str, dict[str, float]] = {}
        return self

    def expansion(self, word: str) -> dict[str, float]:
        """Expansion targets and weights for one word (self weight is 1.0)."""
        check_is_fitted(self)
        cached = self._expansion_cache.get(word)
        if cached is not None:
            return cached
        table = {word: 1.0}
        if word in self._vocab_set:
            stream = word_stream(word, self.seed)
            for _ in range(_EXTRA_EXPANSIONS):
                candidate = self.vocabulary_[stream.next_below(len(self.vocabulary_))]
                weight = stream.next_weight()
                if candidate != word and candidate not in table:
                    table[candidate] = weight
        self._expansion_cache[word] = table
        return table

    def idf(self, word: str) -> float:
        return self.idf_.get(word, self.oov_idf_)

    def _expanded_weights(self, tokens: list[str], u: np.ndarray) -> dict[str, float]:
        """Per-target total query mass sum_i u_i * A[t_i, v]."""
        totals: dict[str, float] = {}
        for weight, token in zip(u, tokens):
            if weight == 0.0:
                continue
            for target, a in self.expansion(token).items():
                totals[target] = totals.get(target, 0.0) + float(weight) * a
        return totals

    def input_of(self, tokens: list[str]) -> np.ndarray:
        check_is_fitted(self)
        check_tokens(tokens, allow_empty=True)
        return np.ones(len(tokens))

    def score_at(self, tokens: list[str], point: np.ndarray, doc_id: str) -> float:
        u = self._check_weights(tokens, point)
        terms = self._doc(doc_id)
        score = 0.0
        for target, mass in self._expanded_weights(tokens, u).items():
            tf = terms.get(target, 0)
            if tf and mass > 0.0:
                score += self.idf(target) * tf * math.log1p(mass)
        return score

    def gradient(self, tokens: list[str], point: np.ndarray, doc_id: str) -> np.ndarray:
        u = self._check_weights(tokens, point)
        terms = self._doc(doc_id)
        totals = self._expanded_weights(tokens, u)
        grad = np.zeros(len(tokens))
        for i, token in enumerate(tokens):
            acc = 0.0
            for target, a in self.expansion(token).items():
                tf = terms.get(target, 0)
                if tf:
                    acc += self.idf(target) * tf * a / (1.0 + totals.get(target, 0.0))
            grad[i] = acc
        return grad

    def search(self, query: str | list[str], k: int, query_id: str = "") -> RankedList:
        """Top-k via the inverted index; only docs with posting overlap appear."""
        check_is_fitted(self)
        check_positive_int(k, "k")
        tokens = _as_tokens(query)
        masses = self._expanded_weights(tokens, np.ones(len(tokens)))
        scored: dict[str, float] = {}
        for target, mass in masses.items():
            postings = self.postings_.get(target)
            if not postings or mass <= 0.0:
                continue
            idf = self.idf(target)
            gain = math.log1p(mass)
            for doc_id, tf in postings:
                scored[doc_id] = scored.get(doc_id, 0.0) + idf * tf * gain
        return rank_entries(query_id, scored, k)

    def _doc(self, doc_id: str) -> dict[str, int]:
        terms = self.doc_terms_.get(doc_id)
        if terms is None:
            raise ValueError(f"unknown doc id {doc_id!r}")
        return terms

    def _check_weights(self, tokens: list[str], point: np.ndarray) -> np.ndarray:
        u = np.asarray(point, dtype=float)
        if u.shape != (len(tokens),):
            raise ValueError(f"weights shape {u.shape} does not match {len(tokens)} tokens")
        if np.any(u < 0):
            raise ValueError("query token weights must be non-negative")
        return u


def _as_tokens(query: str | list[str]) -> list[str]:
    """Accept raw query text or a pre-tokenized list."""
    if isinstance(query, str):
        return tokenize(query)
    return check_tokens(query, allow_empty=True)


def build_retriever(kind: str, seed: int = 42, dim: int = 64):
    if kind == "dense":
        return DenseRetriever(dim=dim, seed=seed)
    if kind == "sparse":
        return SparseRetriever(seed=seed)
    raise ValueError(f"unknown retriever kind {kind!r}")


def save_index(retriever: DenseRetriever | SparseRetriever, path: str | Path) -> None:
    """Persist a fitted retriever as a JSON snapshot (gzipped if *.gz).

    The snapshot holds the seed, dimension, vocabulary with document
    frequencies, and per-document term counts.  Embeddings, expansion
    tables, and document vectors are pure functions of those, so
    `load_index` rebuilds an identical model without the original corpus.
    """
    check_is_fitted(retriever)
    if isinstance(retriever, DenseRetriever):
        kind, dim = "dense", retriever.dim
    elif isinstance(retriever, SparseRetriever):
        kind, dim = "sparse", 0
    else:
        raise TypeError(f"cannot persist retriever of type {type(retriever).__name__}")

    df: dict[str, int] = {}
    for terms in retriever.doc_terms_.values():
        for word in terms:
            df[word] = df.get(word, 0) + 1
    snapshot = {
        "format": INDEX_FORMAT,
        "version": INDEX_VERSION,
        "kind": kind,
        "seed": retriever.seed,
        "dim": dim,
        "vocabulary": df,
        "documents": retriever.doc_terms_,
    }
    raw = json.dumps(snapshot, sort_keys=True).encode("utf-8")
    path = Path(path)
    if path.suffix == ".gz":
        with gzip.open(path, "wb") as f:
            f.write(raw)
    else:
        path.write_bytes(raw)


def load_index(path: str | Path) -> DenseRetriever | SparseRetriever:
    """Rebuild a fitted retriever from a `save_index` snapshot."""
    path = Path(path)
    if path.suffix == ".gz":
        with gzip.open(path, "rb") as f:
            snapshot = json.loads(f.read().decode("utf-8"))
    else:
        snapshot = json.loads(path.read_bytes().decode("utf-8"))
    if snapshot.get("format") != INDEX_FORMAT or snapshot.get("version") != INDEX_VERSION:
        raise ValueError(f"{path}: not a recognized index snapshot")

    corpus = _corpus_from_terms(snapshot["documents"])
    if set(snapshot["vocabulary"]) != set(corpus.doc_frequency):
        raise ValueError(f"{path}: vocabulary does not match document statistics")
    kind = snapshot["kind"]
    if kind == "sparse":
        return SparseRetriever(seed=snapshot["seed"]).fit(corpus)
    if kind == "dense":
        return DenseRetriever(dim=snapshot["dim"], seed=snapshot["seed"]).fit(corpus)
    raise ValueError(f"{path}: unknown index kind {kind!r}")


def _corpus_from_terms(doc_terms: dict[str, dict[str, int]]) -> Corpus:
    """Corpus stand-in carrying only the statistics the retrievers fit on."""
    corpus = Corpus.__new__(Corpus)
    corpus.documents = {}
    corpus.doc_terms = {doc_id: Counter(t) for doc_id, t in doc_terms.items()}
    corpus.doc_lengths = {doc_id: sum(t.values()) for doc_id, t in doc_terms.items()}
    df: dict[str, int] = {}
    for terms in doc_terms.values():
        for word in terms:
            df[word] = df.get(word, 0) + 1
    corpus.doc_frequency = df
    corpus._vocabulary = sorted(df)
    return corpus
