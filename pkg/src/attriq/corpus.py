"""BEIR-format collections: documents, queries, relevance judgments.

File layout follows the BEIR convention: ``corpus.jsonl`` and
``queries.jsonl`` with one JSON object per line, and ``qrels/test.tsv`` as a
tab-separated file with a header row.  Everything is UTF-8.
"""

from __future__ import annotations

import json
import logging
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

logger = logging.getLogger(__name__)

# query-id -> doc-id -> integer grade >= 0; absent pairs mean grade 0
Qrels = dict[str, dict[str, int]]


def tokenize(text: str) -> list[str]:
    """Split text into lowercase word tokens.

    Rules: lowercase, split on Unicode whitespace, strip leading/trailing
    punctuation from each token, drop tokens that become empty.  Internal
    punctuation (hyphens, apostrophes) is kept.
    """
    tokens = []
    for raw in text.lower().split():
        start, end = 0, len(raw)
        while start < end and _is_punct(raw[start]):
            start += 1
        while end > start and _is_punct(raw[end - 1]):
            end -= 1
        if end > start:
            tokens.append(raw[start:end])
    return tokens


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


@dataclass(frozen=True)
class Document:
    id: str
    text: str
    title: str = ""

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("document id must be non-empty")
        if not self.text and not self.title:
            raise ValueError(f"document {self.id!r}: text and title both empty")

    @property
    def full_text(self) -> str:
        """Title and body joined for scoring purposes."""
        return f"{self.title} {self.text}".strip() if self.title else self.text


@dataclass(frozen=True)
class Query:
    id: str
    text: str
    tokens: tuple[str, ...] = field(default=())

    @classmethod
    def from_text(cls, id: str, text: str) -> "Query":
        return cls(id=id, text=text, tokens=tuple(tokenize(text)))


class Corpus:
    """A searchable document collection with term statistics.

    Exposes the document set, the sorted vocabulary, per-word document
    frequencies, and per-document term counts over the tokenized
    title-plus-text.  Immutable once constructed; safe for concurrent reads.
    """

    def __init__(self, documents: Iterable[Document]) -> None:
        self.documents: dict[str, Document] = {}
        self.doc_terms: dict[str, Counter] = {}
        self.doc_lengths: dict[str, int] = {}
        df: Counter = Counter()
        for doc in documents:
            if doc.id in self.documents:
                raise ValueError(f"duplicate document id {doc.id!r}")
            terms = Counter(tokenize(doc.full_text))
            self.documents[doc.id] = doc
            self.doc_terms[doc.id] = terms
            self.doc_lengths[doc.id] = sum(terms.values())
            df.update(terms.keys())
        self.doc_frequency: dict[str, int] = dict(df)
        self._vocabulary = sorted(self.doc_frequency)

    def __len__(self) -> int:
        return len(self.documents)

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self.documents

    @property
    def vocabulary(self) -> list[str]:
        """Sorted list of all document words."""
        return self._vocabulary

    def df(self, word: str) -> int:
        return self.doc_frequency.get(word, 0)


def load_corpus(path: str | Path) -> Corpus:
    """Load a BEIR ``corpus.jsonl`` file (fields ``_id``, ``title``, ``text``)."""

    def documents() -> Iterable[Document]:
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                    yield Document(
                        id=str(obj["_id"]),
                        text=obj.get("text", "") or "",
                        title=obj.get("title", "") or "",
                    )
                except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                    raise ValueError(f"{path}: line {lineno}: {exc}") from exc

    return Corpus(documents())


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write documents back out in the corpus.jsonl layout."""
    with open(path, "w", encoding="utf-8") as f:
        for doc in corpus.documents.values():
            record = {"_id": doc.id, "title": doc.title, "text": doc.text}
            f.write(json.dumps(record, ensure_ascii=False) + "\n")


def load_queries(path: str | Path) -> list[Query]:
    """Load a BEIR ``queries.jsonl`` file (fields ``_id``, ``text``).

    Queries that tokenize to nothing are dropped with a warning rather than
    failing the run.
    """
    queries: list[Query] = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                query = Query.from_text(str(obj["_id"]), str(obj["text"]))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ValueError(f"{path}: line {lineno}: {exc}") from exc
            if not query.tokens:
                logger.warning(
                    "dropping query %r (line %d): no tokens after tokenization",
                    query.id,
                    lineno,
                )
                continue
            queries.append(query)
    return queries


def load_qrels(path: str | Path) -> Qrels:
    """Load a BEIR qrels TSV (header row; columns query-id, corpus-id, score)."""
    qrels: Qrels = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if lineno == 1 or not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 3:
                raise ValueError(f"{path}: line {lineno}: expected 3 columns, got {len(parts)}")
            query_id, doc_id, score = parts
            try:
                grade = int(score)
            except ValueError as exc:
                raise ValueError(f"{path}: line {lineno}: non-integer score {score!r}") from exc
            if grade < 0:
                raise ValueError(f"{path}: line {lineno}: negative score {grade}")
            qrels.setdefault(query_id, {})[doc_id] = grade
    return qrels
