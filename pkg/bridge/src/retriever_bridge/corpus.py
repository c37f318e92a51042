"""Minimal BEIR corpus.jsonl reader (fields _id, title, text)."""

from __future__ import annotations

import json
from pathlib import Path


def load_corpus(path: str | Path) -> dict[str, str]:
    """doc id -> scoring text (title and body joined with one space)."""
    docs: dict[str, str] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                doc_id = str(obj["_id"])
            except (json.JSONDecodeError, KeyError) as exc:
                raise ValueError(f"{path}: line {lineno}: {exc}") from exc
            if doc_id in docs:
                raise ValueError(f"{path}: line {lineno}: duplicate _id {doc_id!r}")
            title = obj.get("title") or ""
            text = obj.get("text") or ""
            docs[doc_id] = f"{title} {text}".strip()
    return docs
