"""Word-level tokenization matching the engine's documented convention.

The engine's wire contract requires attribute responses to carry word
tokens identical to its own tokenizer output: lowercase, split on Unicode
whitespace, strip leading/trailing punctuation per word, drop words that
become empty, keep internal hyphens and apostrophes.
"""

from __future__ import annotations

import unicodedata


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def word_tokenize(text: str) -> list[str]:
    words = []
    for raw in text.lower().split():
        start, end = 0, len(raw)
        while start < end and _is_punct(raw[start]):
            start += 1
        while end > start and _is_punct(raw[end - 1]):
            end -= 1
        if end > start:
            words.append(raw[start:end])
    return words
