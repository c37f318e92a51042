"""Input validation helpers shared by the estimators."""

from __future__ import annotations

from typing import Sequence

import numpy as np


def check_positive_int(value: int, name: str) -> int:
    if not isinstance(value, (int, np.integer)) or isinstance(value, bool) or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def check_tokens(tokens: Sequence[str], allow_empty: bool = False) -> list[str]:
    tokens = list(tokens)
    if not allow_empty and not tokens:
        raise ValueError("token list must be non-empty")
    for t in tokens:
        if not isinstance(t, str) or not t:
            raise ValueError(f"tokens must be non-empty strings, got {t!r}")
    return tokens


def check_scores_aligned(tokens: Sequence[str], scores: Sequence[float]) -> np.ndarray:
    scores = np.asarray(scores, dtype=float)
    if scores.ndim != 1 or len(scores) != len(tokens):
        raise ValueError(
            f"scores must align with tokens: {len(tokens)} tokens, {scores.shape} scores"
        )
    return scores
