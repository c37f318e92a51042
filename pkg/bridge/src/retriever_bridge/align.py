"""Subword-to-word score merging.

Attribution runs over the model's subword positions; the wire protocol
reports word-level scores.  Each word owns a contiguous span of subword
positions, every subword position must belong to exactly one word, and a
word's score is the exact float sum of its span.
"""

from __future__ import annotations

import math
from typing import Sequence


def merge_subwords(
    subword_scores: Sequence[float],
    word_spans: Sequence[tuple[int, int]],
) -> list[float]:
    """Sum subword scores within each word span.

    ``word_spans`` holds [start, end) index pairs into ``subword_scores``.
    Raises if any subword position is left uncovered or covered twice.
    """
    n = len(subword_scores)
    covered = [False] * n
    for start, end in word_spans:
        if not (0 <= start < end <= n):
            raise ValueError(f"word span ({start}, {end}) out of range for {n} subwords")
        for i in range(start, end):
            if covered[i]:
                raise ValueError(f"subword {i} covered by more than one word")
            covered[i] = True
    uncovered = [i for i, c in enumerate(covered) if not c]
    if uncovered:
        raise ValueError(f"subwords not covered by any word: {uncovered}")
    return [math.fsum(subword_scores[start:end]) for start, end in word_spans]
