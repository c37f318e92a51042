import math

import pytest

from retriever_bridge.align import merge_subwords


def test_two_piece_word_sums_exactly():
    # e.g. [nug, ##gets] -> nuggets
    merged = merge_subwords([0.4, 0.248], [(0, 2)])
    assert merged == [0.4 + 0.248]
    assert merged[0] == pytest.approx(0.648, abs=1e-12)


def test_single_piece_word_passthrough():
    assert merge_subwords([1.25], [(0, 1)]) == [1.25]


def test_all_zero_scores_stay_zero():
    assert merge_subwords([0.0, 0.0, 0.0], [(0, 2), (2, 3)]) == [0.0, 0.0]


def test_merge_is_exact_fsum():
    scores = [0.1, 0.2, 0.3, -0.05, 1e-9]
    merged = merge_subwords(scores, [(0, 3), (3, 5)])
    assert merged[0] == math.fsum(scores[0:3])
    assert merged[1] == math.fsum(scores[3:5])


def test_uncovered_subword_rejected():
    with pytest.raises(ValueError, match="not covered"):
        merge_subwords([1.0, 2.0, 3.0], [(0, 2)])


def test_double_covered_subword_rejected():
    with pytest.raises(ValueError, match="more than one"):
        merge_subwords([1.0, 2.0], [(0, 2), (1, 2)])


def test_out_of_range_span_rejected():
    with pytest.raises(ValueError, match="out of range"):
        merge_subwords([1.0], [(0, 2)])
