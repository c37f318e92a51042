import pytest

from attriq.corpus import Query
from attriq.prompts import (
    PromptRequest,
    build_guided_prompt,
    build_plain_prompt,
    format_token_scores,
)

TBL_QUERY = Query.from_text("tbl", "What is actually in chicken nuggets?")
TBL_SCORES = [0.008, 0.012, 0.013, 0.018, 0.217, 0.648]


class TestGuidedPrompt:
    def test_contains_query_verbatim_and_pairs(self):
        prompt = build_guided_prompt(TBL_QUERY, TBL_SCORES)
        assert '"What is actually in chicken nuggets?"' in prompt.user
        assert "nuggets (0.648)" in prompt.user
        assert "chicken (0.217)" in prompt.user

    def test_all_pairs_in_query_order(self):
        prompt = build_guided_prompt(TBL_QUERY, TBL_SCORES)
        positions = [prompt.user.rindex(f"{t} ({s:.3f})") for t, s in zip(TBL_QUERY.tokens, TBL_SCORES)]
        assert positions == sorted(positions)

    def test_single_pair(self):
        q = Query(id="q", text="nuggets", tokens=("nuggets",))
        prompt = build_guided_prompt(q, [1.0])
        assert 'Token attributions: "nuggets (1.000)"' in prompt.user

    def test_empty_scores_rejected(self):
        with pytest.raises(ValueError):
            build_guided_prompt(TBL_QUERY, [])

    def test_misaligned_scores_rejected(self):
        with pytest.raises(ValueError, match="align"):
            build_guided_prompt(TBL_QUERY, [0.1, 0.2])

    def test_distinct_inputs_render_distinct_prompts(self):
        a = build_guided_prompt(TBL_QUERY, TBL_SCORES)
        b = build_guided_prompt(TBL_QUERY, [0.1, 0.012, 0.013, 0.018, 0.217, 0.648])
        c = build_guided_prompt(Query.from_text("x", "something else"), [0.5, 0.5])
        assert len({a.user, b.user, c.user}) == 3
        assert len({a.prompt_hash, b.prompt_hash, c.prompt_hash}) == 3


class TestPlainPrompt:
    def test_contains_query_but_no_scores(self):
        prompt = build_plain_prompt(TBL_QUERY)
        assert '"What is actually in chicken nuggets?"' in prompt.user
        assert not any(ch.isdigit() and ch != "1" for ch in prompt.user.replace("1)", ""))

    def test_never_mentions_attribution(self):
        for text in ("chicken nuggets", "heart disease", "a-b c"):
            prompt = build_plain_prompt(Query.from_text("q", text))
            assert "attribution" not in prompt.user.lower()
            assert "Token attributions" not in prompt.user

    def test_rendering_is_deterministic(self):
        a = build_plain_prompt(TBL_QUERY)
        b = build_plain_prompt(TBL_QUERY)
        assert a.user == b.user
        assert a.prompt_hash == b.prompt_hash

    def test_differs_from_guided_only_by_score_lines(self):
        guided = build_guided_prompt(TBL_QUERY, TBL_SCORES).user.split("\n")
        plain = build_plain_prompt(TBL_QUERY).user.split("\n")
        assert [line for line in plain if line not in guided] == []
        removed = [line for line in guided if line not in plain]
        assert len(removed) == 4


class TestPromptRequest:
    def test_defaults_pin_decoding_settings(self):
        prompt = build_plain_prompt(TBL_QUERY)
        assert prompt.temperature == 0.0
        assert prompt.max_tokens == 120

    def test_hash_is_stable_and_content_addressed(self):
        a = PromptRequest(user="hello")
        b = PromptRequest(user="hello")
        c = PromptRequest(user="hello", system="sys")
        assert a.prompt_hash == b.prompt_hash
        assert a.prompt_hash != c.prompt_hash


def test_format_token_scores_three_decimals():
    assert format_token_scores(["a", "b"], [0.1234, 2.0]) == "a (0.123), b (2.000)"
