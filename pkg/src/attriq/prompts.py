"""Rewrite prompt construction.

The guided prompt hands the model the original query plus every
(token, score) pair as soft guidance; the plain variant is the same prompt
with every score-related line removed, so the two differ only in whether
token scores are available.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Sequence

from .corpus import Query
from .validation import check_scores_aligned

GUIDED_TEMPLATE = """You are given:
1) An original user query.
2) A list of query tokens with their attribution scores, where higher scores indicate a stronger positive contribution to retrieval effectiveness, and lower or negative scores indicate weak or misleading contributions.

Your task is to rewrite the query to improve retrieval effectiveness.

Guidelines:
- Preserve the original user intent.
- Do not remove important concepts.
- Tokens with high attribution scores should be preserved or emphasized.
- Tokens with low or negative attribution scores may be clarified, specified, or disambiguated.
- Avoid adding new concepts that are not implied by the original query.
- Produce a single rewritten query, concise and well-formed.

Original query: "{original_query}"
Token attributions: "{token_attributions}\""""

# Lines dropped from the guided template to obtain the score-free variant.
_SCORE_LINES = (
    "2) A list of query tokens with their attribution scores, where higher scores indicate a stronger positive contribution to retrieval effectiveness, and lower or negative scores indicate weak or misleading contributions.",
    "- Tokens with high attribution scores should be preserved or emphasized.",
    "- Tokens with low or negative attribution scores may be clarified, specified, or disambiguated.",
    'Token attributions: "{token_attributions}"',
)

PLAIN_TEMPLATE = "\n".join(
    line for line in GUIDED_TEMPLATE.split("\n") if line not in _SCORE_LINES
)


@dataclass(frozen=True)
class PromptRequest:
    """A rendered rewrite request with fixed decoding settings."""

    user: str
    system: str | None = None
    model: str = ""
    temperature: float = 0.0
    max_tokens: int = 120
    prompt_hash: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        digest = hashlib.sha256(
            (self.system or "").encode("utf-8") + b"\x00" + self.user.encode("utf-8")
        ).hexdigest()
        object.__setattr__(self, "prompt_hash", digest)


def format_token_scores(tokens: Sequence[str], scores: Sequence[float]) -> str:
    """Render (token, score) pairs in query order, scores to 3 decimals."""
    scores = check_scores_aligned(tokens, scores)
    return ", ".join(f"{tok} ({score:.3f})" for tok, score in zip(tokens, scores))


def build_guided_prompt(
    query: Query,
    scores: Sequence[float],
    model: str = "",
    temperature: float = 0.0,
    max_tokens: int = 120,
) -> PromptRequest:
    """Prompt carrying the original query and its per-token scores."""
    if len(query.tokens) == 0 or len(scores) == 0:
        raise ValueError("guided prompt requires at least one (token, score) pair")
    rendered = GUIDED_TEMPLATE.format(
        original_query=query.text,
        token_attributions=format_token_scores(query.tokens, scores),
    )
    return PromptRequest(user=rendered, model=model, temperature=temperature, max_tokens=max_tokens)


def build_plain_prompt(
    query: Query,
    model: str = "",
    temperature: float = 0.0,
    max_tokens: int = 120,
) -> PromptRequest:
    """Score-free variant of the rewrite prompt."""
    rendered = PLAIN_TEMPLATE.format(original_query=query.text)
    return PromptRequest(user=rendered, model=model, temperature=temperature, max_tokens=max_tokens)
