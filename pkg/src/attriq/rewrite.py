"""Query rewriting: threshold baseline, mocks, and the chat endpoint client.

The endpoint client speaks the de-facto chat-completions JSON (single user
message, temperature 0, capped output tokens) so any instruct model behind
a compatible server works.  Responses are cached on disk keyed by
(prompt hash, model); instruct-model framing (surrounding quotes, a leading
"Rewritten query:" label, extra lines) is stripped before use.
"""

from __future__ import annotations

import json
import logging
import os
import re
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Protocol

import requests

from .corpus import Query, tokenize
from .prompts import PromptRequest
from .validation import check_scores_aligned

logger = logging.getLogger(__name__)

API_KEY_ENV = "ATTRIQ_LLM_API_KEY"

METHOD_ORG = "Org"
METHOD_TKN = "Tkn"
METHOD_LLM = "LLM"
METHOD_GLLM = "GLLM"
METHODS = (METHOD_ORG, METHOD_TKN, METHOD_LLM, METHOD_GLLM)

_LABEL_RE = re.compile(r"^\s*(?:rewritten\s+query|rewritten|rewrite|query)\s*:\s*", re.IGNORECASE)
_QUOTE_PAIRS = (('"', '"'), ("'", "'"), ("“", "”"), ("‘", "’"))


@dataclass(frozen=True)
class RewrittenQuery:
    """A method-tagged reformulation of one query."""

    query_id: str
    method: str
    text: str
    tokens: tuple[str, ...]
    fallback: bool = False
    cache_hit: bool = False
    response_id: str | None = None

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"unknown method tag {self.method!r}")
        if not self.tokens:
            raise ValueError("rewritten query must keep at least one token")


def original_query(query: Query) -> RewrittenQuery:
    """The identity reformulation (method Org)."""
    return RewrittenQuery(
        query_id=query.id, method=METHOD_ORG, text=query.text, tokens=tuple(query.tokens)
    )


def select_top_tokens(query: Query, scores) -> RewrittenQuery:
    """Keep tokens scoring strictly above the query-wise mean (method Tkn).

    Keeps the original order, joined by single spaces.  If nothing clears
    the threshold (all scores equal), all tokens are kept and the fallback
    flag is set.
    """
    scores = check_scores_aligned(query.tokens, scores)
    mean = float(scores.mean())
    kept = [tok for tok, s in zip(query.tokens, scores) if s > mean]
    fallback = not kept
    if fallback:
        kept = list(query.tokens)
    return RewrittenQuery(
        query_id=query.id,
        method=METHOD_TKN,
        text=" ".join(kept),
        tokens=tuple(kept),
        fallback=fallback,
    )


class RewriteError(RuntimeError):
    """Rewrite transport failed after retries; carries the prompt hash."""

    def __init__(self, message: str, prompt_hash: str):
        super().__init__(message)
        self.prompt_hash = prompt_hash


class CacheError(RuntimeError):
    """A cache record exists but cannot be read."""


@dataclass(frozen=True)
class RewriterResponse:
    text: str
    response_id: str | None = None
    cache_hit: bool = False


class Rewriter(Protocol):
    def complete(self, prompt: PromptRequest, query: Query) -> RewriterResponse: ...


class IdentityRewriter:
    """Echoes the original query; used to test pipeline plumbing."""

    def complete(self, prompt: PromptRequest, query: Query) -> RewriterResponse:
        return RewriterResponse(text=query.text)


class ScriptedRewriter:
    """Returns a fixed rewrite per query id; unknown ids echo the original."""

    def __init__(self, rewrites: Mapping[str, str]):
        self.rewrites = dict(rewrites)

    def complete(self, prompt: PromptRequest, query: Query) -> RewriterResponse:
        return RewriterResponse(text=self.rewrites.get(query.id, query.text))


class ResponseCache:
    """Disk cache of raw model responses, keyed by (prompt hash, model)."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._write_lock = threading.Lock()

    def _path(self, prompt_hash: str, model: str) -> Path:
        slug = re.sub(r"[^A-Za-z0-9._-]", "-", model) or "default"
        return self.directory / f"{prompt_hash}.{slug}.json"

    def get(self, prompt_hash: str, model: str) -> dict | None:
        path = self._path(prompt_hash, model)
        if not path.exists():
            return None
        try:
            record = json.loads(path.read_text(encoding="utf-8"))
            record["response"]  # noqa: B018 - presence check
            return record
        except (json.JSONDecodeError, KeyError, UnicodeDecodeError) as exc:
            raise CacheError(f"corrupt cache record {path}: {exc}") from exc

    def put(self, prompt_hash: str, model: str, response: str, response_id: str | None) -> None:
        record = {
            "prompt_hash": prompt_hash,
            "model": model,
            "response": response,
            "response_id": response_id,
            "timestamp": time.time(),
        }
        path = self._path(prompt_hash, model)
        with self._write_lock:
            tmp = path.with_suffix(".tmp")
            tmp.write_text(json.dumps(record, sort_keys=True), encoding="utf-8")
            tmp.replace(path)


class EndpointRewriter:
    """Chat-completions client with retries and an optional disk cache.

    Safe for concurrent calls; an in-flight semaphore caps parallel
    requests and the cache serializes its writes.
    """

    def __init__(
        self,
        endpoint: str,
        model: str,
        temperature: float = 0.0,
        max_tokens: int = 120,
        cache_dir: str | Path | None = None,
        max_retries: int = 3,
        backoff: float = 1.0,
        timeout: float = 60.0,
        max_in_flight: int = 4,
        sleep=time.sleep,
    ):
        self.endpoint = endpoint
        self.model = model
        self.temperature = temperature
        self.max_tokens = max_tokens
        self.cache = ResponseCache(cache_dir) if cache_dir else None
        self.max_retries = max_retries
        self.backoff = backoff
        self.timeout = timeout
        self._sleep = sleep
        self._gate = threading.Semaphore(max_in_flight)

    def complete(self, prompt: PromptRequest, query: Query) -> RewriterResponse:
        model = prompt.model or self.model
        if self.cache is not None:
            record = self.cache.get(prompt.prompt_hash, model)
            if record is not None:
                return RewriterResponse(
                    text=record["response"],
                    response_id=record.get("response_id"),
                    cache_hit=True,
                )
        text, response_id = self._post(prompt, model)
        if self.cache is not None:
            self.cache.put(prompt.prompt_hash, model, text, response_id)
        return RewriterResponse(text=text, response_id=response_id)

    def _post(self, prompt: PromptRequest, model: str) -> tuple[str, str | None]:
        messages = []
        if prompt.system:
            messages.append({"role": "system", "content": prompt.system})
        messages.append({"role": "user", "content": prompt.user})
        body = {
            "model": model,
            "messages": messages,
            "temperature": prompt.temperature,
            "max_tokens": prompt.max_tokens,
        }
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(API_KEY_ENV)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"

        last_error: Exception | None = None
        for attempt in range(self.max_retries):
            if attempt:
                self._sleep(self.backoff * 2 ** (attempt - 1))
            try:
                with self._gate:
                    resp = requests.post(
                        self.endpoint, json=body, headers=headers, timeout=self.timeout
                    )
                if resp.status_code >= 500:
                    raise RuntimeError(f"server error {resp.status_code}")
                resp.raise_for_status()
                payload = resp.json()
                text = payload["choices"][0]["message"]["content"] or ""
                return text, payload.get("id")
            except (requests.RequestException, RuntimeError, KeyError, IndexError, ValueError) as exc:
                last_error = exc
                logger.warning(
                    "rewrite attempt %d/%d failed for %s: %s",
                    attempt + 1,
                    self.max_retries,
                    prompt.prompt_hash[:12],
                    exc,
                )
        raise RewriteError(
            f"rewrite failed after {self.max_retries} attempts: {last_error}",
            prompt_hash=prompt.prompt_hash,
        )


def clean_response(text: str) -> str:
    """Strip instruct-model framing: extra lines, labels, surrounding quotes."""
    lines = [line.strip() for line in text.strip().splitlines()]
    lines = [line for line in lines if line]
    cleaned = lines[0] if lines else ""
    while True:
        before = cleaned
        cleaned = _LABEL_RE.sub("", cleaned).strip()
        for opening, closing in _QUOTE_PAIRS:
            if len(cleaned) >= 2 and cleaned.startswith(opening) and cleaned.endswith(closing):
                cleaned = cleaned[1:-1].strip()
                break
        if cleaned == before:
            return cleaned


def rewrite(
    prompt: PromptRequest,
    rewriter: Rewriter,
    query: Query,
    method: str = METHOD_GLLM,
) -> RewrittenQuery:
    """Obtain one rewritten query; empty or unusable responses fall back
    to the original query with the fallback flag set."""
    response = rewriter.complete(prompt, query)
    text = clean_response(response.text)
    tokens = tokenize(text)
    fallback = False
    if not text or not tokens:
        text = query.text
        tokens = list(query.tokens)
        fallback = True
    return RewrittenQuery(
        query_id=query.id,
        method=method,
        text=text,
        tokens=tuple(tokens),
        fallback=fallback,
        cache_hit=response.cache_hit,
        response_id=response.response_id,
    )
