"""Transformer relevance scorers with integrated-gradients attribution.

Two families are supported:

* ``sparse``: a masked-LM head turned into a learned-sparse encoder.  The
  representation is ``max over positions of log(1 + relu(logits))`` and the
  score is the dot product of query and document representations.
* ``dense``: a plain encoder with masked mean pooling over the last hidden
  state, scored by dot product.

Queries are encoded per word: the text is word-tokenized with the engine's
convention, each word is subword-tokenized separately, and the pieces are
concatenated between [CLS] and [SEP].  That keeps an exact word -> subword
span map, so attribution can be reported per word.

Attribution integrates the score gradient along the straight path from a
baseline where every word-piece embedding is zeroed (special tokens keep
their embeddings) to the true input, with an m-step midpoint rule batched
into a single forward/backward pass.  Subword attributions are the
path-integral dot products summed over hidden dimensions; word scores are
exact float sums over each word's span.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch

from .align import merge_subwords
from .words import word_tokenize


@dataclass
class WordEncoding:
    """Token ids for one query plus the word -> subword span map."""

    words: list[str]
    input_ids: torch.Tensor  # (L,) including [CLS] ... [SEP]
    spans: list[tuple[int, int]]  # into the inner subword positions
    inner_slice: slice  # positions of word pieces within input_ids


@dataclass
class DocAttribution:
    doc_id: str
    word_scores: list[float]
    subword_scores: list[float]
    subword_tokens: list[str]
    word_spans: list[tuple[int, int]]
    residual: float


class TransformerScorer:
    """Shared encoding, scoring, and attribution machinery."""

    def __init__(self, model, tokenizer, max_seq_len: int = 256):
        self.model = model.eval()
        self.tokenizer = tokenizer
        self.max_seq_len = max_seq_len
        self._device = torch.device("cpu")
        self.doc_ids: list[str] = []
        self.doc_reps: torch.Tensor | None = None

    # representation of a batch given inputs_embeds (differentiable path)
    def rep_from_embeds(self, embeds: torch.Tensor, attention_mask: torch.Tensor) -> torch.Tensor:
        raise NotImplementedError

    def rep_from_ids(self, input_ids: torch.Tensor, attention_mask: torch.Tensor) -> torch.Tensor:
        embeds = self.embedding_layer()(input_ids)
        return self.rep_from_embeds(embeds, attention_mask)

    def embedding_layer(self) -> torch.nn.Module:
        return self.model.get_input_embeddings()

    # ----- corpus side -----

    def index_documents(self, docs: dict[str, str], batch_size: int = 16) -> None:
        self.doc_ids = sorted(docs)
        reps = []
        with torch.no_grad():
            for start in range(0, len(self.doc_ids), batch_size):
                chunk = self.doc_ids[start : start + batch_size]
                encoded = self.tokenizer(
                    [docs[d] for d in chunk],
                    padding=True,
                    truncation=True,
                    max_length=self.max_seq_len,
                    return_tensors="pt",
                )
                reps.append(
                    self.rep_from_ids(encoded["input_ids"], encoded["attention_mask"])
                )
        self.doc_reps = torch.cat(reps, dim=0) if reps else torch.zeros(0, 1)
        self._doc_row = {doc_id: row for row, doc_id in enumerate(self.doc_ids)}

    def doc_rep(self, doc_id: str) -> torch.Tensor:
        row = self._doc_row.get(doc_id)
        if row is None:
            raise KeyError(f"unknown doc id {doc_id!r}")
        return self.doc_reps[row]

    # ----- query side -----

    def encode_query_words(self, text: str) -> WordEncoding:
        words = word_tokenize(text)
        if not words:
            raise ValueError("query has no word tokens")
        pieces: list[str] = []
        spans: list[tuple[int, int]] = []
        for word in words:
            sub = self.tokenizer.tokenize(word) or [self.tokenizer.unk_token]
            spans.append((len(pieces), len(pieces) + len(sub)))
            pieces.extend(sub)
        budget = self.max_seq_len - 2
        if len(pieces) > budget:  # keep whole words only
            kept = [s for s in spans if s[1] <= budget]
            words = words[: len(kept)]
            spans = kept
            pieces = pieces[: kept[-1][1]] if kept else []
            if not words:
                raise ValueError("query words do not fit the sequence budget")
        ids = (
            [self.tokenizer.cls_token_id]
            + self.tokenizer.convert_tokens_to_ids(pieces)
            + [self.tokenizer.sep_token_id]
        )
        return WordEncoding(
            words=words,
            input_ids=torch.tensor(ids, dtype=torch.long),
            spans=spans,
            inner_slice=slice(1, 1 + len(pieces)),
        )

    def query_rep(self, text: str) -> torch.Tensor:
        encoding = self.encode_query_words(text)
        ids = encoding.input_ids.unsqueeze(0)
        mask = torch.ones_like(ids)
        with torch.no_grad():
            return self.rep_from_ids(ids, mask)[0]

    def search(self, text: str, k: int) -> list[tuple[str, float]]:
        if self.doc_reps is None:
            raise RuntimeError("documents are not indexed")
        qrep = self.query_rep(text)
        scores = (self.doc_reps @ qrep).tolist()
        ranked = sorted(zip(self.doc_ids, scores), key=lambda kv: (-kv[1], kv[0]))
        return ranked[: max(0, k)]

    # ----- attribution -----

    def attribute(self, text: str, doc_ids: list[str], steps: int) -> tuple[list[str], list[DocAttribution]]:
        if steps < 1:
            raise ValueError("steps must be >= 1")
        encoding = self.encode_query_words(text)
        ids = encoding.input_ids.unsqueeze(0)
        mask = torch.ones_like(ids)
        with torch.no_grad():
            full = self.embedding_layer()(ids)[0]  # (L, H)
        baseline = full.clone()
        baseline[encoding.inner_slice] = 0.0
        diff = full - baseline

        alphas = (torch.arange(steps, dtype=full.dtype) + 0.5) / steps
        batch = baseline.unsqueeze(0) + alphas.view(-1, 1, 1) * diff.unsqueeze(0)
        batch = batch.detach().requires_grad_(True)
        reps = self.rep_from_embeds(batch, mask.expand(steps, -1))
        with torch.no_grad():
            endpoint_reps = self.rep_from_embeds(
                torch.stack([full, baseline]), mask.expand(2, -1)
            )

        subword_tokens = self.tokenizer.convert_ids_to_tokens(
            encoding.input_ids[encoding.inner_slice].tolist()
        )
        results = []
        for doc_id in doc_ids:
            drep = self.doc_rep(doc_id).detach()
            scores = reps @ drep
            (grads,) = torch.autograd.grad(scores.sum(), batch, retain_graph=True)
            avg = grads.mean(dim=0)  # (L, H)
            contrib = (diff * avg).sum(dim=-1)  # (L,)
            subword_scores = [float(v) for v in contrib[encoding.inner_slice]]
            word_scores = merge_subwords(subword_scores, encoding.spans)
            score_full, score_base = (endpoint_reps @ drep).tolist()
            residual = abs(math.fsum(subword_scores) - (score_full - score_base))
            results.append(
                DocAttribution(
                    doc_id=doc_id,
                    word_scores=word_scores,
                    subword_scores=subword_scores,
                    subword_tokens=subword_tokens,
                    word_spans=list(encoding.spans),
                    residual=residual,
                )
            )
        return encoding.words, results


class SparseMlmScorer(TransformerScorer):
    """Learned-sparse encoder over a masked-LM vocabulary."""

    def rep_from_embeds(self, embeds: torch.Tensor, attention_mask: torch.Tensor) -> torch.Tensor:
        logits = self.model(inputs_embeds=embeds, attention_mask=attention_mask).logits
        activated = torch.log1p(torch.relu(logits))
        masked = activated * attention_mask.unsqueeze(-1)
        return masked.max(dim=1).values


class DenseMeanScorer(TransformerScorer):
    """Mean-pooled dense dual encoder."""

    def rep_from_embeds(self, embeds: torch.Tensor, attention_mask: torch.Tensor) -> torch.Tensor:
        hidden = self.model(inputs_embeds=embeds, attention_mask=attention_mask).last_hidden_state
        mask = attention_mask.unsqueeze(-1).to(hidden.dtype)
        return (hidden * mask).sum(dim=1) / mask.sum(dim=1).clamp(min=1.0)


def load_scorer(model_name: str, kind: str, max_seq_len: int = 256) -> TransformerScorer:
    """Instantiate a scorer from a local path or hub id."""
    from transformers import AutoModel, AutoModelForMaskedLM, AutoTokenizer

    tokenizer = AutoTokenizer.from_pretrained(model_name)
    if kind == "sparse":
        model = AutoModelForMaskedLM.from_pretrained(model_name)
        return SparseMlmScorer(model, tokenizer, max_seq_len=max_seq_len)
    if kind == "dense":
        model = AutoModel.from_pretrained(model_name)
        return DenseMeanScorer(model, tokenizer, max_seq_len=max_seq_len)
    raise ValueError(f"unknown scorer kind {kind!r}")
