"""Transformer retriever host for the ndjson attribution wire protocol."""

from .align import merge_subwords
from .scorers import DenseMeanScorer, SparseMlmScorer, TransformerScorer, load_scorer
from .server import BridgeServer
from .words import word_tokenize

__version__ = "0.1.0"

__all__ = [
    "BridgeServer",
    "DenseMeanScorer",
    "SparseMlmScorer",
    "TransformerScorer",
    "load_scorer",
    "merge_subwords",
    "word_tokenize",
]
