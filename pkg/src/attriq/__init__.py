"""attriq: attribution-guided query rewriting for neural retrievers.

Feed a retriever's own token-level gradient attributions back into an LLM
prompt, rewrite the query, and re-retrieve with the same fixed retriever.
"""

from .attribution import (
    AttributedQuery,
    AttributionVector,
    IntegratedGradientsAttributor,
    aggregate,
    ig_single,
    normalize,
)
from .bridge_client import BridgeRetriever
from .config import RunConfig, load_config
from .corpus import (
    Corpus,
    Document,
    Qrels,
    Query,
    load_corpus,
    load_qrels,
    load_queries,
    save_corpus,
    tokenize,
)
from .metrics import (
    EvalReport,
    RunResult,
    evaluate_run,
    map_at_k,
    ndcg_at_k,
    precision_at_k,
)
from .pipeline import compare_reports, run_and_report, run_method
from .prompts import PromptRequest, build_guided_prompt, build_plain_prompt
from .retrievers import (
    DenseRetriever,
    RankedList,
    SparseRetriever,
    load_index,
    save_index,
)
from .rewrite import (
    EndpointRewriter,
    IdentityRewriter,
    RewriteError,
    RewrittenQuery,
    ScriptedRewriter,
    rewrite,
    select_top_tokens,
)

__version__ = "0.1.0"

__all__ = [
    "AttributedQuery",
    "AttributionVector",
    "BridgeRetriever",
    "Corpus",
    "DenseRetriever",
    "Document",
    "EndpointRewriter",
    "EvalReport",
    "IdentityRewriter",
    "IntegratedGradientsAttributor",
    "PromptRequest",
    "Qrels",
    "Query",
    "RankedList",
    "RewriteError",
    "RewrittenQuery",
    "RunConfig",
    "RunResult",
    "ScriptedRewriter",
    "SparseRetriever",
    "aggregate",
    "build_guided_prompt",
    "build_plain_prompt",
    "compare_reports",
    "evaluate_run",
    "ig_single",
    "load_config",
    "load_corpus",
    "load_index",
    "load_qrels",
    "load_queries",
    "map_at_k",
    "ndcg_at_k",
    "normalize",
    "precision_at_k",
    "rewrite",
    "run_and_report",
    "run_method",
    "save_corpus",
    "save_index",
    "select_top_tokens",
    "tokenize",
]
