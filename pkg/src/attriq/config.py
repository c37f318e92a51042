"""Run configuration: a flat key = value file plus CLI overrides.

Example config file::

    # paths
    data.corpus = data/corpus.jsonl
    data.queries = data/queries.jsonl
    data.qrels = data/qrels/test.tsv

    retriever.kind = sparse        # dense | sparse | bridge
    retriever.seed = 42
    retriever.dim = 64             # dense only
    bridge.cmd =                   # command spawning a bridge process

    attribution.k_docs = 5
    attribution.steps = 64
    attribution.baseline = zero
    attribution.normalization = l1 # none | l1 | minmax | zscore

    rewriter.kind = endpoint       # endpoint | identity | scripted
    rewriter.script =              # query-id -> rewrite JSON (scripted)
    llm.endpoint = http://localhost:8080/v1/chat/completions
    llm.model = mistral-7b-instruct
    llm.temperature = 0.0
    llm.max_tokens = 120
    llm.cache_dir = .rewrite-cache

    run.methods = Org,Tkn,LLM,GLLM
    run.cutoffs = 1,3,5,10,100
    run.output_dir = out
    run.concurrency = 4

Unknown keys are rejected so typos fail loudly.  Every report embeds the
resolved configuration for provenance.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

from .attribution import NORMALIZATION_SCHEMES
from .rewrite import METHODS

_RETRIEVER_KINDS = ("dense", "sparse", "bridge")
_REWRITER_KINDS = ("endpoint", "identity", "scripted")


@dataclass
class RunConfig:
    corpus_path: str = ""
    queries_path: str = ""
    qrels_path: str = ""
    retriever_kind: str = "sparse"
    seed: int = 42
    dim: int = 64
    index_path: str = ""
    bridge_cmd: str = ""
    k_docs: int = 5
    steps: int = 64
    baseline: str = "zero"
    normalization: str = "l1"
    rewriter_kind: str = "identity"
    rewriter_script: str = ""
    llm_endpoint: str = ""
    llm_model: str = ""
    llm_temperature: float = 0.0
    llm_max_tokens: int = 120
    llm_cache_dir: str = ""
    methods: tuple[str, ...] = ("Org", "Tkn", "LLM", "GLLM")
    cutoffs: tuple[int, ...] = (1, 3, 5, 10, 100)
    output_dir: str = "out"
    concurrency: int = 4

    _KEYS = {
        "data.corpus": "corpus_path",
        "data.queries": "queries_path",
        "data.qrels": "qrels_path",
        "retriever.kind": "retriever_kind",
        "retriever.seed": "seed",
        "retriever.dim": "dim",
        "retriever.index": "index_path",
        "bridge.cmd": "bridge_cmd",
        "attribution.k_docs": "k_docs",
        "attribution.steps": "steps",
        "attribution.baseline": "baseline",
        "attribution.normalization": "normalization",
        "rewriter.kind": "rewriter_kind",
        "rewriter.script": "rewriter_script",
        "llm.endpoint": "llm_endpoint",
        "llm.model": "llm_model",
        "llm.temperature": "llm_temperature",
        "llm.max_tokens": "llm_max_tokens",
        "llm.cache_dir": "llm_cache_dir",
        "run.methods": "methods",
        "run.cutoffs": "cutoffs",
        "run.output_dir": "output_dir",
        "run.concurrency": "concurrency",
    }

    def validate(self) -> "RunConfig":
        if self.retriever_kind not in _RETRIEVER_KINDS:
            raise ValueError(f"retriever.kind must be one of {_RETRIEVER_KINDS}")
        if self.rewriter_kind not in _REWRITER_KINDS:
            raise ValueError(f"rewriter.kind must be one of {_REWRITER_KINDS}")
        if self.normalization not in NORMALIZATION_SCHEMES:
            raise ValueError(f"attribution.normalization must be one of {NORMALIZATION_SCHEMES}")
        if self.baseline != "zero":
            raise ValueError("attribution.baseline only supports 'zero'")
        if self.k_docs < 1:
            raise ValueError("attribution.k_docs must be >= 1")
        if self.steps < 1:
            raise ValueError("attribution.steps must be >= 1")
        if self.concurrency < 1:
            raise ValueError("run.concurrency must be >= 1")
        if not self.cutoffs or list(self.cutoffs) != sorted(set(self.cutoffs)):
            raise ValueError("run.cutoffs must be ascending and unique")
        if any(c < 1 for c in self.cutoffs):
            raise ValueError("run.cutoffs must be positive")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise ValueError(f"unknown methods {unknown}; choose from {METHODS}")
        if self.retriever_kind == "bridge" and not self.bridge_cmd:
            raise ValueError("retriever.kind=bridge requires bridge.cmd")
        if self.rewriter_kind == "endpoint" and not self.llm_endpoint:
            raise ValueError("rewriter.kind=endpoint requires llm.endpoint")
        if self.rewriter_kind == "scripted" and not self.rewriter_script:
            raise ValueError("rewriter.kind=scripted requires rewriter.script")
        return self

    @property
    def depth(self) -> int:
        """Retrieval depth: one search per issued query at the max cutoff."""
        return max(self.cutoffs)

    @classmethod
    def from_mapping(cls, mapping: dict[str, str]) -> "RunConfig":
        config = cls()
        config.apply(mapping)
        return config.validate()

    def apply(self, mapping: dict[str, str]) -> None:
        for key, raw in mapping.items():
            attr = self._KEYS.get(key)
            if attr is None:
                raise ValueError(f"unknown config key {key!r}")
            setattr(self, attr, _coerce(attr, raw, getattr(self, attr)))

    def items(self) -> list[tuple[str, str]]:
        """Resolved configuration as sorted (key, value) pairs."""
        reverse = {attr: key for key, attr in self._KEYS.items()}
        out = []
        for f in fields(self):
            if f.name.startswith("_") or f.name not in reverse:
                continue
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                value = ",".join(str(v) for v in value)
            out.append((reverse[f.name], str(value)))
        return sorted(out)


def _coerce(attr: str, raw: str, current):
    raw = raw.strip()
    if attr == "methods":
        return tuple(part.strip() for part in raw.split(",") if part.strip())
    if attr == "cutoffs":
        return tuple(int(part) for part in raw.split(",") if part.strip())
    if isinstance(current, bool):
        return raw.lower() in ("1", "true", "yes")
    if isinstance(current, int):
        return int(raw)
    if isinstance(current, float):
        return float(raw)
    return raw


def parse_config_file(path: str | Path) -> dict[str, str]:
    """Parse `key = value` lines; '#' starts a comment, blanks are skipped."""
    mapping: dict[str, str] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ValueError(f"{path}: line {lineno}: expected key = value")
            key, value = stripped.split("=", 1)
            mapping[key.strip()] = value.strip()
    return mapping


def load_config(path: str | Path | None, overrides: dict[str, str] | None = None) -> RunConfig:
    mapping = parse_config_file(path) if path else {}
    if overrides:
        mapping.update(overrides)
    return RunConfig.from_mapping(mapping)
