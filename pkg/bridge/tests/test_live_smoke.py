"""Opt-in smoke test against real checkpoints and a real chat endpoint.

Not part of the regular gate. Enable with:

    BRIDGE_LIVE_MODEL=naver/splade-cocondenser-ensembledistil \\
    BRIDGE_LIVE_CORPUS=/data/nfcorpus/corpus.jsonl \\
    BRIDGE_LIVE_QUERIES=/data/nfcorpus/queries.jsonl \\
    BRIDGE_LIVE_QRELS=/data/nfcorpus/qrels/test.tsv \\
    LIVE_LLM_ENDPOINT=http://host:port/v1/chat/completions \\
    LIVE_LLM_MODEL=mistral-7b-instruct \\
    pytest bridge/tests/test_live_smoke.py -s
"""

import json
import os
import shlex
import sys

import pytest

REQUIRED = ("BRIDGE_LIVE_MODEL", "BRIDGE_LIVE_CORPUS", "BRIDGE_LIVE_QUERIES", "BRIDGE_LIVE_QRELS")

pytestmark = pytest.mark.skipif(
    not all(os.environ.get(k) for k in REQUIRED),
    reason=f"live smoke needs {', '.join(REQUIRED)}",
)


def test_live_four_method_grid(tmp_path):
    from attriq.config import RunConfig
    from attriq.pipeline import compare_reports, run_and_report

    sample_queries = tmp_path / "queries.jsonl"
    with open(os.environ["BRIDGE_LIVE_QUERIES"], encoding="utf-8") as f:
        lines = [line for line in f if line.strip()][:50]
    sample_queries.write_text("".join(lines), encoding="utf-8")

    endpoint = os.environ.get("LIVE_LLM_ENDPOINT", "")
    mapping = {
        "data.corpus": os.environ["BRIDGE_LIVE_CORPUS"],
        "data.queries": str(sample_queries),
        "data.qrels": os.environ["BRIDGE_LIVE_QRELS"],
        "retriever.kind": "bridge",
        "bridge.cmd": (
            f"{shlex.quote(sys.executable)} -m retriever_bridge"
            f" --model {shlex.quote(os.environ['BRIDGE_LIVE_MODEL'])}"
            f" --corpus {shlex.quote(os.environ['BRIDGE_LIVE_CORPUS'])}"
            " --scorer sparse"
        ),
        "run.output_dir": str(tmp_path / "out"),
        "llm.cache_dir": str(tmp_path / "cache"),
    }
    if endpoint:
        mapping.update(
            {
                "rewriter.kind": "endpoint",
                "llm.endpoint": endpoint,
                "llm.model": os.environ.get("LIVE_LLM_MODEL", "instruct"),
            }
        )
    else:
        mapping["rewriter.kind"] = "identity"

    reports = run_and_report(RunConfig.from_mapping(mapping))
    assert set(reports) == {"Org", "Tkn", "LLM", "GLLM"}
    for method in reports:
        traces = (tmp_path / "out" / method / "trace.jsonl").read_text().splitlines()
        assert all(json.loads(line)["error"] is None for line in traces), method
    table = compare_reports([reports[m] for m in ("Org", "Tkn", "LLM", "GLLM")])
    print(table.to_text())
