"""The ndjson request loop: one JSON object per line, one response each.

    request:  {"v": 1, "id": <int|str>, "op": "info"|"search"|"attribute",
               "payload": {...}}
    response: {"v": 1, "id": <same>, "ok": true, "payload": {...}}
              {"v": 1, "id": <same>, "ok": false, "error": "..."}

Payload fields may also appear at the request's top level; the nested form
is canonical.  Requests are handled strictly one at a time; a handler
error produces an ok=false response and the loop keeps serving.
"""

from __future__ import annotations

import json
import socket
import sys
from typing import IO

from .scorers import TransformerScorer

WIRE_VERSION = 1


class BridgeServer:
    def __init__(self, scorer: TransformerScorer, model_name: str):
        self.scorer = scorer
        self.model_name = model_name

    # ----- ops -----

    def op_info(self, payload: dict) -> dict:
        return {"model": self.model_name, "docs": len(self.scorer.doc_ids)}

    def op_search(self, payload: dict) -> dict:
        query = str(payload["query"])
        k = int(payload["k"])
        if k < 1:
            raise ValueError("k must be >= 1")
        hits = self.scorer.search(query, k)
        return {"hits": [[doc_id, score] for doc_id, score in hits]}

    def op_attribute(self, payload: dict) -> dict:
        query = str(payload["query"])
        doc_ids = [str(d) for d in payload["doc_ids"]]
        steps = int(payload.get("steps", 64))
        words, per_doc = self.scorer.attribute(query, doc_ids, steps)
        return {
            "tokens": words,
            "per_doc": [
                {
                    "doc_id": attribution.doc_id,
                    "scores": attribution.word_scores,
                    "residual": attribution.residual,
                    "subwords": attribution.subword_tokens,
                    "subword_scores": attribution.subword_scores,
                    "spans": [[start, end] for start, end in attribution.word_spans],
                }
                for attribution in per_doc
            ],
        }

    # ----- transport -----

    def handle_line(self, line: str) -> str:
        request_id = None
        try:
            request = json.loads(line)
            request_id = request.get("id")
            version = request.get("v", WIRE_VERSION)
            if version != WIRE_VERSION:
                raise ValueError(f"unsupported wire version {version!r}")
            op = request.get("op")
            handler = {
                "info": self.op_info,
                "search": self.op_search,
                "attribute": self.op_attribute,
            }.get(op)
            if handler is None:
                raise ValueError(f"unknown op {op!r}")
            payload = request.get("payload")
            if not isinstance(payload, dict):
                payload = {k: v for k, v in request.items() if k not in ("v", "id", "op")}
            response = {"v": WIRE_VERSION, "id": request_id, "ok": True, "payload": handler(payload)}
        except Exception as exc:  # noqa: BLE001 - protocol surface, stay alive
            response = {"v": WIRE_VERSION, "id": request_id, "ok": False, "error": str(exc)}
        return json.dumps(response)

    def serve_stream(self, reader: IO[str], writer: IO[str]) -> None:
        for line in reader:
            if not line.strip():
                continue
            writer.write(self.handle_line(line) + "\n")
            writer.flush()

    def serve_stdio(self) -> None:
        self.serve_stream(sys.stdin, sys.stdout)

    def serve_tcp(self, host: str, port: int) -> None:
        with socket.create_server((host, port)) as server:
            print(f"listening on {server.getsockname()[0]}:{server.getsockname()[1]}", file=sys.stderr)
            while True:
                conn, _ = server.accept()
                with conn:
                    reader = conn.makefile("r", encoding="utf-8")
                    writer = conn.makefile("w", encoding="utf-8")
                    self.serve_stream(reader, writer)
