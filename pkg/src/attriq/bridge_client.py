"""Client for an out-of-process retriever speaking the bridge wire protocol.

The bridge is any executable that answers newline-delimited JSON requests
on stdin with one JSON response per line on stdout:

    request:  {"v": 1, "id": <int|str>, "op": "info"|"search"|"attribute",
               "payload": {...}}
    response: {"v": 1, "id": <same>, "ok": true, "payload": {...}}
              {"v": 1, "id": <same>, "ok": false, "error": "..."}

Ops:
    info      payload {}                      -> {"model": str, "docs": int}
    search    payload {"query", "k"}          -> {"hits": [[doc_id, score], ...]}
    attribute payload {"query", "doc_ids", "steps"}
              -> {"tokens": [word, ...],
                  "per_doc": [{"doc_id", "scores": [...], "residual": float}, ...]}

Requests are strictly serialized: at most one is in flight per bridge
process.
"""

from __future__ import annotations

import json
import shlex
import subprocess
import threading

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .attribution import AttributionVector
from .retrievers import RankedList
from .validation import check_positive_int

WIRE_VERSION = 1


class BridgeError(RuntimeError):
    """The bridge process failed or returned a protocol error."""


class BridgeRetriever(BaseEstimator):
    """Spawns a bridge process and proxies search/attribution to it.

    Parameters
    ----------
    cmd : command line of the bridge executable (string or argv list).
    """

    def __init__(self, cmd: str | list[str]):
        self.cmd = cmd

    def fit(self, corpus=None, y=None) -> "BridgeRetriever":
        """Start the bridge and confirm it answers ``info``.

        The document index lives on the bridge side, so the corpus argument
        is accepted only for interface symmetry and ignored.
        """
        argv = shlex.split(self.cmd) if isinstance(self.cmd, str) else list(self.cmd)
        self._proc = subprocess.Popen(
            argv,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            text=True,
            bufsize=1,
        )
        self._lock = threading.Lock()
        self._next_id = 0
        info = self._call("info", {})
        self.model_ = info.get("model", "")
        self.doc_count_ = int(info.get("docs", 0))
        return self

    def close(self) -> None:
        proc = getattr(self, "_proc", None)
        if proc is None:
            return
        if proc.poll() is None:
            try:
                proc.stdin.close()
                proc.wait(timeout=10)
            except Exception:
                proc.kill()
        self._proc = None

    def __enter__(self) -> "BridgeRetriever":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def search(self, query: str | list[str], k: int, query_id: str = "") -> RankedList:
        check_is_fitted(self)
        check_positive_int(k, "k")
        text = query if isinstance(query, str) else " ".join(query)
        payload = self._call("search", {"query": text, "k": k})
        entries = tuple((str(doc_id), float(score)) for doc_id, score in payload["hits"])
        return RankedList(query_id=query_id, entries=entries)

    def attribute_docs(
        self, text: str, doc_ids: list[str], steps: int
    ) -> tuple[list[str], list[AttributionVector]]:
        """Word-level attributions for the given documents, computed remotely."""
        check_is_fitted(self)
        check_positive_int(steps, "steps")
        payload = self._call("attribute", {"query": text, "doc_ids": list(doc_ids), "steps": steps})
        tokens = [str(t) for t in payload["tokens"]]
        vectors = []
        for row in payload["per_doc"]:
            scores = tuple(float(v) for v in row["scores"])
            if len(scores) != len(tokens):
                raise BridgeError(
                    f"attribution length {len(scores)} does not match {len(tokens)} tokens"
                )
            vectors.append(AttributionVector(doc_id=str(row["doc_id"]), scores=scores, steps=steps))
        return tokens, vectors

    def _call(self, op: str, payload: dict) -> dict:
        proc = getattr(self, "_proc", None)
        if proc is None or proc.poll() is not None:
            raise BridgeError(f"bridge process is not running (op={op})")
        with self._lock:
            self._next_id += 1
            request_id = self._next_id
            request = {"v": WIRE_VERSION, "id": request_id, "op": op, "payload": payload}
            try:
                proc.stdin.write(json.dumps(request) + "\n")
                proc.stdin.flush()
                line = proc.stdout.readline()
            except (BrokenPipeError, OSError) as exc:
                raise BridgeError(f"bridge transport failed: {exc}; {self._stderr_tail()}") from exc
        if not line:
            raise BridgeError(f"bridge closed its stdout; {self._stderr_tail()}")
        try:
            response = json.loads(line)
        except json.JSONDecodeError as exc:
            raise BridgeError(f"bridge sent invalid JSON: {line!r}") from exc
        if response.get("id") != request_id:
            raise BridgeError(f"response id {response.get('id')!r} does not echo {request_id}")
        if not response.get("ok"):
            raise BridgeError(f"bridge error for op {op!r}: {response.get('error')}")
        return response.get("payload", {})

    def _stderr_tail(self, limit: int = 2000) -> str:
        proc = getattr(self, "_proc", None)
        if proc is None or proc.stderr is None:
            return "no stderr"
        if proc.poll() is None:
            return "bridge process still alive"
        try:
            tail = proc.stderr.read() or ""
        except Exception:
            return "stderr unavailable"
        return f"stderr: {tail[-limit:]}" if tail else "stderr empty"
