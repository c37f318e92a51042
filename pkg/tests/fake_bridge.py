"""A minimal stand-in bridge process used to test the engine-side client.

Speaks the ndjson wire protocol over stdio with a toy term-count scorer on
a hardcoded three-document corpus.  FAKE_BRIDGE_BAD_ID=1 makes it echo
wrong request ids so the client's protocol checks can be exercised.
"""

import json
import os
import sys

DOCS = {
    "fd1": "heart disease advice",
    "fd2": "heart heart attack",
    "fd3": "weight loss advice",
}


def _tokens(text):
    out = []
    for raw in text.lower().split():
        word = raw.strip(".,!?\"'")
        if word:
            out.append(word)
    return out


def _score(query_tokens, doc_id):
    doc_tokens = _tokens(DOCS[doc_id])
    return float(sum(doc_tokens.count(t) for t in query_tokens))


def handle(request):
    op = request.get("op")
    payload = request.get("payload", {})
    if op == "info":
        return {"model": "fake-bridge", "docs": len(DOCS)}
    if op == "search":
        tokens = _tokens(payload["query"])
        k = int(payload["k"])
        scored = sorted(
            ((doc_id, _score(tokens, doc_id)) for doc_id in DOCS),
            key=lambda kv: (-kv[1], kv[0]),
        )
        return {"hits": [[doc_id, score] for doc_id, score in scored[:k]]}
    if op == "attribute":
        tokens = _tokens(payload["query"])
        per_doc = []
        for doc_id in payload["doc_ids"]:
            if doc_id not in DOCS:
                raise KeyError(f"unknown doc {doc_id}")
            doc_tokens = _tokens(DOCS[doc_id])
            scores = [float(doc_tokens.count(t)) for t in tokens]
            per_doc.append({"doc_id": doc_id, "scores": scores, "residual": 0.0})
        return {"tokens": tokens, "per_doc": per_doc}
    raise ValueError(f"unknown op {op!r}")


def main():
    bad_id = os.environ.get("FAKE_BRIDGE_BAD_ID") == "1"
    for line in sys.stdin:
        if not line.strip():
            continue
        request = json.loads(line)
        reply_id = -1 if bad_id else request.get("id")
        try:
            payload = handle(request)
            response = {"v": 1, "id": reply_id, "ok": True, "payload": payload}
        except Exception as exc:  # noqa: BLE001 - protocol surface
            response = {"v": 1, "id": reply_id, "ok": False, "error": str(exc)}
        sys.stdout.write(json.dumps(response) + "\n")
        sys.stdout.flush()


if __name__ == "__main__":
    main()
