"""A tiny scripted chat-completions server for offline integration tests.

The handler pulls the original query out of the rendered prompt, looks it
up in a scripted text->rewrite map, and falls back to echoing the query.
Responses carry no timestamps, so repeated calls are byte-identical.
"""

from __future__ import annotations

import hashlib
import json
import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

_ORIGINAL_QUERY_RE = re.compile(r'Original query: "(.*?)"\n', re.DOTALL)


def _make_handler(script: dict[str, str]):
    class Handler(BaseHTTPRequestHandler):
        def do_POST(self):  # noqa: N802 - http.server API
            length = int(self.headers.get("Content-Length", 0))
            try:
                body = json.loads(self.rfile.read(length))
                prompt = body["messages"][-1]["content"]
            except (json.JSONDecodeError, KeyError, IndexError, TypeError):
                self._reply(400, {"error": "malformed chat request"})
                return
            match = _ORIGINAL_QUERY_RE.search(prompt + "\n")
            original = match.group(1) if match else ""
            content = script.get(original, original)
            digest = hashlib.sha256(prompt.encode("utf-8")).hexdigest()[:12]
            self._reply(
                200,
                {
                    "id": f"mock-{digest}",
                    "object": "chat.completion",
                    "model": body.get("model", "mock"),
                    "choices": [
                        {
                            "index": 0,
                            "message": {"role": "assistant", "content": content},
                            "finish_reason": "stop",
                        }
                    ],
                },
            )

        def _reply(self, status: int, payload: dict) -> None:
            raw = json.dumps(payload).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(raw)))
            self.end_headers()
            self.wfile.write(raw)

        def log_message(self, fmt, *args):  # silence request logging
            pass

    return Handler


def create_server(script: dict[str, str], host: str = "127.0.0.1", port: int = 0) -> ThreadingHTTPServer:
    """Build (but do not start) a scripted mock server; port 0 picks a free one."""
    return ThreadingHTTPServer((host, port), _make_handler(dict(script)))


class MockLLMServer:
    """Context manager running a scripted mock endpoint on a daemon thread."""

    def __init__(self, script: dict[str, str], host: str = "127.0.0.1", port: int = 0):
        self._server = create_server(script, host, port)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)

    @property
    def endpoint(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}/v1/chat/completions"

    def __enter__(self) -> "MockLLMServer":
        self._thread.start()
        return self

    def __exit__(self, *exc) -> None:
        self._server.shutdown()
        self._server.server_close()


def load_script(path: str) -> dict[str, str]:
    """Read a JSON object mapping original query text to its rewrite."""
    with open(path, encoding="utf-8") as f:
        script = json.load(f)
    if not isinstance(script, dict) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in script.items()
    ):
        raise ValueError(f"{path}: script must be a JSON object of string pairs")
    return script
