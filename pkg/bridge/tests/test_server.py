import json

import pytest

from retriever_bridge.server import BridgeServer


@pytest.fixture(scope="module")
def server(sparse_scorer):
    return BridgeServer(sparse_scorer, model_name="tiny-test-model")


def call(server, request):
    return json.loads(server.handle_line(json.dumps(request)))


class TestProtocol:
    def test_info(self, server, sparse_scorer):
        response = call(server, {"v": 1, "id": 1, "op": "info", "payload": {}})
        assert response == {
            "v": 1,
            "id": 1,
            "ok": True,
            "payload": {"model": "tiny-test-model", "docs": len(sparse_scorer.doc_ids)},
        }

    def test_search_schema(self, server):
        response = call(
            server, {"v": 1, "id": "s1", "op": "search", "payload": {"query": "heart diet", "k": 5}}
        )
        assert response["ok"] and response["id"] == "s1"
        hits = response["payload"]["hits"]
        assert len(hits) == 5
        scores = [score for _, score in hits]
        assert scores == sorted(scores, reverse=True)

    def test_flat_payload_accepted(self, server):
        response = call(server, {"v": 1, "id": 7, "op": "search", "query": "diet", "k": 3})
        assert response["ok"]
        assert len(response["payload"]["hits"]) == 3

    def test_attribute_schema(self, server, sample_files):
        text = sample_files["query_texts"]["q01"]
        search = call(server, {"v": 1, "id": 2, "op": "search", "payload": {"query": text, "k": 3}})
        doc_ids = [doc_id for doc_id, _ in search["payload"]["hits"]]
        response = call(
            server,
            {
                "v": 1,
                "id": 3,
                "op": "attribute",
                "payload": {"query": text, "doc_ids": doc_ids, "steps": 4},
            },
        )
        assert response["ok"]
        payload = response["payload"]
        assert payload["tokens"] == text.lower().split()
        assert [row["doc_id"] for row in payload["per_doc"]] == doc_ids
        for row in payload["per_doc"]:
            assert len(row["scores"]) == len(payload["tokens"])
            assert "residual" in row
            assert len(row["subwords"]) == len(row["subword_scores"])

    def test_unknown_op_error_keeps_loop_alive(self, server):
        bad = call(server, {"v": 1, "id": 4, "op": "explode", "payload": {}})
        assert bad == {"v": 1, "id": 4, "ok": False, "error": "unknown op 'explode'"}
        good = call(server, {"v": 1, "id": 5, "op": "info", "payload": {}})
        assert good["ok"]

    def test_unsupported_wire_version_rejected(self, server):
        response = call(server, {"v": 9, "id": 6, "op": "info", "payload": {}})
        assert not response["ok"]
        assert "version" in response["error"]

    def test_malformed_json_is_error_response(self, server):
        response = json.loads(server.handle_line("{nope"))
        assert not response["ok"]

    def test_bad_k_is_error_response(self, server):
        response = call(server, {"v": 1, "id": 8, "op": "search", "payload": {"query": "x", "k": 0}})
        assert not response["ok"]
