import json
import socket
import subprocess
import sys
import threading
import time
import pytest
import requests
import uvicorn
from fastapi.testclient import TestClient

from coref_adapter.app import create_app
from coref_adapter.backends import RuleResolver, byte_to_codepoint_offsets
from coref_adapter.config import AdapterConfig

FIXTURE_DOC = (
    "Eleanor Vance sailed into the quiet harbor. She charted every shoal "
    "before autumn storms. Marcus Webb owned the battered fishing boat. "
    "He feared the rumors about the caves. The tide climbed over the mossy "
    "stones. Eleanor Vance questioned the silent lighthouse keeper."
)


@pytest.fixture()
def client():
    return TestClient(create_app(AdapterConfig()))


def assert_resolve_schema(payload):
    assert set(payload) == {"mentions", "clusters"}
    for m in payload["mentions"]:
        assert set(m) == {"start", "end"}
        assert isinstance(m["start"], int) and isinstance(m["end"], int)
    for cluster in payload["clusters"]:
        assert all(isinstance(i, int) for i in cluster)
        assert all(0 <= i < len(payload["mentions"]) for i in cluster)


def assert_tag_schema(payload):
    assert set(payload) == {"tokens"}
    for t in payload["tokens"]:
        assert set(t) == {"start", "end", "pos"}
        assert isinstance(t["pos"], str)


class TestResolveEndpoint:
    def test_schema_valid_response(self, client):
        resp = client.post("/resolve", json={"chunk_id": 0, "text": FIXTURE_DOC})
        assert resp.status_code == 200
        assert_resolve_schema(resp.json())

    def test_offsets_slice_request_text(self, client):
        resp = client.post("/resolve", json={"chunk_id": 1, "text": FIXTURE_DOC})
        payload = resp.json()
        surfaces = [FIXTURE_DOC[m["start"] : m["end"]] for m in payload["mentions"]]
        assert "Eleanor Vance" in surfaces
        assert "She" in surfaces
        for s in surfaces:
            assert s.strip() == s and s

    def test_code_point_offsets_with_multibyte_text(self, client):
        text = "Élodie sailéd away. She wavéd."
        resp = client.post("/resolve", json={"chunk_id": 0, "text": text})
        payload = resp.json()
        surfaces = [text[m["start"] : m["end"]] for m in payload["mentions"]]
        assert "Élodie" in surfaces
        assert "She" in surfaces

    def test_empty_text(self, client):
        resp = client.post("/resolve", json={"chunk_id": 0, "text": ""})
        assert resp.status_code == 200
        assert resp.json() == {"mentions": [], "clusters": []}

    def test_over_length_input_413(self):
        client = TestClient(create_app(AdapterConfig(max_input_length=10)))
        resp = client.post("/resolve", json={"chunk_id": 0, "text": "x" * 11})
        assert resp.status_code == 413

    def test_model_failure_500_with_message(self, client, monkeypatch):
        def boom(text):
            raise RuntimeError("weights corrupted")

        monkeypatch.setattr(RuleResolver, "resolve", lambda self, text: boom(text))
        broken = TestClient(create_app(AdapterConfig()), raise_server_exceptions=False)
        resp = broken.post("/resolve", json={"chunk_id": 0, "text": "hello"})
        assert resp.status_code == 500
        assert "weights corrupted" in resp.json()["detail"]

    def test_clusters_reference_valid_mentions(self, client):
        resp = client.post("/resolve", json={"chunk_id": 0, "text": "Bob met Bob. He left."})
        payload = resp.json()
        assert_resolve_schema(payload)
        # identical surfaces cluster; pronoun joins them
        assert any(len(c) >= 2 for c in payload["clusters"])


class TestTagEndpoint:
    def test_schema_valid_response(self, client):
        resp = client.post("/tag", json={"text": FIXTURE_DOC})
        assert resp.status_code == 200
        assert_tag_schema(resp.json())

    def test_pronoun_tagged(self, client):
        resp = client.post("/tag", json={"text": "She left"})
        tokens = resp.json()["tokens"]
        assert tokens[0] == {"start": 0, "end": 3, "pos": "PRON"}
        assert tokens[1]["pos"] == "X"

    def test_empty_text(self, client):
        resp = client.post("/tag", json={"text": ""})
        assert resp.json() == {"tokens": []}

    def test_spans_cover_all_non_space_characters(self, client):
        text = "Rain fell; she hid under the awning."
        resp = client.post("/tag", json={"text": text})
        covered = set()
        for t in resp.json()["tokens"]:
            assert text[t["start"] : t["end"]].strip() == text[t["start"] : t["end"]]
            covered.update(range(t["start"], t["end"]))
        expected = {i for i, ch in enumerate(text) if not ch.isspace()}
        assert covered == expected

    def test_over_length_input_413(self):
        client = TestClient(create_app(AdapterConfig(max_input_length=5)))
        resp = client.post("/tag", json={"text": "toolongtext"})
        assert resp.status_code == 413


class TestHealth:
    def test_healthz(self, client):
        resp = client.get("/healthz")
        assert resp.status_code == 200
        body = resp.json()
        assert body["status"] == "ok"
        assert body["resolver"] == "rule" and body["tagger"] == "rule"


class TestOffsetConversion:
    def test_byte_spans_convert_to_code_points(self):
        text = "café society"
        # bytes: c(0) a(1) f(2) \xc3\xa9(3-4) ' '(5) s(6)...
        spans = byte_to_codepoint_offsets(text, [(0, 5), (6, 13)])
        assert [text[s:e] for s, e in spans] == ["café", "society"]

    def test_mid_character_byte_span_rejected(self):
        with pytest.raises(ValueError):
            byte_to_codepoint_offsets("café", [(0, 4)])


def _free_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


@pytest.fixture(scope="module")
def live_server():
    port = _free_port()
    config = uvicorn.Config(
        create_app(AdapterConfig()), host="127.0.0.1", port=port, log_level="warning"
    )
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    base = f"http://127.0.0.1:{port}"
    for _ in range(100):
        try:
            if requests.get(f"{base}/healthz", timeout=1).status_code == 200:
                break
        except requests.RequestException:
            time.sleep(0.05)
    else:
        raise RuntimeError("adapter server did not come up")
    yield base
    server.should_exit = True
    thread.join(timeout=5)


class TestPrimaryPipelineEndToEnd:
    def test_rewrite_through_adapter(self, live_server, tmp_path):
        doc = tmp_path / "doc.txt"
        doc.write_text(FIXTURE_DOC, encoding="utf-8")
        out = tmp_path / "out.txt"
        proc = subprocess.run(
            [
                sys.executable,
                "-m",
                "longcoref.cli",
                "rewrite",
                str(doc),
                "--out",
                str(out),
                "--resolver",
                "wire",
                "--resolver-endpoint",
                f"{live_server}/resolve",
                "--tagger",
                "wire",
                "--tagger-endpoint",
                f"{live_server}/tag",
            ],
            capture_output=True,
            text=True,
            timeout=120,
        )
        assert proc.returncode == 0, proc.stderr
        rewritten = out.read_text(encoding="utf-8")
        assert rewritten
        assert "Eleanor Vance charted every shoal" in rewritten
        assert "Marcus Webb feared the rumors" in rewritten

    def test_inspect_through_adapter(self, live_server, tmp_path):
        doc = tmp_path / "doc.txt"
        doc.write_text(FIXTURE_DOC, encoding="utf-8")
        proc = subprocess.run(
            [
                sys.executable,
                "-m",
                "longcoref.cli",
                "inspect",
                str(doc),
                "--resolver",
                "wire",
                "--resolver-endpoint",
                f"{live_server}/resolve",
            ],
            capture_output=True,
            text=True,
            timeout=120,
        )
        assert proc.returncode == 0, proc.stderr
        payload = json.loads(proc.stdout)
        assert payload["mentions"]
        assert payload["clusters"]
