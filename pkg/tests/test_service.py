from __future__ import annotations

import http.client
import json
import threading
import urllib.request
from urllib.error import HTTPError

import pytest

from sxacml.service import ConfigError, EngineConfig, ServiceState, make_server


@pytest.fixture()
def running(stack):
    srv = make_server(EngineConfig("127.0.0.1:0"), engine=stack.engine())
    thread = threading.Thread(target=srv.serve_forever, daemon=True)
    thread.start()
    yield srv
    srv.shutdown()
    srv.server_close()


def call(srv, method, path, body=None, raw=False):
    data = body if (raw or body is None) else json.dumps(body).encode()
    req = urllib.request.Request(srv.url + path, data=data, method=method)
    try:
        with urllib.request.urlopen(req, timeout=30) as resp:
            return resp.status, resp.read()
    except HTTPError as exc:
        return exc.code, exc.read()


def test_health(running):
    status, body = call(running, "GET", "/v1/health")
    assert status == 200
    doc = json.loads(body)
    assert doc["status"] == "ok" and doc["policies"] == 2 and doc["axioms"] > 0


def test_decision_matches_expected(running, stack):
    status, body = call(running, "POST", "/v1/decision", stack.scenarios["uc1"].request, raw=True)
    assert status == 200
    assert json.loads(body) == stack.scenarios["uc1"].expected


@pytest.mark.parametrize("body", [b"", b"{", b"[]", b'{"x": []}'])
def test_bad_requests_are_400(running, body):
    status, payload = call(running, "POST", "/v1/decision", body, raw=True)
    assert status == 400
    assert "error" in json.loads(payload)


def test_unknown_routes_are_404(running):
    assert call(running, "GET", "/v1/nope")[0] == 404
    assert call(running, "POST", "/v1/nope", b"{}", raw=True)[0] == 404
    assert call(running, "PUT", "/v1/nope", b"{}", raw=True)[0] == 404


def test_bad_content_length_is_400(running):
    conn = http.client.HTTPConnection(*running.server_address[:2], timeout=10)
    conn.putrequest("POST", "/v1/decision")
    conn.putheader("Content-Length", "-5")
    conn.endheaders()
    assert conn.getresponse().status == 400
    conn.close()


def test_policy_reload(running, stack):
    request = stack.scenarios["uc1"].request
    deny_all = "policy d { rule r { deny } }"
    assert call(running, "PUT", "/v1/policies", {"documents": [deny_all]})[0] == 204
    _, body = call(running, "POST", "/v1/decision", request, raw=True)
    assert {d["decision"] for d in json.loads(body)["decisions"]} == {"Deny"}


@pytest.mark.parametrize("payload,status", [
    (b"not json", 400),
    (b'{"documents": "policy"}', 400),
    (b'{"documents": ["policy p {"]}', 422),
    (b'{"documents": ["policy p { }", "policy p { }"]}', 422),
])
def test_bad_policy_reloads(running, payload, status):
    assert call(running, "PUT", "/v1/policies", payload, raw=True)[0] == status
    assert json.loads(call(running, "GET", "/v1/health")[1])["policies"] == 2


def test_ontology_reload(running, stack, fixtures_dir):
    o = fixtures_dir / "ontologies"
    docs = [json.loads((o / f"{n}.json").read_text()) for n in ("aco", "fitness", "privacy")]
    mapping = [json.loads((o / "mapping.json").read_text())]
    status, _ = call(running, "PUT", "/v1/ontologies", {"documents": docs, "mapping": mapping})
    assert status == 204
    # without the owner's data there is nothing to decide about
    _, body = call(running, "POST", "/v1/decision", stack.scenarios["uc1"].request, raw=True)
    assert json.loads(body)["decisions"] == [{"decision": "NotApplicable", "resource": "<as-requested>"}]
    assert call(running, "PUT", "/v1/ontologies", {"documents": [], "extra": []})[0] == 400
    assert call(running, "PUT", "/v1/ontologies", {"documents": ["{"]})[0] == 422


def test_state_swaps_whole_engines(stack):
    state = ServiceState(stack.engine())
    before = state.engine
    state.replace_policies(stack.policies)
    assert state.engine is not before
    assert state.engine.knowledge == before.knowledge
    state.replace_ontologies(stack.domain, stack.mapping)
    assert state.engine.policies is stack.policies


def test_config_validation(fixtures_dir):
    with pytest.raises(ConfigError):
        EngineConfig("nope").validate()
    with pytest.raises(ConfigError):
        EngineConfig("127.0.0.1:0", log_level="LOUD").validate()
    with pytest.raises(ConfigError):
        EngineConfig("127.0.0.1:0", policy_paths=("/nonexistent.apl",)).validate()
    bad = fixtures_dir / "scenarios" / "uc1" / "request.json"
    with pytest.raises(ConfigError):
        EngineConfig("127.0.0.1:0", policy_paths=(str(bad),)).build_engine()
    assert EngineConfig(":8081").address == ("0.0.0.0", 8081)


def test_port_in_use_is_a_config_error(running, stack):
    host, port = running.server_address[:2]
    with pytest.raises(ConfigError):
        make_server(EngineConfig(f"{host}:{port}"), engine=stack.engine())
