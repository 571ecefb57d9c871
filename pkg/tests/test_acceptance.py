"""Acceptance criteria 1-9. Each test carries ``criterion(n)``; the terminal
summary prints one PASS/FAIL line per criterion."""

from __future__ import annotations

import itertools
import json
import math
import random
import subprocess
import sys
import threading
import time
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from urllib.error import HTTPError

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

import reference
import strategies
from sxacml.dsl import parse_policy_document, serialize_policy
from sxacml.functions import geo_distance
from sxacml.ontology import ClassAssertion, GeoPoint, KnowledgeBase, merge
from sxacml.pdp import AS_REQUESTED, Engine, dump_decisions, load_policy_texts
from sxacml.policy import (
    DENY,
    NOT_APPLICABLE,
    PERMIT,
    CombiningAlgorithm,
    DecisionValue,
    PolicySet,
    combine,
    indeterminate,
)
from sxacml.reasoner import classify
from sxacml.request import RequestAttribute, RequestContext
from sxacml.policy import Category
from sxacml.service import EngineConfig, make_server
from sxacml.vocab import CLASS_ID


def expected_text(stack, scenario: str) -> str:
    return dump_decisions(stack.scenarios[scenario].expected)


def run_scenario(stack, scenario: str) -> tuple[str, float]:
    start = time.perf_counter()
    engine = stack.engine(scenario)
    decisions = engine.decide_document(stack.scenarios[scenario].request)
    elapsed = time.perf_counter() - start
    return engine.decision_text(decisions), elapsed


# ---------------------------------------------------------------------------
# 1. UC1
# ---------------------------------------------------------------------------

@pytest.mark.criterion(1)
def test_uc1_matches_oracle_and_runs_under_a_second(stack):
    text, elapsed = run_scenario(stack, "uc1")
    assert text == expected_text(stack, "uc1")
    assert text == reference.dumps(reference.expected_decisions("uc1"))
    assert elapsed < 1.0


@pytest.mark.criterion(1)
def test_uc1_permits_exactly_the_aggregate_metrics(stack, engine):
    fit = engine.prefixes["fit"]
    decisions = engine.decide_document(stack.scenarios["uc1"].request)
    metrics = engine.inferred.instances_of(fit + "TrainingMetric")
    aggregates = engine.inferred.instances_of(fit + "AggregateMetrics")
    assert len(decisions) == len(metrics) == 6
    assert len(aggregates) == 2
    for entry in decisions:
        want = DecisionValue.PERMIT if entry.resource in aggregates else DecisionValue.NOT_APPLICABLE
        assert entry.decision.value is want


# ---------------------------------------------------------------------------
# 2. UC2
# ---------------------------------------------------------------------------

@pytest.mark.criterion(2)
def test_uc2_matches_oracle_and_runs_under_a_second(stack):
    text, elapsed = run_scenario(stack, "uc2")
    assert text == expected_text(stack, "uc2")
    assert text == reference.dumps(reference.expected_decisions("uc2"))
    assert elapsed < 1.0


@pytest.mark.criterion(2)
def test_uc2_permits_follow_distance_and_window(stack, engine):
    request = json.loads(stack.scenarios["uc2"].request)
    env = {a["id"]: a["value"] for a in request["environment"]}
    event = (env["aco:eventLocation"]["lat"], env["aco:eventLocation"]["lon"])
    event_ms = reference.epoch_ms(env["aco:eventTime"])
    ref = reference.load_stack()
    fit = ref.prefixes["fit"]
    locations = reference.instances_of(reference.infer_types(ref), fit + "Location")
    assert len(locations) == 5
    inside = set()
    for loc in locations:
        point = next(v for s, p, (_, v) in ref.data if s == loc and p == fit + "locationPoint")
        t = next(v for s, p, (_, v) in ref.data if s == loc and p == fit + "locationTime")
        if reference.great_circle_m(point, event) <= 1000 and abs(t - event_ms) <= 3_600_000:
            inside.add(loc)
    assert len(inside) == 2
    decisions = engine.decide_document(stack.scenarios["uc2"].request)
    permitted = {e.resource for e in decisions if e.decision.value is DecisionValue.PERMIT}
    assert permitted == inside


# ---------------------------------------------------------------------------
# 3. Legal override
# ---------------------------------------------------------------------------

@pytest.mark.criterion(3)
def test_denying_preference_does_not_change_uc2(stack):
    text, _ = run_scenario(stack, "legal_override")
    uc2, _ = run_scenario(stack, "uc2")
    assert text == uc2 == expected_text(stack, "legal_override")


@pytest.mark.criterion(3)
def test_the_added_preference_would_deny_on_its_own(stack):
    scenario = stack.scenarios["legal_override"]
    preferences_only = PolicySet("root", [c for c in stack.policies.children
                                          if c.id == "owner-preferences"])
    domain = merge(stack.domain, scenario.ontology)
    engine = Engine(preferences_only, domain, stack.mapping)
    decisions = engine.decide_document(scenario.request)
    assert len(decisions) == 5
    assert all(e.decision.value is DecisionValue.DENY for e in decisions)


# ---------------------------------------------------------------------------
# 4. Reasoner oracle
# ---------------------------------------------------------------------------

def _assert_reasoner_agrees(kb: KnowledgeBase, ref: reference.RefKB, exprs=()) -> None:
    inferred = classify(kb)
    types = reference.infer_types(ref)
    assert {(i, c) for i in kb.individuals for c in inferred.types_of(i)} == types
    for c in kb.classes | {c for _, c in types}:
        assert sorted(inferred.instances_of(c)) == reference.instances_of(types, c)
    for i in kb.individuals:
        assert sorted(inferred.types_of(i)) == reference.types_of(types, i)
        for expr, ref_expr in exprs:
            assert inferred.satisfies(i, expr) == reference.satisfies(ref, types, i, ref_expr)


@pytest.mark.criterion(4)
@pytest.mark.parametrize("scenario", [None, "uc1", "uc2", "legal_override"])
def test_reasoner_matches_oracle_on_fixture_stack(stack, scenario):
    ref = reference.load_stack(scenario)
    kb = stack.knowledge
    if scenario is not None:
        kb = merge(kb, stack.scenarios[scenario].ontology)
    assert len(kb.individuals) <= 50
    exprs = [(expr, ref_expr) for (_, expr), (_, ref_expr)
             in zip(kb.definitions, sorted(ref.definitions, key=lambda d: d[0]))]
    assert [n for n, _ in kb.definitions] == sorted(n for n, _ in ref.definitions)
    _assert_reasoner_agrees(kb, ref, exprs)


@pytest.mark.criterion(4)
@pytest.mark.parametrize("scenario", ["uc1", "uc2", "legal_override"])
def test_reasoner_matches_oracle_on_request_ontologies(stack, scenario):
    from sxacml.pip import build_request_ontology

    engine = stack.engine(scenario)
    request = json.loads(stack.scenarios[scenario].request)
    base = reference.load_stack(scenario)
    class_id = reference.expand(request["resource"][0]["value"], base.prefixes)
    for resource in reference.instances_of(reference.infer_types(base), class_id):
        ctx = engine.parse_request(request).with_resource(resource)
        ro = build_request_ontology(ctx, engine.knowledge, prefix="urn:oracle")
        ref, _ = reference.request_kb(base, request, resource)
        _assert_reasoner_agrees(ro.kb, ref)


@pytest.mark.criterion(4)
def test_reasoner_matches_oracle_on_1000_random_kbs():
    seen = []

    @settings(max_examples=1000, deadline=None, derandomize=True,
              suppress_health_check=list(HealthCheck))
    @given(strategies.axiom_recipes(),
           st.lists(strategies.expressions(20, 20), max_size=4))
    def check(generated, probes):
        recipe, n_classes, n_inds = generated
        probes = [p for p in probes if _in_range(p, n_classes, n_inds)]
        kb, ref = strategies.build(recipe)
        assert len(kb.classes) <= 20 and len(kb.individuals) <= 20 and len(kb.axioms) <= 60
        exprs = [(strategies.to_expr(p), strategies.to_ref_expr(p)) for p in probes]
        _assert_reasoner_agrees(kb, ref, exprs)
        seen.append(len(kb.axioms))

    check()
    assert len(seen) >= 1000
    assert sum(1 for n in seen if n >= 10) >= 500


def _in_range(r, n_classes, n_inds) -> bool:
    tag = r[0]
    if tag == "named":
        return r[1] < n_classes
    if tag == "hasObj":
        return r[2] < n_inds
    if tag == "and":
        return all(_in_range(x, n_classes, n_inds) for x in r[1])
    if tag == "some":
        return _in_range(r[2], n_classes, n_inds)
    return True


# ---------------------------------------------------------------------------
# 5. Combining algorithms
# ---------------------------------------------------------------------------

P, D, N, I = "P", "D", "N", "I"

# Binary tables, folded left from N. Row = accumulated, column = next.
DENY_OVERRIDES = {
    (P, P): P, (P, D): D, (P, N): P, (P, I): I,
    (D, P): D, (D, D): D, (D, N): D, (D, I): D,
    (N, P): P, (N, D): D, (N, N): N, (N, I): I,
    (I, P): I, (I, D): D, (I, N): I, (I, I): I,
}
PERMIT_OVERRIDES = {
    (P, P): P, (P, D): P, (P, N): P, (P, I): P,
    (D, P): P, (D, D): D, (D, N): D, (D, I): I,
    (N, P): P, (N, D): D, (N, N): N, (N, I): I,
    (I, P): P, (I, D): I, (I, N): I, (I, I): I,
}
FIRST_APPLICABLE = {(a, b): (b if a == N else a) for a in (P, D, N, I) for b in (P, D, N, I)}

TABLES = {
    CombiningAlgorithm.DENY_OVERRIDES: DENY_OVERRIDES,
    CombiningAlgorithm.PERMIT_OVERRIDES: PERMIT_OVERRIDES,
    CombiningAlgorithm.FIRST_APPLICABLE: FIRST_APPLICABLE,
}
LETTER = {DecisionValue.PERMIT: P, DecisionValue.DENY: D,
          DecisionValue.NOT_APPLICABLE: N, DecisionValue.INDETERMINATE: I}


@pytest.mark.criterion(5)
@pytest.mark.parametrize("algorithm", list(CombiningAlgorithm))
def test_combine_matches_truth_tables_exhaustively(algorithm):
    table = TABLES[algorithm]
    values = {P: PERMIT, D: DENY, N: NOT_APPLICABLE}
    checked = 0
    for length in range(5):
        for letters in itertools.product((P, D, N, I), repeat=length):
            decisions = [values.get(x) or indeterminate(f"child {k}") for k, x in enumerate(letters)]
            want = N
            for x in letters:
                want = table[(want, x)]
            got = combine(algorithm, decisions)
            assert LETTER[got.value] == want, (algorithm, letters)
            if want == I:
                assert got.status
            checked += 1
    assert checked == 1 + 4 + 16 + 64 + 256


# ---------------------------------------------------------------------------
# 6. Geospatial accuracy
# ---------------------------------------------------------------------------

ONE_DEGREE_M = 6_371_000.0 * math.pi / 180.0  # 111,194.93 m


@pytest.mark.criterion(6)
@pytest.mark.parametrize("a,b", [
    (GeoPoint(0.0, 0.0), GeoPoint(0.0, 1.0)),
    (GeoPoint(0.0, 100.0), GeoPoint(0.0, 101.0)),
    (GeoPoint(0.0, 0.0), GeoPoint(1.0, 0.0)),
    (GeoPoint(45.0, 30.0), GeoPoint(46.0, 30.0)),
    (GeoPoint(-60.0, -70.0), GeoPoint(-59.0, -70.0)),
])
def test_one_degree_separations(a, b):
    assert abs(geo_distance(a, b) - ONE_DEGREE_M) <= 1.0
    assert abs(ONE_DEGREE_M - 111_195) < 1


@pytest.mark.criterion(6)
@pytest.mark.parametrize("p", [GeoPoint(0, 0), GeoPoint(52.2297, 21.0122), GeoPoint(-89.9, 179.9),
                               GeoPoint(90, 0), GeoPoint(-33.8688, 151.2093)])
def test_identical_points_are_zero_apart(p):
    assert abs(geo_distance(p, p)) <= 1e-6


# ---------------------------------------------------------------------------
# 7. Parser robustness
# ---------------------------------------------------------------------------

def _check_parse(data: bytes) -> None:
    result = parse_policy_document(data)
    if result.policy_set is None:
        assert result.errors
    for d in result.diagnostics:
        assert 0 <= d.span.start <= d.span.end <= len(data)
        assert d.span.line >= 1 and d.span.column >= 1


@pytest.mark.criterion(7)
def test_fuzz_100k_random_inputs_never_crash(fixtures_dir):
    rng = random.Random(20190614)
    corpus = [p.read_bytes() for p in sorted((fixtures_dir / "policies").glob("*.apl"))]
    alphabet = b"{}()<>=!:.,\"\\/ \n\tabcdefnoprstuy019-_\xc3\xa9\xff"
    count = 0
    for k in range(100_000):
        mode = k % 4
        if mode == 0:
            data = bytes(rng.getrandbits(8) for _ in range(rng.randint(0, 64)))
        elif mode == 1:
            data = bytes(rng.choice(alphabet) for _ in range(rng.randint(0, 64)))
        elif mode == 2:
            # line-level edits keep tokens intact and reach the semantic checks
            lines = rng.choice(corpus).splitlines(keepends=True)
            for _ in range(rng.randint(1, 4)):
                i, j = rng.randrange(len(lines)), rng.randrange(len(lines))
                op = rng.randrange(3)
                if op == 0:
                    lines.insert(j, lines[i])
                elif op == 1 and len(lines) > 1:
                    del lines[i]
                else:
                    lines[i], lines[j] = lines[j], lines[i]
            data = b"".join(lines)
        else:
            data = bytearray(rng.choice(corpus))
            for _ in range(rng.randint(1, 4)):
                pos = rng.randrange(len(data) + 1)
                op = rng.randrange(3)
                if op == 0 and pos < len(data):
                    del data[pos:pos + rng.randint(1, 8)]
                elif op == 1:
                    data[pos:pos] = bytes([rng.choice(alphabet)])
                elif pos < len(data):
                    data[pos] = rng.getrandbits(8)
            data = bytes(data)
        _check_parse(data)
        count += 1
    assert count >= 100_000


@pytest.mark.criterion(7)
def test_fixture_policies_round_trip(fixtures_dir, stack):
    for path in sorted((fixtures_dir / "policies").glob("*.apl")):
        first = parse_policy_document(path.read_bytes())
        assert first.ok and not first.diagnostics, path
        text = serialize_policy(first.policy_set)
        second = parse_policy_document(text)
        assert second.ok and second.policy_set == first.policy_set, path
        assert serialize_policy(second.policy_set) == text
    combined = serialize_policy(stack.policies)
    assert parse_policy_document(combined).policy_set == stack.policies


# ---------------------------------------------------------------------------
# 8. Multi-resource cardinality
# ---------------------------------------------------------------------------

@pytest.mark.criterion(8)
@settings(max_examples=150, deadline=None, suppress_health_check=list(HealthCheck))
@given(data=st.data())
def test_one_decision_per_class_instance(stack, data):
    fit = stack.domain.prefixes["fit"]
    classes = sorted(c for c in merge(stack.domain, stack.mapping).classes if c.startswith(fit))
    extra = data.draw(st.lists(st.tuples(st.sampled_from(classes), st.integers(0, 30)), max_size=25))
    assertions = {ClassAssertion(c, f"{fit}synthetic-{n}") for c, n in extra}
    domain = stack.domain.with_axioms(assertions)
    engine = Engine(stack.policies, domain, stack.mapping)
    target = data.draw(st.sampled_from(classes))
    ctx = RequestContext({
        Category.SUBJECT: [RequestAttribute(CLASS_ID, "iri", engine.prefixes["org"] + "HealthCentre")],
        Category.RESOURCE: [RequestAttribute(CLASS_ID, "iri", target)],
    })
    decisions = engine.decide(ctx)
    instances = engine.inferred.instances_of(target)
    ref = reference.load_stack()
    ref.types |= {(a.individual, a.cls) for a in assertions}
    oracle = reference.instances_of(reference.infer_types(ref), target)
    if instances:
        assert len(decisions) == len(instances) == len(oracle)
        assert [e.resource for e in decisions] == oracle
    else:
        assert oracle == []
        assert decisions.pairs() == [(AS_REQUESTED, DecisionValue.NOT_APPLICABLE)]


# ---------------------------------------------------------------------------
# 9. Service / CLI parity and atomic reload
# ---------------------------------------------------------------------------

DENY_ALL = "policy deny-all {\n  rule everything {\n    deny\n  }\n}\n"


def _stack_files(fixtures_dir):
    o = fixtures_dir / "ontologies"
    return {
        "policies": [str(fixtures_dir / "policies" / n) for n in ("legal.apl", "preferences.apl")],
        "ontologies": [str(o / f"{n}.json") for n in ("aco", "fitness", "privacy", "sally")],
        "mapping": [str(o / "mapping.json")],
    }


@pytest.fixture()
def server(fixtures_dir):
    files = _stack_files(fixtures_dir)
    config = EngineConfig("127.0.0.1:0", tuple(files["ontologies"]), tuple(files["mapping"]),
                          tuple(files["policies"]))
    srv = make_server(config)
    thread = threading.Thread(target=srv.serve_forever, daemon=True)
    thread.start()
    yield srv
    srv.shutdown()
    srv.server_close()


def _http(method: str, url: str, body: bytes | None = None) -> tuple[int, bytes]:
    req = urllib.request.Request(url, data=body, method=method,
                                 headers={"Content-Type": "application/json"})
    try:
        with urllib.request.urlopen(req, timeout=30) as resp:
            return resp.status, resp.read()
    except HTTPError as exc:
        return exc.code, exc.read()


def _cli(fixtures_dir, request_path, *extra) -> subprocess.CompletedProcess:
    files = _stack_files(fixtures_dir)
    return subprocess.run(
        [sys.executable, "-m", "sxacml", "decide", "--policies", *files["policies"],
         "--ontologies", *files["ontologies"], "--mapping", *files["mapping"],
         "--request", str(request_path), *extra],
        capture_output=True, timeout=60)


@pytest.mark.criterion(9)
@pytest.mark.parametrize("scenario", ["uc1", "uc2"])
def test_service_and_cli_are_bit_identical(server, fixtures_dir, scenario):
    request = fixtures_dir / "scenarios" / scenario / "request.json"
    cli = _cli(fixtures_dir, request)
    assert cli.returncode == 0, cli.stderr
    status, body = _http("POST", server.url + "/v1/decision", request.read_bytes())
    assert status == 200
    assert body == cli.stdout
    assert body == (fixtures_dir / "scenarios" / scenario / "expected.json").read_bytes()


@pytest.mark.criterion(9)
def test_concurrent_decisions_during_reloads_see_old_or_new_state(server, fixtures_dir, stack):
    request = (fixtures_dir / "scenarios" / "uc2" / "request.json").read_bytes()
    old = (fixtures_dir / "scenarios" / "uc2" / "expected.json").read_bytes()
    ref = reference.load_stack()
    locations = reference.instances_of(reference.infer_types(ref), ref.prefixes["fit"] + "Location")
    new = reference.dumps({"decisions": [
        {"resource": reference.compact(r, ref.prefixes), "decision": "Deny"} for r in locations]}).encode()
    assert old != new
    old_docs = [p.read_text() for p in sorted((fixtures_dir / "policies").glob("*.apl"))]
    old_docs.sort(key=lambda t: "police" not in t)
    payloads = [json.dumps({"documents": [DENY_ALL]}).encode(),
                json.dumps({"documents": old_docs}).encode()]
    stop = threading.Event()
    bodies = []

    def fire():
        while not stop.is_set():
            bodies.append(_http("POST", server.url + "/v1/decision", request))

    with ThreadPoolExecutor(max_workers=8) as pool:
        futures = [pool.submit(fire) for _ in range(8)]
        for k in range(40):
            status, _ = _http("PUT", server.url + "/v1/policies", payloads[k % 2])
            assert status == 204
            time.sleep(0.005)
        stop.set()
        for f in futures:
            f.result()
    assert len(bodies) >= 40
    seen = {body for status, body in bodies}
    assert all(status == 200 for status, _ in bodies)
    assert seen <= {old, new}
    assert len(seen) == 2
    status, body = _http("POST", server.url + "/v1/decision", request)
    assert body == old


@pytest.mark.criterion(9)
def test_rejected_reload_keeps_previous_state(server, fixtures_dir):
    request = (fixtures_dir / "scenarios" / "uc1" / "request.json").read_bytes()
    _, before = _http("POST", server.url + "/v1/decision", request)
    bad = json.dumps({"documents": ["policy broken {\n  rule r { permit \n"]}).encode()
    status, body = _http("PUT", server.url + "/v1/policies", bad)
    assert status == 422
    assert json.loads(body)["diagnostics"]
    bad_ontology = json.dumps({"documents": [{"classes": [42]}]}).encode()
    status, _ = _http("PUT", server.url + "/v1/ontologies", bad_ontology)
    assert status == 422
    _, after = _http("POST", server.url + "/v1/decision", request)
    assert after == before


@pytest.mark.criterion(9)
def test_reload_state_swap_is_never_partial(stack):
    # Same invariant without HTTP: the engine object is replaced whole.
    from sxacml.service import ServiceState

    state = ServiceState(stack.engine())
    request = stack.scenarios["uc2"].request
    old = state.engine.decision_text(state.engine.decide_document(request))
    deny_all = load_policy_texts([("deny", DENY_ALL)])
    new_engine = Engine(deny_all, stack.domain, stack.mapping)
    new = new_engine.decision_text(new_engine.decide_document(request))
    originals = stack.policies
    results = []

    def reader():
        for _ in range(50):
            e = state.engine
            results.append(e.decision_text(e.decide_document(request)))

    threads = [threading.Thread(target=reader) for _ in range(4)]
    for t in threads:
        t.start()
    for k in range(20):
        state.replace_policies(deny_all if k % 2 == 0 else originals)
    for t in threads:
        t.join()
    assert set(results) <= {old, new}
