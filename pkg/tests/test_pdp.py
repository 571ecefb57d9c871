from __future__ import annotations

import json

import pytest

from sxacml.dsl import load_policy
from sxacml.ontology import merge
from sxacml.pdp import (
    AS_REQUESTED,
    DecisionSet,
    Engine,
    LoadError,
    decide,
    dump_decisions,
    format_trace,
    load_ontology_texts,
    load_policy_texts,
)
from sxacml.policy import Category, DecisionValue, PolicySet
from sxacml.request import RequestAttribute, RequestContext, RequestFormatError
from sxacml.vocab import CLASS_ID, REQUEST_CLASS_ID, RESOURCE_ID

P, D, N, I = (DecisionValue.PERMIT, DecisionValue.DENY,
              DecisionValue.NOT_APPLICABLE, DecisionValue.INDETERMINATE)


def iri(value):
    return RequestAttribute(CLASS_ID, "iri", value)


def test_uc1_pairs(stack, engine):
    fit = engine.prefixes["fit"]
    got = dict(engine.decide_document(stack.scenarios["uc1"].request).pairs())
    assert got[fit + "distance-2019-05"] is P
    assert got[fit + "distance-2019-06"] is P
    assert sum(v is N for v in got.values()) == 4


def test_concrete_resource_gives_single_entry(engine):
    fit, aco, org = (engine.prefixes[k] for k in ("fit", "aco", "org"))
    ctx = RequestContext({
        Category.SUBJECT: [iri(org + "HealthCentre")],
        Category.ACTION: [iri(aco + "Read")],
        Category.RESOURCE: [RequestAttribute(RESOURCE_ID, "iri", fit + "distance-2019-06")],
    })
    assert engine.decide(ctx).pairs() == [(fit + "distance-2019-06", P)]


def test_request_without_resource_is_answered_as_requested(engine):
    ctx = RequestContext({Category.SUBJECT: [iri(engine.prefixes["org"] + "HealthCentre")]})
    assert engine.decide(ctx).pairs() == [(AS_REQUESTED, N)]


def test_class_without_instances_is_not_applicable(engine):
    ctx = RequestContext({Category.RESOURCE: [iri("urn:nothing:Here")]})
    ds = engine.decide(ctx)
    assert ds.pairs() == [(AS_REQUESTED, N)]
    assert engine.decision_text(ds) == dump_decisions(
        {"decisions": [{"resource": AS_REQUESTED, "decision": "NotApplicable"}]})


def test_semantic_problems_are_indeterminate(engine):
    ctx = RequestContext({Category.RESOURCE: [iri("urn:a"), iri("urn:b")]})
    ds = engine.decide(ctx)
    assert ds.pairs() == [(AS_REQUESTED, I)]
    assert ds.has_indeterminate
    assert "more than one classId" in ds.to_json()["decisions"][0]["status"]


def test_unreadable_request_raises(engine):
    with pytest.raises(RequestFormatError):
        engine.decide_document(b"{")


def test_police_request_without_event_is_indeterminate(stack, engine):
    doc = json.loads(stack.scenarios["uc2"].request)
    doc["environment"] = []
    ds = engine.decide_document(json.dumps(doc))
    assert {v for _, v in ds.pairs()} == {I}
    assert len(ds) == 5
    assert all("eventLocation" in e.decision.status or "eventTime" in e.decision.status for e in ds)


def test_context_values_take_precedence_except_reserved(engine):
    fit = engine.prefixes["fit"]
    policy = load_policy(f"""
prefix fit = <{fit}>
prefix aco = <{engine.prefixes['aco']}>
policy p {{
  apply permitOverrides
  rule by-context {{ permit condition resource.fit:steps:integer == 1 }}
  rule by-class {{ deny target clause resource.aco:classId:iri == fit:Nothing }}
}}""")
    e = Engine(policy, engine.domain, engine.mapping)
    ctx = RequestContext({Category.RESOURCE: [
        RequestAttribute(RESOURCE_ID, "iri", fit + "walk-2019-06-10-steps"),
        RequestAttribute(fit + "steps", "integer", 1),
    ]})
    assert e.decide(ctx).pairs()[0][1] is P
    # a classId in the context is not consulted for the bound resource
    seen = []
    e.decide(ctx, observer=lambda d: seen.append(d.attribute_id))
    assert seen == [CLASS_ID]


def test_pip_is_not_consulted_when_context_answers(stack, engine):
    seen = []
    engine.decide_document(stack.scenarios["uc1"].request, explain=False)
    engine.decide(engine.parse_request(stack.scenarios["uc2"].request),
                  observer=lambda d: seen.append(d.attribute_id))
    aco = engine.prefixes["aco"]
    assert aco + "eventLocation" not in seen
    assert CLASS_ID in seen and REQUEST_CLASS_ID not in seen


def test_explain_trace(stack, engine):
    ds = engine.decide_document(stack.scenarios["uc2"].request, explain=True)
    lines = format_trace(ds, engine.prefixes)
    assert "fit:location-1: rule root/police-location-access/within-warrant: Permit" in lines
    assert "fit:location-3: rule root/police-location-access/outside-warrant: Deny" in lines
    assert all(e.trace for e in ds)
    quiet = engine.decide_document(stack.scenarios["uc2"].request)
    assert quiet == ds and not any(e.trace for e in quiet)


def test_decisions_are_deterministic(stack, engine):
    texts = {engine.decision_text(engine.decide_document(stack.scenarios["uc1"].request))
             for _ in range(3)}
    assert len(texts) == 1


def test_module_level_decide(stack):
    ctx = RequestContext({Category.RESOURCE: [iri("urn:none")]})
    ds = decide(ctx, stack.policies, stack.domain, stack.mapping)
    assert isinstance(ds, DecisionSet) and ds.pairs() == [(AS_REQUESTED, N)]


def test_empty_policy_set_is_not_applicable(stack):
    e = Engine(PolicySet("root"), stack.domain, stack.mapping)
    ds = e.decide_document(stack.scenarios["uc1"].request)
    assert {v for _, v in ds.pairs()} == {N}


def test_load_helpers_report_errors():
    assert load_policy_texts([]) == PolicySet("root")
    with pytest.raises(LoadError) as info:
        load_policy_texts([("a.apl", "policy")])
    assert info.value.diagnostics
    with pytest.raises(LoadError):
        load_policy_texts([("a.apl", "policy p { }"), ("b.apl", "policy p { }")])
    with pytest.raises(LoadError):
        load_ontology_texts([("x.json", "{")])
    with pytest.raises(LoadError):
        load_ontology_texts([("a.json", '{"prefixes": {"a": "urn:x:"}}'),
                             ("b.json", '{"prefixes": {"a": "urn:y:"}}')])
    with pytest.raises(LoadError):
        Engine.from_files(["/nonexistent.apl"], [])


def test_scenario_overlay_changes_request_classes(stack):
    base = stack.engine()
    overlaid = stack.engine("legal_override")
    assert merge(stack.knowledge, stack.scenarios["legal_override"].ontology) == overlaid.knowledge
    assert len(overlaid.knowledge) > len(base.knowledge)


def test_concrete_resource_without_policies(engine):
    fit = engine.prefixes["fit"]
    empty = Engine(PolicySet("root"), engine.domain, engine.mapping)
    ctx = RequestContext({Category.RESOURCE: [RequestAttribute(RESOURCE_ID, "iri", fit + "location-1")]})
    assert empty.decide(ctx).pairs() == [(fit + "location-1", N)]


def test_required_attribute_missing_everywhere_is_indeterminate():
    policies = load_policy('policy p { rule r { permit condition '
                           'fn:one-and-only(environment.<urn:a:flag>:string!) == "on" } }')
    (entry,) = Engine(policies).decide(RequestContext({}))
    assert entry.resource == AS_REQUESTED and entry.decision.value is I
