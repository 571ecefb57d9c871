"""Policy decision point: context handling, attribute resolution, multi-resource expansion.

A request whose resource category names a class (``aco:classId``) instead
of a concrete ``aco:resourceId`` is expanded to every known instance of that
class, and the policy tree is evaluated once per instance. Attribute values
come from the request context first and from the semantic PIP otherwise.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

from .dsl import PolicySyntaxError, combine_documents, load_policy
from .functions import REGISTRY, FunctionRegistry, FunctionTypeError
from .ontology import (
    EMPTY_KB,
    KnowledgeBase,
    OntologyError,
    load_document,
    merge,
    merge_all,
)
from .pip import RequestOntology, build_request_ontology, find_attribute
from .policy import (
    NOT_APPLICABLE,
    AttributeDesignator,
    AttributeResolutionError,
    Category,
    Decision,
    DecisionValue,
    PolicySet,
    TraceEntry,
    check_policy_tree,
    evaluate_policy_tree,
    indeterminate,
)
from .reasoner import InferredKB, classify
from .request import RequestContext, parse_request
from .vocab import CLASS_ID, REQUEST_CLASS_ID

logger = logging.getLogger(__name__)

AS_REQUESTED = "<as-requested>"

Observer = Callable[[AttributeDesignator], None]


class LoadError(Exception):
    """A policy or ontology file could not be read or parsed."""

    def __init__(self, message: str, diagnostics: Sequence = ()):
        super().__init__(message)
        self.diagnostics = tuple(diagnostics)


@dataclass(frozen=True)
class DecisionEntry:
    resource: str
    decision: Decision
    trace: tuple = field(default=(), compare=False, repr=False)


@dataclass(frozen=True)
class DecisionSet:
    entries: tuple

    def __iter__(self):
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def pairs(self) -> list[tuple[str, DecisionValue]]:
        return [(e.resource, e.decision.value) for e in self.entries]

    @property
    def has_indeterminate(self) -> bool:
        return any(e.decision.value is DecisionValue.INDETERMINATE for e in self.entries)

    def to_json(self, prefixes: Mapping[str, str] | None = None) -> dict:
        kb = KnowledgeBase(prefixes=prefixes or {})
        out = []
        for e in self.entries:
            item = {"resource": e.resource if e.resource == AS_REQUESTED else kb.compact(e.resource),
                    "decision": e.decision.value.value}
            if e.decision.status:
                item["status"] = e.decision.status
            out.append(item)
        return {"decisions": out}


def dump_decisions(doc: dict) -> str:
    """Canonical text form of a decision document."""
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _from_context(ctx: RequestContext, designator: AttributeDesignator) -> tuple | None:
    found = [a for a in ctx.get(designator.category) if a.attribute_id == designator.attribute_id]
    if not found:
        return None
    out = []
    for a in found:
        if a.kind == designator.kind:
            out.append(a.value)
        elif a.kind == "integer" and designator.kind == "double":
            out.append(float(a.value))
        else:
            raise AttributeResolutionError(
                f"request gives {designator.attribute_id} as {a.kind}, policy expects {designator.kind}")
    return tuple(out)


class Engine:
    """Immutable decision engine: one policy tree plus one ontology stack."""

    def __init__(self, policies: PolicySet, domain: KnowledgeBase = EMPTY_KB,
                 mapping: KnowledgeBase = EMPTY_KB, registry: FunctionRegistry = REGISTRY):
        check_policy_tree(policies, registry)
        self.policies = policies
        self.registry = registry
        self.domain = domain
        self.mapping = mapping
        self.knowledge = merge(domain, mapping)
        self.inferred: InferredKB = classify(self.knowledge)

    @classmethod
    def from_files(cls, policy_paths: Sequence[str | Path], ontology_paths: Sequence[str | Path],
                   mapping_paths: Sequence[str | Path] = ()) -> Engine:
        return cls(load_policy_files(policy_paths), load_ontology_files(ontology_paths),
                   load_ontology_files(mapping_paths))

    @property
    def prefixes(self) -> Mapping[str, str]:
        return self.knowledge.prefixes

    def parse_request(self, doc) -> RequestContext:
        return parse_request(doc, self.knowledge.prefixes)

    def evaluate(self, ctx: RequestContext, *, explain: bool = False,
                 observer: Observer | None = None) -> tuple[Decision, tuple]:
        """One pass over the policy tree for one (already expanded) context."""
        ontology: list[RequestOntology] = []

        def request_ontology() -> RequestOntology:
            if not ontology:
                ontology.append(build_request_ontology(ctx, self.knowledge))
            return ontology[0]

        def resolver(designator: AttributeDesignator) -> tuple:
            if designator.attribute_id not in (CLASS_ID, REQUEST_CLASS_ID):
                bag = _from_context(ctx, designator)
                if bag is not None:
                    return bag
            if observer is not None:
                observer(designator)
            return find_attribute(request_ontology(), designator.category,
                                  designator.attribute_id, designator.kind)

        trace: list[TraceEntry] | None = [] if explain else None
        decision = evaluate_policy_tree(self.policies, resolver, self.registry, trace=trace)
        return decision, tuple(trace or ())

    def decide(self, ctx: RequestContext, *, explain: bool = False,
               observer: Observer | None = None) -> DecisionSet:
        problems = ctx.problems()
        if problems:
            return DecisionSet((DecisionEntry(AS_REQUESTED, indeterminate("; ".join(problems))),))
        resource_ids = ctx.resource_ids()
        class_ids = ctx.class_ids(Category.RESOURCE)
        if class_ids and not resource_ids:
            instances = sorted(self.inferred.instances_of(class_ids[0]))
            if not instances:
                return DecisionSet((DecisionEntry(AS_REQUESTED, NOT_APPLICABLE),))
            entries = []
            for individual in instances:
                decision, trace = self.evaluate(ctx.with_resource(individual), explain=explain,
                                                observer=observer)
                entries.append(DecisionEntry(individual, decision, trace))
            return DecisionSet(tuple(entries))
        decision, trace = self.evaluate(ctx, explain=explain, observer=observer)
        resource = resource_ids[0] if resource_ids else AS_REQUESTED
        return DecisionSet((DecisionEntry(resource, decision, trace),))

    def decide_document(self, doc, *, explain: bool = False) -> DecisionSet:
        """Parse and decide; raises :class:`RequestFormatError` for unreadable requests."""
        return self.decide(self.parse_request(doc), explain=explain)

    def decision_text(self, decisions: DecisionSet) -> str:
        return dump_decisions(decisions.to_json(self.prefixes))


def decide(ctx: RequestContext, policies: PolicySet, domain: KnowledgeBase,
           mapping: KnowledgeBase = EMPTY_KB, **kwargs) -> DecisionSet:
    return Engine(policies, domain, mapping).decide(ctx, **kwargs)


def format_trace(decisions: DecisionSet, prefixes: Mapping[str, str] | None = None) -> list[str]:
    kb = KnowledgeBase(prefixes=prefixes or {})
    lines = []
    for e in decisions:
        name = e.resource if e.resource == AS_REQUESTED else kb.compact(e.resource)
        for t in e.trace:
            lines.append(f"{name}: {t}")
    return lines


# ---------------------------------------------------------------------------
# File loading
# ---------------------------------------------------------------------------

def _read(path: str | Path) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise LoadError(f"{path}: {exc.strerror or exc}") from None


def load_policy_texts(texts: Iterable[tuple[str, bytes | str]]) -> PolicySet:
    roots = []
    for name, text in texts:
        try:
            roots.append(load_policy(text, source=name))
        except PolicySyntaxError as exc:
            raise LoadError(str(exc), exc.diagnostics) from None
    if not roots:
        return PolicySet("root")
    try:
        root = combine_documents(roots)
        check_policy_tree(root)
    except (ValueError, FunctionTypeError) as exc:
        raise LoadError(str(exc)) from None
    return root


def load_policy_files(paths: Sequence[str | Path]) -> PolicySet:
    return load_policy_texts((str(p), _read(p)) for p in paths)


def load_ontology_texts(texts: Iterable[tuple[str, bytes | str]]) -> KnowledgeBase:
    kbs = []
    for name, text in texts:
        try:
            kbs.append(load_document(text))
        except OntologyError as exc:
            raise LoadError(f"{name}: {exc}") from None
    try:
        return merge_all(kbs)
    except OntologyError as exc:
        raise LoadError(str(exc)) from None


def load_ontology_files(paths: Sequence[str | Path]) -> KnowledgeBase:
    return load_ontology_texts((str(p), _read(p)) for p in paths)

