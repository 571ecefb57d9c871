"""Forward-chaining reasoner over a :class:`~sxacml.ontology.KnowledgeBase`.

Rules, applied to a global fixpoint:

* R1 subclass transitivity (reflexive-transitive closure of named edges)
* R2 ``C(i)`` and ``C ⊑ D`` gives ``D(i)``
* R3 property domain/range typing
* R4 defined-class membership: an individual satisfying the definition of an
  equivalent class (or the complex side of a SubClassOf) joins the named class

Expression satisfaction is closed-world: a missing assertion makes the
condition false. Only the membership direction of EquivalentClass is used.
"""

from __future__ import annotations

from collections import deque
from types import MappingProxyType
from typing import Mapping

from .ontology import (
    ClassAssertion,
    ClassExpression,
    DataRestriction,
    HasValue,
    IntersectionOf,
    KnowledgeBase,
    Literal,
    Named,
    ORDERED_KINDS,
    PropertyValue,
    SomeValuesFrom,
    compare_literals,
)


class ReasonerError(Exception):
    pass


class ReasonerLimitError(ReasonerError):
    """The fixpoint loop exceeded its iteration bound (a bug, never valid input)."""


def subclass_closure(kb: KnowledgeBase) -> dict[str, frozenset[str]]:
    """Map every class to its reflexive-transitive set of named superclasses."""
    closure: dict[str, frozenset[str]] = {}
    for cls in kb.classes:
        seen = {cls}
        queue = deque([cls])
        while queue:
            for sup in kb.direct_superclasses(queue.popleft()):
                if sup not in seen:
                    seen.add(sup)
                    queue.append(sup)
        closure[cls] = frozenset(seen)
    return closure


class InferredKB:
    """Result of :func:`classify`: the base KB plus derived class assertions.

    Derived facts are kept apart from the base axioms. Instances are
    immutable and safe to query from several threads.
    """

    def __init__(self, base: KnowledgeBase, types: Mapping[str, frozenset[str]],
                 closure: Mapping[str, frozenset[str]], iterations: int):
        self.base = base
        self.subclass_closure = MappingProxyType(dict(closure))
        self.iterations = iterations
        self._types = MappingProxyType(dict(types))
        members: dict[str, set[str]] = {}
        for ind, classes in types.items():
            for cls in classes:
                members.setdefault(cls, set()).add(ind)
        self._members = {c: frozenset(s) for c, s in members.items()}
        self.derived_class_assertions = frozenset(
            ClassAssertion(cls, ind)
            for ind, classes in types.items()
            for cls in classes
            if ind not in base.individuals_of(cls)
        )

    def __repr__(self) -> str:
        return (f"InferredKB({len(self.base)} base axioms, "
                f"{len(self.derived_class_assertions)} derived)")

    def instances_of(self, cls: str) -> frozenset[str]:
        return self._members.get(cls, frozenset())

    def types_of(self, individual: str) -> frozenset[str]:
        return self._types.get(individual, frozenset())

    def property_values(self, individual: str, prop: str) -> tuple[PropertyValue, ...]:
        if not self.base.is_declared_property(prop):
            raise ReasonerError(f"undeclared property {prop}")
        return self.base.assertions_of(individual).get(prop, ())

    def satisfies(self, individual: str, expr: ClassExpression) -> bool:
        return _satisfies(self.base, self._types, individual, expr)

    def materialize(self) -> KnowledgeBase:
        """The base KB with every derived assertion added as a base axiom."""
        return self.base.with_axioms(self.derived_class_assertions)


def _satisfies(kb: KnowledgeBase, types: Mapping[str, frozenset[str]] | Mapping[str, set[str]],
               individual: str, expr: ClassExpression) -> bool:
    if isinstance(expr, Named):
        return expr.iri in types.get(individual, ())
    if isinstance(expr, IntersectionOf):
        return all(_satisfies(kb, types, individual, e) for e in expr.operands)
    values = kb.assertions_of(individual).get(expr.prop, ())
    if isinstance(expr, SomeValuesFrom):
        return any(isinstance(o, str) and _satisfies(kb, types, o, expr.filler) for o in values)
    if isinstance(expr, HasValue):
        return expr.value in values
    if isinstance(expr, DataRestriction):
        if expr.op not in ("=", "!=") and expr.bound.kind not in ORDERED_KINDS:
            raise ReasonerError(f"comparator {expr.op!r} on unordered kind {expr.bound.kind.value}")
        for v in values:
            if not isinstance(v, Literal):
                continue
            try:
                if compare_literals(expr.op, v, expr.bound):
                    return True
            except TypeError:
                continue
        return False
    raise ReasonerError(f"not a class expression: {expr!r}")


def classify(kb: KnowledgeBase) -> InferredKB:
    """Compute the deductive closure of ``kb`` under rules R1-R4."""
    closure = subclass_closure(kb)

    types: dict[str, set[str]] = {ind: set() for ind in kb.individuals}

    def add(ind: str, cls: str) -> bool:
        current = types[ind]
        if cls in current:
            return False
        current.update(closure.get(cls, (cls,)))
        return True

    # R2 over asserted types
    for cls in kb.asserted_classes():
        for ind in kb.individuals_of(cls):
            add(ind, cls)

    # R3 (property assertions are never derived, so one pass suffices)
    for ind in kb.individuals:
        for prop, values in kb.assertions_of(ind).items():
            for decl in kb.object_properties.get(prop, ()):
                if decl.domain:
                    add(ind, decl.domain)
                if decl.range:
                    for o in values:
                        if isinstance(o, str):
                            add(o, decl.range)
            for decl in kb.data_properties.get(prop, ()):
                if decl.domain:
                    add(ind, decl.domain)

    # R4 to fixpoint
    definitions = kb.definitions
    limit = max(1, len(kb.axioms) * max(1, len(kb.classes)))
    iterations = 0
    changed = bool(definitions)
    while changed:
        iterations += 1
        if iterations > limit:
            raise ReasonerLimitError(f"no fixpoint after {limit} iterations")
        changed = False
        for name, expr in definitions:
            for ind in kb.individuals:
                if name not in types[ind] and _satisfies(kb, types, ind, expr):
                    changed |= add(ind, name)

    return InferredKB(kb, {i: frozenset(s) for i, s in types.items()}, closure, iterations)

