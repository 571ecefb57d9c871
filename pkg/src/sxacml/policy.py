"""XACML-style policy model: policy sets, policies, rules, targets, conditions.

Evaluation is pure given an attribute resolver, a callable mapping an
:class:`AttributeDesignator` to a bag (tuple) of values. The resolver raises
:class:`AttributeResolutionError` when it cannot answer.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Iterable, Iterator, Optional, Union

from .functions import (
    BOOLEAN,
    REGISTRY,
    EvaluationError,
    FunctionRefType,
    FunctionRegistry,
    FunctionTypeError,
    ValueType,
    check_kind,
)
from .ontology import coerce_value, LiteralKind

logger = logging.getLogger(__name__)


class Category(str, Enum):
    SUBJECT = "subject"
    RESOURCE = "resource"
    ACTION = "action"
    ENVIRONMENT = "environment"


class Effect(str, Enum):
    PERMIT = "Permit"
    DENY = "Deny"


class CombiningAlgorithm(str, Enum):
    DENY_OVERRIDES = "denyOverrides"
    PERMIT_OVERRIDES = "permitOverrides"
    FIRST_APPLICABLE = "firstApplicable"


class DecisionValue(str, Enum):
    PERMIT = "Permit"
    DENY = "Deny"
    NOT_APPLICABLE = "NotApplicable"
    INDETERMINATE = "Indeterminate"


@dataclass(frozen=True)
class Decision:
    value: DecisionValue
    status: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "value", DecisionValue(self.value))
        if self.value is DecisionValue.INDETERMINATE and not self.status:
            raise ValueError("an Indeterminate decision needs a status message")

    def __str__(self) -> str:
        return self.value.value


PERMIT = Decision(DecisionValue.PERMIT)
DENY = Decision(DecisionValue.DENY)
NOT_APPLICABLE = Decision(DecisionValue.NOT_APPLICABLE)


def indeterminate(status: str) -> Decision:
    return Decision(DecisionValue.INDETERMINATE, status)


class AttributeResolutionError(Exception):
    pass


class MissingAttributeError(EvaluationError):
    pass


# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------

VALUE_KINDS = ("string", "iri", "integer", "double", "boolean", "dateTime", "geoPoint")


@dataclass(frozen=True)
class AttributeDesignator:
    category: Category
    attribute_id: str
    kind: str
    must_be_present: bool = False

    def __post_init__(self):
        object.__setattr__(self, "category", Category(self.category))
        if not self.attribute_id:
            raise ValueError("attribute id must be non-empty")
        if self.kind not in VALUE_KINDS:
            raise ValueError(f"unknown attribute kind {self.kind!r}")


@dataclass(frozen=True)
class Constant:
    kind: str
    value: Any

    def __post_init__(self):
        if self.kind == "iri":
            if not isinstance(self.value, str) or not self.value:
                raise ValueError(f"invalid IRI constant {self.value!r}")
        elif self.kind in VALUE_KINDS:
            object.__setattr__(self, "value", coerce_value(LiteralKind(self.kind), self.value))
        else:
            raise ValueError(f"unknown constant kind {self.kind!r}")


@dataclass(frozen=True)
class FunctionRef:
    function_id: str


@dataclass(frozen=True)
class Apply:
    function_id: str
    args: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))


Expr = Union[Apply, AttributeDesignator, Constant, FunctionRef]


@dataclass(frozen=True)
class Match:
    """Target clause: some value of ``designator`` satisfies ``function_id(value, constant)``."""

    designator: AttributeDesignator
    function_id: str
    constant: Constant


@dataclass(frozen=True)
class Rule:
    id: str
    effect: Effect
    target: tuple = ()
    condition: Optional[Expr] = None

    def __post_init__(self):
        object.__setattr__(self, "effect", Effect(self.effect))
        object.__setattr__(self, "target", tuple(self.target))


def _check_unique(kind: str, owner: str, ids: Iterable[str]) -> None:
    seen = set()
    for i in ids:
        if i in seen:
            raise ValueError(f"duplicate {kind} id {i!r} in {owner!r}")
        seen.add(i)


@dataclass(frozen=True)
class Policy:
    id: str
    rules: tuple = ()
    combining: CombiningAlgorithm = CombiningAlgorithm.FIRST_APPLICABLE
    target: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(self.rules))
        object.__setattr__(self, "target", tuple(self.target))
        object.__setattr__(self, "combining", CombiningAlgorithm(self.combining))
        _check_unique("rule", self.id, (r.id for r in self.rules))


@dataclass(frozen=True)
class PolicySet:
    id: str
    children: tuple = ()
    combining: CombiningAlgorithm = CombiningAlgorithm.FIRST_APPLICABLE
    target: tuple = ()
    prefixes: tuple = field(default=())
    """(name, namespace) pairs declared by the source document; only used for printing."""

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        object.__setattr__(self, "target", tuple(self.target))
        object.__setattr__(self, "prefixes", tuple(self.prefixes))
        object.__setattr__(self, "combining", CombiningAlgorithm(self.combining))
        _check_unique("policy", self.id, (c.id for c in self.children))


def iter_rules(node: PolicySet | Policy) -> Iterator[Rule]:
    if isinstance(node, Policy):
        yield from node.rules
    else:
        for child in node.children:
            yield from iter_rules(child)


# ---------------------------------------------------------------------------
# Type checking
# ---------------------------------------------------------------------------

def typecheck(expr: Expr, registry: FunctionRegistry = REGISTRY) -> ValueType | FunctionRefType:
    """Type of ``expr``; implicit bag narrowing is not allowed in a built model."""
    if isinstance(expr, Constant):
        return ValueType(expr.kind)
    if isinstance(expr, AttributeDesignator):
        return ValueType(expr.kind, bag=True)
    if isinstance(expr, FunctionRef):
        registry.get(expr.function_id)
        return FunctionRefType(expr.function_id)
    checked = registry.check(expr.function_id, [typecheck(a, registry) for a in expr.args])
    if checked.coerced:
        raise FunctionTypeError(f"{expr.function_id}: bag passed where a single value is expected")
    return checked.result


def check_policy_tree(node: PolicySet | Policy, registry: FunctionRegistry = REGISTRY) -> None:
    """Raise :class:`FunctionTypeError` if any condition or target clause is ill-typed."""
    targets = list(node.target)
    for rule in iter_rules(node):
        targets.extend(rule.target)
        if rule.condition is not None and typecheck(rule.condition, registry) != BOOLEAN:
            raise FunctionTypeError(f"condition of rule {rule.id!r} is not boolean")
    stack = [node]
    while stack:
        current = stack.pop()
        targets.extend(current.target)
        if isinstance(current, PolicySet):
            stack.extend(current.children)
    for m in targets:
        sig = registry.get(m.function_id)
        if not sig.is_predicate:
            raise FunctionTypeError(f"{m.function_id} cannot be used as a target matcher")
        registry.check(m.function_id, [ValueType(m.designator.kind), ValueType(m.constant.kind)])


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

Resolver = Callable[[AttributeDesignator], tuple]


@dataclass(frozen=True)
class TraceEntry:
    path: tuple
    node: str
    decision: Decision

    def __str__(self) -> str:
        text = f"{self.node} {'/'.join(self.path)}: {self.decision}"
        if self.decision.status:
            text += f" ({self.decision.status})"
        return text


def resolve(designator: AttributeDesignator, resolver: Resolver) -> tuple:
    try:
        bag = tuple(resolver(designator))
    except AttributeResolutionError as exc:
        if designator.must_be_present:
            raise MissingAttributeError(str(exc)) from None
        logger.debug("treating unresolvable %s as empty: %s", designator.attribute_id, exc)
        return ()
    if designator.must_be_present and not bag:
        raise MissingAttributeError(
            f"missing {designator.category.value} attribute {designator.attribute_id}")
    for value in bag:
        check_kind(designator.kind, value)
    return bag


def evaluate_expr(expr: Expr, resolver: Resolver, registry: FunctionRegistry = REGISTRY) -> Any:
    if isinstance(expr, Constant):
        return expr.value
    if isinstance(expr, AttributeDesignator):
        return resolve(expr, resolver)
    try:
        sig = registry.get(expr.function_id)
    except FunctionTypeError as exc:
        raise EvaluationError(str(exc)) from None
    if isinstance(expr, FunctionRef):
        return sig.impl
    if expr.function_id in ("fn:and", "fn:or"):
        stop = expr.function_id == "fn:or"
        for arg in expr.args:
            value = evaluate_expr(arg, resolver, registry)
            if not isinstance(value, bool):
                raise EvaluationError(f"{expr.function_id} operand is not boolean")
            if value is stop:
                return stop
        return not stop
    args = [evaluate_expr(a, resolver, registry) for a in expr.args]
    try:
        return sig.impl(*args)
    except EvaluationError:
        raise
    except (TypeError, ValueError, AttributeError, OverflowError) as exc:
        raise EvaluationError(f"{expr.function_id}: {exc}") from None


def match_target(target: Iterable[Match], resolver: Resolver,
                 registry: FunctionRegistry = REGISTRY) -> bool:
    """All clauses must match. A definite mismatch wins over an error."""
    error: EvaluationError | None = None
    for clause in target:
        try:
            bag = resolve(clause.designator, resolver)
            matcher = registry.get(clause.function_id).impl
            if not any(matcher(v, clause.constant.value) for v in bag):
                return False
        except FunctionTypeError as exc:
            error = error or EvaluationError(str(exc))
        except EvaluationError as exc:
            error = error or exc
        except (TypeError, ValueError) as exc:
            error = error or EvaluationError(f"{clause.function_id}: {exc}")
    if error is not None:
        raise error
    return True


def evaluate_rule(rule: Rule, resolver: Resolver, registry: FunctionRegistry = REGISTRY,
                  *, trace: list | None = None, path: tuple = ()) -> Decision:
    try:
        if not match_target(rule.target, resolver, registry):
            decision = NOT_APPLICABLE
        elif rule.condition is None:
            decision = Decision(DecisionValue(rule.effect.value))
        else:
            value = evaluate_expr(rule.condition, resolver, registry)
            if not isinstance(value, bool):
                raise EvaluationError(f"condition of rule {rule.id!r} is not boolean")
            decision = Decision(DecisionValue(rule.effect.value)) if value else NOT_APPLICABLE
    except EvaluationError as exc:
        decision = indeterminate(f"rule {rule.id}: {exc}")
    if trace is not None:
        trace.append(TraceEntry(path + (rule.id,), "rule", decision))
    return decision


def combine(algorithm: CombiningAlgorithm, decisions: Iterable[Decision]) -> Decision:
    """Combine child decisions. ``decisions`` is consumed lazily for firstApplicable."""
    algorithm = CombiningAlgorithm(algorithm)
    if algorithm is CombiningAlgorithm.FIRST_APPLICABLE:
        for d in decisions:
            if d.value is not DecisionValue.NOT_APPLICABLE:
                return d
        return NOT_APPLICABLE
    decisions = list(decisions)
    if algorithm is CombiningAlgorithm.DENY_OVERRIDES:
        order = (DecisionValue.DENY, DecisionValue.INDETERMINATE, DecisionValue.PERMIT)
    else:
        order = (DecisionValue.PERMIT, DecisionValue.INDETERMINATE, DecisionValue.DENY)
    for wanted in order:
        for d in decisions:
            if d.value is wanted:
                return d
    return NOT_APPLICABLE


def evaluate_policy_tree(node: PolicySet | Policy, resolver: Resolver,
                         registry: FunctionRegistry = REGISTRY, *,
                         trace: list | None = None, path: tuple = ()) -> Decision:
    here = path + (node.id,)
    kind = "policy" if isinstance(node, Policy) else "policyset"
    try:
        applicable = match_target(node.target, resolver, registry)
    except EvaluationError as exc:
        decision = indeterminate(f"{kind} {node.id} target: {exc}")
    else:
        if not applicable:
            decision = NOT_APPLICABLE
        elif isinstance(node, Policy):
            decision = combine(node.combining, (
                evaluate_rule(r, resolver, registry, trace=trace, path=here) for r in node.rules))
        else:
            decision = combine(node.combining, (
                evaluate_policy_tree(c, resolver, registry, trace=trace, path=here)
                for c in node.children))
    if trace is not None:
        trace.append(TraceEntry(here, kind, decision))
    return decision
