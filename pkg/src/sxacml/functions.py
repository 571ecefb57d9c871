"""Condition function library and its signature registry.

Values are plain Python objects; the kind travels in the signature:

=========  =====================================
kind       Python type
=========  =====================================
string     ``str``
iri        ``str`` (absolute IRI)
integer    ``int``
double     ``float``
boolean    ``bool``
dateTime   ``datetime`` (UTC, millisecond precision)
geoPoint   :class:`~sxacml.ontology.GeoPoint`
=========  =====================================

Bags are tuples. Every function id lives under the ``fn:`` prefix; the registry
is the single source of signatures, used by the policy parser at load time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from types import MappingProxyType
from typing import Any, Callable, Sequence

from .ontology import GeoPoint

EARTH_RADIUS_M = 6_371_000.0

SCALAR_KINDS = ("string", "iri", "integer", "double", "boolean", "dateTime", "geoPoint")
ORDERED = frozenset({"string", "integer", "double", "dateTime"})


class EvaluationError(Exception):
    """A function could not produce a value (kind mismatch or domain violation)."""


class FunctionTypeError(Exception):
    """A call does not type-check against the registry."""


@dataclass(frozen=True)
class ValueType:
    kind: str
    bag: bool = False

    def __str__(self) -> str:
        return f"bag<{self.kind}>" if self.bag else self.kind


@dataclass(frozen=True)
class FunctionRefType:
    function_id: str

    def __str__(self) -> str:
        return f"function {self.function_id}"


BOOLEAN = ValueType("boolean")


def check_kind(kind: str, value: Any) -> None:
    ok = {
        "string": lambda v: isinstance(v, str),
        "iri": lambda v: isinstance(v, str),
        "integer": lambda v: isinstance(v, int) and not isinstance(v, bool),
        "double": lambda v: isinstance(v, float),
        "boolean": lambda v: isinstance(v, bool),
        "dateTime": lambda v: isinstance(v, datetime) and v.tzinfo is not None,
        "geoPoint": lambda v: isinstance(v, GeoPoint),
    }.get(kind)
    if ok is None:
        raise EvaluationError(f"unknown kind {kind!r}")
    if not ok(value):
        raise EvaluationError(f"expected {kind}, got {value!r}")


# ---------------------------------------------------------------------------
# Function implementations
# ---------------------------------------------------------------------------

def geo_distance(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in meters (haversine, spherical Earth)."""
    phi1, phi2 = math.radians(a.lat), math.radians(b.lat)
    dphi = phi2 - phi1
    dlmb = math.radians(b.lon - a.lon)
    h = math.sin(dphi / 2) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlmb / 2) ** 2
    return 2 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


def geo_within_distance(a: GeoPoint, b: GeoPoint, radius: float) -> bool:
    if radius < 0:
        raise EvaluationError(f"negative radius {radius}")
    return geo_distance(a, b) <= radius


def time_within_window(t: datetime, center: datetime, half_width_ms: int) -> bool:
    """Inclusive window ``center - half_width <= t <= center + half_width``."""
    if half_width_ms < 0:
        raise EvaluationError(f"negative half-width {half_width_ms}")
    half = timedelta(milliseconds=half_width_ms)
    return center - half <= t <= center + half


def bag_contains(bag: Sequence[Any], value: Any) -> bool:
    return value in bag


def one_and_only(bag: Sequence[Any]) -> Any:
    if len(bag) != 1:
        raise EvaluationError(f"expected exactly one value, bag has {len(bag)}")
    return bag[0]


def any_of(matcher: Callable[[Any, Any], bool], bag: Sequence[Any], constant: Any) -> bool:
    """True iff ``matcher(element, constant)`` holds for some element of ``bag``."""
    return any(matcher(element, constant) for element in bag)


def _and(*args: bool) -> bool:
    return all(args)


def _or(*args: bool) -> bool:
    return any(args)


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FunctionSignature:
    """``params`` entries: a kind name, ``T``, ``bag<T>`` or ``fn`` (function reference).

    ``T`` is a single kind variable constrained to ``type_var``.
    """

    function_id: str
    params: tuple[str, ...]
    result: str
    impl: Callable[..., Any] = field(compare=False, repr=False)
    type_var: frozenset[str] = frozenset(SCALAR_KINDS)
    variadic: bool = False

    @property
    def is_predicate(self) -> bool:
        return (self.result == "boolean" and self.params == ("T", "T")
                and not self.variadic)


@dataclass(frozen=True)
class CheckedCall:
    result: ValueType
    coerced: tuple[int, ...]
    """Indices of bag arguments that must be narrowed with ``fn:one-and-only``."""


ONE_AND_ONLY = "fn:one-and-only"


class FunctionRegistry:
    def __init__(self, signatures: Sequence[FunctionSignature]):
        table = {}
        for sig in signatures:
            if sig.function_id in table:
                raise ValueError(f"duplicate function id {sig.function_id}")
            table[sig.function_id] = sig
        self._table = MappingProxyType(table)

    def __contains__(self, function_id: str) -> bool:
        return function_id in self._table

    def __iter__(self):
        return iter(sorted(self._table))

    def get(self, function_id: str) -> FunctionSignature:
        try:
            return self._table[function_id]
        except KeyError:
            raise FunctionTypeError(f"unknown function {function_id}") from None

    def check(self, function_id: str, args: Sequence[ValueType | FunctionRefType]) -> CheckedCall:
        """Type-check a call; scalar parameters accept bags via implicit one-and-only."""
        sig = self.get(function_id)
        if sig.variadic:
            if not args:
                raise FunctionTypeError(f"{function_id} needs at least one argument")
            params = (sig.params[0],) * len(args)
        else:
            params = sig.params
            if len(args) != len(params):
                raise FunctionTypeError(
                    f"{function_id} takes {len(params)} arguments, got {len(args)}")
        bound: str | None = None
        coerced = []
        matcher: FunctionSignature | None = None
        for i, (param, arg) in enumerate(zip(params, args)):
            where = f"argument {i + 1} of {function_id}"
            if param == "fn":
                if not isinstance(arg, FunctionRefType):
                    raise FunctionTypeError(f"{where} must be a function reference")
                matcher = self.get(arg.function_id)
                if not matcher.is_predicate:
                    raise FunctionTypeError(f"{arg.function_id} is not a binary predicate")
                continue
            if isinstance(arg, FunctionRefType):
                raise FunctionTypeError(f"{where}: unexpected function reference")
            want_bag = param.startswith("bag<")
            want_kind = param[4:-1] if want_bag else param
            if arg.bag and not want_bag:
                coerced.append(i)
            elif want_bag and not arg.bag:
                raise FunctionTypeError(f"{where} must be a bag, got {arg}")
            if want_kind == "T":
                if bound is None:
                    if arg.kind not in sig.type_var:
                        raise FunctionTypeError(f"{where}: kind {arg.kind} not allowed")
                    bound = arg.kind
                elif arg.kind != bound:
                    raise FunctionTypeError(f"{where}: expected {bound}, got {arg.kind}")
            elif arg.kind != want_kind:
                raise FunctionTypeError(f"{where}: expected {want_kind}, got {arg.kind}")
        if matcher is not None and bound is not None and bound not in matcher.type_var:
            raise FunctionTypeError(f"{matcher.function_id} does not accept {bound}")
        result = sig.result
        if result == "T":
            result = bound
        return CheckedCall(ValueType(result), tuple(coerced))


def _cmp(op: Callable[[Any, Any], bool]) -> Callable[[Any, Any], bool]:
    def impl(a, b):
        if type(a) is not type(b):
            raise EvaluationError(f"cannot compare {a!r} with {b!r}")
        return op(a, b)
    return impl


_SIGNATURES = [
    FunctionSignature("fn:and", ("boolean",), "boolean", _and, variadic=True),
    FunctionSignature("fn:or", ("boolean",), "boolean", _or, variadic=True),
    FunctionSignature("fn:not", ("boolean",), "boolean", lambda a: not a),
    FunctionSignature("fn:equal", ("T", "T"), "boolean", _cmp(lambda a, b: a == b)),
    FunctionSignature("fn:not-equal", ("T", "T"), "boolean", _cmp(lambda a, b: a != b)),
    FunctionSignature("fn:less-than", ("T", "T"), "boolean", _cmp(lambda a, b: a < b), ORDERED),
    FunctionSignature("fn:less-than-or-equal", ("T", "T"), "boolean",
                      _cmp(lambda a, b: a <= b), ORDERED),
    FunctionSignature("fn:greater-than", ("T", "T"), "boolean", _cmp(lambda a, b: a > b), ORDERED),
    FunctionSignature("fn:greater-than-or-equal", ("T", "T"), "boolean",
                      _cmp(lambda a, b: a >= b), ORDERED),
    FunctionSignature(ONE_AND_ONLY, ("bag<T>",), "T", one_and_only),
    FunctionSignature("fn:bag-size", ("bag<T>",), "integer", len),
    FunctionSignature("fn:bag-contains", ("bag<T>", "T"), "boolean", bag_contains),
    FunctionSignature("fn:any-of", ("fn", "bag<T>", "T"), "boolean", any_of),
    FunctionSignature("fn:geo-distance", ("geoPoint", "geoPoint"), "double", geo_distance),
    FunctionSignature("fn:geo-within-distance", ("geoPoint", "geoPoint", "double"), "boolean",
                      geo_within_distance),
    FunctionSignature("fn:time-within-window", ("dateTime", "dateTime", "integer"), "boolean",
                      time_within_window),
]

REGISTRY = FunctionRegistry(_SIGNATURES)

# Infix operators of the policy language and the functions they stand for.
OPERATORS = MappingProxyType({
    "==": "fn:equal",
    "!=": "fn:not-equal",
    "<": "fn:less-than",
    "<=": "fn:less-than-or-equal",
    ">": "fn:greater-than",
    ">=": "fn:greater-than-or-equal",
})
