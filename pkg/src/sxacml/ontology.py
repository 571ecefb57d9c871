"""Ontology fragment used by the engine.

Holds the data model (IRIs, typed literals, class expressions, axioms), the
immutable :class:`KnowledgeBase` with its indexes, and the JSON ontology
document reader/writer.

IRIs are plain ``str`` values in absolute form. Prefixed names such as
``fit:Distance`` only exist at the document boundary and are expanded on load.
"""

from __future__ import annotations

import json
import logging
import math
import re
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from types import MappingProxyType
from typing import Any, Iterable, Mapping, NamedTuple, Union

logger = logging.getLogger(__name__)


class OntologyError(Exception):
    """Raised for malformed ontology documents or invalid KB operations."""

    def __init__(self, message: str, *, line: int | None = None,
                 column: int | None = None, path: str | None = None):
        self.message = message
        self.line = line
        self.column = column
        self.path = path
        where = []
        if line is not None:
            where.append(f"line {line}, column {column}")
        if path:
            where.append(path)
        super().__init__(f"{message} ({'; '.join(where)})" if where else message)


# ---------------------------------------------------------------------------
# IRIs
# ---------------------------------------------------------------------------

_PREFIX_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_.\-]*$")
_RESERVED_PREFIXES = frozenset({"http", "https", "urn", "fn"})


def is_absolute_iri(text: str) -> bool:
    return "://" in text or text.startswith("urn:")


def expand_iri(text: str, prefixes: Mapping[str, str]) -> str:
    """Resolve ``prefix:local`` against ``prefixes``; absolute IRIs pass through."""
    if not isinstance(text, str) or not text:
        raise OntologyError(f"invalid IRI {text!r}")
    prefix, sep, local = text.partition(":")
    if sep and prefix in prefixes:
        return prefixes[prefix] + local
    if is_absolute_iri(text):
        return text
    if sep:
        raise OntologyError(f"undeclared prefix {prefix!r} in {text!r}")
    raise OntologyError(f"{text!r} is neither an absolute IRI nor a prefixed name")


def compact_iri(iri: str, prefixes: Mapping[str, str]) -> str:
    """Shortest prefixed form of ``iri``, or ``iri`` itself when no namespace matches."""
    best = None
    for prefix, ns in prefixes.items():
        if iri.startswith(ns) and len(iri) > len(ns):
            if best is None or len(ns) > len(prefixes[best]) or (
                    len(ns) == len(prefixes[best]) and prefix < best):
                best = prefix
    if best is None:
        return iri
    return f"{best}:{iri[len(prefixes[best]):]}"


def check_prefixes(prefixes: Mapping[str, str]) -> None:
    for prefix, ns in prefixes.items():
        if not isinstance(prefix, str) or not _PREFIX_RE.match(prefix):
            raise OntologyError(f"invalid prefix name {prefix!r}")
        if prefix in _RESERVED_PREFIXES:
            raise OntologyError(f"prefix name {prefix!r} is reserved")
        if not isinstance(ns, str) or not is_absolute_iri(ns):
            raise OntologyError(f"namespace for {prefix!r} must be an absolute IRI")


# ---------------------------------------------------------------------------
# Literals
# ---------------------------------------------------------------------------

class LiteralKind(str, Enum):
    STRING = "string"
    INTEGER = "integer"
    DOUBLE = "double"
    BOOLEAN = "boolean"
    DATETIME = "dateTime"
    GEOPOINT = "geoPoint"


ORDERED_KINDS = frozenset({LiteralKind.INTEGER, LiteralKind.DOUBLE, LiteralKind.DATETIME})
NUMERIC_KINDS = frozenset({LiteralKind.INTEGER, LiteralKind.DOUBLE})


class GeoPoint(NamedTuple):
    lat: float
    lon: float


def parse_datetime(value: str | datetime) -> datetime:
    """Parse an RFC 3339 instant; an explicit offset is mandatory.

    The result is UTC, truncated to millisecond precision.
    """
    if isinstance(value, datetime):
        dt = value
    elif isinstance(value, str):
        text = value.strip()
        if text.endswith(("Z", "z")):
            text = text[:-1] + "+00:00"
        try:
            dt = datetime.fromisoformat(text)
        except ValueError as exc:
            raise ValueError(f"invalid dateTime {value!r}") from exc
    else:
        raise ValueError(f"invalid dateTime {value!r}")
    if dt.tzinfo is None or dt.utcoffset() is None:
        raise ValueError(f"dateTime {value!r} has no UTC offset")
    dt = dt.astimezone(timezone.utc)
    return dt.replace(microsecond=dt.microsecond // 1000 * 1000)


def format_datetime(dt: datetime) -> str:
    return dt.strftime("%Y-%m-%dT%H:%M:%S.") + f"{dt.microsecond // 1000:03d}Z"


def make_geopoint(lat: Any, lon: Any) -> GeoPoint:
    for v in (lat, lon):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ValueError(f"invalid coordinate {v!r}")
    if not -90.0 <= lat <= 90.0:
        raise ValueError(f"latitude {lat} outside [-90, 90]")
    if not -180.0 <= lon <= 180.0:
        raise ValueError(f"longitude {lon} outside [-180, 180]")
    return GeoPoint(float(lat), float(lon))


def coerce_value(kind: LiteralKind, value: Any) -> Any:
    """Validate ``value`` for ``kind`` and return its normalized Python form."""
    if kind is LiteralKind.STRING:
        if not isinstance(value, str):
            raise ValueError(f"expected string, got {value!r}")
        return value
    if kind is LiteralKind.INTEGER:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ValueError(f"expected integer, got {value!r}")
        return value
    if kind is LiteralKind.DOUBLE:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValueError(f"expected double, got {value!r}")
        if not math.isfinite(value):
            raise ValueError(f"double must be finite, got {value!r}")
        return float(value)
    if kind is LiteralKind.BOOLEAN:
        if not isinstance(value, bool):
            raise ValueError(f"expected boolean, got {value!r}")
        return value
    if kind is LiteralKind.DATETIME:
        return parse_datetime(value)
    if kind is LiteralKind.GEOPOINT:
        if isinstance(value, GeoPoint):
            return make_geopoint(value.lat, value.lon)
        if isinstance(value, Mapping) and set(value) == {"lat", "lon"}:
            return make_geopoint(value["lat"], value["lon"])
        if isinstance(value, (tuple, list)) and len(value) == 2:
            return make_geopoint(*value)
        raise ValueError(f"expected geoPoint, got {value!r}")
    raise ValueError(f"unknown literal kind {kind!r}")


def value_to_json(kind: LiteralKind, value: Any) -> Any:
    if kind is LiteralKind.DATETIME:
        return format_datetime(value)
    if kind is LiteralKind.GEOPOINT:
        return {"lat": value.lat, "lon": value.lon}
    return value


@dataclass(frozen=True)
class Literal:
    kind: LiteralKind
    value: Any

    def __post_init__(self):
        kind = LiteralKind(self.kind)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "value", coerce_value(kind, self.value))

    @classmethod
    def from_json(cls, obj: Any) -> Literal:
        if not isinstance(obj, Mapping) or set(obj) != {"kind", "value"}:
            raise ValueError("literal must be an object with exactly 'kind' and 'value'")
        try:
            kind = LiteralKind(obj["kind"])
        except ValueError:
            raise ValueError(f"unknown literal kind {obj['kind']!r}") from None
        return cls(kind, obj["value"])

    def to_json(self) -> dict:
        return {"kind": self.kind.value, "value": value_to_json(self.kind, self.value)}

    def sort_key(self) -> tuple:
        return (self.kind.value, json.dumps(value_to_json(self.kind, self.value), sort_keys=True))


def compare_literals(op: str, left: Literal, right: Literal) -> bool:
    """Apply a comparator; integer and double compare numerically.

    Raises ``TypeError`` for incomparable kinds.
    """
    if left.kind != right.kind and not (left.kind in NUMERIC_KINDS and right.kind in NUMERIC_KINDS):
        raise TypeError(f"cannot compare {left.kind.value} with {right.kind.value}")
    a, b = left.value, right.value
    if op == "=":
        return a == b
    if op == "!=":
        return a != b
    if left.kind not in ORDERED_KINDS:
        raise TypeError(f"comparator {op!r} needs an ordered kind, got {left.kind.value}")
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    if op == ">=":
        return a >= b
    raise TypeError(f"unknown comparator {op!r}")


# ---------------------------------------------------------------------------
# Class expressions
# ---------------------------------------------------------------------------

COMPARATORS = ("=", "!=", "<", "<=", ">", ">=")
_COMPARATOR_ALIASES = {"≠": "!=", "≤": "<=", "≥": ">=", "==": "="}


@dataclass(frozen=True)
class Named:
    iri: str


@dataclass(frozen=True)
class IntersectionOf:
    operands: tuple

    def __post_init__(self):
        object.__setattr__(self, "operands", tuple(self.operands))
        if len(self.operands) < 2:
            raise ValueError("IntersectionOf needs at least two operands")


@dataclass(frozen=True)
class SomeValuesFrom:
    prop: str
    filler: Any


@dataclass(frozen=True)
class HasValue:
    prop: str
    value: Union[str, Literal]


@dataclass(frozen=True)
class DataRestriction:
    prop: str
    op: str
    bound: Literal

    def __post_init__(self):
        op = _COMPARATOR_ALIASES.get(self.op, self.op)
        if op not in COMPARATORS:
            raise ValueError(f"unknown comparator {self.op!r}")
        object.__setattr__(self, "op", op)
        if op not in ("=", "!=") and self.bound.kind not in ORDERED_KINDS:
            raise ValueError(
                f"comparator {op!r} requires an ordered literal kind, got {self.bound.kind.value}")


ClassExpression = Union[Named, IntersectionOf, SomeValuesFrom, HasValue, DataRestriction]


def expression_properties(expr: ClassExpression) -> set[str]:
    if isinstance(expr, Named):
        return set()
    if isinstance(expr, IntersectionOf):
        return set().union(*(expression_properties(e) for e in expr.operands))
    if isinstance(expr, SomeValuesFrom):
        return {expr.prop} | expression_properties(expr.filler)
    return {expr.prop}


def expression_classes(expr: ClassExpression) -> set[str]:
    if isinstance(expr, Named):
        return {expr.iri}
    if isinstance(expr, IntersectionOf):
        return set().union(*(expression_classes(e) for e in expr.operands))
    if isinstance(expr, SomeValuesFrom):
        return expression_classes(expr.filler)
    return set()


# ---------------------------------------------------------------------------
# Axioms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DeclareClass:
    iri: str


@dataclass(frozen=True)
class SubClassOf:
    sub: ClassExpression
    sup: str


@dataclass(frozen=True)
class EquivalentClass:
    name: str
    definition: ClassExpression


@dataclass(frozen=True)
class DeclareObjectProperty:
    iri: str
    domain: str | None = None
    range: str | None = None


@dataclass(frozen=True)
class DeclareDataProperty:
    iri: str
    domain: str | None = None
    range_kind: LiteralKind | None = None


@dataclass(frozen=True)
class ClassAssertion:
    cls: str
    individual: str


@dataclass(frozen=True)
class ObjectPropertyAssertion:
    prop: str
    subject: str
    object: str


@dataclass(frozen=True)
class DataPropertyAssertion:
    prop: str
    subject: str
    value: Literal


Axiom = Union[DeclareClass, SubClassOf, EquivalentClass, DeclareObjectProperty,
              DeclareDataProperty, ClassAssertion, ObjectPropertyAssertion,
              DataPropertyAssertion]

PropertyValue = Union[str, Literal]


def _value_sort_key(v: PropertyValue) -> tuple:
    return (0, v, "") if isinstance(v, str) else (1,) + v.sort_key()


# ---------------------------------------------------------------------------
# Knowledge base
# ---------------------------------------------------------------------------

class KnowledgeBase:
    """Immutable set of axioms plus a prefix table, with lookup indexes.

    Indexes are built once in the constructor; every "mutating" operation
    (:func:`merge`, :func:`add_individual`, :meth:`with_axioms`) returns a
    new instance.
    """

    __slots__ = ("axioms", "prefixes", "classes", "individuals", "object_properties",
                 "data_properties", "definitions", "_by_class", "_assertions",
                 "_superclasses", "_hash")

    def __init__(self, axioms: Iterable[Axiom] = (), prefixes: Mapping[str, str] | None = None):
        self.axioms = frozenset(axioms)
        self.prefixes = MappingProxyType(dict(prefixes or {}))

        classes: set[str] = set()
        individuals: set[str] = set()
        by_class: dict[str, set[str]] = {}
        assertions: dict[str, dict[str, list]] = {}
        supers: dict[str, set[str]] = {}
        oprops: dict[str, list] = {}
        dprops: dict[str, list] = {}
        definitions = []

        for ax in self.axioms:
            if isinstance(ax, ClassAssertion):
                classes.add(ax.cls)
                individuals.add(ax.individual)
                by_class.setdefault(ax.cls, set()).add(ax.individual)
            elif isinstance(ax, ObjectPropertyAssertion):
                individuals.update((ax.subject, ax.object))
                assertions.setdefault(ax.subject, {}).setdefault(ax.prop, []).append(ax.object)
            elif isinstance(ax, DataPropertyAssertion):
                individuals.add(ax.subject)
                assertions.setdefault(ax.subject, {}).setdefault(ax.prop, []).append(ax.value)
            elif isinstance(ax, SubClassOf):
                classes.add(ax.sup)
                classes.update(expression_classes(ax.sub))
                if isinstance(ax.sub, Named):
                    supers.setdefault(ax.sub.iri, set()).add(ax.sup)
                else:
                    definitions.append((ax.sup, ax.sub))
            elif isinstance(ax, EquivalentClass):
                classes.add(ax.name)
                classes.update(expression_classes(ax.definition))
                definitions.append((ax.name, ax.definition))
            elif isinstance(ax, DeclareClass):
                classes.add(ax.iri)
            elif isinstance(ax, DeclareObjectProperty):
                oprops.setdefault(ax.iri, []).append(ax)
                classes.update(c for c in (ax.domain, ax.range) if c)
            elif isinstance(ax, DeclareDataProperty):
                dprops.setdefault(ax.iri, []).append(ax)
                if ax.domain:
                    classes.add(ax.domain)
            else:
                raise OntologyError(f"not an axiom: {ax!r}")

        self.classes = frozenset(classes)
        self.individuals = frozenset(individuals)
        self._by_class = {c: frozenset(s) for c, s in by_class.items()}
        self._assertions = {
            ind: {p: tuple(sorted(vs, key=_value_sort_key)) for p, vs in props.items()}
            for ind, props in assertions.items()
        }
        self._superclasses = {c: frozenset(s) for c, s in supers.items()}
        self.object_properties = MappingProxyType({p: tuple(v) for p, v in oprops.items()})
        self.data_properties = MappingProxyType({p: tuple(v) for p, v in dprops.items()})
        self.definitions = tuple(sorted(definitions, key=lambda d: (d[0], repr(d[1]))))
        self._hash = None

    def __repr__(self) -> str:
        return f"KnowledgeBase({len(self.axioms)} axioms, {len(self.prefixes)} prefixes)"

    def __len__(self) -> int:
        return len(self.axioms)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, KnowledgeBase):
            return NotImplemented
        return self.axioms == other.axioms and dict(self.prefixes) == dict(other.prefixes)

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.axioms, frozenset(self.prefixes.items())))
        return self._hash

    def individuals_of(self, cls: str) -> frozenset[str]:
        """Individuals with an asserted (not inferred) ClassAssertion for ``cls``."""
        return self._by_class.get(cls, frozenset())

    def asserted_classes(self) -> Iterable[str]:
        return self._by_class.keys()

    def assertions_of(self, individual: str) -> Mapping[str, tuple]:
        return self._assertions.get(individual, {})

    def direct_superclasses(self, cls: str) -> frozenset[str]:
        return self._superclasses.get(cls, frozenset())

    def subclass_edges(self) -> Iterable[tuple[str, str]]:
        for sub, sups in self._superclasses.items():
            for sup in sups:
                yield sub, sup

    def is_object_property(self, prop: str) -> bool:
        return prop in self.object_properties

    def is_data_property(self, prop: str) -> bool:
        return prop in self.data_properties

    def is_declared_property(self, prop: str) -> bool:
        return prop in self.object_properties or prop in self.data_properties

    @property
    def undeclared_properties(self) -> frozenset[str]:
        used: set[str] = set()
        for ax in self.axioms:
            if isinstance(ax, (ObjectPropertyAssertion, DataPropertyAssertion)):
                used.add(ax.prop)
            elif isinstance(ax, SubClassOf):
                used |= expression_properties(ax.sub)
            elif isinstance(ax, EquivalentClass):
                used |= expression_properties(ax.definition)
        return frozenset(p for p in used if not self.is_declared_property(p))

    def with_axioms(self, axioms: Iterable[Axiom]) -> KnowledgeBase:
        return KnowledgeBase(self.axioms.union(axioms), self.prefixes)

    def expand(self, text: str) -> str:
        return expand_iri(text, self.prefixes)

    def compact(self, iri: str) -> str:
        return compact_iri(iri, self.prefixes)


EMPTY_KB = KnowledgeBase()


def merge(base: KnowledgeBase, overlay: KnowledgeBase) -> KnowledgeBase:
    """Union of two knowledge bases. Conflicting prefix bindings are an error."""
    prefixes = dict(base.prefixes)
    for prefix, ns in overlay.prefixes.items():
        if prefixes.setdefault(prefix, ns) != ns:
            raise OntologyError(
                f"prefix {prefix!r} bound to {prefixes[prefix]!r} and {ns!r}")
    if overlay.axioms <= base.axioms and len(prefixes) == len(base.prefixes):
        return base
    return KnowledgeBase(base.axioms | overlay.axioms, prefixes)


def merge_all(kbs: Iterable[KnowledgeBase]) -> KnowledgeBase:
    """Merge many KBs at once (one index build instead of one per pair)."""
    prefixes: dict[str, str] = {}
    axioms: set = set()
    for kb in kbs:
        for prefix, ns in kb.prefixes.items():
            if prefixes.setdefault(prefix, ns) != ns:
                raise OntologyError(
                    f"prefix {prefix!r} bound to {prefixes[prefix]!r} and {ns!r}")
        axioms |= kb.axioms
    return KnowledgeBase(axioms, prefixes)


def add_individual(kb: KnowledgeBase, individual: str, cls: str,
                   assertions: Iterable[tuple[str, PropertyValue]] = ()) -> KnowledgeBase:
    """Return ``kb`` extended with ``individual`` typed ``cls`` and its property assertions.

    Each assertion is ``(property, value)``; a ``str`` value is an object
    assertion, a :class:`Literal` a data assertion.
    """
    if individual in kb.individuals_of(cls):
        raise OntologyError(f"{individual} is already asserted to be a {cls}")
    new: list[Axiom] = [ClassAssertion(cls, individual)]
    for prop, value in assertions:
        if isinstance(value, Literal):
            if not kb.is_data_property(prop):
                raise OntologyError(f"undeclared data property {prop}")
            new.append(DataPropertyAssertion(prop, individual, value))
        else:
            if not kb.is_object_property(prop):
                raise OntologyError(f"undeclared object property {prop}")
            new.append(ObjectPropertyAssertion(prop, individual, value))
    return kb.with_axioms(new)


# ---------------------------------------------------------------------------
# JSON document format
# ---------------------------------------------------------------------------

_TOP_KEYS = {"prefixes", "classes", "subClassOf", "equivalent", "objectProperties",
             "dataProperties", "individuals"}


def _expect(cond: bool, message: str, path: str) -> None:
    if not cond:
        raise OntologyError(message, path=path)


def _json_position(raw: bytes, offset: int) -> tuple[int, int]:
    head = raw[:offset]
    line = head.count(b"\n") + 1
    return line, offset - (head.rfind(b"\n") + 1) + 1


class _DocReader:
    def __init__(self, prefixes: Mapping[str, str]):
        self.prefixes = prefixes

    def iri(self, value: Any, path: str) -> str:
        _expect(isinstance(value, str) and value != "", "expected an IRI string", path)
        try:
            return expand_iri(value, self.prefixes)
        except OntologyError as exc:
            raise OntologyError(exc.message, path=path) from None

    def literal(self, obj: Any, path: str) -> Literal:
        try:
            return Literal.from_json(obj)
        except ValueError as exc:
            raise OntologyError(f"invalid literal: {exc}", path=path) from None

    def expr(self, obj: Any, path: str, depth: int = 0) -> ClassExpression:
        _expect(depth < 64, "class expression nested too deeply", path)
        if isinstance(obj, str):
            return Named(self.iri(obj, path))
        _expect(isinstance(obj, Mapping) and len(obj) == 1,
                "class expression must be an object with exactly one key", path)
        (key, body), = obj.items()
        sub = f"{path}.{key}"
        if key == "named":
            return Named(self.iri(body, sub))
        if key == "and":
            _expect(isinstance(body, list) and len(body) >= 2,
                    "'and' needs a list of at least two expressions", sub)
            return IntersectionOf(tuple(self.expr(e, f"{sub}[{i}]", depth + 1)
                                        for i, e in enumerate(body)))
        if key == "some":
            _expect(isinstance(body, Mapping) and set(body) == {"p", "expr"},
                    "'some' needs keys 'p' and 'expr'", sub)
            return SomeValuesFrom(self.iri(body["p"], sub + ".p"),
                                  self.expr(body["expr"], sub + ".expr", depth + 1))
        if key == "hasValue":
            _expect(isinstance(body, Mapping) and set(body) == {"p", "value"},
                    "'hasValue' needs keys 'p' and 'value'", sub)
            value = body["value"]
            if isinstance(value, Mapping):
                v: PropertyValue = self.literal(value, sub + ".value")
            else:
                v = self.iri(value, sub + ".value")
            return HasValue(self.iri(body["p"], sub + ".p"), v)
        if key == "data":
            _expect(isinstance(body, Mapping) and set(body) == {"p", "op", "literal"},
                    "'data' needs keys 'p', 'op' and 'literal'", sub)
            bound = self.literal(body["literal"], sub + ".literal")
            try:
                return DataRestriction(self.iri(body["p"], sub + ".p"), body["op"], bound)
            except ValueError as exc:
                raise OntologyError(str(exc), path=sub) from None
        raise OntologyError(f"unknown class expression key {key!r}", path=path)

    def optional_iri(self, obj: Mapping, key: str, path: str) -> str | None:
        return self.iri(obj[key], f"{path}.{key}") if obj.get(key) is not None else None


def load_document(doc: bytes | str | Mapping) -> KnowledgeBase:
    """Parse one JSON ontology document into a :class:`KnowledgeBase`.

    Syntax errors carry line/column; structural errors carry a JSON path.
    Properties referenced but not declared are logged and exposed via
    :attr:`KnowledgeBase.undeclared_properties`; they typically live in another
    document of the same stack.
    """
    if isinstance(doc, Mapping):
        data = doc
    else:
        raw = doc.encode("utf-8") if isinstance(doc, str) else bytes(doc)
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            line, col = _json_position(raw, exc.start)
            raise OntologyError("document is not valid UTF-8", line=line, column=col) from None
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise OntologyError(exc.msg, line=exc.lineno, column=exc.colno) from None
    _expect(isinstance(data, Mapping), "document must be a JSON object", "$")
    unknown = set(data) - _TOP_KEYS
    _expect(not unknown, f"unknown top-level keys {sorted(unknown)}", "$")

    prefixes = data.get("prefixes", {})
    _expect(isinstance(prefixes, Mapping), "'prefixes' must be an object", "$.prefixes")
    try:
        check_prefixes(prefixes)
    except OntologyError as exc:
        raise OntologyError(exc.message, path="$.prefixes") from None
    r = _DocReader(prefixes)
    axioms: set[Axiom] = set()

    def section(key: str) -> list:
        value = data.get(key, [])
        _expect(isinstance(value, list), f"'{key}' must be an array", f"$.{key}")
        return value

    for i, name in enumerate(section("classes")):
        axioms.add(DeclareClass(r.iri(name, f"$.classes[{i}]")))

    for i, pair in enumerate(section("subClassOf")):
        path = f"$.subClassOf[{i}]"
        _expect(isinstance(pair, list) and len(pair) == 2, "expected [sub, sup]", path)
        _expect(isinstance(pair[1], str), "superclass must be a named class", path + "[1]")
        axioms.add(SubClassOf(r.expr(pair[0], path + "[0]"), r.iri(pair[1], path + "[1]")))

    seen_equivalent: set[str] = set()
    for i, entry in enumerate(section("equivalent")):
        path = f"$.equivalent[{i}]"
        _expect(isinstance(entry, Mapping) and set(entry) == {"name", "expr"},
                "expected {name, expr}", path)
        name = r.iri(entry["name"], path + ".name")
        if name in seen_equivalent:
            raise OntologyError(f"duplicate equivalent-class definition for {name}", path=path)
        seen_equivalent.add(name)
        axioms.add(EquivalentClass(name, r.expr(entry["expr"], path + ".expr")))

    for i, entry in enumerate(section("objectProperties")):
        path = f"$.objectProperties[{i}]"
        _expect(isinstance(entry, Mapping) and "name" in entry
                and set(entry) <= {"name", "domain", "range"}, "expected {name, domain?, range?}", path)
        axioms.add(DeclareObjectProperty(r.iri(entry["name"], path + ".name"),
                                         r.optional_iri(entry, "domain", path),
                                         r.optional_iri(entry, "range", path)))

    for i, entry in enumerate(section("dataProperties")):
        path = f"$.dataProperties[{i}]"
        _expect(isinstance(entry, Mapping) and "name" in entry
                and set(entry) <= {"name", "domain", "range"}, "expected {name, domain?, range?}", path)
        range_kind = None
        if entry.get("range") is not None:
            try:
                range_kind = LiteralKind(entry["range"])
            except ValueError:
                raise OntologyError(f"unknown literal kind {entry['range']!r}",
                                    path=path + ".range") from None
        axioms.add(DeclareDataProperty(r.iri(entry["name"], path + ".name"),
                                       r.optional_iri(entry, "domain", path), range_kind))

    for i, entry in enumerate(section("individuals")):
        path = f"$.individuals[{i}]"
        _expect(isinstance(entry, Mapping) and "name" in entry
                and set(entry) <= {"name", "types", "props"}, "expected {name, types?, props?}", path)
        name = r.iri(entry["name"], path + ".name")
        types = entry.get("types", [])
        props = entry.get("props", [])
        _expect(isinstance(types, list), "'types' must be an array", path + ".types")
        _expect(isinstance(props, list), "'props' must be an array", path + ".props")
        for j, t in enumerate(types):
            axioms.add(ClassAssertion(r.iri(t, f"{path}.types[{j}]"), name))
        for j, prop in enumerate(props):
            ppath = f"{path}.props[{j}]"
            _expect(isinstance(prop, Mapping) and "p" in prop and len(prop) == 2
                    and ("o" in prop or "literal" in prop), "expected {p, o} or {p, literal}", ppath)
            p = r.iri(prop["p"], ppath + ".p")
            if "o" in prop:
                axioms.add(ObjectPropertyAssertion(p, name, r.iri(prop["o"], ppath + ".o")))
            else:
                axioms.add(DataPropertyAssertion(p, name, r.literal(prop["literal"], ppath + ".literal")))

    kb = KnowledgeBase(axioms, prefixes)
    missing = kb.undeclared_properties
    if missing:
        logger.debug("document references undeclared properties: %s",
                     ", ".join(sorted(kb.compact(p) for p in missing)))
    return kb


def _expr_to_json(expr: ClassExpression, c) -> Any:
    if isinstance(expr, Named):
        return {"named": c(expr.iri)}
    if isinstance(expr, IntersectionOf):
        return {"and": [_expr_to_json(e, c) for e in expr.operands]}
    if isinstance(expr, SomeValuesFrom):
        return {"some": {"p": c(expr.prop), "expr": _expr_to_json(expr.filler, c)}}
    if isinstance(expr, HasValue):
        value = expr.value.to_json() if isinstance(expr.value, Literal) else c(expr.value)
        return {"hasValue": {"p": c(expr.prop), "value": value}}
    return {"data": {"p": c(expr.prop), "op": expr.op, "literal": expr.bound.to_json()}}


def document_data(kb: KnowledgeBase) -> dict:
    """The JSON-ready document structure for ``kb`` (deterministic ordering)."""
    c = kb.compact
    classes, subs, equivs, oprops, dprops = [], [], [], [], []
    inds: dict[str, dict[str, list]] = {}
    for ax in kb.axioms:
        if isinstance(ax, DeclareClass):
            classes.append(c(ax.iri))
        elif isinstance(ax, SubClassOf):
            sub = c(ax.sub.iri) if isinstance(ax.sub, Named) else _expr_to_json(ax.sub, c)
            subs.append([sub, c(ax.sup)])
        elif isinstance(ax, EquivalentClass):
            equivs.append({"name": c(ax.name), "expr": _expr_to_json(ax.definition, c)})
        elif isinstance(ax, DeclareObjectProperty):
            entry = {"name": c(ax.iri)}
            if ax.domain:
                entry["domain"] = c(ax.domain)
            if ax.range:
                entry["range"] = c(ax.range)
            oprops.append(entry)
        elif isinstance(ax, DeclareDataProperty):
            entry = {"name": c(ax.iri)}
            if ax.domain:
                entry["domain"] = c(ax.domain)
            if ax.range_kind:
                entry["range"] = ax.range_kind.value
            dprops.append(entry)
        else:
            subject = ax.individual if isinstance(ax, ClassAssertion) else ax.subject
            slot = inds.setdefault(subject, {"types": [], "props": []})
            if isinstance(ax, ClassAssertion):
                slot["types"].append(c(ax.cls))
            elif isinstance(ax, ObjectPropertyAssertion):
                slot["props"].append({"p": c(ax.prop), "o": c(ax.object)})
            else:
                slot["props"].append({"p": c(ax.prop), "literal": ax.value.to_json()})

    def key(obj: Any) -> str:
        return json.dumps(obj, sort_keys=True)

    individuals = []
    for name in sorted(inds):
        entry = {"name": c(name)}
        if inds[name]["types"]:
            entry["types"] = sorted(inds[name]["types"])
        if inds[name]["props"]:
            entry["props"] = sorted(inds[name]["props"], key=key)
        individuals.append(entry)
    doc = {
        "prefixes": dict(sorted(kb.prefixes.items())),
        "classes": sorted(classes),
        "subClassOf": sorted(subs, key=key),
        "equivalent": sorted(equivs, key=key),
        "objectProperties": sorted(oprops, key=key),
        "dataProperties": sorted(dprops, key=key),
        "individuals": individuals,
    }
    return {k: v for k, v in doc.items() if v or k == "prefixes"}


def dump_document(kb: KnowledgeBase) -> bytes:
    return (json.dumps(document_data(kb), indent=2, ensure_ascii=False) + "\n").encode("utf-8")
