"""Request contexts and the JSON request document.

A request document looks like::

    {"subject":  [{"id": "aco:classId", "kind": "iri", "value": "org:HealthCentre"}],
     "resource": [{"id": "aco:classId", "kind": "iri", "value": "fit:TrainingMetric"}],
     "action":   [{"id": "aco:classId", "kind": "iri", "value": "aco:Read"}],
     "environment": []}

Attribute ids and ``iri`` values may be prefixed names; they are expanded
against the prefixes of the loaded ontologies.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any, Mapping

from .ontology import LiteralKind, OntologyError, coerce_value, expand_iri, value_to_json
from .policy import VALUE_KINDS, Category
from .vocab import CLASS_ID, RESOURCE_ID


class RequestFormatError(ValueError):
    """The request document cannot be read (bad JSON, shape or value)."""


@dataclass(frozen=True)
class RequestAttribute:
    attribute_id: str
    kind: str
    value: Any

    def __post_init__(self):
        if self.kind not in VALUE_KINDS:
            raise ValueError(f"unknown attribute kind {self.kind!r}")
        if self.kind == "iri":
            if not isinstance(self.value, str) or not self.value:
                raise ValueError(f"invalid IRI value {self.value!r}")
        else:
            object.__setattr__(self, "value", coerce_value(LiteralKind(self.kind), self.value))


@dataclass(frozen=True)
class RequestContext:
    """Attributes per category, in document order."""

    attributes: Mapping[Category, tuple] = field(default_factory=dict)

    def __post_init__(self):
        attrs = {Category(c): tuple(v) for c, v in self.attributes.items() if v}
        object.__setattr__(self, "attributes", MappingProxyType(attrs))

    def __hash__(self) -> int:
        return hash(tuple(sorted((c.value, v) for c, v in self.attributes.items())))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RequestContext):
            return NotImplemented
        return dict(self.attributes) == dict(other.attributes)

    @property
    def categories(self) -> tuple[Category, ...]:
        return tuple(c for c in Category if c in self.attributes)

    def get(self, category: Category) -> tuple:
        return self.attributes.get(category, ())

    def values(self, category: Category, attribute_id: str) -> tuple | None:
        """Values of one attribute, or ``None`` when the context does not mention it."""
        found = [a for a in self.get(category) if a.attribute_id == attribute_id]
        if not found:
            return None
        return tuple(a.value for a in found)

    def class_ids(self, category: Category) -> tuple[str, ...]:
        return self.values(category, CLASS_ID) or ()

    def resource_ids(self) -> tuple[str, ...]:
        return self.values(Category.RESOURCE, RESOURCE_ID) or ()

    def problems(self) -> list[str]:
        """Semantic defects that make the request undecidable."""
        out = []
        for category in self.categories:
            for reserved in (CLASS_ID, RESOURCE_ID):
                for a in self.get(category):
                    if a.attribute_id == reserved and a.kind != "iri":
                        out.append(f"{category.value} {reserved} must have kind iri")
            if len(self.class_ids(category)) > 1:
                out.append(f"more than one classId in category {category.value}")
            if category is not Category.RESOURCE and self.values(category, RESOURCE_ID):
                out.append("resourceId is only allowed in the resource category")
        if len(self.resource_ids()) > 1:
            out.append("more than one resourceId")
        if self.resource_ids() and self.class_ids(Category.RESOURCE):
            out.append("resource names both a concrete resourceId and a classId")
        return out

    def with_resource(self, individual: str) -> RequestContext:
        """Copy with the resource classId replaced by a concrete resource id."""
        kept = [a for a in self.get(Category.RESOURCE)
                if a.attribute_id not in (CLASS_ID, RESOURCE_ID)]
        attrs = dict(self.attributes)
        attrs[Category.RESOURCE] = (RequestAttribute(RESOURCE_ID, "iri", individual), *kept)
        return RequestContext(attrs)


def parse_request(doc: bytes | str | Mapping, prefixes: Mapping[str, str]) -> RequestContext:
    if isinstance(doc, Mapping):
        data = doc
    else:
        if isinstance(doc, (bytes, bytearray)):
            try:
                doc = bytes(doc).decode("utf-8")
            except UnicodeDecodeError:
                raise RequestFormatError("request is not valid UTF-8") from None
        if not doc.strip():
            raise RequestFormatError("empty request")
        try:
            data = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise RequestFormatError(f"invalid JSON: {exc.msg} at line {exc.lineno}, "
                                     f"column {exc.colno}") from None
    if not isinstance(data, Mapping):
        raise RequestFormatError("request must be a JSON object")
    unknown = set(data) - {c.value for c in Category}
    if unknown:
        raise RequestFormatError(f"unknown request categories {sorted(unknown)}")
    attrs: dict[Category, list] = {}
    for name, entries in data.items():
        category = Category(name)
        if not isinstance(entries, list):
            raise RequestFormatError(f"{name} must be an array")
        for i, entry in enumerate(entries):
            where = f"{name}[{i}]"
            if not isinstance(entry, Mapping) or set(entry) != {"id", "kind", "value"}:
                raise RequestFormatError(f"{where} must have exactly 'id', 'kind' and 'value'")
            try:
                attribute_id = expand_iri(entry["id"], prefixes)
                value = entry["value"]
                if entry["kind"] == "iri":
                    value = expand_iri(value, prefixes)
                attrs.setdefault(category, []).append(
                    RequestAttribute(attribute_id, entry["kind"], value))
            except (OntologyError, ValueError, TypeError) as exc:
                raise RequestFormatError(f"{where}: {exc}") from None
    return RequestContext(attrs)


def request_to_json(ctx: RequestContext) -> dict:
    out = {}
    for category in ctx.categories:
        out[category.value] = [
            {"id": a.attribute_id, "kind": a.kind,
             "value": a.value if a.kind == "iri" else value_to_json(LiteralKind(a.kind), a.value)}
            for a in ctx.get(category)]
    return out
