"""Semantic policy information point.

For each request a temporary ontology is built on top of the domain and
mapping ontologies: one individual per request category carrying the
category's attributes, plus a request individual linked to all of them.
Attribute queries are answered from the classified result.
"""

from __future__ import annotations

import logging
import uuid
from dataclasses import dataclass
from functools import cached_property
from types import MappingProxyType
from typing import Mapping

from .ontology import (
    EMPTY_KB,
    ClassAssertion,
    DataPropertyAssertion,
    KnowledgeBase,
    Literal,
    LiteralKind,
    ObjectPropertyAssertion,
    merge,
)
from .policy import AttributeResolutionError, Category
from .reasoner import InferredKB, classify
from .request import RequestContext
from .vocab import (
    CATEGORY_CLASS,
    CATEGORY_LINK,
    CLASS_ID,
    REQUEST,
    REQUEST_CLASS_ID,
    RESOURCE_ID,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RequestOntology:
    kb: KnowledgeBase
    category_individuals: Mapping[Category, str]
    request_individual: str
    bound_resource: str | None = None
    """Set when the resource category is an existing domain individual."""

    @cached_property
    def inferred(self) -> InferredKB:
        return classify(self.kb)


def fresh_prefix() -> str:
    return f"urn:req:{uuid.uuid4()}"


def build_request_ontology(ctx: RequestContext, domain: KnowledgeBase,
                           mapping: KnowledgeBase = EMPTY_KB, *,
                           prefix: str | None = None) -> RequestOntology:
    """Assert the request context as individuals on top of ``domain`` and ``mapping``.

    A concrete ``aco:resourceId`` makes the named domain individual play the
    resource role, so its domain facts are visible to class expressions.
    """
    base = merge(domain, mapping)
    prefix = prefix or fresh_prefix()
    request = f"{prefix}:request"
    axioms = [ClassAssertion(REQUEST, request)]
    individuals = {}
    bound = None
    for category in ctx.categories:
        ind = f"{prefix}:{category.value}"
        if category is Category.RESOURCE and ctx.resource_ids():
            ind = bound = ctx.resource_ids()[0]
        individuals[category] = ind
        axioms.append(ObjectPropertyAssertion(CATEGORY_LINK[category], request, ind))
        axioms.append(ClassAssertion(CATEGORY_CLASS[category], ind))
        for a in ctx.get(category):
            if a.attribute_id == CLASS_ID:
                axioms.append(ClassAssertion(a.value, ind))
            elif a.attribute_id in (RESOURCE_ID, REQUEST_CLASS_ID):
                continue
            elif a.kind == "iri" and base.is_object_property(a.attribute_id):
                axioms.append(ObjectPropertyAssertion(a.attribute_id, ind, a.value))
            elif a.kind != "iri" and base.is_data_property(a.attribute_id):
                literal = Literal(LiteralKind(a.kind), a.value)
                axioms.append(DataPropertyAssertion(a.attribute_id, ind, literal))
            else:
                logger.debug("attribute %s is not a declared %s property; not asserted",
                             a.attribute_id, "object" if a.kind == "iri" else "data")
    kb = KnowledgeBase(base.axioms.union(axioms), base.prefixes)
    return RequestOntology(kb, MappingProxyType(individuals), request, bound)


def _convert(value, kind: str, attribute_id: str):
    if isinstance(value, str):
        if kind == "iri":
            return value
    elif value.kind.value == kind:
        return value.value
    elif value.kind is LiteralKind.INTEGER and kind == "double":
        return float(value.value)
    got = "iri" if isinstance(value, str) else value.kind.value
    raise AttributeResolutionError(f"{attribute_id}: cannot convert {got} value to {kind}")


def find_attribute(ro: RequestOntology, category: Category, attribute_id: str,
                   kind: str) -> tuple:
    """Bag of values for one attribute, derived from the classified request ontology."""
    category = Category(category)
    if attribute_id == REQUEST_CLASS_ID:
        if kind != "iri":
            raise AttributeResolutionError(f"{attribute_id} has kind iri, not {kind}")
        return tuple(sorted(ro.inferred.types_of(ro.request_individual)))
    individual = ro.category_individuals.get(category)
    if attribute_id == CLASS_ID:
        if kind != "iri":
            raise AttributeResolutionError(f"{attribute_id} has kind iri, not {kind}")
        if individual is None:
            return ()
        return tuple(sorted(ro.inferred.types_of(individual)))
    if attribute_id == RESOURCE_ID:
        if kind != "iri":
            raise AttributeResolutionError(f"{attribute_id} has kind iri, not {kind}")
        if category is Category.RESOURCE and ro.bound_resource is not None:
            return (ro.bound_resource,)
        return ()
    if not ro.kb.is_declared_property(attribute_id):
        raise AttributeResolutionError(f"no declared property {attribute_id}")
    if individual is None:
        return ()
    values = ro.inferred.property_values(individual, attribute_id)
    return tuple(_convert(v, kind, attribute_id) for v in values)
