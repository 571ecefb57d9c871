"""Semantically enhanced attribute-based access control engine.

Policies are written in a compact policy language (``.apl``), attribute
values come from the request or from reasoning over an ontology stack, and
requests naming a resource class are answered per class instance.
"""

from .dsl import load_policy, parse_policy_document, serialize_policy
from .ontology import KnowledgeBase, load_document
from .pdp import AS_REQUESTED, DecisionSet, Engine, LoadError, decide
from .policy import Decision, DecisionValue, PolicySet
from .reasoner import classify
from .request import RequestContext, RequestFormatError, parse_request

__version__ = "0.1.0"

__all__ = [
    "AS_REQUESTED",
    "Decision",
    "DecisionSet",
    "DecisionValue",
    "Engine",
    "KnowledgeBase",
    "LoadError",
    "PolicySet",
    "RequestContext",
    "RequestFormatError",
    "classify",
    "decide",
    "load_document",
    "load_policy",
    "parse_policy_document",
    "parse_request",
    "serialize_policy",
]
