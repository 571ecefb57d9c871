"""IRIs the engine itself depends on (access-control vocabulary)."""

from __future__ import annotations

from types import MappingProxyType

from .policy import Category

ACO = "https://sxacml.example.org/ns/aco#"

REQUEST = ACO + "Request"
PERMITTED_REQUEST = ACO + "PermittedRequest"
DENIED_REQUEST = ACO + "DeniedRequest"

# Reserved attribute ids answered by the engine rather than by a property.
CLASS_ID = ACO + "classId"
RESOURCE_ID = ACO + "resourceId"
REQUEST_CLASS_ID = ACO + "requestClassId"
RESERVED_ATTRIBUTES = frozenset({CLASS_ID, RESOURCE_ID, REQUEST_CLASS_ID})

CATEGORY_CLASS = MappingProxyType({
    Category.SUBJECT: ACO + "Subject",
    Category.RESOURCE: ACO + "Resource",
    Category.ACTION: ACO + "Action",
    Category.ENVIRONMENT: ACO + "Environment",
})

CATEGORY_LINK = MappingProxyType({
    Category.SUBJECT: ACO + "hasSubject",
    Category.RESOURCE: ACO + "hasResource",
    Category.ACTION: ACO + "hasAction",
    Category.ENVIRONMENT: ACO + "hasEnvironment",
})
