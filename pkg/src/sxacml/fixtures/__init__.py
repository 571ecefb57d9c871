"""Bundled fixture stack: ontologies, policies and request scenarios.

``manifest.json`` lists every asset with its kind. Ontology entries
have a role (``domain`` or ``mapping``); entries tagged with a scenario are
only loaded for that scenario.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from ..ontology import EMPTY_KB, KnowledgeBase, merge
from ..pdp import Engine, LoadError, load_ontology_texts, load_policy_texts
from ..policy import PolicySet

FIXTURES_DIR = Path(__file__).parent
MANIFEST_PATH = FIXTURES_DIR / "manifest.json"

KINDS = ("ontology", "policy", "request", "expected-decisions")
ROLES = ("domain", "mapping")


@dataclass(frozen=True)
class ManifestEntry:
    name: str
    path: str
    kind: str
    role: str = "domain"
    scenario: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"{self.name}: unknown fixture kind {self.kind!r}")
        if self.role not in ROLES:
            raise ValueError(f"{self.name}: unknown ontology role {self.role!r}")


@dataclass(frozen=True)
class FixtureManifest:
    entries: tuple = ()
    root: Path = FIXTURES_DIR
    snapshot: Mapping[str, int] = field(default_factory=dict)

    @classmethod
    def load(cls, path: str | Path = MANIFEST_PATH) -> FixtureManifest:
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
            entries = tuple(ManifestEntry(**e) for e in data.get("entries", []))
        except (OSError, ValueError, TypeError) as exc:
            raise LoadError(f"{path}: {exc}") from None
        manifest = cls(entries, path.parent, dict(data.get("snapshot", {})))
        for e in entries:
            if not manifest.resolve(e).is_file():
                raise LoadError(f"{path}: missing fixture file {e.path}")
        return manifest

    def resolve(self, entry: ManifestEntry) -> Path:
        return self.root / entry.path

    def read(self, entry: ManifestEntry) -> bytes:
        return self.resolve(entry).read_bytes()

    def select(self, kind: str, scenario: str | None = None) -> list[ManifestEntry]:
        return [e for e in self.entries if e.kind == kind and e.scenario == scenario]

    @property
    def scenario_names(self) -> list[str]:
        return sorted({e.scenario for e in self.entries if e.scenario})


@dataclass(frozen=True)
class Scenario:
    name: str
    request: bytes
    expected: dict | None
    ontology: KnowledgeBase = EMPTY_KB
    """Extra ontology documents layered on the domain for this scenario only."""


@dataclass(frozen=True)
class FixtureStack:
    domain: KnowledgeBase
    mapping: KnowledgeBase
    policies: PolicySet
    scenarios: Mapping[str, Scenario]

    @property
    def knowledge(self) -> KnowledgeBase:
        return merge(self.domain, self.mapping)

    def engine(self, scenario: str | None = None) -> Engine:
        domain = self.domain
        if scenario is not None:
            domain = merge(domain, self.scenarios[scenario].ontology)
        return Engine(self.policies, domain, self.mapping)


def load_fixture_stack(manifest: FixtureManifest | None = None) -> FixtureStack:
    """Load and merge every asset in ``manifest`` (the bundled one by default)."""
    manifest = manifest or FixtureManifest.load()

    def texts(entries):
        return [(str(manifest.resolve(e)), manifest.read(e)) for e in entries]

    ontologies = manifest.select("ontology")
    domain = load_ontology_texts(texts([e for e in ontologies if e.role == "domain"]))
    mapping = load_ontology_texts(texts([e for e in ontologies if e.role == "mapping"]))
    policies = load_policy_texts(texts(manifest.select("policy")))

    scenarios = {}
    for name in manifest.scenario_names:
        requests = manifest.select("request", name)
        if len(requests) != 1:
            raise LoadError(f"scenario {name} needs exactly one request")
        expected = manifest.select("expected-decisions", name)
        try:
            expected_doc = json.loads(manifest.read(expected[0])) if expected else None
        except ValueError as exc:
            raise LoadError(f"scenario {name}: {exc}") from None
        overlay = load_ontology_texts(texts(manifest.select("ontology", name)))
        scenarios[name] = Scenario(name, manifest.read(requests[0]), expected_doc, overlay)
    return FixtureStack(domain, mapping, policies, scenarios)
