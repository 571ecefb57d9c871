"""Reference implementations used as test oracles.

Deliberately independent of the ``sxacml`` package: its own JSON reading,
its own naive fixpoint reasoner (every rule re-applied to all facts until
nothing changes, no precomputed closure), its own great-circle formula, and a
hand-written reading of the bundled fixture policies.
"""

from __future__ import annotations

import json
import math
from datetime import datetime, timezone
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "src" / "sxacml" / "fixtures"

EARTH_RADIUS_M = 6_371_000.0


# ---------------------------------------------------------------------------
# Literals and IRIs
# ---------------------------------------------------------------------------

def expand(text, prefixes):
    head, sep, tail = text.partition(":")
    if sep and head in prefixes:
        return prefixes[head] + tail
    if "://" in text or text.startswith("urn:"):
        return text
    raise ValueError(f"cannot expand {text!r}")


def compact(iri, prefixes):
    best = None
    for name, ns in sorted(prefixes.items()):
        if iri.startswith(ns) and len(iri) > len(ns) and (best is None or len(ns) > len(prefixes[best])):
            best = name
    return iri if best is None else f"{best}:{iri[len(prefixes[best]):]}"


def epoch_ms(text):
    text = text.replace("Z", "+00:00").replace("z", "+00:00")
    dt = datetime.fromisoformat(text)
    if dt.utcoffset() is None:
        raise ValueError("dateTime without offset")
    delta = dt - datetime(1970, 1, 1, tzinfo=timezone.utc)
    return (delta.days * 86_400_000 + delta.seconds * 1000 + delta.microseconds // 1000)


def literal(obj):
    """Normalize a JSON literal to a hashable (kind, value) pair."""
    kind, value = obj["kind"], obj["value"]
    if kind == "dateTime":
        return ("dateTime", epoch_ms(value))
    if kind == "geoPoint":
        return ("geoPoint", (float(value["lat"]), float(value["lon"])))
    if kind == "double":
        return ("double", float(value))
    return (kind, value)


def compare(op, a, b):
    (ka, va), (kb, vb) = a, b
    numeric = {"integer", "double"}
    if ka != kb and not (ka in numeric and kb in numeric):
        return False
    op = {"==": "=", "≠": "!=", "≤": "<=", "≥": ">="}.get(op, op)
    if op == "=":
        return va == vb
    if op == "!=":
        return va != vb
    return {"<": va < vb, "<=": va <= vb, ">": va > vb, ">=": va >= vb}[op]


# ---------------------------------------------------------------------------
# Knowledge base and naive reasoner
# ---------------------------------------------------------------------------

class RefKB:
    """Facts as plain sets of tuples."""

    def __init__(self):
        self.prefixes = {}
        self.declared = set()
        self.edges = set()             # (sub, sup) between named classes
        self.definitions = []          # (name, expr)
        self.oprops = set()            # (prop, domain, range)
        self.dprops = set()            # (prop, domain, kind)
        self.types = set()             # (individual, class)
        self.objects = set()           # (subject, prop, object)
        self.data = set()              # (subject, prop, (kind, value))

    def copy(self):
        kb = RefKB()
        kb.prefixes = dict(self.prefixes)
        for name in ("declared", "edges", "oprops", "dprops", "types", "objects", "data"):
            setattr(kb, name, set(getattr(self, name)))
        kb.definitions = list(self.definitions)
        return kb

    def add_document(self, doc):
        for name, ns in doc.get("prefixes", {}).items():
            if self.prefixes.setdefault(name, ns) != ns:
                raise ValueError(f"prefix clash on {name}")
        p = doc.get("prefixes", {})
        x = lambda t: expand(t, p)
        for c in doc.get("classes", []):
            self.declared.add(x(c))
        for sub, sup in doc.get("subClassOf", []):
            if isinstance(sub, str):
                self.edges.add((x(sub), x(sup)))
            else:
                self.definitions.append((x(sup), self.expr(sub, p)))
        for entry in doc.get("equivalent", []):
            self.definitions.append((x(entry["name"]), self.expr(entry["expr"], p)))
        for entry in doc.get("objectProperties", []):
            self.oprops.add((x(entry["name"]), x(entry["domain"]) if entry.get("domain") else None,
                             x(entry["range"]) if entry.get("range") else None))
        for entry in doc.get("dataProperties", []):
            self.dprops.add((x(entry["name"]), x(entry["domain"]) if entry.get("domain") else None,
                             entry.get("range")))
        for ind in doc.get("individuals", []):
            name = x(ind["name"])
            for t in ind.get("types", []):
                self.types.add((name, x(t)))
            for prop in ind.get("props", []):
                if "o" in prop:
                    self.objects.add((name, x(prop["p"]), x(prop["o"])))
                else:
                    self.data.add((name, x(prop["p"]), literal(prop["literal"])))
        self.definitions = sorted(set(self.definitions), key=repr)

    def expr(self, obj, p):
        if isinstance(obj, str):
            return ("named", expand(obj, p))
        (key, body), = obj.items()
        if key == "named":
            return ("named", expand(body, p))
        if key == "and":
            return ("and", tuple(self.expr(e, p) for e in body))
        if key == "some":
            return ("some", expand(body["p"], p), self.expr(body["expr"], p))
        if key == "hasValue":
            v = body["value"]
            v = literal(v) if isinstance(v, dict) else expand(v, p)
            return ("hasValue", expand(body["p"], p), v)
        if key == "data":
            return ("data", expand(body["p"], p), body["op"], literal(body["literal"]))
        raise ValueError(key)

    @property
    def individuals(self):
        out = {i for i, _ in self.types}
        out |= {s for s, _, _ in self.objects} | {o for _, _, o in self.objects}
        out |= {s for s, _, _ in self.data}
        return out

    @property
    def classes(self):
        out = set(self.declared) | {c for _, c in self.types}
        for a, b in self.edges:
            out |= {a, b}
        for name, e in self.definitions:
            out.add(name)
            out |= expr_classes(e)
        for _, d, r in self.oprops:
            out |= {c for c in (d, r) if c}
        for _, d, _k in self.dprops:
            if d:
                out.add(d)
        return out

    def axiom_set(self):
        """Every axiom as a hashable tuple (used for counting)."""
        out = {("class", c) for c in self.declared}
        out |= {("sub", ("named", a), b) for a, b in self.edges}
        out |= {("def", n, e) for n, e in self.definitions}
        out |= {("oprop",) + t for t in self.oprops}
        out |= {("dprop",) + t for t in self.dprops}
        out |= {("type",) + t for t in self.types}
        out |= {("obj",) + t for t in self.objects}
        out |= {("data",) + t for t in self.data}
        return out


def expr_classes(e):
    if e[0] == "named":
        return {e[1]}
    if e[0] == "and":
        return set().union(*(expr_classes(x) for x in e[1]))
    if e[0] == "some":
        return expr_classes(e[2])
    return set()


def satisfies(kb, types, ind, e):
    tag = e[0]
    if tag == "named":
        return (ind, e[1]) in types
    if tag == "and":
        return all(satisfies(kb, types, ind, x) for x in e[1])
    if tag == "some":
        return any(satisfies(kb, types, o, e[2])
                   for s, p, o in kb.objects if s == ind and p == e[1])
    if tag == "hasValue":
        if isinstance(e[2], str):
            return (ind, e[1], e[2]) in kb.objects
        return (ind, e[1], e[2]) in kb.data
    if tag == "data":
        return any(compare(e[2], v, e[3]) for s, p, v in kb.data if s == ind and p == e[1])
    raise ValueError(tag)


def infer_types(kb):
    """Naive fixpoint over all rules; returns the full set of (individual, class)."""
    types = set(kb.types)
    inds = kb.individuals
    while True:
        new = set()
        for i, c in types:
            for a, b in kb.edges:
                if a == c:
                    new.add((i, b))
        for s, p, o in kb.objects:
            for q, d, r in kb.oprops:
                if q == p:
                    if d:
                        new.add((s, d))
                    if r:
                        new.add((o, r))
        for s, p, _v in kb.data:
            for q, d, _k in kb.dprops:
                if q == p and d:
                    new.add((s, d))
        for name, e in kb.definitions:
            for i in inds:
                if satisfies(kb, types, i, e):
                    new.add((i, name))
        if new <= types:
            return types
        types |= new


def instances_of(types, cls):
    return sorted(i for i, c in types if c == cls)


def types_of(types, ind):
    return sorted(c for i, c in types if i == ind)


# ---------------------------------------------------------------------------
# Geometry and time
# ---------------------------------------------------------------------------

def great_circle_m(p, q):
    """atan2 form of the haversine formula."""
    lat1, lon1 = map(math.radians, p)
    lat2, lon2 = map(math.radians, q)
    a = (math.sin((lat2 - lat1) / 2) ** 2
         + math.cos(lat1) * math.cos(lat2) * math.sin((lon2 - lon1) / 2) ** 2)
    return EARTH_RADIUS_M * 2 * math.atan2(math.sqrt(a), math.sqrt(1 - a))


# ---------------------------------------------------------------------------
# Fixture pipeline
# ---------------------------------------------------------------------------

def load_manifest(path=FIXTURES / "manifest.json"):
    return json.loads(Path(path).read_text(encoding="utf-8"))


def load_stack(scenario=None, manifest=None):
    manifest = manifest or load_manifest()
    kb = RefKB()
    for e in manifest["entries"]:
        if e["kind"] == "ontology" and e.get("scenario") in (None, scenario):
            kb.add_document(json.loads((FIXTURES / e["path"]).read_text(encoding="utf-8")))
    return kb


def policy_decision(kb, types, request, ind):
    """The bundled policy set, hand-translated: legal policy first, then owner preferences."""
    aco = kb.prefixes["aco"]
    fit = kb.prefixes["fit"]
    org = kb.prefixes["org"]
    subject, action, resource = ind["subject"], ind["action"], ind["resource"]
    if ((subject, org + "PoliceDepartment") in types and (action, aco + "Read") in types
            and (resource, fit + "Location") in types):
        env = {a["id"]: a for a in request.get("environment", [])}
        event_point = env.get("aco:eventLocation")
        event_time = env.get("aco:eventTime")
        points = [v for s, p, (k, v) in kb.data if s == resource and p == fit + "locationPoint"]
        times = [v for s, p, (k, v) in kb.data if s == resource and p == fit + "locationTime"]
        if event_point is None or event_time is None or len(points) != 1 or len(times) != 1:
            return "Indeterminate"
        ep = literal(event_point)[1]
        et = literal(event_time)[1]
        inside = great_circle_m(points[0], ep) <= 1000.0 and abs(times[0] - et) <= 3_600_000
        return "Permit" if inside else "Deny"
    request_types = {c for i, c in types if i == ind["request"]}
    if aco + "DeniedRequest" in request_types:
        return "Deny"
    if aco + "PermittedRequest" in request_types:
        return "Permit"
    return "NotApplicable"


def request_kb(kb, request, resource):
    """Add the request individuals for one concrete resource."""
    aco = kb.prefixes["aco"]
    out = kb.copy()
    ind = {"request": "urn:oracle:request", "resource": resource}
    out.types.add((ind["request"], aco + "Request"))
    for category, link, cls in (("subject", "hasSubject", "Subject"),
                                ("resource", "hasResource", "Resource"),
                                ("action", "hasAction", "Action"),
                                ("environment", "hasEnvironment", "Environment")):
        attrs = request.get(category, [])
        if not attrs:
            continue
        name = ind.get(category, f"urn:oracle:{category}")
        ind[category] = name
        out.objects.add((ind["request"], aco + link, name))
        out.types.add((name, aco + cls))
        for a in attrs:
            if a["id"] == "aco:classId" and category != "resource":
                out.types.add((name, expand(a["value"], kb.prefixes)))
    for category in ("subject", "action"):
        ind.setdefault(category, f"urn:oracle:{category}")
    return out, ind


def expected_decisions(scenario):
    """Expected decision document for a class-targeted fixture scenario."""
    manifest = load_manifest()
    kb = load_stack(scenario, manifest)
    request_path = next(FIXTURES / e["path"] for e in manifest["entries"]
                        if e["kind"] == "request" and e.get("scenario") == scenario)
    request = json.loads(request_path.read_text(encoding="utf-8"))
    class_id = next(expand(a["value"], kb.prefixes) for a in request["resource"]
                    if a["id"] == "aco:classId")
    base_types = infer_types(kb)
    out = []
    for resource in instances_of(base_types, class_id):
        rkb, ind = request_kb(kb, request, resource)
        types = infer_types(rkb)
        out.append({"resource": compact(resource, kb.prefixes),
                    "decision": policy_decision(rkb, types, request, ind)})
    if not out:
        out.append({"resource": "<as-requested>", "decision": "NotApplicable"})
    return {"decisions": out}


def dumps(doc):
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
