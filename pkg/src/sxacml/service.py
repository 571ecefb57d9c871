"""HTTP decision service.

Endpoints (JSON in, JSON out):

``POST /v1/decision``
    request document -> decision document (200); unreadable request -> 400
``PUT /v1/policies``
    ``{"documents": ["<policy text>", ...]}`` replaces the active policy set
``PUT /v1/ontologies``
    ``{"documents": [{...}, ...], "mapping": [{...}, ...]}`` replaces the ontology stack
``GET /v1/health``
    liveness and a summary of the active configuration

Reloads answer 204 on success and 422 with diagnostics on failure, in which
case the previous state stays active. Each request reads the active engine
once, so it sees either the old or the new state, never a mix.
"""

from __future__ import annotations

import json
import logging
import threading
from dataclasses import dataclass, field
from http import HTTPStatus
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Sequence

from .ontology import KnowledgeBase
from .pdp import Engine, LoadError, load_ontology_texts, load_policy_texts
from .policy import PolicySet
from .request import RequestFormatError

logger = logging.getLogger(__name__)

MAX_BODY = 16 * 1024 * 1024


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class EngineConfig:
    listen: str = "127.0.0.1:8080"
    ontology_paths: tuple = ()
    mapping_paths: tuple = ()
    policy_paths: tuple = ()
    log_level: str = "INFO"

    @property
    def address(self) -> tuple[str, int]:
        host, sep, port = self.listen.rpartition(":")
        if not sep or not port.isdigit():
            raise ConfigError(f"listen address must be host:port, got {self.listen!r}")
        return host or "0.0.0.0", int(port)

    def validate(self) -> None:
        self.address  # raises ConfigError when malformed
        if not isinstance(logging.getLevelName(self.log_level.upper()), int):
            raise ConfigError(f"unknown log level {self.log_level!r}")
        for path in (*self.ontology_paths, *self.mapping_paths, *self.policy_paths):
            p = Path(path)
            if not p.is_file():
                raise ConfigError(f"{path}: not a readable file")

    def build_engine(self) -> Engine:
        self.validate()
        try:
            return Engine.from_files(self.policy_paths, self.ontology_paths, self.mapping_paths)
        except LoadError as exc:
            raise ConfigError(str(exc)) from None


@dataclass
class ServiceState:
    """The active engine. Reloads serialize on ``_lock``; readers never lock."""

    engine: Engine
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def replace_policies(self, policies: PolicySet) -> None:
        with self._lock:
            current = self.engine
            self.engine = Engine(policies, current.domain, current.mapping, current.registry)

    def replace_ontologies(self, domain: KnowledgeBase, mapping: KnowledgeBase) -> None:
        with self._lock:
            current = self.engine
            self.engine = Engine(current.policies, domain, mapping, current.registry)


def _policy_documents(payload) -> PolicySet:
    if not isinstance(payload, dict) or not isinstance(payload.get("documents"), list) \
            or not all(isinstance(d, str) for d in payload["documents"]):
        raise ValueError('body must be {"documents": ["<policy text>", ...]}')
    return load_policy_texts((f"documents[{i}]", text) for i, text in enumerate(payload["documents"]))


def _ontology_documents(payload) -> tuple[KnowledgeBase, KnowledgeBase]:
    if not isinstance(payload, dict) or set(payload) - {"documents", "mapping"} \
            or not isinstance(payload.get("documents"), list) \
            or not isinstance(payload.get("mapping", []), list):
        raise ValueError('body must be {"documents": [...], "mapping": [...]}')
    domain = load_ontology_texts((f"documents[{i}]", _as_text(d))
                                 for i, d in enumerate(payload["documents"]))
    mapping = load_ontology_texts((f"mapping[{i}]", _as_text(d))
                                  for i, d in enumerate(payload.get("mapping", [])))
    return domain, mapping


def _as_text(doc) -> str:
    return doc if isinstance(doc, str) else json.dumps(doc)


class DecisionHandler(BaseHTTPRequestHandler):
    server_version = "sxacml"
    protocol_version = "HTTP/1.1"

    @property
    def state(self) -> ServiceState:
        return self.server.state

    def log_message(self, format, *args):
        logger.debug("%s " + format, self.address_string(), *args)

    def send_json(self, status: HTTPStatus, body: str | dict | None = None) -> None:
        data = b""
        if body is not None:
            text = body if isinstance(body, str) else json.dumps(body, indent=2, sort_keys=True) + "\n"
            data = text.encode("utf-8")
        self.send_response(status)
        if data:
            self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        if data:
            self.wfile.write(data)

    def read_body(self) -> bytes | None:
        try:
            length = int(self.headers.get("Content-Length") or 0)
        except ValueError:
            length = -1
        if length < 0 or length > MAX_BODY:
            self.send_json(HTTPStatus.BAD_REQUEST, {"error": "invalid Content-Length"})
            return None
        return self.rfile.read(length)

    def error(self, status: HTTPStatus, message: str, diagnostics: Sequence = ()) -> None:
        body = {"error": message}
        if diagnostics:
            body["diagnostics"] = [d.to_json() for d in diagnostics]
        self.send_json(status, body)

    def do_GET(self):
        if self.path != "/v1/health":
            return self.error(HTTPStatus.NOT_FOUND, f"no route {self.path}")
        engine = self.state.engine
        self.send_json(HTTPStatus.OK, {"status": "ok", "axioms": len(engine.knowledge),
                                       "policies": len(engine.policies.children)})

    def do_POST(self):
        if self.path != "/v1/decision":
            return self.error(HTTPStatus.NOT_FOUND, f"no route {self.path}")
        body = self.read_body()
        if body is None:
            return
        engine = self.state.engine
        try:
            decisions = engine.decide_document(body)
        except RequestFormatError as exc:
            return self.error(HTTPStatus.BAD_REQUEST, str(exc))
        self.send_json(HTTPStatus.OK, engine.decision_text(decisions))

    def do_PUT(self):
        routes = {"/v1/policies": self._put_policies, "/v1/ontologies": self._put_ontologies}
        handler = routes.get(self.path)
        if handler is None:
            return self.error(HTTPStatus.NOT_FOUND, f"no route {self.path}")
        body = self.read_body()
        if body is None:
            return
        try:
            payload = json.loads(body.decode("utf-8"))
        except (UnicodeDecodeError, ValueError) as exc:
            return self.error(HTTPStatus.BAD_REQUEST, f"invalid JSON body: {exc}")
        try:
            handler(payload)
        except ValueError as exc:
            return self.error(HTTPStatus.BAD_REQUEST, str(exc))
        except LoadError as exc:
            logger.warning("reload rejected: %s", exc)
            return self.error(HTTPStatus.UNPROCESSABLE_ENTITY, str(exc), exc.diagnostics)
        self.send_json(HTTPStatus.NO_CONTENT)

    def _put_policies(self, payload) -> None:
        self.state.replace_policies(_policy_documents(payload))
        logger.info("policy set replaced")

    def _put_ontologies(self, payload) -> None:
        domain, mapping = _ontology_documents(payload)
        self.state.replace_ontologies(domain, mapping)
        logger.info("ontology stack replaced")


class DecisionServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, address: tuple[str, int], state: ServiceState):
        self.state = state
        super().__init__(address, DecisionHandler)

    @property
    def url(self) -> str:
        host, port = self.server_address[:2]
        return f"http://{host}:{port}"


def make_server(config: EngineConfig, engine: Engine | None = None) -> DecisionServer:
    """Build (but do not start) a server; fails fast on bad config or files."""
    engine = engine or config.build_engine()
    try:
        return DecisionServer(config.address, ServiceState(engine))
    except OSError as exc:
        raise ConfigError(f"cannot listen on {config.listen}: {exc.strerror or exc}") from None


def serve(config: EngineConfig) -> None:
    server = make_server(config)
    logger.info("listening on %s", server.url)
    try:
        server.serve_forever()
    finally:
        server.server_close()
