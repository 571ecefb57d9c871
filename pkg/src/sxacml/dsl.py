"""Compact ALFA-like policy language (``.apl`` files).

Grammar (one-token lookahead; see docs/policy-language.md)::

    document    := prefix* item*
    prefix      := 'prefix' IDENT '=' IRIREF
    item        := policyset | policy
    policyset   := 'policyset' IDENT '{' apply? target* item* '}'
    policy      := 'policy' IDENT '{' apply? target* rule* '}'
    rule        := 'rule' IDENT '{' ('permit' | 'deny') target* condition? '}'
    apply       := 'apply' IDENT
    target      := 'target' 'clause' designator (OP | FUNC) constant
    condition   := 'condition' expr
    expr        := conj ('or' conj)*
    conj        := cmp ('and' cmp)*
    cmp         := unary (OP unary)?
    unary       := 'not' unary | primary
    primary     := '(' expr ')' | FUNC ('(' args? ')')? | designator | constant
    designator  := CATEGORY '.' iri ':' KIND '!'?
    constant    := STRING | NUMBER | 'true' | 'false' | iri
                 | 'dateTime' '(' STRING ')' | 'point' '(' NUMBER ',' NUMBER ')'

A document holding exactly one top-level ``policyset`` yields that set;
anything else is wrapped in an implicit ``policyset root`` (firstApplicable).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

from .functions import (
    ONE_AND_ONLY,
    OPERATORS,
    REGISTRY,
    FunctionRefType,
    FunctionRegistry,
    FunctionTypeError,
    ValueType,
)
from .ontology import GeoPoint, format_datetime
from .policy import (
    Apply,
    AttributeDesignator,
    Category,
    CombiningAlgorithm,
    Constant,
    Effect,
    FunctionRef,
    Match,
    Policy,
    PolicySet,
    Rule,
    VALUE_KINDS,
)

MAX_DEPTH = 100
ROOT_ID = "root"


@dataclass(frozen=True)
class SourceSpan:
    """Byte offsets into the UTF-8 input; line and column are 1-based."""

    start: int
    end: int
    line: int
    column: int

    def __post_init__(self):
        if self.start > self.end:
            raise ValueError("span start after end")


class Severity(str, Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True)
class ParseDiagnostic:
    severity: Severity
    message: str
    span: SourceSpan

    def __str__(self) -> str:
        return f"{self.span.line}:{self.span.column}: {self.severity.value}: {self.message}"

    def to_json(self) -> dict:
        return {"severity": self.severity.value, "message": self.message,
                "line": self.span.line, "column": self.span.column,
                "start": self.span.start, "end": self.span.end}


@dataclass
class ParseResult:
    policy_set: PolicySet | None
    diagnostics: list[ParseDiagnostic] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.policy_set is not None

    @property
    def errors(self) -> list[ParseDiagnostic]:
        return [d for d in self.diagnostics if d.severity is Severity.ERROR]


class PolicySyntaxError(Exception):
    def __init__(self, diagnostics: Sequence[ParseDiagnostic], source: str = "<policy>"):
        self.diagnostics = list(diagnostics)
        self.source = source
        lines = "; ".join(str(d) for d in self.diagnostics if d.severity is Severity.ERROR)
        super().__init__(f"{source}: {lines}")


# ---------------------------------------------------------------------------
# Lexer
# ---------------------------------------------------------------------------

KEYWORDS = frozenset({
    "prefix", "policyset", "policy", "rule", "permit", "deny", "target", "clause",
    "condition", "apply", "and", "or", "not", "true", "false", "dateTime", "point",
    "subject", "resource", "action", "environment",
})

_NAME = r"[A-Za-z_][A-Za-z0-9_\-]*"
_TOKEN_RE = re.compile(
    r"(?P<ws>[ \t\r\n\f\ufeff]+|//[^\n]*)"
    r"|(?P<iriref><[A-Za-z][A-Za-z0-9+.\-]*:[^<>\"\s{}|\\^`]*>)"
    r"|(?P<string>\"(?:[^\"\\\n\r]|\\.)*\")"
    r"|(?P<number>-?[0-9]+(?:\.[0-9]+)?(?:[eE][+-]?[0-9]+)?)"
    rf"|(?P<func>fn:{_NAME})"
    rf"|(?P<pname>{_NAME}:[A-Za-z0-9_][A-Za-z0-9_\-]*)"
    rf"|(?P<ident>{_NAME})"
    r"|(?P<op>==|!=|<=|>=|<|>)"
    r"|(?P<punct>[{}(),.=!:])"
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    span: SourceSpan


class _Fail(Exception):
    def __init__(self, message: str, span: SourceSpan):
        self.message = message
        self.span = span


class _Source:
    def __init__(self, text: str):
        self.text = text
        if text.isascii():
            self._bytes = None
        else:
            offsets = [0]
            total = 0
            for ch in text:
                total += len(ch.encode("utf-8", "surrogatepass"))
                offsets.append(total)
            self._bytes = offsets
        self._line_starts = [0] + [m.end() for m in re.finditer("\n", text)]

    def byte(self, i: int) -> int:
        return i if self._bytes is None else self._bytes[i]

    def span(self, start: int, end: int) -> SourceSpan:
        lo, hi = 0, len(self._line_starts) - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if self._line_starts[mid] <= start:
                lo = mid
            else:
                hi = mid - 1
        return SourceSpan(self.byte(start), self.byte(end), lo + 1, start - self._line_starts[lo] + 1)


def tokenize(src: _Source) -> list[Token]:
    text = src.text
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            ch = text[pos]
            if ch == '"':
                raise _Fail("unterminated string literal", src.span(pos, pos + 1))
            raise _Fail(f"unexpected character {ch!r}", src.span(pos, pos + 1))
        kind = m.lastgroup
        if kind != "ws":
            word = m.group()
            if kind == "ident" and word in KEYWORDS:
                kind = word
            elif kind in ("op", "punct"):
                kind = word
            tokens.append(Token(kind, word, src.span(pos, m.end())))
        pos = m.end()
    tokens.append(Token("eof", "", src.span(n, n)))
    return tokens


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

_TYPE_ERROR = object()


def _promote_ints(args: list) -> list | None:
    if not any(isinstance(a, Constant) and a.kind == "integer" for a in args):
        return None
    return [Constant("double", float(a.value)) if isinstance(a, Constant) and a.kind == "integer"
            else a for a in args]


def _type_of(node) -> ValueType | FunctionRefType:
    if isinstance(node, Constant):
        return ValueType(node.kind)
    if isinstance(node, AttributeDesignator):
        return ValueType(node.kind, bag=True)
    if isinstance(node, FunctionRef):
        return FunctionRefType(node.function_id)
    raise TypeError(node)


class _Parser:
    def __init__(self, src: _Source, tokens: list[Token], registry: FunctionRegistry):
        self.src = src
        self.tokens = tokens
        self.i = 0
        self.registry = registry
        self.prefixes: dict[str, str] = {}
        self.diagnostics: list[ParseDiagnostic] = []
        self.depth = 0

    # token helpers
    def peek(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        tok = self.tokens[self.i]
        if tok.kind != "eof":
            self.i += 1
        return tok

    def expect(self, kind: str, what: str | None = None) -> Token:
        tok = self.peek()
        if tok.kind != kind:
            found = "end of input" if tok.kind == "eof" else repr(tok.text)
            raise _Fail(f"expected {what or repr(kind)}, found {found}", tok.span)
        return self.advance()

    def error(self, message: str, span: SourceSpan) -> None:
        self.diagnostics.append(ParseDiagnostic(Severity.ERROR, message, span))

    def warn(self, message: str, span: SourceSpan) -> None:
        self.diagnostics.append(ParseDiagnostic(Severity.WARNING, message, span))

    # document structure
    def document(self) -> PolicySet:
        while self.peek().kind == "prefix":
            self.prefix_decl()
        items = []
        while self.peek().kind in ("policyset", "policy"):
            items.append(self.item())
        tok = self.peek()
        if tok.kind != "eof":
            raise _Fail(f"expected 'policyset', 'policy' or end of input, found {tok.text!r}",
                        tok.span)
        prefixes = tuple(self.prefixes.items())
        if len(items) == 1 and isinstance(items[0][0], PolicySet):
            root = items[0][0]
            return PolicySet(root.id, root.children, root.combining, root.target, prefixes)
        return PolicySet(ROOT_ID, self.unique(items, "policy"), prefixes=prefixes)

    def prefix_decl(self) -> None:
        self.advance()
        name = self.expect("ident", "a prefix name")
        self.expect("=", "'='")
        iri = self.expect("iriref", "an <IRI>")
        ns = iri.text[1:-1]
        if name.text == "fn":
            self.error("prefix 'fn' is reserved for functions", name.span)
        elif self.prefixes.get(name.text, ns) != ns:
            self.error(f"prefix {name.text!r} is already bound to <{self.prefixes[name.text]}>",
                       name.span)
        else:
            self.prefixes[name.text] = ns

    def item(self):
        if self.peek().kind == "policyset":
            return self.policyset()
        return self.policy()

    def unique(self, items: Iterable[tuple], what: str) -> list:
        """Nodes with first-seen ids; later duplicates are reported and dropped."""
        seen = set()
        kept = []
        for node, span in items:
            if node.id in seen:
                self.error(f"duplicate {what} id {node.id!r}", span)
                continue
            seen.add(node.id)
            kept.append(node)
        return kept

    def header(self, keyword: str) -> Token:
        self.advance()
        ident = self.expect("ident", f"a {keyword} id")
        self.expect("{", "'{'")
        return ident

    def apply_clause(self) -> CombiningAlgorithm:
        if self.peek().kind != "apply":
            return CombiningAlgorithm.FIRST_APPLICABLE
        self.advance()
        tok = self.expect("ident", "a combining algorithm")
        try:
            return CombiningAlgorithm(tok.text)
        except ValueError:
            self.error(f"unknown combining algorithm {tok.text!r}", tok.span)
            return CombiningAlgorithm.FIRST_APPLICABLE

    def targets(self) -> list[Match]:
        clauses = []
        while self.peek().kind == "target":
            clause = self.target_clause()
            if clause is not None:
                clauses.append(clause)
        return clauses

    def policyset(self):
        ident = self.header("policyset")
        combining = self.apply_clause()
        target = self.targets()
        children = []
        while self.peek().kind in ("policyset", "policy"):
            children.append(self.item())
        self.expect("}", "'}', 'policy' or 'policyset'")
        return PolicySet(ident.text, self.unique(children, "policy"), combining, target), ident.span

    def policy(self):
        ident = self.header("policy")
        combining = self.apply_clause()
        target = self.targets()
        rules = []
        while self.peek().kind == "rule":
            rules.append(self.rule())
        self.expect("}", "'}' or 'rule'")
        if not rules:
            self.warn(f"policy {ident.text!r} has no rules and is never applicable", ident.span)
        return Policy(ident.text, self.unique(rules, "rule"), combining, target), ident.span

    def rule(self):
        ident = self.header("rule")
        tok = self.peek()
        if tok.kind not in ("permit", "deny"):
            raise _Fail(f"expected 'permit' or 'deny', found {tok.text!r}", tok.span)
        self.advance()
        effect = Effect.PERMIT if tok.kind == "permit" else Effect.DENY
        target = self.targets()
        condition = None
        if self.peek().kind == "condition":
            start = self.advance()
            condition, typ = self.expr()
            if typ is not _TYPE_ERROR and typ != ValueType("boolean"):
                self.error(f"condition must be boolean, got {typ}", start.span)
        self.expect("}", "'}'" if condition is not None else "'target', 'condition' or '}'")
        return Rule(ident.text, effect, target, condition), ident.span

    def target_clause(self) -> Match | None:
        start = self.advance()
        self.expect("clause", "'clause'")
        designator = self.designator()
        tok = self.peek()
        if tok.kind in OPERATORS:
            function_id = OPERATORS[tok.kind]
        elif tok.kind == "func":
            function_id = tok.text
        else:
            raise _Fail(f"expected a comparison operator or function, found {tok.text!r}", tok.span)
        self.advance()
        constant = self.constant()
        if function_id not in self.registry:
            self.error(f"unknown function {function_id}", tok.span)
            return None
        if not self.registry.get(function_id).is_predicate:
            self.error(f"{function_id} cannot be used as a target matcher", tok.span)
            return None
        if designator is None or constant is None:
            return None
        for candidate in (constant, *(_promote_ints([constant]) or [])):
            try:
                self.registry.check(function_id, [ValueType(designator.kind), _type_of(candidate)])
                return Match(designator, function_id, candidate)
            except FunctionTypeError as exc:
                message = str(exc)
        self.error(message, start.span)
        return None

    # expressions
    def expr(self):
        return self.chain("or", "fn:or", self.conj)

    def conj(self):
        return self.chain("and", "fn:and", self.cmp)

    def chain(self, keyword: str, function_id: str, operand):
        first = self.peek().span
        node, typ = operand()
        if self.peek().kind != keyword:
            return node, typ
        nodes, types = [node], [typ]
        while self.peek().kind == keyword:
            self.advance()
            node, typ = operand()
            nodes.append(node)
            types.append(typ)
        return self.apply(function_id, nodes, types, first)

    def cmp(self):
        left, ltyp = self.unary()
        tok = self.peek()
        if tok.kind not in OPERATORS:
            return left, ltyp
        self.advance()
        right, rtyp = self.unary()
        return self.apply(OPERATORS[tok.kind], [left, right], [ltyp, rtyp], tok.span)

    def unary(self):
        tok = self.peek()
        if tok.kind == "not":
            self.advance()
            self.enter(tok)
            node, typ = self.unary()
            self.depth -= 1
            return self.apply("fn:not", [node], [typ], tok.span)
        return self.primary()

    def enter(self, tok: Token) -> None:
        self.depth += 1
        if self.depth > MAX_DEPTH:
            raise _Fail("expression nested too deeply", tok.span)

    def primary(self):
        tok = self.peek()
        if tok.kind == "(":
            self.advance()
            self.enter(tok)
            node = self.expr()
            self.depth -= 1
            self.expect(")", "')'")
            return node
        if tok.kind == "func":
            self.advance()
            if self.peek().kind != "(":
                if tok.text not in self.registry:
                    self.error(f"unknown function {tok.text}", tok.span)
                    return FunctionRef(tok.text), _TYPE_ERROR
                return FunctionRef(tok.text), FunctionRefType(tok.text)
            self.advance()
            self.enter(tok)
            args, types = [], []
            if self.peek().kind != ")":
                while True:
                    node, typ = self.expr()
                    args.append(node)
                    types.append(typ)
                    if self.peek().kind != ",":
                        break
                    self.advance()
            self.expect(")", "',' or ')'")
            self.depth -= 1
            return self.apply(tok.text, args, types, tok.span)
        if tok.kind in ("subject", "resource", "action", "environment"):
            node = self.designator()
            return node, (_TYPE_ERROR if node is None else ValueType(node.kind, bag=True))
        node = self.constant()
        return node, (_TYPE_ERROR if node is None else ValueType(node.kind))

    def apply(self, function_id: str, args: list, types: list, span: SourceSpan):
        if any(t is _TYPE_ERROR for t in types):
            return Apply(function_id, args), _TYPE_ERROR
        if function_id not in self.registry:
            self.error(f"unknown function {function_id}", span)
            return Apply(function_id, args), _TYPE_ERROR
        try:
            checked = self.registry.check(function_id, types)
        except FunctionTypeError as exc:
            promoted = _promote_ints(args)
            if promoted is None:
                self.error(str(exc), span)
                return Apply(function_id, args), _TYPE_ERROR
            ptypes = [_type_of(a) if isinstance(a, Constant) else t for a, t in zip(promoted, types)]
            try:
                checked = self.registry.check(function_id, ptypes)
            except FunctionTypeError:
                self.error(str(exc), span)
                return Apply(function_id, args), _TYPE_ERROR
            args = promoted
        for index in checked.coerced:
            args[index] = Apply(ONE_AND_ONLY, [args[index]])
        return Apply(function_id, args), checked.result

    def designator(self) -> AttributeDesignator | None:
        cat = self.advance()
        if cat.kind not in ("subject", "resource", "action", "environment"):
            raise _Fail("expected an attribute category", cat.span)
        self.expect(".", "'.'")
        iri = self.iri()
        self.expect(":", "':' and an attribute kind")
        kind = self.peek()
        if kind.kind not in ("ident", "dateTime") or kind.text not in VALUE_KINDS:
            raise _Fail(f"expected an attribute kind ({', '.join(VALUE_KINDS)})", kind.span)
        self.advance()
        must = False
        if self.peek().kind == "!":
            self.advance()
            must = True
        if iri is None:
            return None
        return AttributeDesignator(Category(cat.kind), iri, kind.text, must)

    def iri(self) -> str | None:
        tok = self.peek()
        if tok.kind == "iriref":
            self.advance()
            return tok.text[1:-1]
        if tok.kind == "pname":
            self.advance()
            prefix, _, local = tok.text.partition(":")
            if prefix not in self.prefixes:
                self.error(f"undeclared prefix {prefix!r}", tok.span)
                return None
            return self.prefixes[prefix] + local
        raise _Fail(f"expected an IRI, found {tok.text!r}" if tok.kind != "eof"
                    else "expected an IRI, found end of input", tok.span)

    def constant(self) -> Constant | None:
        tok = self.peek()
        kind = tok.kind
        if kind == "string":
            self.advance()
            return Constant("string", self.string_value(tok))
        if kind == "number":
            self.advance()
            return self.number(tok)
        if kind in ("true", "false"):
            self.advance()
            return Constant("boolean", kind == "true")
        if kind in ("iriref", "pname"):
            iri = self.iri()
            return None if iri is None else Constant("iri", iri)
        if kind == "dateTime":
            self.advance()
            self.expect("(", "'('")
            arg = self.expect("string", "a quoted RFC 3339 date-time")
            self.expect(")", "')'")
            try:
                return Constant("dateTime", self.string_value(arg))
            except ValueError as exc:
                self.error(str(exc), arg.span)
                return None
        if kind == "point":
            self.advance()
            self.expect("(", "'('")
            lat = self.expect("number", "a latitude")
            self.expect(",", "','")
            lon = self.expect("number", "a longitude")
            self.expect(")", "')'")
            try:
                return Constant("geoPoint", GeoPoint(float(lat.text), float(lon.text)))
            except ValueError as exc:
                self.error(str(exc), lat.span)
                return None
        found = "end of input" if kind == "eof" else repr(tok.text)
        raise _Fail(f"expected an expression, found {found}", tok.span)

    def string_value(self, tok: Token) -> str:
        try:
            return json.loads(tok.text)
        except ValueError:
            raise _Fail("invalid escape sequence in string literal", tok.span) from None

    def number(self, tok: Token) -> Constant | None:
        text = tok.text
        if any(c in text for c in ".eE"):
            value = float(text)
            if value in (float("inf"), float("-inf")):
                self.error("number out of range", tok.span)
                return None
            return Constant("double", value)
        return Constant("integer", int(text))


def parse_policy_document(text: str | bytes, registry: FunctionRegistry = REGISTRY) -> ParseResult:
    """Parse policy text. Never raises on bad input; problems come back as diagnostics."""
    if isinstance(text, (bytes, bytearray)):
        raw = bytes(text)
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            head = raw[:exc.start]
            line = head.count(b"\n") + 1
            column = exc.start - (head.rfind(b"\n") + 1) + 1
            span = SourceSpan(exc.start, min(exc.end, len(raw)), line, column)
            return ParseResult(None, [ParseDiagnostic(Severity.ERROR, "input is not valid UTF-8", span)])
    src = _Source(text)
    parser = _Parser(src, [], registry)
    try:
        parser.tokens = tokenize(src)
        root = parser.document()
    except _Fail as fail:
        parser.diagnostics.append(ParseDiagnostic(Severity.ERROR, fail.message, fail.span))
        return ParseResult(None, parser.diagnostics)
    if any(d.severity is Severity.ERROR for d in parser.diagnostics):
        return ParseResult(None, parser.diagnostics)
    return ParseResult(root, parser.diagnostics)


def load_policy(text: str | bytes, source: str = "<policy>",
                registry: FunctionRegistry = REGISTRY) -> PolicySet:
    result = parse_policy_document(text, registry)
    if not result.ok:
        raise PolicySyntaxError(result.diagnostics, source)
    return result.policy_set


def combine_documents(roots: Sequence[PolicySet]) -> PolicySet:
    """Join several parsed documents into one firstApplicable root, in order.

    Implicit ``root`` sets are spliced so their policies become direct children.
    """
    if len(roots) == 1:
        return roots[0]
    children = []
    prefixes: dict[str, str] = {}
    for root in roots:
        for name, ns in root.prefixes:
            if prefixes.setdefault(name, ns) != ns:
                raise ValueError(f"prefix {name!r} bound to different namespaces")
        if (root.id == ROOT_ID and not root.target
                and root.combining is CombiningAlgorithm.FIRST_APPLICABLE):
            children.extend(root.children)
        else:
            children.append(PolicySet(root.id, root.children, root.combining, root.target))
    return PolicySet(ROOT_ID, children, prefixes=tuple(prefixes.items()))


# ---------------------------------------------------------------------------
# Serializer
# ---------------------------------------------------------------------------

_PNAME_LOCAL = re.compile(r"^[A-Za-z0-9_][A-Za-z0-9_\-]*$")
_INFIX = {v: k for k, v in OPERATORS.items()}


class _Printer:
    def __init__(self, prefixes: Sequence[tuple[str, str]]):
        self.prefixes = list(prefixes)

    def iri(self, iri: str) -> str:
        best = None
        for name, ns in self.prefixes:
            if iri.startswith(ns) and _PNAME_LOCAL.match(iri[len(ns):]):
                if best is None or len(ns) > len(best[1]):
                    best = (name, ns)
        if best is not None:
            return f"{best[0]}:{iri[len(best[1]):]}"
        return f"<{iri}>"

    def constant(self, c: Constant) -> str:
        if c.kind == "string":
            return json.dumps(c.value, ensure_ascii=False)
        if c.kind == "integer":
            return str(c.value)
        if c.kind == "double":
            return repr(c.value)
        if c.kind == "boolean":
            return "true" if c.value else "false"
        if c.kind == "dateTime":
            return f'dateTime("{format_datetime(c.value)}")'
        if c.kind == "geoPoint":
            return f"point({c.value.lat!r}, {c.value.lon!r})"
        return self.iri(c.value)

    def designator(self, d: AttributeDesignator) -> str:
        return (f"{d.category.value}.{self.iri(d.attribute_id)}:{d.kind}"
                + ("!" if d.must_be_present else ""))

    def expr(self, node) -> str:
        if isinstance(node, Constant):
            return self.constant(node)
        if isinstance(node, AttributeDesignator):
            return self.designator(node)
        if isinstance(node, FunctionRef):
            return node.function_id
        fid = node.function_id
        if fid in ("fn:and", "fn:or") and len(node.args) >= 2:
            word = " and " if fid == "fn:and" else " or "
            return word.join(self.operand(a) for a in node.args)
        if fid in _INFIX and len(node.args) == 2:
            return f"{self.operand(node.args[0])} {_INFIX[fid]} {self.operand(node.args[1])}"
        if fid == "fn:not" and len(node.args) == 1:
            return f"not {self.operand(node.args[0])}"
        return f"{fid}({', '.join(self.expr(a) for a in node.args)})"

    def operand(self, node) -> str:
        text = self.expr(node)
        if isinstance(node, Apply) and (
                (node.function_id in ("fn:and", "fn:or") and len(node.args) >= 2)
                or (node.function_id in _INFIX and len(node.args) == 2)):
            return f"({text})"
        return text

    def match(self, m: Match) -> str:
        op = _INFIX.get(m.function_id, m.function_id)
        return f"target clause {self.designator(m.designator)} {op} {self.constant(m.constant)}"

    def node(self, node, indent: int, out: list[str]) -> None:
        pad = "  " * indent
        keyword = "policy" if isinstance(node, Policy) else "policyset"
        out.append(f"{pad}{keyword} {node.id} {{")
        inner = pad + "  "
        if node.combining is not CombiningAlgorithm.FIRST_APPLICABLE:
            out.append(f"{inner}apply {node.combining.value}")
        for m in node.target:
            out.append(inner + self.match(m))
        if isinstance(node, Policy):
            for rule in node.rules:
                out.append(f"{inner}rule {rule.id} {{")
                out.append(f"{inner}  {rule.effect.value.lower()}")
                for m in rule.target:
                    out.append(f"{inner}  {self.match(m)}")
                if rule.condition is not None:
                    out.append(f"{inner}  condition {self.expr(rule.condition)}")
                out.append(f"{inner}}}")
        else:
            for child in node.children:
                self.node(child, indent + 1, out)
        out.append(f"{pad}}}")


def serialize_policy(ps: PolicySet) -> str:
    """Canonical text: 2-space indent, one clause per line, prefixes first."""
    printer = _Printer(ps.prefixes)
    out = [f"prefix {name} = <{ns}>" for name, ns in ps.prefixes]
    if out:
        out.append("")
    if _is_implicit_root(ps):
        for child in ps.children:
            printer.node(child, 0, out)
    else:
        printer.node(ps, 0, out)
    return "\n".join(out) + "\n"


def _is_implicit_root(ps: PolicySet) -> bool:
    # A bare list of items parses back to the same root, except a lone
    # policyset (it would itself become the root) and no items at all.
    lone_set = len(ps.children) == 1 and isinstance(ps.children[0], PolicySet)
    return (ps.id == ROOT_ID and bool(ps.children) and not ps.target and not lone_set
            and ps.combining is CombiningAlgorithm.FIRST_APPLICABLE)
