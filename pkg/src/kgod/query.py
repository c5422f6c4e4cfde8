"""Restricted SPARQL: SELECT over basic graph patterns, each anchored at a
fixed resource. Anchored patterns are answered from on-demand extractions of
their anchors; anything beyond one hop is rejected, not approximated.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

from .extraction import ExtractionError, ResourceGraph, abstract_triple
from .rdf import (
    BUILTIN_PREFIXES,
    XSD_DOUBLE,
    XSD_INTEGER,
    ForeignIri,
    Iri,
    Literal,
    NamespaceConfig,
    Term,
)


class ParseError(ValueError):
    def __init__(self, position: int, message: str):
        super().__init__(f"at offset {position}: {message}")
        self.position = position
        self.reason = message


class UnsupportedSyntax(ValueError):
    """Recognized SPARQL feature outside the supported fragment."""

    def __init__(self, detail: str):
        super().__init__(f"unsupported SPARQL feature: {detail}")
        self.detail = detail


class NotSupported(ValueError):
    def __init__(self, classification: "Unsupported"):
        super().__init__(f"query not evaluable: {classification.reason}")
        self.classification = classification


class QueryEvaluationError(Exception):
    def __init__(self, anchor: Iri, cause: Exception):
        super().__init__(f"extraction failed for {anchor.value}: {cause}")
        self.anchor = anchor
        self.cause = cause


@dataclass(frozen=True)
class Variable:
    name: str


PatternTerm = object  # Variable | Iri | Literal


@dataclass(frozen=True)
class TriplePattern:
    subject: PatternTerm
    predicate: PatternTerm
    object: PatternTerm

    def __post_init__(self):
        if isinstance(self.subject, Literal) or isinstance(self.predicate, Literal):
            raise ValueError("literals cannot appear in subject or predicate position")

    def variables(self) -> list[str]:
        return [t.name for t in (self.subject, self.predicate, self.object) if isinstance(t, Variable)]


@dataclass(frozen=True)
class QueryAst:
    select_vars: tuple[str, ...]
    patterns: tuple[TriplePattern, ...]
    star: bool = False


@dataclass(frozen=True)
class Anchor:
    pattern_index: int
    position: str  # "subject" | "object"
    iri: Iri


@dataclass(frozen=True)
class Supported:
    anchors: tuple[Anchor, ...]


@dataclass(frozen=True)
class Unsupported:
    reason: str  # "NoFixedResource" | "UnanchoredVariable" | "UnsupportedSyntax"
    pattern_index: int | None = None
    detail: str | None = None


_UNSUPPORTED_KEYWORDS = {
    "OPTIONAL", "FILTER", "UNION", "MINUS", "GRAPH", "SERVICE", "BIND", "VALUES",
    "LIMIT", "OFFSET", "ORDER", "GROUP", "HAVING", "ASK", "CONSTRUCT", "DESCRIBE",
}

_TOKEN_RE = re.compile(
    r"""
      (?P<ws>\s+|\#[^\n]*)
    | (?P<iriref><[^<>"{}|^`\\\x00-\x20]*>)
    | (?P<var>[?$][A-Za-z_][A-Za-z0-9_]*)
    | (?P<string>"(?:[^"\\\n]|\\.)*")
    | (?P<dtsep>\^\^)
    | (?P<langtag>@[A-Za-z]+(?:-[A-Za-z0-9]+)*)
    | (?P<pname>[A-Za-z][A-Za-z0-9_.-]*:(?:[A-Za-z0-9_%()'!*-]|\.(?=[A-Za-z0-9_%()'!*.-]))*)
    | (?P<number>[+-]?\d+(?:\.\d+)?)
    | (?P<word>[A-Za-z][A-Za-z0-9_]*)
    | (?P<punct>[{}.;,*()/|^])
    | (?P<junk>.)
    """,
    re.X | re.S,
)

_STRING_ESCAPES = {"t": "\t", "b": "\b", "n": "\n", "r": "\r", "f": "\f", '"': '"', "'": "'", "\\": "\\"}


@dataclass
class _Token:
    kind: str
    value: str
    pos: int


def _tokenize(text: str) -> list[_Token]:
    # Unknown characters become "junk" tokens so the parser can still surface
    # a recognized-but-unsupported keyword seen before them.
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(_Token(kind, m.group(), pos))
        pos = m.end()
    tokens.append(_Token("eof", "", len(text)))
    return tokens


def _unescape_string(raw: str, pos: int) -> str:
    body = raw[1:-1]

    def repl(m: re.Match) -> str:
        if m.group(1):
            return chr(int(m.group(1), 16))
        ch = m.group(2)
        if ch not in _STRING_ESCAPES:
            raise ParseError(pos, f"invalid escape \\{ch}")
        return _STRING_ESCAPES[ch]

    return re.sub(r"\\(?:u([0-9A-Fa-f]{4})|(.))", repl, body)


class _QueryParser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0
        self.prefixes = dict(BUILTIN_PREFIXES)

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def next(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message: str):
        raise ParseError(self.peek().pos, message)

    def is_word(self, word: str) -> bool:
        tok = self.peek()
        return tok.kind == "word" and tok.value.upper() == word

    def expect_word(self, word: str):
        if not self.is_word(word):
            self.error(f"expected {word}")
        self.next()

    def expect_punct(self, value: str):
        tok = self.peek()
        if tok.kind != "punct" or tok.value != value:
            self.error(f"expected {value!r}")
        self.next()

    def check_unsupported(self):
        tok = self.peek()
        if tok.kind == "word" and tok.value.upper() in _UNSUPPORTED_KEYWORDS:
            raise UnsupportedSyntax(tok.value.upper())

    def resolve_pname(self, tok: _Token) -> Iri:
        prefix, local = tok.value.split(":", 1)
        base = self.prefixes.get(prefix)
        if base is None:
            raise ParseError(tok.pos, f"unknown prefix {prefix!r}")
        try:
            return Iri(base + local)
        except ValueError as exc:
            raise ParseError(tok.pos, str(exc))

    def parse_iri_token(self) -> Iri:
        tok = self.peek()
        if tok.kind == "iriref":
            self.next()
            try:
                return Iri(tok.value[1:-1])
            except ValueError as exc:
                raise ParseError(tok.pos, str(exc))
        if tok.kind == "pname":
            self.next()
            return self.resolve_pname(tok)
        self.error("expected IRI")

    def parse_term(self, position: str):
        self.check_unsupported()
        tok = self.peek()
        if tok.kind == "var":
            self.next()
            return Variable(tok.value[1:])
        if tok.kind in ("iriref", "pname"):
            return self.parse_iri_token()
        if tok.kind == "word" and tok.value == "a" and position == "predicate":
            self.next()
            return Iri(BUILTIN_PREFIXES["rdf"] + "type")
        if tok.kind == "string":
            self.next()
            lexical = _unescape_string(tok.value, tok.pos)
            follow = self.peek()
            if follow.kind == "langtag":
                self.next()
                return Literal(lexical, language=follow.value[1:])
            if follow.kind == "dtsep":
                self.next()
                return Literal(lexical, datatype=self.parse_iri_token())
            return Literal(lexical)
        if tok.kind == "number":
            self.next()
            datatype = XSD_DOUBLE if "." in tok.value else XSD_INTEGER
            return Literal(tok.value, datatype=Iri(datatype))
        self.error(f"expected {position} term")

    def parse(self) -> QueryAst:
        while self.is_word("PREFIX"):
            self.next()
            tok = self.peek()
            if tok.kind != "pname" or not tok.value.endswith(":"):
                self.error("expected prefix declaration like dbo:")
            self.next()
            iri_tok = self.peek()
            if iri_tok.kind != "iriref":
                self.error("expected <IRI> in prefix declaration")
            self.next()
            self.prefixes[tok.value[:-1]] = iri_tok.value[1:-1]
        self.check_unsupported()
        self.expect_word("SELECT")
        if self.is_word("DISTINCT") or self.is_word("REDUCED"):
            self.next()
        select_vars: list[str] = []
        star = False
        tok = self.peek()
        if tok.kind == "punct" and tok.value == "*":
            star = True
            self.next()
        else:
            while self.peek().kind == "var":
                select_vars.append(self.next().value[1:])
            if not select_vars:
                self.error("expected variables or *")
        self.check_unsupported()
        self.expect_word("WHERE")
        self.expect_punct("{")
        patterns: list[TriplePattern] = []
        while True:
            self.check_unsupported()
            tok = self.peek()
            if tok.kind == "punct" and tok.value == "}":
                self.next()
                break
            if tok.kind == "eof":
                self.error("unclosed '{'")
            subject = self.parse_term("subject")
            predicate = self.parse_term("predicate")
            follow = self.peek()
            if follow.kind == "punct" and follow.value in "/|^":
                raise UnsupportedSyntax("property path")
            obj = self.parse_term("object")
            follow = self.peek()
            if follow.kind == "punct" and follow.value in "/|^,;":
                raise UnsupportedSyntax("property path" if follow.value in "/|^" else f"'{follow.value}' list notation")
            try:
                patterns.append(TriplePattern(subject, predicate, obj))
            except ValueError as exc:
                raise ParseError(tok.pos, str(exc))
            if self.peek().kind == "punct" and self.peek().value == ".":
                self.next()
        tok = self.peek()
        if tok.kind != "eof":
            self.check_unsupported()
            self.error(f"unexpected trailing {tok.value!r}")
        if not patterns:
            raise ParseError(tok.pos, "empty pattern block")
        pattern_vars: list[str] = []
        for p in patterns:
            for name in p.variables():
                if name not in pattern_vars:
                    pattern_vars.append(name)
        if star:
            select_vars = pattern_vars
        else:
            for name in select_vars:
                if name not in pattern_vars:
                    raise ParseError(0, f"selected variable ?{name} not used in any pattern")
        return QueryAst(select_vars=tuple(select_vars), patterns=tuple(patterns), star=star)


def parse_query(text: str) -> QueryAst:
    return _QueryParser(text).parse()


def classify(ast: QueryAst) -> Supported | Unsupported:
    anchors = []
    for i, pattern in enumerate(ast.patterns):
        if isinstance(pattern.subject, Iri):
            anchors.append(Anchor(i, "subject", pattern.subject))
        elif isinstance(pattern.object, Iri):
            anchors.append(Anchor(i, "object", pattern.object))
        else:
            return Unsupported(reason="NoFixedResource", pattern_index=i)
    return Supported(anchors=tuple(anchors))


def _match_term(pattern_term, value: Term, row: dict) -> dict | None:
    if isinstance(pattern_term, Variable):
        bound = row.get(pattern_term.name)
        if bound is None:
            row = dict(row)
            row[pattern_term.name] = value
            return row
        return row if bound == value else None
    return row if pattern_term == value else None


def _match_pattern(pattern: TriplePattern, triples) -> list[dict]:
    rows = []
    for t in triples:
        row = _match_term(pattern.subject, t.subject, {})
        if row is None:
            continue
        row = _match_term(pattern.predicate, t.predicate, row)
        if row is None:
            continue
        row = _match_term(pattern.object, t.object, row)
        if row is None:
            continue
        if row not in rows:
            rows.append(row)
    return rows


def _join(left: list[dict], right: list[dict]) -> list[dict]:
    out = []
    for l in left:
        for r in right:
            if all(l[k] == v for k, v in r.items() if k in l):
                merged = dict(l)
                merged.update(r)
                if merged not in out:
                    out.append(merged)
    return out


@dataclass(frozen=True)
class BindingSet:
    variables: tuple[str, ...]
    rows: tuple

    def as_set(self) -> set:
        return {frozenset(row.items()) for row in self.rows}


def evaluate(ast: QueryAst, extractor, ns: NamespaceConfig | None = None) -> BindingSet:
    """Evaluate a supported query; `extractor` maps an anchor Iri to its
    ResourceGraph (the service passes its cached extraction here)."""
    ns = ns or NamespaceConfig()
    classification = classify(ast)
    if isinstance(classification, Unsupported):
        raise NotSupported(classification)
    graphs: dict[Iri, ResourceGraph] = {}
    for anchor in classification.anchors:
        if anchor.iri not in graphs:
            try:
                graphs[anchor.iri] = extractor(anchor.iri)
            except (ExtractionError, ForeignIri) as exc:
                # ForeignIri: the anchor lives outside the resource namespace,
                # so there is no page to extract on demand.
                raise QueryEvaluationError(anchor.iri, exc) from exc
    rows: list[dict] = [{}]
    for pattern, anchor in zip(ast.patterns, classification.anchors):
        rg = graphs[anchor.iri]
        if anchor.position == "subject":
            candidates = list(rg.outgoing)
            t = abstract_triple(rg, ns)
            if t is not None:
                candidates.append(t)
        else:
            candidates = list(rg.ingoing)
        rows = _join(rows, _match_pattern(pattern, candidates))
        if not rows:
            break
    projected = []
    for row in rows:
        p = {name: row[name] for name in ast.select_vars}
        if p not in projected:
            projected.append(p)
    return BindingSet(variables=tuple(ast.select_vars), rows=tuple(projected))


def term_to_json(term: Term) -> dict:
    if isinstance(term, Iri):
        return {"type": "uri", "value": term.value}
    obj = {"type": "literal", "value": term.lexical}
    if term.language is not None:
        obj["xml:lang"] = term.language
    elif term.datatype is not None:
        obj["datatype"] = term.datatype.value
    return obj


def bindings_to_sparql_json(b: BindingSet) -> bytes:
    bindings = [
        {name: term_to_json(row[name]) for name in b.variables if name in row}
        for row in b.rows
    ]
    bindings.sort(key=lambda row: json.dumps(row, sort_keys=True, ensure_ascii=False))
    doc = {"head": {"vars": list(b.variables)}, "results": {"bindings": bindings}}
    return json.dumps(doc, separators=(",", ":"), ensure_ascii=False).encode("utf-8")
