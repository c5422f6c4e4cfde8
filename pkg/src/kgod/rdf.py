"""RDF terms, triples, graphs, the page-title/IRI codec, and serialization.

Everything here is immutable and pure; serialization is byte-deterministic
for equal graphs.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Union
from urllib.parse import quote, unquote

RDF_NS = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
RDFS_NS = "http://www.w3.org/2000/01/rdf-schema#"
XSD_NS = "http://www.w3.org/2001/XMLSchema#"
DEFAULT_RESOURCE_BASE = "http://dbpedia.org/resource/"
DEFAULT_ONTOLOGY_BASE = "http://dbpedia.org/ontology/"

# Built-in prefixes shared by the mapping file format and the query grammar.
BUILTIN_PREFIXES = {
    "dbr": DEFAULT_RESOURCE_BASE,
    "dbo": DEFAULT_ONTOLOGY_BASE,
    "rdf": RDF_NS,
    "rdfs": RDFS_NS,
    "xsd": XSD_NS,
}

XSD_INTEGER = XSD_NS + "integer"
XSD_DOUBLE = XSD_NS + "double"
XSD_DATE = XSD_NS + "date"

# Characters never allowed inside an IRI.
_IRI_FORBIDDEN = set(' <>"{}|^`\\')
_SCHEME_RE = re.compile(r"^[A-Za-z][A-Za-z0-9+.-]*:")

# Local-name characters kept verbatim by the title codec, mirroring the
# visible naming of DBpedia-style resource IRIs. urllib never encodes
# alphanumerics or "_.-~"; the rest of the safe set is passed explicitly.
LOCAL_SAFE = "/:(),!*'"


class EmptyTitle(ValueError):
    """Raised for whitespace-only page titles."""


class ForeignIri(ValueError):
    """Raised when an IRI does not live under the configured resource base."""


class NTriplesSyntaxError(ValueError):
    """Malformed N-Triples input; carries the 1-based line number."""

    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


@dataclass(frozen=True, order=True)
class Iri:
    value: str

    def __post_init__(self):
        if not _SCHEME_RE.match(self.value):
            raise ValueError(f"not an absolute IRI: {self.value!r}")
        for ch in self.value:
            if ch in _IRI_FORBIDDEN or ord(ch) < 0x20 or ord(ch) == 0x7F:
                raise ValueError(f"forbidden character {ch!r} in IRI: {self.value!r}")

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Literal:
    lexical: str
    datatype: Iri | None = None
    language: str | None = None

    def __post_init__(self):
        if self.datatype is not None and self.language is not None:
            raise ValueError("literal cannot carry both a datatype and a language tag")


Term = Union[Iri, Literal]


@dataclass(frozen=True)
class Triple:
    subject: Iri
    predicate: Iri
    object: Term

    def __post_init__(self):
        if not isinstance(self.subject, Iri):
            raise TypeError("triple subject must be an IRI")
        if not isinstance(self.predicate, Iri):
            raise TypeError("triple predicate must be an IRI")
        if not isinstance(self.object, (Iri, Literal)):
            raise TypeError("triple object must be an IRI or literal")


class Graph:
    """A duplicate-free set of triples with deterministic serialization order."""

    __slots__ = ("_triples",)

    def __init__(self, triples: Iterable[Triple] = ()):
        self._triples: set[Triple] = set(triples)

    def add(self, triple: Triple) -> None:
        self._triples.add(triple)

    def update(self, triples: Iterable[Triple]) -> None:
        self._triples.update(triples)

    def __contains__(self, triple: Triple) -> bool:
        return triple in self._triples

    def __len__(self) -> int:
        return len(self._triples)

    def __iter__(self) -> Iterator[Triple]:
        return iter(self._triples)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self._triples == other._triples

    def __repr__(self) -> str:
        return f"Graph({len(self._triples)} triples)"

    def union(self, other: "Graph") -> "Graph":
        g = Graph(self._triples)
        g.update(other._triples)
        return g

    def sorted_triples(self) -> list[Triple]:
        return sorted(
            self._triples,
            key=lambda t: (term_to_ntriples(t.subject), term_to_ntriples(t.predicate), term_to_ntriples(t.object)),
        )


@dataclass(frozen=True)
class NamespaceConfig:
    resource_base: Iri = field(default_factory=lambda: Iri(DEFAULT_RESOURCE_BASE))
    ontology_base: Iri = field(default_factory=lambda: Iri(DEFAULT_ONTOLOGY_BASE))
    abstract_predicate: Iri = field(default_factory=lambda: Iri(DEFAULT_ONTOLOGY_BASE + "abstract"))
    type_predicate: Iri = field(default_factory=lambda: Iri(RDF_NS + "type"))
    label_predicate: Iri = field(default_factory=lambda: Iri(RDFS_NS + "label"))
    redirect_predicate: Iri = field(default_factory=lambda: Iri(DEFAULT_ONTOLOGY_BASE + "wikiPageRedirects"))

    def __post_init__(self):
        for prefix in (self.resource_base, self.ontology_base):
            if not prefix.value.endswith(("/", "#")):
                raise ValueError(f"namespace prefix must end in '/' or '#': {prefix.value!r}")


def _upper_first(s: str) -> str:
    """Uppercase the first character using the simple (1:1) mapping only."""
    if not s:
        return s
    upper = s[0].upper()
    if len(upper) != 1:
        return s
    return upper + s[1:]


def normalize_title(title: str) -> str:
    """Trim, collapse whitespace runs, map underscores to spaces, uppercase the first char."""
    t = re.sub(r"\s+", " ", title.replace("_", " ")).strip()
    return _upper_first(t)


def title_to_iri(title: str, ns: NamespaceConfig) -> Iri:
    t = re.sub(r"\s+", " ", title).strip()
    if not t:
        raise EmptyTitle(f"empty page title: {title!r}")
    local = _upper_first(t).replace(" ", "_")
    return Iri(ns.resource_base.value + quote(local, safe=LOCAL_SAFE))


def iri_to_title(iri: Iri, ns: NamespaceConfig) -> str:
    base = ns.resource_base.value
    if not iri.value.startswith(base):
        raise ForeignIri(f"{iri.value} is not under {base}")
    return unquote(iri.value[len(base):]).replace("_", " ")


def encode_page_name(title: str) -> str:
    """Filesystem-safe encoded page name: underscores for spaces, '/' escaped."""
    local = re.sub(r"\s+", " ", title).strip().replace(" ", "_")
    return quote(local, safe="(),!*'")


def decode_page_name(name: str) -> str:
    return unquote(name).replace("_", " ")


def _escape_literal(s: str) -> str:
    out = []
    for ch in s:
        if ch == "\\":
            out.append("\\\\")
        elif ch == '"':
            out.append('\\"')
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\t":
            out.append("\\t")
        elif ord(ch) < 0x20 or ord(ch) == 0x7F:
            out.append(f"\\u{ord(ch):04X}")
        else:
            out.append(ch)
    return "".join(out)


def term_to_ntriples(term: Term) -> str:
    if isinstance(term, Iri):
        return f"<{term.value}>"
    rendered = f'"{_escape_literal(term.lexical)}"'
    if term.language is not None:
        return f"{rendered}@{term.language}"
    if term.datatype is not None:
        return f"{rendered}^^<{term.datatype.value}>"
    return rendered


def triple_to_ntriples(t: Triple) -> str:
    return f"{term_to_ntriples(t.subject)} {term_to_ntriples(t.predicate)} {term_to_ntriples(t.object)} ."


def serialize_ntriples(g: Graph) -> bytes:
    lines = [triple_to_ntriples(t) for t in g.sorted_triples()]
    if not lines:
        return b""
    return ("\n".join(lines) + "\n").encode("utf-8")


_UNESCAPE_RE = re.compile(r"\\(?:u([0-9A-Fa-f]{4})|U([0-9A-Fa-f]{8})|(.))", re.S)
_ECHAR = {"t": "\t", "b": "\b", "n": "\n", "r": "\r", "f": "\f", '"': '"', "'": "'", "\\": "\\"}


def _unescape_literal(s: str, line: int) -> str:
    def repl(m: re.Match) -> str:
        if m.group(1):
            return chr(int(m.group(1), 16))
        if m.group(2):
            cp = int(m.group(2), 16)
            if cp > 0x10FFFF:
                raise NTriplesSyntaxError(line, f"code point out of range: \\U{m.group(2)}")
            return chr(cp)
        ch = m.group(3)
        if ch not in _ECHAR:
            raise NTriplesSyntaxError(line, f"invalid escape \\{ch}")
        return _ECHAR[ch]

    if s.endswith("\\") and not s.endswith("\\\\"):
        raise NTriplesSyntaxError(line, "dangling backslash")
    return _UNESCAPE_RE.sub(repl, s)


class _LineCursor:
    def __init__(self, text: str, line: int):
        self.text = text
        self.pos = 0
        self.line = line

    def error(self, reason: str):
        raise NTriplesSyntaxError(self.line, reason)

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos] in " \t":
            self.pos += 1

    def at_end(self) -> bool:
        return self.pos >= len(self.text)

    def parse_iri(self) -> Iri:
        if self.at_end() or self.text[self.pos] != "<":
            self.error("expected '<'")
        end = self.text.find(">", self.pos + 1)
        if end < 0:
            self.error("unterminated IRI")
        raw = self.text[self.pos + 1 : end]
        self.pos = end + 1
        try:
            return Iri(_unescape_literal(raw, self.line) if "\\" in raw else raw)
        except ValueError as exc:
            self.error(str(exc))

    def parse_term(self) -> Term:
        if self.at_end():
            self.error("expected term")
        if self.text[self.pos] == "<":
            return self.parse_iri()
        if self.text[self.pos] != '"':
            self.error(f"expected IRI or literal at column {self.pos + 1}")
        i = self.pos + 1
        while i < len(self.text):
            if self.text[i] == "\\":
                i += 2
                continue
            if self.text[i] == '"':
                break
            i += 1
        if i >= len(self.text) or self.text[i] != '"':
            self.error("unterminated literal")
        lexical = _unescape_literal(self.text[self.pos + 1 : i], self.line)
        self.pos = i + 1
        if self.pos < len(self.text) and self.text[self.pos] == "@":
            m = re.match(r"@([A-Za-z]+(?:-[A-Za-z0-9]+)*)", self.text[self.pos :])
            if not m:
                self.error("malformed language tag")
            self.pos += m.end()
            return Literal(lexical, language=m.group(1))
        if self.text[self.pos : self.pos + 2] == "^^":
            self.pos += 2
            return Literal(lexical, datatype=self.parse_iri())
        return Literal(lexical)


def parse_ntriples(data: bytes | str) -> Graph:
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    g = Graph()
    for lineno, raw in enumerate(text.split("\n"), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        cur = _LineCursor(raw.rstrip(), lineno)
        cur.skip_ws()
        subject = cur.parse_iri()
        cur.skip_ws()
        predicate = cur.parse_iri()
        cur.skip_ws()
        obj = cur.parse_term()
        cur.skip_ws()
        if cur.at_end() or cur.text[cur.pos] != ".":
            cur.error("expected terminating '.'")
        cur.pos += 1
        cur.skip_ws()
        if not cur.at_end():
            cur.error("trailing content after '.'")
        g.add(Triple(subject, predicate, obj))
    return g


# Conservative: local names outside this shape fall back to full IRIs.
_PNAME_LOCAL_RE = re.compile(r"^[A-Za-z0-9_][A-Za-z0-9_-]*$")


def _turtle_prefixes(ns: NamespaceConfig) -> list[tuple[str, str]]:
    pairs = [("dbr", ns.resource_base.value), ("dbo", ns.ontology_base.value)]
    for pfx, base in (("rdf", RDF_NS), ("rdfs", RDFS_NS), ("xsd", XSD_NS)):
        if base not in (p[1] for p in pairs):
            pairs.append((pfx, base))
    return pairs


def _turtle_term(term: Term, prefixes: list[tuple[str, str]]) -> str:
    if isinstance(term, Iri):
        for pfx, base in prefixes:
            if term.value.startswith(base):
                local = term.value[len(base):]
                if _PNAME_LOCAL_RE.match(local):
                    return f"{pfx}:{local}"
        return f"<{term.value}>"
    return term_to_ntriples(term)


def serialize_turtle(g: Graph, ns: NamespaceConfig) -> bytes:
    prefixes = _turtle_prefixes(ns)
    out = [f"@prefix {pfx}: <{base}> ." for pfx, base in prefixes]
    triples = g.sorted_triples()
    i = 0
    while i < len(triples):
        subject = triples[i].subject
        out.append("")
        lines = []
        while i < len(triples) and triples[i].subject == subject:
            predicate = triples[i].predicate
            objs = []
            while i < len(triples) and triples[i].subject == subject and triples[i].predicate == predicate:
                objs.append(_turtle_term(triples[i].object, prefixes))
                i += 1
            lines.append(f"{_turtle_term(predicate, prefixes)} {', '.join(objs)}")
        subj = _turtle_term(subject, prefixes)
        out.append(f"{subj} " + " ;\n    ".join(lines) + " .")
    return ("\n".join(out) + "\n").encode("utf-8")
