"""Declarative infobox-to-ontology mappings: file format, loading, application."""

from __future__ import annotations

import hashlib
import re
import time
from dataclasses import dataclass

from .rdf import (
    BUILTIN_PREFIXES,
    XSD_DATE,
    XSD_DOUBLE,
    XSD_INTEGER,
    Graph,
    Iri,
    Literal,
    NamespaceConfig,
    Triple,
    title_to_iri,
)
from .wikitext import ParsedPage, normalize_template_name

LABEL_LANGUAGE = "en"

RANGE_OBJECT = "object"
RANGE_STRING = "string"
RANGE_INTEGER = "integer"
RANGE_DOUBLE = "double"
RANGE_DATE = "date"


class MappingError(ValueError):
    pass


class FormatError(MappingError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class DuplicateTemplate(MappingError):
    def __init__(self, name: str):
        super().__init__(f"duplicate template mapping: {name!r}")
        self.name = name


class UnknownRange(MappingError):
    def __init__(self, keyword: str):
        super().__init__(f"unknown range keyword: {keyword!r}")
        self.keyword = keyword


class CoercionError(ValueError):
    def __init__(self, text: str, range_kind: "RangeKind"):
        super().__init__(f"cannot coerce {text!r} to {range_kind.kind}")
        self.text = text
        self.range_kind = range_kind


@dataclass(frozen=True)
class RangeKind:
    kind: str
    language: str | None = None

    def __post_init__(self):
        if self.kind not in (RANGE_OBJECT, RANGE_STRING, RANGE_INTEGER, RANGE_DOUBLE, RANGE_DATE):
            raise ValueError(f"invalid range kind: {self.kind!r}")
        if (self.kind == RANGE_STRING) != (self.language is not None):
            raise ValueError("language tag goes with string ranges only")


OBJECT_RANGE = RangeKind(RANGE_OBJECT)
INTEGER_RANGE = RangeKind(RANGE_INTEGER)
DOUBLE_RANGE = RangeKind(RANGE_DOUBLE)
DATE_RANGE = RangeKind(RANGE_DATE)


def string_range(language: str) -> RangeKind:
    return RangeKind(RANGE_STRING, language)


@dataclass(frozen=True)
class PropertyMapping:
    param: str
    predicate: Iri
    range: RangeKind

    def __post_init__(self):
        if not self.param:
            raise ValueError("property mapping needs a parameter name")


@dataclass(frozen=True)
class TemplateMapping:
    template: str
    class_iri: Iri
    properties: tuple[PropertyMapping, ...] = ()


@dataclass(frozen=True)
class MappingSet:
    by_template: dict
    version: str
    loaded_at: float

    def lookup(self, template_name: str) -> TemplateMapping | None:
        return self.by_template.get(normalize_template_name(template_name))


_TEMPLATE_LINE_RE = re.compile(r'^template\s+"([^"]+)"\s*->\s*class\s+(\S+)$')
_PROPERTY_LINE_RE = re.compile(r"^(\S+)\s*->\s*(\S+)\s+(\S+)$")
_RANGE_RE = re.compile(r"^(object|integer|double|date|string@([A-Za-z]+(?:-[A-Za-z0-9]+)*))$")


def _resolve_iri(token: str, line: int) -> Iri:
    if token.startswith("<") and token.endswith(">"):
        try:
            return Iri(token[1:-1])
        except ValueError as exc:
            raise FormatError(line, str(exc)) from exc
    if ":" in token:
        prefix, local = token.split(":", 1)
        base = BUILTIN_PREFIXES.get(prefix)
        if base is None:
            raise FormatError(line, f"unknown prefix {prefix!r}")
        try:
            return Iri(base + local)
        except ValueError as exc:
            raise FormatError(line, str(exc)) from exc
    raise FormatError(line, f"expected prefixed name or <IRI>, got {token!r}")


def _parse_range(keyword: str, line: int) -> RangeKind:
    m = _RANGE_RE.match(keyword)
    if not m:
        raise UnknownRange(keyword)
    if m.group(2):
        return string_range(m.group(2))
    return RangeKind(m.group(1))


def _strip_comment(line: str) -> str:
    in_quotes = False
    for i, ch in enumerate(line):
        if ch == '"':
            in_quotes = not in_quotes
        elif ch == "#" and not in_quotes:
            return line[:i]
    return line


def load_mappings(data: bytes | str) -> MappingSet:
    raw = data if isinstance(data, bytes) else data.encode("utf-8")
    text = raw.decode("utf-8")
    by_template: dict[str, TemplateMapping] = {}
    current_name: str | None = None
    current_class: Iri | None = None
    current_props: list[PropertyMapping] = []

    def close_current():
        if current_name is not None:
            by_template[current_name] = TemplateMapping(
                template=current_name, class_iri=current_class, properties=tuple(current_props)
            )

    for lineno, line in enumerate(text.split("\n"), start=1):
        stripped = _strip_comment(line).strip()
        if not stripped:
            continue
        m = _TEMPLATE_LINE_RE.match(stripped)
        if m:
            close_current()
            name = normalize_template_name(m.group(1))
            if name in by_template:
                raise DuplicateTemplate(name)
            current_name = name
            current_class = _resolve_iri(m.group(2), lineno)
            current_props = []
            continue
        m = _PROPERTY_LINE_RE.match(stripped)
        if m:
            if current_name is None:
                raise FormatError(lineno, "property mapping before any template line")
            param, predicate_token, range_keyword = m.groups()
            if any(p.param == param for p in current_props):
                raise FormatError(lineno, f"duplicate parameter {param!r}")
            current_props.append(
                PropertyMapping(
                    param=param,
                    predicate=_resolve_iri(predicate_token, lineno),
                    range=_parse_range(range_keyword, lineno),
                )
            )
            continue
        raise FormatError(lineno, f"unrecognized line: {stripped!r}")
    close_current()
    return MappingSet(
        by_template=by_template,
        version=hashlib.sha256(raw).hexdigest()[:16],
        loaded_at=time.time(),
    )


_INTEGER_RE = re.compile(r"^[+-]?\d+$")
_DOUBLE_RE = re.compile(r"^[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?$")
_DATE_RE = re.compile(r"^(\d{1,4})(?:-(\d{1,2})(?:-(\d{1,2}))?)?$")


def coerce_literal(text: str, range_kind: RangeKind) -> Literal:
    value = text.strip()
    if range_kind.kind == RANGE_STRING:
        if not value:
            raise CoercionError(text, range_kind)
        return Literal(value, language=range_kind.language)
    if range_kind.kind == RANGE_INTEGER:
        cleaned = value.replace(",", "")
        if not _INTEGER_RE.match(cleaned):
            raise CoercionError(text, range_kind)
        return Literal(cleaned, datatype=Iri(XSD_INTEGER))
    if range_kind.kind == RANGE_DOUBLE:
        if not _DOUBLE_RE.match(value):
            raise CoercionError(text, range_kind)
        return Literal(value, datatype=Iri(XSD_DOUBLE))
    if range_kind.kind == RANGE_DATE:
        m = _DATE_RE.match(value)
        if not m:
            raise CoercionError(text, range_kind)
        year = int(m.group(1))
        month = int(m.group(2) or 1)
        day = int(m.group(3) or 1)
        if not (1 <= month <= 12 and 1 <= day <= 31):
            raise CoercionError(text, range_kind)
        return Literal(f"{year:04d}-{month:02d}-{day:02d}", datatype=Iri(XSD_DATE))
    raise CoercionError(text, range_kind)


def apply_mappings(
    page: ParsedPage,
    subject: Iri,
    ms: MappingSet,
    ns: NamespaceConfig,
    warnings: list | None = None,
) -> Graph:
    """Emit typed triples for every mapped infobox on the page plus the label.

    Coercion failures drop the single triple and are appended to `warnings`
    as (page title, parameter, reason); they never abort the page.
    """
    g = Graph()
    g.add(Triple(subject, ns.label_predicate, Literal(page.title, language=LABEL_LANGUAGE)))
    for call in page.templates:
        tm = ms.by_template.get(call.name)
        if tm is None:
            continue
        g.add(Triple(subject, ns.type_predicate, tm.class_iri))
        for pm in tm.properties:
            value = call.get(pm.param)
            if value is None or value.is_empty():
                continue
            if pm.range.kind == RANGE_OBJECT:
                for link in value.links():
                    g.add(Triple(subject, pm.predicate, title_to_iri(link.target, ns)))
            else:
                text = value.plain_text()
                if not text:
                    continue
                try:
                    literal = coerce_literal(text, pm.range)
                except CoercionError as exc:
                    if warnings is not None:
                        warnings.append((page.title, pm.param, str(exc)))
                    continue
                g.add(Triple(subject, pm.predicate, literal))
    return g
