"""Minimal wiki markup parser: templates, links, redirects, plain text.

Parsing is total: no input raises, unmatched markup degrades to plain text.
Tables, parser functions, and magic words are dropped; full rendering is
out of scope.
"""

from __future__ import annotations

import html
import re
from dataclasses import dataclass

MAX_NESTING = 16

_COMMENT_RE = re.compile(r"<!--.*?(?:-->|\Z)", re.S)
_REF_RE = re.compile(r"<ref\b[^>]*?/\s*>|<ref\b[^>]*?>.*?(?:</ref[^>]*>|\Z)", re.S | re.I)
_REDIRECT_RE = re.compile(r"\s*#redirect\s*:?\s*\[\[([^\[\]|#]+)(?:#[^\[\]|]*)?(?:\|[^\[\]]*)?\]\]", re.I)
_HEADING_RE = re.compile(r"(=+)\s*(.*?)\s*(=+)\s*$")
_HTML_TAG_RE = re.compile(r"</?[A-Za-z][^>\n]*>")
_QUOTES_RE = re.compile(r"''+")
_EXTERNAL_LINK_RE = re.compile(r"\[(?:https?|ftp)://[^\s\]]*(?:\s+([^\]]*))?\]")
_LIST_MARKER_RE = re.compile(r"^[*#:;]+\s*", re.M)
_MAGIC_WORD_RE = re.compile(r"__[A-Z_]+__")
_TABLE_END_RE = re.compile(r"^\|\}", re.M)


@dataclass(frozen=True)
class WikiLink:
    target: str
    anchor: str
    fragment: str | None = None


@dataclass(frozen=True)
class Text:
    value: str


@dataclass(frozen=True)
class Nested:
    call: "TemplateCall"


@dataclass(frozen=True)
class ParamValue:
    fragments: tuple = ()

    def is_empty(self) -> bool:
        for frag in self.fragments:
            if isinstance(frag, Text):
                if frag.value.strip():
                    return False
            else:
                return False
        return True

    def links(self) -> list[WikiLink]:
        """All links in the value, including those inside nested templates."""
        found = []
        for frag in self.fragments:
            if isinstance(frag, WikiLink):
                found.append(frag)
            elif isinstance(frag, Nested):
                for _, value in frag.call.params:
                    found.extend(value.links())
        return found

    def plain_text(self) -> str:
        """Text content with links reduced to anchors and nested templates dropped."""
        parts = []
        for frag in self.fragments:
            if isinstance(frag, Text):
                parts.append(frag.value)
            elif isinstance(frag, WikiLink):
                parts.append(frag.anchor)
        return re.sub(r"\s+", " ", _clean_markup("".join(parts))).strip()


@dataclass(frozen=True)
class TemplateCall:
    name: str
    params: tuple[tuple[str, ParamValue], ...] = ()
    depth: int = 0

    def get(self, key: str) -> ParamValue | None:
        for k, v in self.params:
            if k == key:
                return v
        return None


@dataclass(frozen=True)
class PlainText:
    text: str


@dataclass(frozen=True)
class LinkRef:
    index: int


@dataclass(frozen=True)
class TemplateRef:
    index: int


@dataclass(frozen=True)
class Heading:
    level: int
    text: str


@dataclass(frozen=True)
class ParsedPage:
    title: str
    templates: tuple[TemplateCall, ...] = ()
    links: tuple[WikiLink, ...] = ()
    body: tuple = ()
    redirect_target: str | None = None


def normalize_template_name(name: str) -> str:
    t = re.sub(r"\s+", " ", name.replace("_", " ")).strip()
    if not t:
        return t
    upper = t[0].upper()
    return (upper if len(upper) == 1 else t[0]) + t[1:]


def _split_fragment(raw_target: str) -> tuple[str, str | None]:
    if "#" in raw_target:
        target, fragment = raw_target.split("#", 1)
        return target, fragment
    return raw_target, None


def _pipe_trick(target: str) -> str:
    trimmed = re.sub(r"\s*\([^()]*\)\s*$", "", target)
    if trimmed != target and trimmed:
        return trimmed
    head = target.split(",", 1)[0].strip()
    return head or target


def _clean_markup(text: str) -> str:
    """Drop presentation markup from raw text: quotes, tags, external links."""
    text = _QUOTES_RE.sub("", text)
    text = _EXTERNAL_LINK_RE.sub(lambda m: m.group(1) or "", text)
    text = _HTML_TAG_RE.sub("", text)
    text = _MAGIC_WORD_RE.sub("", text)
    text = _LIST_MARKER_RE.sub("", text)
    return html.unescape(text)


class _PageBuilder:
    """Accumulates the page-level template and link lists during parsing."""

    def __init__(self):
        self.templates: list[TemplateCall] = []
        self.links: list[WikiLink] = []

    def checkpoint(self) -> int:
        return len(self.links)

    def rollback(self, mark: int) -> None:
        del self.links[mark:]


def _scan_segments(text: str, start: int) -> tuple[list[tuple[int, int]], int] | None:
    """Find the body of a template opened at `start` (just past '{{').

    Returns top-level segment spans split at '|' plus the position after the
    closing '}}', or None when the template never closes.
    """
    brace = 0
    bracket = 0
    segments = []
    seg_start = start
    i = start
    n = len(text)
    while i < n:
        two = text[i : i + 2]
        if two == "{{":
            brace += 1
            i += 2
        elif two == "}}":
            if brace == 0:
                segments.append((seg_start, i))
                return segments, i + 2
            brace -= 1
            i += 2
        elif two == "[[":
            bracket += 1
            i += 2
        elif two == "]]":
            if bracket > 0:
                bracket -= 1
            i += 2
        elif text[i] == "|" and brace == 0 and bracket == 0:
            segments.append((seg_start, i))
            seg_start = i + 1
            i += 1
        else:
            i += 1
    return None


def _top_level_eq(text: str) -> int:
    """Index of the first '=' outside nested templates/links, or -1."""
    brace = 0
    bracket = 0
    i = 0
    n = len(text)
    while i < n:
        two = text[i : i + 2]
        if two == "{{":
            brace += 1
            i += 2
        elif two == "}}":
            brace = max(0, brace - 1)
            i += 2
        elif two == "[[":
            bracket += 1
            i += 2
        elif two == "]]":
            bracket = max(0, bracket - 1)
            i += 2
        elif text[i] == "=" and brace == 0 and bracket == 0:
            return i
        else:
            i += 1
    return -1


def _parse_link(builder: _PageBuilder, text: str, pos: int, depth: int):
    """Parse '[[...]]' at pos; returns (WikiLink, end) or None to degrade."""
    bracket = 0
    segments = []
    seg_start = pos + 2
    i = pos + 2
    n = len(text)
    end = None
    while i < n:
        two = text[i : i + 2]
        if two == "[[":
            bracket += 1
            i += 2
        elif two == "]]":
            if bracket == 0:
                segments.append(text[seg_start:i])
                end = i + 2
                break
            bracket -= 1
            i += 2
        elif text[i] == "|" and bracket == 0:
            segments.append(text[seg_start:i])
            seg_start = i + 1
            i += 1
        else:
            i += 1
    if end is None:
        return None
    raw_target = segments[0]
    if "\n" in raw_target:
        return None
    raw_target, fragment = _split_fragment(raw_target)
    target = re.sub(r"\s+", " ", raw_target.replace("_", " ")).strip().lstrip(":").strip()
    if not target:
        return None
    if len(segments) == 1:
        anchor = target
    else:
        raw_anchor = segments[-1]
        if not raw_anchor.strip():
            anchor = _pipe_trick(target)
        else:
            fragments = _parse_fragments(builder, raw_anchor, depth + 1)
            anchor = ParamValue(tuple(fragments)).plain_text() or target
    return WikiLink(target=target, anchor=anchor, fragment=fragment), end


def _parse_template(builder: _PageBuilder, text: str, pos: int, depth: int):
    """Parse '{{...}}' at pos; returns (TemplateCall|None, end) or None to degrade.

    A None call with a valid end marks a parser function to drop silently.
    """
    if depth >= MAX_NESTING:
        return None
    scan = _scan_segments(text, pos + 2)
    if scan is None:
        return None
    segments, end = scan
    name_raw = text[segments[0][0] : segments[0][1]]
    if "{{" in name_raw or "[[" in name_raw:
        return None
    name = normalize_template_name(name_raw)
    if not name:
        return None
    if name.startswith("#"):
        # Parser function: consume it, keep any links it mentions.
        for seg_start, seg_end in segments[1:]:
            _parse_fragments(builder, text[seg_start:seg_end], depth + 1)
        return None, end
    params: dict[str, ParamValue] = {}
    positional = 0
    for seg_start, seg_end in segments[1:]:
        segment = text[seg_start:seg_end]
        eq = _top_level_eq(segment)
        if eq >= 0:
            key = re.sub(r"\s+", " ", segment[:eq]).strip()
            raw_value = segment[eq + 1 :].strip()
        else:
            positional += 1
            key = str(positional)
            raw_value = segment
        if not key:
            continue
        fragments = _parse_fragments(builder, raw_value, depth + 1)
        params[key] = ParamValue(tuple(fragments))
    return TemplateCall(name=name, params=tuple(params.items()), depth=depth), end


def _parse_fragments(builder: _PageBuilder, text: str, depth: int) -> list:
    """Parse parameter/anchor content into Text, WikiLink, and Nested fragments."""
    fragments: list = []
    buf: list[str] = []

    def flush():
        if buf:
            fragments.append(Text("".join(buf)))
            del buf[:]

    i = 0
    n = len(text)
    while i < n:
        two = text[i : i + 2]
        if two == "{{":
            mark = builder.checkpoint()
            parsed = _parse_template(builder, text, i, depth)
            if parsed is None:
                builder.rollback(mark)
                buf.append("{{")
                i += 2
            else:
                call, end = parsed
                if call is not None:
                    flush()
                    fragments.append(Nested(call))
                i = end
        elif two == "[[":
            mark = builder.checkpoint()
            parsed = _parse_link(builder, text, i, depth)
            if parsed is None:
                builder.rollback(mark)
                buf.append("[[")
                i += 2
            else:
                link, end = parsed
                builder.links.append(link)
                flush()
                fragments.append(link)
                i = end
        else:
            buf.append(text[i])
            i += 1
    flush()
    merged: list = []
    for frag in fragments:
        if isinstance(frag, Text) and merged and isinstance(merged[-1], Text):
            merged[-1] = Text(merged[-1].value + frag.value)
        else:
            merged.append(frag)
    return merged


def _parse_body(builder: _PageBuilder, text: str) -> list:
    nodes: list = []
    buf: list[str] = []

    def flush():
        if buf:
            nodes.append(PlainText("".join(buf)))
            del buf[:]

    i = 0
    n = len(text)
    at_line_start = True
    while i < n:
        two = text[i : i + 2]
        if at_line_start and two == "{|":
            m = _TABLE_END_RE.search(text, i + 2)
            i = m.end() if m else n
            at_line_start = True
            continue
        if at_line_start and text[i] == "=":
            line_end = text.find("\n", i)
            if line_end < 0:
                line_end = n
            m = _HEADING_RE.match(text[i:line_end])
            if m and m.group(2):
                flush()
                level = min(len(m.group(1)), len(m.group(3)), 6)
                nodes.append(Heading(level, m.group(2)))
                i = line_end + 1
                continue
        if two == "{{":
            mark = builder.checkpoint()
            parsed = _parse_template(builder, text, i, 0)
            if parsed is None:
                builder.rollback(mark)
                buf.append("{{")
                i += 2
                at_line_start = False
                continue
            call, end = parsed
            if call is not None:
                flush()
                builder.templates.append(call)
                nodes.append(TemplateRef(len(builder.templates) - 1))
            i = end
            at_line_start = False
            continue
        if two == "[[":
            mark = builder.checkpoint()
            parsed = _parse_link(builder, text, i, 0)
            if parsed is None:
                builder.rollback(mark)
                buf.append("[[")
                i += 2
                at_line_start = False
                continue
            link, end = parsed
            flush()
            builder.links.append(link)
            nodes.append(LinkRef(len(builder.links) - 1))
            i = end
            at_line_start = False
            continue
        ch = text[i]
        buf.append(ch)
        at_line_start = ch == "\n"
        i += 1
    flush()
    return nodes


def parse_wikitext(title: str, source: str | bytes) -> ParsedPage:
    if isinstance(source, bytes):
        source = source.decode("utf-8", errors="replace")
    source = _COMMENT_RE.sub("", source)
    source = _REF_RE.sub("", source)
    m = _REDIRECT_RE.match(source)
    if m:
        target = re.sub(r"\s+", " ", m.group(1).replace("_", " ")).strip()
        if target:
            return ParsedPage(title=title, redirect_target=target)
    builder = _PageBuilder()
    body = _parse_body(builder, source)
    return ParsedPage(
        title=title,
        templates=tuple(builder.templates),
        links=tuple(builder.links),
        body=tuple(body),
    )


_FILE_LINK_RE = re.compile(r"^(file|image|category)\s*:", re.I)


def strip_to_plaintext(page: ParsedPage) -> str:
    parts = []
    for node in page.body:
        if isinstance(node, PlainText):
            parts.append(_clean_markup(node.text))
        elif isinstance(node, LinkRef):
            link = page.links[node.index]
            if not _FILE_LINK_RE.match(link.target):
                parts.append(link.anchor)
    return re.sub(r"\s+", " ", "".join(parts)).strip()


def first_sentences(text: str, n: int) -> str:
    if n < 1:
        raise ValueError("sentence count must be >= 1")
    count = 0
    for m in re.finditer(r"[.!?]", text):
        end = m.end()
        if m.group() == ".":
            # Initials guard: "A. B. Cook" keeps going.
            j = m.start() - 1
            if j >= 0 and text[j].isupper() and (j == 0 or not text[j - 1].isalnum()):
                continue
        if end >= len(text):
            return text
        if not text[end].isspace():
            continue
        k = end
        while k < len(text) and text[k].isspace():
            k += 1
        if k >= len(text):
            return text[:end]
        if text[k].isupper():
            count += 1
            if count == n:
                return text[:end]
    return text
