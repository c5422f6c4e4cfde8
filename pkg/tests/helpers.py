"""Test-side infrastructure: a stub MediaWiki API server, a naive
full-materialization query oracle, an independent Turtle reader, and a
random corpus generator. The oracles here deliberately reimplement logic
instead of calling the code under test."""

from __future__ import annotations

import json
import random
import re
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from kgod.extraction import ExtractionOptions, extract_abstract
from kgod.mappings import apply_mappings
from kgod.rdf import Graph, Iri, Literal, NamespaceConfig, Triple, title_to_iri
from kgod.wikitext import parse_wikitext


def normalize_api_title(title: str) -> str:
    t = re.sub(r"\s+", " ", title.replace("_", " ")).strip()
    return (t[0].upper() + t[1:]) if t else t


class StubWikiApi:
    """Local MediaWiki action API stand-in with a timestamped request log."""

    def __init__(self, pages=None, backlinks=None, batch_size=500):
        self.pages = dict(pages or {})
        self.backlinks = {k: list(v) for k, v in (backlinks or {}).items()}
        self.batch_size = batch_size
        self.fail_remaining = 0
        self.error_payload = None
        self.request_log: list[tuple[float, dict]] = []
        self._lock = threading.Lock()
        stub = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):
                pass

            def do_GET(self):
                parsed = urlparse(self.path)
                params = {k: v[0] for k, v in parse_qs(parsed.query).items()}
                with stub._lock:
                    stub.request_log.append((time.monotonic(), params))
                    should_fail = stub.fail_remaining > 0
                    if should_fail:
                        stub.fail_remaining -= 1
                if should_fail:
                    self.send_response(503)
                    self.end_headers()
                    self.wfile.write(b"service unavailable")
                    return
                payload = stub._respond(params, self.headers)
                body = json.dumps(payload).encode("utf-8")
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

        self._server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)

    def _respond(self, params: dict, headers) -> dict:
        if self.error_payload is not None:
            return {"error": self.error_payload}
        if params.get("list") == "backlinks":
            title = normalize_api_title(params.get("bltitle", ""))
            entries = self.backlinks.get(title, [])
            start = int(params.get("blcontinue", "0"))
            batch = entries[start : start + self.batch_size]
            payload = {
                "query": {
                    "backlinks": [
                        {"pageid": start + i + 1, "ns": 0, "title": t} for i, t in enumerate(batch)
                    ]
                }
            }
            if start + self.batch_size < len(entries):
                payload["continue"] = {"blcontinue": str(start + self.batch_size), "continue": "-||"}
            return payload
        if params.get("prop") == "revisions":
            raw_title = params.get("titles", "")
            title = normalize_api_title(raw_title)
            query: dict = {}
            if title != raw_title:
                query["normalized"] = [{"from": raw_title, "to": title}]
            if title not in self.pages:
                query["pages"] = {"-1": {"ns": 0, "title": title, "missing": ""}}
                return {"query": query}
            query["pages"] = {
                "1": {
                    "pageid": 1,
                    "ns": 0,
                    "title": title,
                    "revisions": [
                        {"revid": 1000 + len(title), "slots": {"main": {"*": self.pages[title]}}}
                    ],
                }
            }
            return {"query": query}
        return {"error": {"code": "unknown_action", "info": "unsupported stub request"}}

    @property
    def endpoint(self) -> str:
        host, port = self._server.server_address
        return f"http://{host}:{port}/w/api.php"

    def __enter__(self):
        self._thread.start()
        return self

    def __exit__(self, *exc):
        self._server.shutdown()
        self._server.server_close()

    def reset_log(self):
        with self._lock:
            self.request_log.clear()

    @property
    def request_count(self) -> int:
        with self._lock:
            return len(self.request_log)


# ---------------------------------------------------------------------------
# Naive full-materialization oracle for query evaluation.

def materialize_corpus_graph(corpus_dir, ms, ns: NamespaceConfig, opts: ExtractionOptions) -> Graph:
    """One global graph: every page's mapped triples plus its abstract triple."""
    g = Graph()
    for page_file in sorted(Path(corpus_dir, "pages").glob("*.wiki")):
        from kgod.rdf import decode_page_name, normalize_title

        title = normalize_title(decode_page_name(page_file.stem))
        page = parse_wikitext(title, page_file.read_text(encoding="utf-8"))
        if page.redirect_target is not None:
            continue
        subject = title_to_iri(title, ns)
        g.update(apply_mappings(page, subject, ms, ns))
        abstract = extract_abstract(page, opts)
        if abstract is not None:
            g.add(Triple(subject, ns.abstract_predicate, abstract))
    return g


def _unify(pattern_term, value, row):
    from kgod.query import Variable

    if isinstance(pattern_term, Variable):
        if pattern_term.name in row:
            return row if row[pattern_term.name] == value else None
        extended = dict(row)
        extended[pattern_term.name] = value
        return extended
    return row if pattern_term == value else None


def naive_evaluate(ast, graph: Graph) -> set:
    """Standard BGP matching with join over the whole graph; returns the
    projected solution set as frozensets of (var, term) pairs."""
    rows = [dict()]
    for pattern in ast.patterns:
        next_rows = []
        for row in rows:
            for t in graph:
                r = _unify(pattern.subject, t.subject, row)
                if r is None:
                    continue
                r = _unify(pattern.predicate, t.predicate, r)
                if r is None:
                    continue
                r = _unify(pattern.object, t.object, r)
                if r is None:
                    continue
                next_rows.append(r)
        rows = next_rows
    return {frozenset((v, row[v]) for v in ast.select_vars) for row in rows}


# ---------------------------------------------------------------------------
# Independent Turtle reader (covers the subset the serializer emits).

_TTL_TOKEN = re.compile(
    r"""
      (?P<ws>\s+|\#[^\n]*)
    | (?P<prefix_kw>@prefix)
    | (?P<iriref><[^<>]*>)
    | (?P<string>"(?:[^"\\]|\\.)*")
    | (?P<langtag>@[A-Za-z]+(?:-[A-Za-z0-9]+)*)
    | (?P<dtsep>\^\^)
    | (?P<pname>[A-Za-z][A-Za-z0-9_-]*:[^\s;,.]*)
    | (?P<punct>[;,.])
    """,
    re.X,
)

_TTL_ESCAPES = {"t": "\t", "b": "\b", "n": "\n", "r": "\r", "f": "\f", '"': '"', "'": "'", "\\": "\\"}


def _ttl_tokens(text: str):
    pos = 0
    while pos < len(text):
        m = _TTL_TOKEN.match(text, pos)
        if m is None:
            raise ValueError(f"turtle oracle: bad character at {pos}: {text[pos]!r}")
        if m.lastgroup != "ws":
            yield m.lastgroup, m.group()
        pos = m.end()
    yield "eof", ""


def _ttl_unescape(body: str) -> str:
    def repl(m):
        if m.group(1):
            return chr(int(m.group(1), 16))
        if m.group(2):
            return chr(int(m.group(2), 16))
        return _TTL_ESCAPES[m.group(3)]

    return re.sub(r"\\(?:u([0-9A-Fa-f]{4})|U([0-9A-Fa-f]{8})|(.))", repl, body)


def parse_turtle(data: bytes) -> Graph:
    """Parse @prefix declarations and ';'/',' grouped triples into a Graph."""
    text = data.decode("utf-8")
    tokens = list(_ttl_tokens(text))
    prefixes: dict[str, str] = {}
    g = Graph()
    i = 0

    def term(tok):
        kind, value = tok
        if kind == "iriref":
            return Iri(value[1:-1])
        if kind == "pname":
            prefix, local = value.split(":", 1)
            return Iri(prefixes[prefix] + local)
        raise ValueError(f"turtle oracle: expected term, got {value!r}")

    while tokens[i][0] != "eof":
        if tokens[i][0] == "prefix_kw":
            name = tokens[i + 1][1]
            assert name.endswith(":"), name
            iri = tokens[i + 2][1]
            assert tokens[i + 3] == ("punct", "."), tokens[i + 3]
            prefixes[name[:-1]] = iri[1:-1]
            i += 4
            continue
        subject = term(tokens[i])
        i += 1
        while True:
            predicate = term(tokens[i])
            i += 1
            while True:
                kind, value = tokens[i]
                if kind == "string":
                    lexical = _ttl_unescape(value[1:-1])
                    i += 1
                    if tokens[i][0] == "langtag":
                        obj = Literal(lexical, language=tokens[i][1][1:])
                        i += 1
                    elif tokens[i][0] == "dtsep":
                        obj = Literal(lexical, datatype=term(tokens[i + 1]))
                        i += 2
                    else:
                        obj = Literal(lexical)
                else:
                    obj = term(tokens[i])
                    i += 1
                g.add(Triple(subject, predicate, obj))
                if tokens[i] == ("punct", ","):
                    i += 1
                    continue
                break
            if tokens[i] == ("punct", ";"):
                i += 1
                continue
            break
        assert tokens[i] == ("punct", "."), f"turtle oracle: expected '.', got {tokens[i]}"
        i += 1
    return g


# ---------------------------------------------------------------------------
# Random synthetic corpora for partition property tests.

FIRST_NAMES = ["Alba", "Boris", "Cleo", "Dario", "Edna", "Felix", "Greta", "Hugo", "Iris", "Jonas"]
LAST_NAMES = ["Stone", "Rivera", "Kovacs", "Lindt", "Moreau", "Novak", "Okafor", "Petit", "Quist", "Reyes"]

CORPUS_MAPPING_TEXT = """\
template "Infobox film" -> class dbo:Film
  director -> dbo:director object
  starring -> dbo:starring object
  runtime  -> dbo:runtime  integer
"""


def write_random_corpus(corpus_dir: Path, rng: random.Random, page_count: int) -> list[str]:
    """Pages whose mapped parameters link to random other pages; the backlink
    index is derived from every link so it is complete by construction."""
    titles = []
    seen = set()
    while len(titles) < page_count:
        name = f"{rng.choice(FIRST_NAMES)} {rng.choice(LAST_NAMES)} {len(titles)}"
        if name not in seen:
            seen.add(name)
            titles.append(name)
    pages_dir = corpus_dir / "pages"
    pages_dir.mkdir(parents=True, exist_ok=True)
    backlink_lines = []
    from kgod.rdf import encode_page_name

    for title in titles:
        others = [t for t in titles if t != title]
        directors = rng.sample(others, k=min(len(others), rng.randint(0, 2)))
        stars = rng.sample(others, k=min(len(others), rng.randint(0, 3)))
        params = [f"name={title}", f"runtime={rng.randint(60, 240)}"]
        if directors:
            params.append("director=" + "".join(f"[[{d}]]" for d in directors))
        if stars:
            params.append("starring=" + ", ".join(f"[[{s}]]" for s in stars))
        body_link = rng.choice(others) if others and rng.random() < 0.5 else None
        body = f"'''{title}''' is a generated page."
        if body_link:
            body += f" See also [[{body_link}]]."
        source = "{{Infobox film|" + "|".join(params) + "}} " + body
        (pages_dir / f"{encode_page_name(title)}.wiki").write_text(source, encoding="utf-8")
        linked = set(directors) | set(stars) | ({body_link} if body_link else set())
        for target in linked:
            backlink_lines.append(f"{encode_page_name(target)}\t{encode_page_name(title)}")
    (corpus_dir / "backlinks.tsv").write_text(
        "\n".join(sorted(backlink_lines)) + ("\n" if backlink_lines else ""), encoding="utf-8"
    )
    return titles
