"""HTTP facade: Linked Data dereferencing with content negotiation, the
restricted SPARQL endpoint, and admin/ops endpoints."""

from __future__ import annotations

import html as html_mod
import threading
import time
from dataclasses import replace
from pathlib import Path
from urllib.parse import parse_qs

from fastapi import FastAPI, Request, Response
from fastapi.responses import HTMLResponse, JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles
from starlette.concurrency import run_in_threadpool

from .config import ServiceConfig
from .extraction import (
    ExtractionError,
    Extractor,
    RedirectLoop,
    ResourceGraph,
    ResourceMissing,
    full_graph,
)
from .mappings import load_mappings
from .query import (
    BindingSet,
    ParseError,
    QueryEvaluationError,
    Unsupported,
    UnsupportedSyntax,
    bindings_to_sparql_json,
    classify,
    evaluate,
    parse_query,
    term_to_json,
)
from .rdf import ForeignIri, Iri, serialize_ntriples, serialize_turtle, title_to_iri
from .source import TtlLruCache, make_client

NT_MEDIA = "application/n-triples"
TURTLE_MEDIA = "text/turtle"
JSON_MEDIA = "application/json"
HTML_MEDIA = "text/html"
SPARQL_JSON_MEDIA = "application/sparql-results+json"

_FORMATS = {
    NT_MEDIA: "nt",
    "text/turtle": "turtle",
    "application/x-turtle": "turtle",
    JSON_MEDIA: "json",
    HTML_MEDIA: "html",
}
_WILDCARDS = {"*/*": "nt", "application/*": "nt", "text/*": "turtle"}


def negotiate_format(accept: str | None) -> str | None:
    """Pick nt|turtle|json|html from an Accept header, or None when nothing fits."""
    if not accept or not accept.strip():
        return "nt"
    offers = []
    for i, part in enumerate(accept.split(",")):
        fields = part.strip().split(";")
        media = fields[0].strip().lower()
        if not media:
            continue
        q = 1.0
        for param in fields[1:]:
            key, _, value = param.strip().partition("=")
            if key.strip() == "q":
                try:
                    q = float(value)
                except ValueError:
                    q = 0.0
        if q <= 0:
            continue  # q=0 means "not acceptable"
        offers.append((-q, i, media))
    for _, _, media in sorted(offers):
        if media in _FORMATS:
            return _FORMATS[media]
        if media in _WILDCARDS:
            return _WILDCARDS[media]
    return None


class Metrics:
    def __init__(self):
        self._lock = threading.Lock()
        self.requests = 0
        self.cache_hits = 0
        self.cache_misses = 0
        self.extraction_ms_total = 0.0
        self.extraction_count = 0

    def count_request(self):
        with self._lock:
            self.requests += 1

    def count_cache(self, hit: bool):
        with self._lock:
            if hit:
                self.cache_hits += 1
            else:
                self.cache_misses += 1

    def record_extraction(self, ms: float):
        with self._lock:
            self.extraction_ms_total += ms
            self.extraction_count += 1

    def render(self, pages_fetched: int) -> str:
        with self._lock:
            mean = self.extraction_ms_total / self.extraction_count if self.extraction_count else 0.0
            return (
                f"requests_total {self.requests}\n"
                f"cache_hits_total {self.cache_hits}\n"
                f"cache_misses_total {self.cache_misses}\n"
                f"pages_fetched_total {pages_fetched}\n"
                f"extraction_ms_mean {mean:.3f}\n"
            )


class ServiceState:
    def __init__(self, config: ServiceConfig):
        self.config = config
        self.ns = config.namespaces
        self.client = make_client(config.source)
        self.cache = TtlLruCache(config.cache_capacity)
        self.metrics = Metrics()
        self._reload_lock = threading.Lock()
        self.mappings = load_mappings(Path(config.mapping_file).read_bytes())
        self.extractor = Extractor(self.client, lambda: self.mappings, self.ns, config.options)

    def reload_mappings(self) -> int:
        new_set = load_mappings(Path(self.config.mapping_file).read_bytes())
        with self._reload_lock:
            self.mappings = new_set
            self.cache.clear()
        return len(new_set.by_template)

    def cached_extract(self, iri: Iri, opts=None) -> tuple[ResourceGraph, bool]:
        opts = opts or self.config.options
        key = f"{iri.value}|{self.mappings.version}|{opts.digest()}"

        def compute() -> ResourceGraph:
            started = time.perf_counter()
            rg = self.extractor.extract_resource(iri, opts)
            self.metrics.record_extraction((time.perf_counter() - started) * 1000)
            return rg

        value, hit = self.cache.get_or_compute(key, self.config.cache_ttl, compute)
        self.metrics.count_cache(hit)
        return value, hit


def json_graph(rg: ResourceGraph, cache_hit: bool) -> dict:
    return {
        "subject": rg.subject.value,
        "outgoing": [[t.predicate.value, term_to_json(t.object)] for t in rg.outgoing.sorted_triples()],
        "ingoing": [[t.subject.value, t.predicate.value] for t in rg.ingoing.sorted_triples()],
        "abstract": (
            {"text": rg.abstract.lexical, "lang": rg.abstract.language} if rg.abstract else None
        ),
        "provenance": {
            "revision_id": rg.provenance.revision_id,
            "backlink_count": rg.provenance.backlink_count,
            "backlinks_truncated": rg.provenance.backlinks_truncated,
            "pages_processed": rg.provenance.pages_processed,
            "coercion_warnings": [list(w) for w in rg.provenance.coercion_warnings],
            "elapsed_ms": list(rg.provenance.elapsed),
            "cache": "HIT" if cache_hit else "MISS",
        },
    }


def _render_html(rg: ResourceGraph, cache_hit: bool) -> str:
    esc = html_mod.escape
    rows_out = "".join(
        f"<tr><td>{esc(t.predicate.value)}</td><td>{esc(getattr(t.object, 'value', getattr(t.object, 'lexical', '')))}</td></tr>"
        for t in rg.outgoing.sorted_triples()
    )
    rows_in = "".join(
        f"<tr><td>{esc(t.subject.value)}</td><td>{esc(t.predicate.value)}</td></tr>"
        for t in rg.ingoing.sorted_triples()
    )
    abstract = f"<p>{esc(rg.abstract.lexical)}</p>" if rg.abstract else ""
    return (
        "<!doctype html><html><head><meta charset='utf-8'>"
        f"<title>{esc(rg.subject.value)}</title></head><body>"
        f"<h1>{esc(rg.subject.value)}</h1>{abstract}"
        f"<h2>Outgoing</h2><table>{rows_out}</table>"
        f"<h2>Ingoing</h2><table>{rows_in}</table>"
        f"<p>pages processed: {rg.provenance.pages_processed}, cache: {'HIT' if cache_hit else 'MISS'}</p>"
        "</body></html>"
    )


def _error_json(status: int, payload: dict) -> JSONResponse:
    return JSONResponse(status_code=status, content=payload)


def create_app(config: ServiceConfig) -> FastAPI:
    state = ServiceState(config)
    app = FastAPI(title="kgod", docs_url=None, redoc_url=None)
    app.state.service = state

    ui_index: Path | None = None
    if config.ui_assets is not None and Path(config.ui_assets).is_dir():
        ui_index = Path(config.ui_assets) / "index.html"

    def provenance_headers(rg: ResourceGraph, hit: bool) -> dict:
        return {
            "X-Pages-Processed": str(rg.provenance.pages_processed),
            "X-Backlink-Count": str(rg.provenance.backlink_count),
            "X-Cache": "HIT" if hit else "MISS",
        }

    def parse_overrides(params) -> tuple[object, str | None]:
        opts = config.options
        if "include_ingoing" in params:
            raw = params["include_ingoing"].strip().lower()
            if raw in ("true", "1", "yes"):
                opts = replace(opts, include_ingoing=True)
            elif raw in ("false", "0", "no"):
                opts = replace(opts, include_ingoing=False)
            else:
                return opts, f"malformed include_ingoing: {params['include_ingoing']!r}"
        if "max_backlinks" in params:
            try:
                requested = int(params["max_backlinks"])
            except ValueError:
                return opts, f"malformed max_backlinks: {params['max_backlinks']!r}"
            if requested < 0:
                return opts, "max_backlinks must be >= 0"
            server_cap = config.source.max_backlinks
            effective = requested if server_cap is None else min(requested, server_cap)
            opts = replace(opts, max_backlinks=effective)
        return opts, None

    @app.get("/resource/{name:path}")
    def handle_resource(name: str, request: Request):
        state.metrics.count_request()
        fmt = negotiate_format(request.headers.get("accept"))
        if fmt is None:
            return _error_json(406, {"error": "not_acceptable"})
        opts, problem = parse_overrides(request.query_params)
        if problem is not None:
            return _error_json(400, {"error": "bad_request", "detail": problem})
        if not name.strip():
            return _error_json(400, {"error": "bad_request", "detail": "empty resource name"})
        iri = title_to_iri(name, state.ns)
        try:
            rg, hit = state.cached_extract(iri, opts)
        except ResourceMissing as exc:
            return _error_json(404, {"error": "resource_missing", "iri": exc.iri.value})
        except RedirectLoop as exc:
            return _error_json(502, {"error": "redirect_loop", "chain": [i.value for i in exc.chain]})
        except ExtractionError as exc:
            return _error_json(502, {"error": "source_failure", "detail": str(exc)})
        headers = provenance_headers(rg, hit)
        if fmt == "nt":
            return Response(serialize_ntriples(full_graph(rg, state.ns)), media_type=NT_MEDIA, headers=headers)
        if fmt == "turtle":
            return Response(serialize_turtle(full_graph(rg, state.ns), state.ns), media_type=TURTLE_MEDIA, headers=headers)
        if fmt == "json":
            return JSONResponse(json_graph(rg, hit), headers=headers)
        if ui_index is not None and ui_index.exists():
            return HTMLResponse(ui_index.read_text(encoding="utf-8"), headers=headers)
        return HTMLResponse(_render_html(rg, hit), headers=headers)

    def run_sparql(query_text: str):
        try:
            ast = parse_query(query_text)
        except UnsupportedSyntax as exc:
            return _error_json(
                400,
                {"error": "unsupported", "reason": "UnsupportedSyntax", "detail": exc.detail, "pattern_index": None},
            )
        except ParseError as exc:
            return _error_json(400, {"error": "parse", "message": exc.reason, "position": exc.position})
        classification = classify(ast)
        if isinstance(classification, Unsupported):
            return _error_json(
                400,
                {
                    "error": "unsupported",
                    "reason": classification.reason,
                    "pattern_index": classification.pattern_index,
                },
            )

        def extract(iri: Iri):
            rg, _ = state.cached_extract(iri)
            return rg

        try:
            bindings = evaluate(ast, extract, state.ns)
        except QueryEvaluationError as exc:
            if isinstance(exc.cause, ResourceMissing):
                # A missing anchor has no triples to contribute.
                bindings = BindingSet(variables=tuple(ast.select_vars), rows=())
            elif isinstance(exc.cause, ForeignIri):
                return _error_json(
                    400,
                    {
                        "error": "unsupported",
                        "reason": "ForeignAnchor",
                        "detail": str(exc.cause),
                        "pattern_index": None,
                    },
                )
            else:
                return _error_json(502, {"error": "source_failure", "detail": str(exc)})
        return Response(bindings_to_sparql_json(bindings), media_type=SPARQL_JSON_MEDIA)

    @app.get("/sparql")
    async def sparql_get(request: Request):
        state.metrics.count_request()
        query_text = request.query_params.get("query")
        if not query_text:
            return _error_json(400, {"error": "missing_query"})
        return await run_in_threadpool(run_sparql, query_text)

    @app.post("/sparql")
    async def sparql_post(request: Request):
        state.metrics.count_request()
        query_text = request.query_params.get("query")
        if not query_text:
            content_type = request.headers.get("content-type", "")
            body = (await request.body()).decode("utf-8", errors="replace")
            if content_type.startswith("application/x-www-form-urlencoded"):
                form = parse_qs(body)
                query_text = form.get("query", [None])[0]
            elif content_type.startswith("application/sparql-query"):
                query_text = body
        if not query_text:
            return _error_json(400, {"error": "missing_query"})
        return await run_in_threadpool(run_sparql, query_text)

    @app.post("/admin/reload-mappings")
    def reload_mappings():
        try:
            count = state.reload_mappings()
        except Exception as exc:
            return _error_json(500, {"error": "reload_failed", "detail": str(exc)})
        return {"status": "ok", "templates": count}

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "mappings_version": state.mappings.version}

    @app.get("/metrics")
    def metrics():
        return PlainTextResponse(state.metrics.render(state.client.counters.total))

    if config.ui_assets is not None and Path(config.ui_assets).is_dir():
        app.mount("/", StaticFiles(directory=str(config.ui_assets), html=True), name="ui")
    else:

        @app.get("/")
        def index():
            return HTMLResponse(
                "<!doctype html><html><body><h1>knowledge graph on demand</h1>"
                "<p>endpoints: /resource/{name}, /sparql?query=..., /healthz, /metrics</p>"
                "</body></html>"
            )

    return app


def run_server(config: ServiceConfig):
    import uvicorn

    uvicorn.run(create_app(config), host=config.listen_address, port=config.listen_port, log_level="warning")
