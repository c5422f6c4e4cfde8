"""On-demand extraction pipeline: one requested IRI in, one ResourceGraph out.

The pipeline runs in five steps: resolve the IRI (following redirects),
list backlinks, fetch page sources, generate triples via the mappings,
and extract the abstract. Backlink pages that fail to fetch are skipped,
never fatal: partial ingoing data beats total failure.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

from .mappings import MappingSet, apply_mappings
from .rdf import Graph, Iri, Literal, NamespaceConfig, Triple, iri_to_title, title_to_iri
from .source import FetchFailure, SourceError, _BaseClient
from .wikitext import ParsedPage, first_sentences, parse_wikitext, strip_to_plaintext


class ExtractionError(Exception):
    pass


class ResourceMissing(ExtractionError):
    def __init__(self, iri: Iri):
        super().__init__(f"no page for {iri.value}")
        self.iri = iri


class RedirectLoop(ExtractionError):
    def __init__(self, chain: list[Iri]):
        super().__init__(" -> ".join(i.value for i in chain))
        self.chain = tuple(chain)


class SourceFailure(ExtractionError):
    def __init__(self, cause: Exception):
        super().__init__(str(cause))
        self.cause = cause


@dataclass(frozen=True)
class ExtractionOptions:
    abstract_sentences: int = 3
    abstract_language: str = "en"
    follow_redirects: int = 3
    include_ingoing: bool = True
    max_backlinks: int | None | object = ...  # ... inherits the source default

    def __post_init__(self):
        if self.abstract_sentences < 1:
            raise ValueError("abstract_sentences must be >= 1")
        if self.follow_redirects < 0:
            raise ValueError("follow_redirects must be >= 0")

    def digest(self) -> str:
        cap = "inherit" if self.max_backlinks is ... else str(self.max_backlinks)
        return (
            f"s{self.abstract_sentences}:l{self.abstract_language}:"
            f"r{self.follow_redirects}:i{int(self.include_ingoing)}:b{cap}"
        )


@dataclass(frozen=True)
class Provenance:
    revision_id: int | None
    backlink_count: int
    backlinks_truncated: bool
    pages_processed: int
    coercion_warnings: tuple = ()
    elapsed: tuple = (0.0, 0.0, 0.0, 0.0, 0.0)  # per-step durations, ms


@dataclass(frozen=True)
class ResourceGraph:
    subject: Iri
    outgoing: Graph
    ingoing: Graph
    abstract: Literal | None
    provenance: Provenance


def abstract_triple(rg: ResourceGraph, ns: NamespaceConfig) -> Triple | None:
    if rg.abstract is None:
        return None
    return Triple(rg.subject, ns.abstract_predicate, rg.abstract)


def full_graph(rg: ResourceGraph, ns: NamespaceConfig) -> Graph:
    """Outgoing plus ingoing plus the abstract triple, as served to clients."""
    g = rg.outgoing.union(rg.ingoing)
    t = abstract_triple(rg, ns)
    if t is not None:
        g.add(t)
    return g


def extract_outgoing(
    page: ParsedPage,
    subject: Iri,
    ms: MappingSet,
    ns: NamespaceConfig,
    warnings: list | None = None,
) -> Graph:
    """Mapped triples of one page; pure, no network access."""
    return apply_mappings(page, subject, ms, ns, warnings)


def extract_ingoing(
    subject: Iri,
    backlink_pages: list[ParsedPage],
    ms: MappingSet,
    ns: NamespaceConfig,
    warnings: list | None = None,
) -> Graph:
    g = Graph()
    for page in backlink_pages:
        if page.redirect_target is not None:
            continue
        page_subject = title_to_iri(page.title, ns)
        if page_subject == subject:
            continue
        for t in extract_outgoing(page, page_subject, ms, ns, warnings):
            if t.object == subject and t.subject != subject:
                g.add(t)
    return g


def extract_abstract(page: ParsedPage, opts: ExtractionOptions) -> Literal | None:
    text = strip_to_plaintext(page)
    if not text:
        return None
    return Literal(first_sentences(text, opts.abstract_sentences), language=opts.abstract_language)


class Extractor:
    """Binds a source client, a mapping-set provider, and namespaces.

    The mapping provider is called per extraction so the service can swap
    mapping sets atomically under this extractor.
    """

    def __init__(
        self,
        source: _BaseClient,
        mappings,
        ns: NamespaceConfig | None = None,
        options: ExtractionOptions | None = None,
    ):
        self.source = source
        self._mappings = mappings if callable(mappings) else (lambda: mappings)
        self.ns = ns or NamespaceConfig()
        self.options = options or ExtractionOptions()

    def extract_resource(self, iri: Iri, opts: ExtractionOptions | None = None) -> ResourceGraph:
        opts = opts or self.options
        ms = self._mappings()
        ns = self.ns
        elapsed = [0.0] * 5
        warnings: list = []

        # Step 1: resolve the IRI to a page, following redirects up to depth.
        t0 = time.perf_counter()
        title = iri_to_title(iri, ns)
        chain = [iri]
        redirect_triples: list[Triple] = []
        page: ParsedPage | None = None
        revision_id = None
        current = iri
        while True:
            try:
                fetch = self.source.fetch_page_source(title)
            except SourceError as exc:
                raise SourceFailure(exc) from exc
            if fetch.missing:
                raise ResourceMissing(current)
            page = parse_wikitext(fetch.resolved_title, fetch.wikitext)
            revision_id = fetch.revision_id
            if page.redirect_target is None:
                break
            target = title_to_iri(page.redirect_target, ns)
            redirect_triples.append(Triple(current, ns.redirect_predicate, target))
            if target in chain or len(chain) > opts.follow_redirects:
                raise RedirectLoop(chain + [target])
            chain.append(target)
            current = target
            title = iri_to_title(target, ns)
        subject = current
        elapsed[0] = (time.perf_counter() - t0) * 1000

        # Step 2: list backlinks of the resolved page.
        t0 = time.perf_counter()
        backlinks: tuple[str, ...] = ()
        truncated = False
        if opts.include_ingoing:
            try:
                bl = self.source.fetch_backlinks(page.title, max_backlinks=opts.max_backlinks)
                backlinks = bl.backlinks
                truncated = bl.truncated
            except SourceError as exc:
                # Degrade to empty ingoing rather than failing the request.
                warnings.append((page.title, "<backlinks>", str(exc)))
        elapsed[1] = (time.perf_counter() - t0) * 1000

        # Step 3: fetch backlink page sources.
        t0 = time.perf_counter()
        fetches = self.source.fetch_many(list(backlinks)) if backlinks else []
        elapsed[2] = (time.perf_counter() - t0) * 1000

        # Step 4: generate triples for the main page and all backlink pages.
        t0 = time.perf_counter()
        outgoing = apply_mappings(page, subject, ms, ns, warnings)
        outgoing.update(redirect_triples)
        ingoing = Graph()
        processed = 0
        for result in fetches:
            if isinstance(result, FetchFailure):
                warnings.append((result.title, "<fetch>", str(result.error)))
                continue
            if result.missing:
                continue
            bl_page = parse_wikitext(result.resolved_title, result.wikitext)
            if bl_page.redirect_target is not None:
                continue
            bl_subject = title_to_iri(bl_page.title, ns)
            if bl_subject == subject:
                continue
            for t in apply_mappings(bl_page, bl_subject, ms, ns, warnings):
                if t.object == subject and t.subject != subject:
                    ingoing.add(t)
            processed += 1
        elapsed[3] = (time.perf_counter() - t0) * 1000

        # Step 5: extract the abstract.
        t0 = time.perf_counter()
        abstract = extract_abstract(page, opts)
        elapsed[4] = (time.perf_counter() - t0) * 1000

        return ResourceGraph(
            subject=subject,
            outgoing=outgoing,
            ingoing=ingoing,
            abstract=abstract,
            provenance=Provenance(
                revision_id=revision_id,
                backlink_count=len(backlinks),
                backlinks_truncated=truncated,
                pages_processed=1 + processed,
                coercion_warnings=tuple(warnings),
                elapsed=tuple(elapsed),
            ),
        )
