from __future__ import annotations

import json

import pytest
from fastapi.testclient import TestClient

from conftest import CORPUS_DIR, MAPPINGS_FILE
from helpers import StubWikiApi, parse_turtle
from kgod.config import ServiceConfig
from kgod.rdf import parse_ntriples
from kgod.service import create_app, negotiate_format
from kgod.source import FixtureMode, LiveMode, SourceConfig

PAPER_Q1 = "SELECT ?actor WHERE { ?actor dbo:starring dbr:Lost_Highway .}"
TOM_CRUISE = (
    "SELECT ?director WHERE { dbr:Tom_Cruise dbo:starring ?movie . "
    "?movie dbo:director ?director .}"
)


def fixture_config(**overrides) -> ServiceConfig:
    defaults = dict(
        mapping_file=MAPPINGS_FILE,
        source=SourceConfig(mode=FixtureMode(corpus_dir=str(CORPUS_DIR))),
        cache_capacity=64,
        cache_ttl=300.0,
    )
    defaults.update(overrides)
    return ServiceConfig(**defaults)


@pytest.fixture()
def client():
    return TestClient(create_app(fixture_config()))


class TestNegotiation:
    def test_header_parsing(self):
        assert negotiate_format("application/n-triples") == "nt"
        assert negotiate_format("text/turtle") == "turtle"
        assert negotiate_format("application/json") == "json"
        assert negotiate_format("text/html,application/json;q=0.9") == "html"
        assert negotiate_format("application/json;q=0.2,text/turtle;q=0.8") == "turtle"
        assert negotiate_format("*/*") == "nt"
        assert negotiate_format(None) == "nt"
        assert negotiate_format("application/pdf") is None
        assert negotiate_format("text/html;q=0") is None  # q=0 excludes

    def test_406(self, client):
        r = client.get("/resource/Lost_Highway", headers={"Accept": "application/pdf"})
        assert r.status_code == 406


class TestResourceEndpoint:
    def test_ntriples_seven_triples(self, client):
        r = client.get("/resource/Lost_Highway", headers={"Accept": "application/n-triples"})
        assert r.status_code == 200
        assert r.headers["content-type"].startswith("application/n-triples")
        lines = [l for l in r.text.strip().split("\n") if l]
        assert len(lines) == 7
        assert r.headers["X-Pages-Processed"] == "4"
        assert r.headers["X-Backlink-Count"] == "3"
        assert r.headers["X-Cache"] == "MISS"

    def test_missing_resource_404(self, client):
        r = client.get("/resource/No_Such_Page", headers={"Accept": "application/n-triples"})
        assert r.status_code == 404
        assert r.json()["error"] == "resource_missing"

    def test_include_ingoing_false_five_triples(self, client):
        r = client.get(
            "/resource/Lost_Highway?include_ingoing=false",
            headers={"Accept": "application/n-triples"},
        )
        lines = [l for l in r.text.strip().split("\n") if l]
        assert len(lines) == 5

    def test_turtle_and_ntriples_same_graph(self, client):
        nt = client.get("/resource/Lost_Highway", headers={"Accept": "application/n-triples"})
        ttl = client.get("/resource/Lost_Highway", headers={"Accept": "text/turtle"})
        assert ttl.headers["content-type"].startswith("text/turtle")
        assert parse_turtle(ttl.content) == parse_ntriples(nt.content)

    def test_json_graph_shape(self, client):
        r = client.get("/resource/Lost_Highway", headers={"Accept": "application/json"})
        doc = r.json()
        assert doc["subject"].endswith("Lost_Highway")
        assert len(doc["outgoing"]) == 4
        assert len(doc["ingoing"]) == 2
        assert doc["abstract"]["lang"] == "en"
        assert doc["provenance"]["pages_processed"] == 4
        kinds = {term["type"] for _, term in doc["outgoing"]}
        assert kinds == {"uri", "literal"}

    def test_html_fallback_table(self, client):
        r = client.get("/resource/Lost_Highway", headers={"Accept": "text/html"})
        assert r.status_code == 200
        assert "<table>" in r.text and "Lost_Highway" in r.text

    def test_bad_override_400(self, client):
        assert client.get("/resource/Lost_Highway?include_ingoing=maybe").status_code == 400
        assert client.get("/resource/Lost_Highway?max_backlinks=ten").status_code == 400
        assert client.get("/resource/Lost_Highway?max_backlinks=-3").status_code == 400

    def test_max_backlinks_override(self, client):
        r = client.get(
            "/resource/Lost_Highway?max_backlinks=1", headers={"Accept": "application/n-triples"}
        )
        assert r.headers["X-Pages-Processed"] == "2"
        assert r.headers["X-Backlink-Count"] == "1"

    def test_override_cannot_raise_server_cap(self):
        config = fixture_config(
            source=SourceConfig(mode=FixtureMode(corpus_dir=str(CORPUS_DIR)), max_backlinks=1)
        )
        client = TestClient(create_app(config))
        r = client.get(
            "/resource/Lost_Highway?max_backlinks=99", headers={"Accept": "application/n-triples"}
        )
        assert r.headers["X-Backlink-Count"] == "1"

    def test_slash_in_name(self, mapping_set, tmp_path):
        corpus = tmp_path / "corpus"
        (corpus / "pages").mkdir(parents=True)
        (corpus / "pages" / "AC%2FDC.wiki").write_text("{{Infobox film|runtime=1}} Band page.", encoding="utf-8")
        config = fixture_config(source=SourceConfig(mode=FixtureMode(corpus_dir=str(corpus))))
        client = TestClient(create_app(config))
        r = client.get("/resource/AC/DC", headers={"Accept": "application/n-triples"})
        assert r.status_code == 200
        assert "<http://dbpedia.org/resource/AC/DC>" in r.text


class TestSparqlEndpoint:
    def test_get_paper_query(self, client):
        r = client.get("/sparql", params={"query": PAPER_Q1})
        assert r.status_code == 200
        assert r.headers["content-type"].startswith("application/sparql-results+json")
        doc = r.json()
        actors = {b["actor"]["value"] for b in doc["results"]["bindings"]}
        assert actors == {
            "http://dbpedia.org/resource/Bill_Pullman",
            "http://dbpedia.org/resource/Patricia_Arquette",
        }

    def test_post_form(self, client):
        r = client.post("/sparql", data={"query": PAPER_Q1})
        assert r.status_code == 200
        assert len(r.json()["results"]["bindings"]) == 2

    def test_post_raw_sparql_body(self, client):
        r = client.post(
            "/sparql", content=PAPER_Q1.encode(), headers={"Content-Type": "application/sparql-query"}
        )
        assert r.status_code == 200

    def test_tom_cruise_rejected(self, client):
        r = client.post("/sparql", data={"query": TOM_CRUISE})
        assert r.status_code == 400
        doc = r.json()
        assert doc["error"] == "unsupported"
        assert doc["reason"] == "NoFixedResource"
        assert doc["pattern_index"] == 1

    def test_no_fixed_resource_rejected(self, client):
        r = client.get(
            "/sparql", params={"query": "SELECT ?actor ?movie WHERE { ?actor dbo:starring ?movie .}"}
        )
        assert r.status_code == 400
        assert r.json()["pattern_index"] == 0

    def test_missing_query_400(self, client):
        assert client.get("/sparql").status_code == 400
        assert client.post("/sparql").status_code == 400

    def test_parse_error_distinct(self, client):
        r = client.get("/sparql", params={"query": "SELECT ?d WHERE { dbr:X dbo:p ?d"})
        assert r.status_code == 400
        assert r.json()["error"] == "parse"

    def test_unsupported_syntax_reported(self, client):
        r = client.get(
            "/sparql", params={"query": "SELECT ?x WHERE { dbr:X ?p ?x . FILTER(?x > 3) }"}
        )
        assert r.status_code == 400
        doc = r.json()
        assert doc["reason"] == "UnsupportedSyntax" and doc["detail"] == "FILTER"

    def test_missing_anchor_empty_results(self, client):
        r = client.get("/sparql", params={"query": "SELECT ?x WHERE { dbr:No_Such_Page dbo:p ?x }"})
        assert r.status_code == 200
        assert r.json()["results"]["bindings"] == []

    def test_foreign_anchor_unsupported(self, client):
        r = client.get("/sparql", params={"query": "SELECT ?x WHERE { ?x a dbo:Actor }"})
        assert r.status_code == 400
        assert r.json()["reason"] == "ForeignAnchor"


class TestAdminEndpoints:
    def test_healthz(self, client):
        r = client.get("/healthz")
        assert r.status_code == 200 and r.json()["status"] == "ok"

    def test_reload_ok_clears_cache(self, client):
        client.get("/resource/Lost_Highway")
        app_state = client.app.state.service
        assert len(app_state.cache) == 1
        r = client.post("/admin/reload-mappings")
        assert r.status_code == 200 and r.json()["templates"] == 3
        assert len(app_state.cache) == 0

    def test_reload_failure_keeps_old(self, tmp_path):
        mapping_copy = tmp_path / "mappings.txt"
        mapping_copy.write_bytes(MAPPINGS_FILE.read_bytes())
        config = fixture_config(mapping_file=mapping_copy)
        client = TestClient(create_app(config))
        mapping_copy.write_text("template broken line\n", encoding="utf-8")
        r = client.post("/admin/reload-mappings")
        assert r.status_code == 500
        # Old mappings still answer queries.
        ok = client.get("/sparql", params={"query": PAPER_Q1})
        assert ok.status_code == 200 and len(ok.json()["results"]["bindings"]) == 2

    def test_metrics(self, client):
        client.get("/resource/Lost_Highway")
        client.get("/resource/Lost_Highway")
        r = client.get("/metrics")
        assert r.status_code == 200
        body = dict(line.split(" ") for line in r.text.strip().split("\n"))
        assert int(body["requests_total"]) >= 2
        assert int(body["cache_hits_total"]) == 1
        assert int(body["cache_misses_total"]) == 1
        assert int(body["pages_fetched_total"]) > 0
        assert float(body["extraction_ms_mean"]) > 0

    def test_index_page(self, client):
        r = client.get("/")
        assert r.status_code == 200 and "resource" in r.text


class TestCacheBehavior:
    def test_hit_header_and_no_refetch(self, client):
        state = client.app.state.service
        first = client.get("/resource/Lost_Highway", headers={"Accept": "application/n-triples"})
        fetched_after_first = state.client.counters.total
        assert first.headers["X-Cache"] == "MISS"
        second = client.get("/resource/Lost_Highway", headers={"Accept": "application/n-triples"})
        assert second.headers["X-Cache"] == "HIT"
        assert state.client.counters.total == fetched_after_first
        assert second.content == first.content

    def test_ttl_zero_always_fetches(self):
        config = fixture_config(cache_ttl=0.0)
        client = TestClient(create_app(config))
        state = client.app.state.service
        client.get("/resource/Lost_Highway")
        count_a = state.client.counters.total
        client.get("/resource/Lost_Highway")
        count_b = state.client.counters.total
        assert count_b > count_a

    def test_live_mode_counting_stub(self):
        pages = {
            "Lost Highway": "{{Infobox film|director=[[David Lynch]]|runtime=134}} '''Lost Highway''' is a film.",
            "David Lynch": "{{Infobox person|occupation=Director}} '''David Lynch''' directs.",
        }
        backlinks = {"Lost Highway": ["David Lynch"]}
        with StubWikiApi(pages=pages, backlinks=backlinks) as stub:
            config = fixture_config(
                source=SourceConfig(mode=LiveMode(api_endpoint=stub.endpoint, rate_limit=500))
            )
            client = TestClient(create_app(config))
            r1 = client.get("/resource/Lost_Highway", headers={"Accept": "application/n-triples"})
            assert r1.status_code == 200
            after_first = stub.request_count
            assert after_first > 0
            r2 = client.get("/resource/Lost_Highway", headers={"Accept": "application/n-triples"})
            assert r2.headers["X-Cache"] == "HIT"
            assert stub.request_count == after_first  # zero upstream requests on HIT

    def test_options_are_part_of_cache_key(self, client):
        client.get("/resource/Lost_Highway")
        r = client.get("/resource/Lost_Highway?include_ingoing=false")
        assert r.headers["X-Cache"] == "MISS"


class TestStatelessness:
    def test_restart_identical_bodies(self):
        def run():
            client = TestClient(create_app(fixture_config()))
            nt = client.get("/resource/Lost_Highway", headers={"Accept": "application/n-triples"})
            ttl = client.get("/resource/Lost_Highway", headers={"Accept": "text/turtle"})
            doc = client.get("/resource/Lost_Highway", headers={"Accept": "application/json"}).json()
            doc["provenance"].pop("elapsed_ms")
            return nt.content, ttl.content, json.dumps(doc, sort_keys=True)

        assert run() == run()


class TestUiAssets:
    def test_html_serves_ui_shell(self, tmp_path):
        ui_dir = tmp_path / "ui"
        ui_dir.mkdir()
        (ui_dir / "index.html").write_text("<!doctype html><title>kg browser</title>", encoding="utf-8")
        config = fixture_config(ui_assets=ui_dir)
        client = TestClient(create_app(config))
        r = client.get("/resource/Lost_Highway", headers={"Accept": "text/html"})
        assert "kg browser" in r.text
        root = client.get("/")
        assert "kg browser" in root.text
