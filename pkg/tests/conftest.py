from __future__ import annotations

from pathlib import Path

import pytest
from hypothesis import settings

from kgod.extraction import ExtractionOptions, Extractor
from kgod.mappings import load_mappings
from kgod.rdf import NamespaceConfig
from kgod.source import FixtureMode, SourceConfig, make_client

settings.register_profile("default", deadline=None)
settings.load_profile("default")

ACCEPTANCE_RESULTS: list[tuple[str, bool]] = []


def record_criterion(name: str, passed: bool) -> None:
    ACCEPTANCE_RESULTS.append((name, passed))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'} — {name}")

FIXTURES = Path(__file__).parent / "fixtures"
CORPUS_DIR = FIXTURES / "corpus"
MAPPINGS_FILE = FIXTURES / "mappings.txt"
FIXTURE_CONF = FIXTURES / "fixture.conf"


@pytest.fixture(scope="session")
def ns() -> NamespaceConfig:
    return NamespaceConfig()


@pytest.fixture(scope="session")
def mapping_set():
    return load_mappings(MAPPINGS_FILE.read_bytes())


@pytest.fixture()
def fixture_client():
    return make_client(SourceConfig(mode=FixtureMode(corpus_dir=str(CORPUS_DIR))))


@pytest.fixture()
def extractor(fixture_client, mapping_set, ns):
    return Extractor(fixture_client, mapping_set, ns, ExtractionOptions())


def make_fixture_extractor(corpus_dir, mapping_set, ns, options=None, max_backlinks=None, parallelism=4):
    client = make_client(
        SourceConfig(
            mode=FixtureMode(corpus_dir=str(corpus_dir)),
            max_backlinks=max_backlinks,
            fetch_parallelism=parallelism,
        )
    )
    return Extractor(client, mapping_set, ns, options or ExtractionOptions())
