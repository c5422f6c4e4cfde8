"""Benchmark harness: extraction time as a function of ingoing-link count.

Runs against generated fixture corpora so timings measure extraction work,
not network variance; absolute times stay host-specific, the linear shape
is what matters.
"""

from __future__ import annotations

import random
import statistics
import time
from dataclasses import dataclass
from pathlib import Path

from .extraction import ExtractionOptions, Extractor
from .mappings import load_mappings
from .rdf import NamespaceConfig, encode_page_name, title_to_iri
from .source import FixtureMode, SourceConfig, make_client

DEFAULT_REPEATS = 10

CORPUS_MAPPINGS = """\
template "Infobox film" -> class dbo:Film
  director -> dbo:director object
  runtime  -> dbo:runtime  integer
template "Infobox actor" -> class dbo:Actor
  notable_works -> dbo:starring object
"""

_FILLER_WORDS = (
    "signal", "archive", "meadow", "harbor", "circuit", "lantern", "granite",
    "voyage", "ballad", "orchard", "summit", "ledger", "prairie", "beacon",
)


@dataclass(frozen=True)
class BenchSample:
    backlink_count: int
    run_times: tuple[float, ...]  # ms
    mean: float
    stddev: float
    pages_processed: int


@dataclass(frozen=True)
class BenchReport:
    samples: tuple[BenchSample, ...]
    slope: float | None
    intercept: float | None
    r_squared: float | None


def linear_fit(xs: list[float], ys: list[float]) -> tuple[float, float, float] | None:
    """Least-squares fit; returns (slope, intercept, r_squared) or None when degenerate."""
    n = len(xs)
    if n < 2 or len(set(xs)) < 2:
        return None
    mean_x = sum(xs) / n
    mean_y = sum(ys) / n
    sxx = sum((x - mean_x) ** 2 for x in xs)
    sxy = sum((x - mean_x) * (y - mean_y) for x, y in zip(xs, ys))
    slope = sxy / sxx
    intercept = mean_y - slope * mean_x
    ss_tot = sum((y - mean_y) ** 2 for y in ys)
    if ss_tot == 0:
        return None
    ss_res = sum((y - (intercept + slope * x)) ** 2 for x, y in zip(xs, ys))
    return slope, intercept, 1.0 - ss_res / ss_tot


def _target_title(k: int) -> str:
    return f"Target {k}"


def _backlink_title(k: int, i: int) -> str:
    return f"Backlink {k} {i}"


def _filler(rng: random.Random, words: int) -> str:
    return " ".join(rng.choice(_FILLER_WORDS) for _ in range(words))


def generate_synthetic_corpus(counts: list[int], corpus_dir: str | Path, seed: int = 0) -> Path:
    """Write, for each k, a mapped target page plus k backlink pages linking to
    it, with a complete backlinks.tsv. Deterministic for a given seed."""
    if not counts:
        raise ValueError("counts must be nonempty")
    if any(k < 0 for k in counts):
        raise ValueError("counts must be >= 0")
    corpus = Path(corpus_dir)
    pages = corpus / "pages"
    try:
        pages.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IOError(f"cannot create corpus at {corpus}: {exc}")
    rng = random.Random(seed)
    index_lines = []
    for k in sorted(set(counts)):
        target = _target_title(k)
        target_file = pages / f"{encode_page_name(target)}.wiki"
        body = (
            f"{{{{Infobox film|name={target}|runtime={100 + k}}}}}\n"
            f"'''{target}''' is a synthetic page with {k} ingoing links. "
            f"It mentions {_filler(rng, 6)}.\n"
        )
        target_file.write_text(body, encoding="utf-8")
        for i in range(1, k + 1):
            source = _backlink_title(k, i)
            source_file = pages / f"{encode_page_name(source)}.wiki"
            source_body = (
                f"{{{{Infobox actor|name={source}|notable_works=[[{target}]]}}}}\n"
                f"'''{source}''' links to [[{target}]]. "
                f"Filler: {_filler(rng, 8)}.\n"
            )
            source_file.write_text(source_body, encoding="utf-8")
            index_lines.append(f"{encode_page_name(target)}\t{encode_page_name(source)}")
    (corpus / "backlinks.tsv").write_text("\n".join(index_lines) + ("\n" if index_lines else ""), encoding="utf-8")
    (corpus / "mappings.txt").write_text(CORPUS_MAPPINGS, encoding="utf-8")
    return corpus


def build_extractor(corpus_dir: str | Path) -> Extractor:
    corpus = Path(corpus_dir)
    client = make_client(SourceConfig(mode=FixtureMode(corpus_dir=str(corpus))))
    mapping_file = corpus / "mappings.txt"
    ms = load_mappings(mapping_file.read_bytes() if mapping_file.exists() else CORPUS_MAPPINGS)
    return Extractor(client, ms, NamespaceConfig(), ExtractionOptions())


def run_bench(corpus_dir: str | Path, counts: list[int], repeats: int = DEFAULT_REPEATS) -> BenchReport:
    """Per k: one untimed warm-up, then `repeats` timed extractions of Target_k.

    The caller supplies a corpus from generate_synthetic_corpus; no cache sits
    between timing runs and the extraction path.
    """
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    extractor = build_extractor(corpus_dir)
    ns = extractor.ns
    samples = []
    for k in sorted(set(counts)):
        iri = title_to_iri(_target_title(k), ns)
        extractor.extract_resource(iri)  # warm-up
        times = []
        pages_processed = 0
        for _ in range(repeats):
            started = time.perf_counter()
            rg = extractor.extract_resource(iri)
            times.append((time.perf_counter() - started) * 1000)
            pages_processed = rg.provenance.pages_processed
        samples.append(
            BenchSample(
                backlink_count=k,
                run_times=tuple(times),
                mean=statistics.fmean(times),
                stddev=statistics.pstdev(times),
                pages_processed=pages_processed,
            )
        )
    fit = linear_fit([s.backlink_count for s in samples], [s.mean for s in samples])
    if fit is None:
        return BenchReport(samples=tuple(samples), slope=None, intercept=None, r_squared=None)
    slope, intercept, r_squared = fit
    return BenchReport(samples=tuple(samples), slope=slope, intercept=intercept, r_squared=r_squared)


def report_csv(report: BenchReport) -> bytes:
    lines = ["backlinks,mean_ms,stddev_ms"]
    for s in report.samples:
        lines.append(f"{s.backlink_count},{s.mean:.6f},{s.stddev:.6f}")
    comment_fields = []
    if report.slope is not None:
        comment_fields.append(f"slope={report.slope:.6f}")
        comment_fields.append(f"intercept={report.intercept:.6f}")
    if report.r_squared is not None:
        comment_fields.append(f"r2={report.r_squared:.6f}")
    if comment_fields:
        lines.append("# " + ", ".join(comment_fields))
    return ("\n".join(lines) + "\n").encode("utf-8")
