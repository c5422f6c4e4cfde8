"""Command-line interface: serve, extract, query, bench."""

from __future__ import annotations

import json
import sys
import tempfile
from pathlib import Path

import click

from .bench import generate_synthetic_corpus, report_csv, run_bench
from .config import ConfigError, load_service_config
from .extraction import ExtractionError, Extractor, ResourceMissing, full_graph
from .mappings import MappingError, load_mappings
from .query import (
    NotSupported,
    ParseError,
    QueryEvaluationError,
    UnsupportedSyntax,
    bindings_to_sparql_json,
    evaluate,
    parse_query,
)
from .rdf import ForeignIri, Iri, serialize_ntriples, serialize_turtle, title_to_iri
from .service import json_graph
from .source import make_client

EXIT_OK = 0
EXIT_USER_ERROR = 1
EXIT_UPSTREAM_FAILURE = 2


class UpstreamFailure(click.ClickException):
    exit_code = EXIT_UPSTREAM_FAILURE


def _build_stack(config_path: str | None):
    config = load_service_config(config_path)
    client = make_client(config.source)
    try:
        mapping_bytes = Path(config.mapping_file).read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read mapping file: {exc}")
    extractor = Extractor(client, load_mappings(mapping_bytes), config.namespaces, config.options)
    return config, extractor


def _resolve_iri(arg: str, ns) -> Iri:
    if arg.startswith(("http://", "https://")):
        return Iri(arg)
    return title_to_iri(arg, ns)


@click.group()
def cli():
    """Serve and query on-demand knowledge graph extractions."""


@cli.command()
@click.option("--config", "-c", "config_path", envvar="KGOD_CONFIG", default=None, help="Config file path.")
@click.option("--host", default=None, help="Override listen address.")
@click.option("--port", type=int, default=None, help="Override listen port.")
def serve(config_path, host, port):
    """Run the HTTP service."""
    from dataclasses import replace

    from .service import run_server

    config = load_service_config(config_path)
    if host is not None:
        config = replace(config, listen_address=host)
    if port is not None:
        config = replace(config, listen_port=port)
    run_server(config)


@cli.command()
@click.argument("resource")
@click.option("--format", "-f", "fmt", type=click.Choice(["nt", "ttl", "json"]), default="nt")
@click.option("--config", "-c", "config_path", envvar="KGOD_CONFIG", default=None, help="Config file path.")
def extract(resource, fmt, config_path):
    """Print one resource's graph (IRI or page title)."""
    config, extractor = _build_stack(config_path)
    try:
        iri = _resolve_iri(resource, config.namespaces)
    except (ForeignIri, ValueError) as exc:
        raise click.ClickException(str(exc))
    try:
        rg = extractor.extract_resource(iri)
    except ResourceMissing as exc:
        raise click.ClickException(f"resource not found: {exc.iri.value}")
    except ExtractionError as exc:
        raise UpstreamFailure(str(exc))
    graph = full_graph(rg, config.namespaces)
    if fmt == "nt":
        sys.stdout.buffer.write(serialize_ntriples(graph))
    elif fmt == "ttl":
        sys.stdout.buffer.write(serialize_turtle(graph, config.namespaces))
    else:
        click.echo(json.dumps(json_graph(rg, cache_hit=False), indent=2, ensure_ascii=False))


@cli.command("query")
@click.argument("sparql")
@click.option("--config", "-c", "config_path", envvar="KGOD_CONFIG", default=None, help="Config file path.")
def query_cmd(sparql, config_path):
    """Evaluate a supported SPARQL query and print JSON results."""
    config, extractor = _build_stack(config_path)
    try:
        ast = parse_query(sparql)
        bindings = evaluate(ast, lambda iri: extractor.extract_resource(iri), config.namespaces)
    except (ParseError, UnsupportedSyntax, NotSupported) as exc:
        raise click.ClickException(str(exc))
    except QueryEvaluationError as exc:
        if isinstance(exc.cause, ResourceMissing):
            raise click.ClickException(str(exc))
        raise UpstreamFailure(str(exc))
    sys.stdout.buffer.write(bindings_to_sparql_json(bindings) + b"\n")


@cli.command()
@click.option("--counts", required=True, help="Comma-separated backlink counts, e.g. 10,20,30.")
@click.option("--repeats", type=int, default=10, show_default=True)
@click.option("--out", "out_path", default=None, help="CSV output path (stdout when omitted).")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--corpus", "corpus_dir", default=None, help="Corpus directory (temp dir when omitted).")
def bench(counts, repeats, out_path, seed, corpus_dir):
    """Generate a synthetic corpus and measure extraction scaling."""
    try:
        parsed_counts = [int(c) for c in counts.split(",") if c.strip()]
    except ValueError:
        raise click.ClickException(f"malformed --counts: {counts!r}")
    if not parsed_counts or any(k < 0 for k in parsed_counts):
        raise click.ClickException("--counts needs nonnegative integers")
    if repeats < 1:
        raise click.ClickException("--repeats must be >= 1")
    if corpus_dir is None:
        tmp = tempfile.TemporaryDirectory(prefix="kgod-bench-")
        corpus_path = Path(tmp.name)
    else:
        tmp = None
        corpus_path = Path(corpus_dir)
    try:
        generate_synthetic_corpus(parsed_counts, corpus_path, seed=seed)
        try:
            report = run_bench(corpus_path, parsed_counts, repeats=repeats)
        except ExtractionError as exc:
            raise UpstreamFailure(str(exc))
        data = report_csv(report)
        if out_path is None:
            sys.stdout.buffer.write(data)
        else:
            Path(out_path).write_bytes(data)
            click.echo(f"wrote {out_path}", err=True)
    finally:
        if tmp is not None:
            tmp.cleanup()


def main(argv=None) -> int:
    """Entry point with the documented exit codes: 0 ok, 1 user error, 2 upstream."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except UpstreamFailure as exc:
        exc.show()
        return EXIT_UPSTREAM_FAILURE
    except click.UsageError as exc:
        exc.show()
        return EXIT_USER_ERROR
    except click.ClickException as exc:
        exc.show()
        return EXIT_USER_ERROR
    except (ConfigError, MappingError) as exc:
        click.echo(f"Error: {exc}", err=True)
        return EXIT_USER_ERROR
    except ExtractionError as exc:
        click.echo(f"Error: {exc}", err=True)
        return EXIT_UPSTREAM_FAILURE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
