"""Service configuration: line-oriented `key = value` files with KGOD_* env overrides."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

from .extraction import ExtractionOptions
from .rdf import Iri, NamespaceConfig
from .source import DEFAULT_USER_AGENT, FixtureMode, LiveMode, SourceConfig

ENV_PREFIX = "KGOD_"

DEFAULT_API_ENDPOINT = "https://en.wikipedia.org/w/api.php"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ServiceConfig:
    mapping_file: Path
    listen_address: str = "127.0.0.1"
    listen_port: int = 8080
    namespaces: NamespaceConfig = field(default_factory=NamespaceConfig)
    source: SourceConfig = field(
        default_factory=lambda: SourceConfig(mode=LiveMode(api_endpoint=DEFAULT_API_ENDPOINT))
    )
    options: ExtractionOptions = field(default_factory=ExtractionOptions)
    cache_capacity: int = 1024
    cache_ttl: float = 300.0
    ui_assets: Path | None = None


_KEYS = {
    "listen_address", "listen_port",
    "resource_base", "ontology_base", "abstract_predicate", "type_predicate",
    "label_predicate", "redirect_predicate",
    "source_mode", "api_endpoint", "user_agent", "rate_limit", "timeout", "retries",
    "corpus_dir", "max_backlinks", "fetch_parallelism",
    "cache_capacity", "cache_ttl", "mapping_file", "ui_assets",
    "abstract_sentences", "abstract_language", "follow_redirects", "include_ingoing",
}


def _parse_bool(value: str, key: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {value!r}")


def _parse_int(value: str, key: str) -> int:
    try:
        return int(value.strip())
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {value!r}")


def _parse_float(value: str, key: str) -> float:
    try:
        return float(value.strip())
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {value!r}")


def _read_file(path: Path) -> dict[str, str]:
    values: dict[str, str] = {}
    try:
        lines = path.read_text(encoding="utf-8").split("\n")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}")
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in _KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = value.strip()
    return values


def load_service_config(path: str | Path | None, env: dict | None = None) -> ServiceConfig:
    env = os.environ if env is None else env
    base_dir = Path.cwd()
    values: dict[str, str] = {}
    if path is not None:
        cfg_path = Path(path)
        values = _read_file(cfg_path)
        base_dir = cfg_path.resolve().parent
    for key in _KEYS:
        env_value = env.get(ENV_PREFIX + key.upper())
        if env_value is not None:
            values[key] = env_value

    def resolve(p: str) -> Path:
        candidate = Path(p)
        return candidate if candidate.is_absolute() else base_dir / candidate

    def iri(key: str, default: str) -> Iri:
        try:
            return Iri(values.get(key, default))
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}")

    try:
        namespaces = NamespaceConfig(
            resource_base=iri("resource_base", "http://dbpedia.org/resource/"),
            ontology_base=iri("ontology_base", "http://dbpedia.org/ontology/"),
            abstract_predicate=iri("abstract_predicate", "http://dbpedia.org/ontology/abstract"),
            type_predicate=iri("type_predicate", "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"),
            label_predicate=iri("label_predicate", "http://www.w3.org/2000/01/rdf-schema#label"),
            redirect_predicate=iri("redirect_predicate", "http://dbpedia.org/ontology/wikiPageRedirects"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc))

    mode_name = values.get("source_mode", "live").strip().lower()
    if mode_name == "live":
        mode = LiveMode(
            api_endpoint=values.get("api_endpoint", DEFAULT_API_ENDPOINT),
            user_agent=values.get("user_agent", DEFAULT_USER_AGENT),
            rate_limit=_parse_float(values["rate_limit"], "rate_limit") if "rate_limit" in values else 10.0,
            timeout=_parse_float(values["timeout"], "timeout") if "timeout" in values else 15.0,
            retries=_parse_int(values["retries"], "retries") if "retries" in values else 3,
        )
    elif mode_name == "fixture":
        if "corpus_dir" not in values:
            raise ConfigError("source_mode = fixture requires corpus_dir")
        mode = FixtureMode(corpus_dir=str(resolve(values["corpus_dir"])))
    else:
        raise ConfigError(f"source_mode: expected 'live' or 'fixture', got {mode_name!r}")

    max_backlinks: int | None
    raw_cap = values.get("max_backlinks", "unlimited").strip().lower()
    if raw_cap in ("unlimited", "none", ""):
        max_backlinks = None
    else:
        max_backlinks = _parse_int(raw_cap, "max_backlinks")

    try:
        source = SourceConfig(
            mode=mode,
            max_backlinks=max_backlinks,
            fetch_parallelism=_parse_int(values.get("fetch_parallelism", "4"), "fetch_parallelism"),
        )
        options = ExtractionOptions(
            abstract_sentences=_parse_int(values.get("abstract_sentences", "3"), "abstract_sentences"),
            abstract_language=values.get("abstract_language", "en"),
            follow_redirects=_parse_int(values.get("follow_redirects", "3"), "follow_redirects"),
            include_ingoing=_parse_bool(values.get("include_ingoing", "true"), "include_ingoing"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc))

    if "mapping_file" not in values:
        raise ConfigError("mapping_file is required")

    port = _parse_int(values.get("listen_port", "8080"), "listen_port")
    if not (0 < port < 65536):
        raise ConfigError(f"listen_port out of range: {port}")

    return ServiceConfig(
        mapping_file=resolve(values["mapping_file"]),
        listen_address=values.get("listen_address", "127.0.0.1"),
        listen_port=port,
        namespaces=namespaces,
        source=source,
        options=options,
        cache_capacity=_parse_int(values.get("cache_capacity", "1024"), "cache_capacity"),
        cache_ttl=_parse_float(values.get("cache_ttl", "300"), "cache_ttl"),
        ui_assets=resolve(values["ui_assets"]) if values.get("ui_assets") else None,
    )
