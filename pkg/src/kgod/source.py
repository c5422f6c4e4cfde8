"""Page sources and backlinks from a MediaWiki API or an offline fixture corpus.

The fixture backend is a first-class source, not a test shim: acceptance
runs need a hermetic corpus while the live client talks to a real wiki.
"""

from __future__ import annotations

import threading
import time
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import requests

from .rdf import decode_page_name, encode_page_name, normalize_title

DEFAULT_USER_AGENT = "kgod/0.1 (on-demand knowledge graph extraction; contact: operator)"

RETRY_BASE_DELAY = 0.5
RETRY_FACTOR = 2.0


class SourceError(Exception):
    pass


class NetworkError(SourceError):
    def __init__(self, cause):
        super().__init__(f"upstream request failed: {cause}")
        self.cause = cause


class ApiError(SourceError):
    def __init__(self, code: str, message: str):
        super().__init__(f"API error {code}: {message}")
        self.code = code
        self.message = message


class CorpusError(SourceError):
    def __init__(self, path, reason: str = "unreadable"):
        super().__init__(f"fixture corpus error at {path}: {reason}")
        self.path = path


@dataclass(frozen=True)
class LiveMode:
    api_endpoint: str
    user_agent: str = DEFAULT_USER_AGENT
    rate_limit: float = 10.0
    timeout: float = 15.0
    retries: int = 3

    def __post_init__(self):
        if self.rate_limit <= 0:
            raise ValueError("rate_limit must be positive")


@dataclass(frozen=True)
class FixtureMode:
    corpus_dir: str


@dataclass(frozen=True)
class SourceConfig:
    mode: LiveMode | FixtureMode
    max_backlinks: int | None = None  # None means unlimited
    fetch_parallelism: int = 4

    def __post_init__(self):
        if self.fetch_parallelism < 1:
            raise ValueError("fetch_parallelism must be >= 1")
        if self.max_backlinks is not None and self.max_backlinks < 0:
            raise ValueError("max_backlinks must be >= 0 or unlimited")


@dataclass
class PageFetch:
    title: str
    resolved_title: str
    wikitext: str | None
    revision_id: int | None
    fetched_at: float
    missing: bool


@dataclass
class FetchFailure:
    title: str
    error: Exception


@dataclass(frozen=True)
class BacklinkList:
    title: str
    backlinks: tuple[str, ...]
    truncated: bool


class RateLimiter:
    """Global minimum-interval limiter; slots are reserved under a lock so the
    observed request rate never exceeds the configured one across threads."""

    def __init__(self, per_second: float):
        self._interval = 1.0 / per_second
        self._next_slot = 0.0
        self._lock = threading.Lock()

    def wait(self) -> None:
        with self._lock:
            now = time.monotonic()
            slot = max(self._next_slot, now)
            self._next_slot = slot + self._interval
        delay = slot - now
        if delay > 0:
            time.sleep(delay)


class _Counters:
    def __init__(self):
        self._lock = threading.Lock()
        self.page_fetches = 0
        self.backlink_requests = 0

    def count_page(self):
        with self._lock:
            self.page_fetches += 1

    def count_backlinks(self):
        with self._lock:
            self.backlink_requests += 1

    @property
    def total(self) -> int:
        with self._lock:
            return self.page_fetches + self.backlink_requests


class _BaseClient:
    def __init__(self, config: SourceConfig):
        self.config = config
        self.counters = _Counters()

    def fetch_page_source(self, title: str) -> PageFetch:
        raise NotImplementedError

    def fetch_backlinks(self, title: str, max_backlinks: int | None | object = ...) -> BacklinkList:
        raise NotImplementedError

    def fetch_many(self, titles: list[str]) -> list[PageFetch | FetchFailure]:
        if not titles:
            return []
        results: list = [None] * len(titles)

        def fetch_one(i: int, t: str):
            try:
                results[i] = self.fetch_page_source(t)
            except Exception as exc:
                results[i] = FetchFailure(title=t, error=exc)

        workers = min(self.config.fetch_parallelism, len(titles))
        if workers == 1:
            for i, t in enumerate(titles):
                fetch_one(i, t)
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                futures = [pool.submit(fetch_one, i, t) for i, t in enumerate(titles)]
                for f in futures:
                    f.result()
        return results

    def _effective_cap(self, max_backlinks) -> int | None:
        if max_backlinks is ...:
            return self.config.max_backlinks
        return max_backlinks


class LiveClient(_BaseClient):
    """MediaWiki action API client with rate limiting and retry on 5xx."""

    def __init__(self, config: SourceConfig):
        super().__init__(config)
        assert isinstance(config.mode, LiveMode)
        self.mode = config.mode
        self._limiter = RateLimiter(self.mode.rate_limit)
        self._session = requests.Session()
        self._session.headers["User-Agent"] = self.mode.user_agent

    def _request(self, params: dict) -> dict:
        attempts = max(1, self.mode.retries)
        last_error = None
        for attempt in range(attempts):
            if attempt > 0:
                time.sleep(RETRY_BASE_DELAY * RETRY_FACTOR ** (attempt - 1))
            self._limiter.wait()
            try:
                resp = self._session.get(
                    self.mode.api_endpoint, params=params, timeout=self.mode.timeout
                )
            except requests.RequestException as exc:
                last_error = exc
                continue
            if resp.status_code >= 500:
                last_error = f"HTTP {resp.status_code}"
                continue
            if resp.status_code != 200:
                raise NetworkError(f"HTTP {resp.status_code}")
            try:
                payload = resp.json()
            except ValueError as exc:
                raise NetworkError(f"invalid JSON response: {exc}")
            if "error" in payload:
                err = payload["error"]
                raise ApiError(err.get("code", "unknown"), err.get("info", ""))
            return payload
        raise NetworkError(last_error)

    def fetch_page_source(self, title: str) -> PageFetch:
        self.counters.count_page()
        payload = self._request(
            {
                "action": "query",
                "format": "json",
                "prop": "revisions",
                "rvprop": "content|ids",
                "rvslots": "main",
                "titles": title,
            }
        )
        query = payload.get("query", {})
        resolved = title
        for norm in query.get("normalized", ()):
            if norm.get("from") == title:
                resolved = norm.get("to", title)
        pages = query.get("pages", {})
        page = next(iter(pages.values()), None)
        now = time.time()
        if page is None or "missing" in page or "invalid" in page:
            return PageFetch(title, resolved, None, None, now, missing=True)
        resolved = page.get("title", resolved)
        revisions = page.get("revisions") or []
        if not revisions:
            return PageFetch(title, resolved, None, None, now, missing=True)
        rev = revisions[0]
        content = rev.get("slots", {}).get("main", {}).get("*")
        if content is None:
            content = rev.get("slots", {}).get("main", {}).get("content")
        if content is None:
            content = rev.get("*")
        if content is None:
            return PageFetch(title, resolved, None, None, now, missing=True)
        return PageFetch(title, resolved, content, rev.get("revid"), now, missing=False)

    def fetch_backlinks(self, title: str, max_backlinks=...) -> BacklinkList:
        cap = self._effective_cap(max_backlinks)
        collected: list[str] = []
        seen = set()
        truncated = False
        params = {
            "action": "query",
            "format": "json",
            "list": "backlinks",
            "bltitle": title,
            "blnamespace": "0",
            "bllimit": "max",
        }
        cont: str | None = None
        while True:
            self.counters.count_backlinks()
            if cont is not None:
                params["blcontinue"] = cont
            payload = self._request(params)
            entries = payload.get("query", {}).get("backlinks", [])
            for entry in entries:
                bl_title = entry.get("title")
                if not bl_title or bl_title == title or bl_title in seen:
                    continue
                if cap is not None and len(collected) >= cap:
                    truncated = True
                    break
                seen.add(bl_title)
                collected.append(bl_title)
            if truncated:
                break
            cont = payload.get("continue", {}).get("blcontinue")
            if cont is None:
                break
        return BacklinkList(title=title, backlinks=tuple(collected), truncated=truncated)


class FixtureClient(_BaseClient):
    """Reads `pages/<encoded title>.wiki` files and a `backlinks.tsv` index."""

    def __init__(self, config: SourceConfig):
        super().__init__(config)
        assert isinstance(config.mode, FixtureMode)
        self.corpus_dir = Path(config.mode.corpus_dir)

    def _pages_dir(self) -> Path:
        pages = self.corpus_dir / "pages"
        if not pages.is_dir():
            raise CorpusError(pages, "missing pages directory")
        return pages

    def fetch_page_source(self, title: str) -> PageFetch:
        self.counters.count_page()
        resolved = normalize_title(title)
        path = self._pages_dir() / f"{encode_page_name(resolved)}.wiki"
        now = time.time()
        if not path.exists():
            return PageFetch(title, resolved, None, None, now, missing=True)
        try:
            text = path.read_text(encoding="utf-8", errors="replace")
        except OSError as exc:
            raise CorpusError(path, str(exc))
        return PageFetch(title, resolved, text, None, now, missing=False)

    def fetch_backlinks(self, title: str, max_backlinks=...) -> BacklinkList:
        self.counters.count_backlinks()
        cap = self._effective_cap(max_backlinks)
        resolved = normalize_title(title)
        index_path = self.corpus_dir / "backlinks.tsv"
        if not self.corpus_dir.is_dir():
            raise CorpusError(self.corpus_dir, "missing corpus directory")
        collected: list[str] = []
        seen = set()
        truncated = False
        if index_path.exists():
            try:
                lines = index_path.read_text(encoding="utf-8").splitlines()
            except OSError as exc:
                raise CorpusError(index_path, str(exc))
            for line in lines:
                if not line.strip() or "\t" not in line:
                    continue
                target, source = line.split("\t", 1)
                if normalize_title(decode_page_name(target.strip())) != resolved:
                    continue
                source_title = normalize_title(decode_page_name(source.strip()))
                if source_title == resolved or source_title in seen:
                    continue
                if cap is not None and len(collected) >= cap:
                    truncated = True
                    break
                seen.add(source_title)
                collected.append(source_title)
        return BacklinkList(title=title, backlinks=tuple(collected), truncated=truncated)


def make_client(config: SourceConfig) -> _BaseClient:
    if isinstance(config.mode, LiveMode):
        return LiveClient(config)
    return FixtureClient(config)


class _Flight:
    __slots__ = ("event", "value", "error")

    def __init__(self):
        self.event = threading.Event()
        self.value = None
        self.error = None


@dataclass
class CacheEntry:
    key: str
    value: object
    stored_at: float
    ttl: float


class TtlLruCache:
    """Capacity-bounded TTL cache with LRU eviction and single-flight
    coalescing: concurrent callers for one key trigger at most one compute."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("cache capacity must be >= 1")
        self.capacity = capacity
        self._entries: OrderedDict[str, CacheEntry] = OrderedDict()
        self._inflight: dict[str, _Flight] = {}
        self._lock = threading.Lock()

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)

    def clear(self) -> None:
        with self._lock:
            self._entries.clear()

    def get_or_compute(self, key: str, ttl: float, compute):
        """Returns (value, hit). A ttl of 0 disables caching entirely."""
        if ttl < 0:
            raise ValueError("ttl must be >= 0")
        if ttl == 0:
            return compute(), False
        while True:
            with self._lock:
                entry = self._entries.get(key)
                if entry is not None:
                    if time.monotonic() - entry.stored_at < entry.ttl:
                        self._entries.move_to_end(key)
                        return entry.value, True
                    del self._entries[key]
                flight = self._inflight.get(key)
                if flight is None:
                    flight = _Flight()
                    self._inflight[key] = flight
                    leader = True
                else:
                    leader = False
            if not leader:
                flight.event.wait()
                if flight.error is not None:
                    raise flight.error
                return flight.value, True
            try:
                value = compute()
            except BaseException as exc:
                flight.error = exc
                with self._lock:
                    self._inflight.pop(key, None)
                flight.event.set()
                raise
            with self._lock:
                self._entries[key] = CacheEntry(key, value, time.monotonic(), ttl)
                self._entries.move_to_end(key)
                while len(self._entries) > self.capacity:
                    self._entries.popitem(last=False)
                self._inflight.pop(key, None)
            flight.value = value
            flight.event.set()
            return value, False
