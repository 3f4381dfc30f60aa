"""Opt-in document fetching with per-host spacing, robots rules and a disk cache.

Network access is disabled unless ``FetchConfig.allow_network`` is set. The
transport, clock and sleep function are injectable so tests never need a
socket.
"""

from __future__ import annotations

import functools
import hashlib
import logging
import os
import socket
import tempfile
import threading
import time
import urllib.error
import urllib.request
import urllib.robotparser
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Protocol
from urllib.parse import urlsplit

from .errors import CacheWriteFailed, HttpError, NetworkDisabled, RobotsDisallowed, Timeout

logger = logging.getLogger(__name__)

DEFAULT_USER_AGENT = "cinerec/0.1 (+offline-first research client)"


@dataclass(frozen=True)
class FetchConfig:
    min_interval_per_host: float = 1.0  # seconds
    timeout: float = 10.0
    user_agent: str = DEFAULT_USER_AGENT
    cache_dir: str = ".cinerec-cache"
    respect_robots: bool = True
    allow_network: bool = False
    max_age: Optional[float] = None  # seconds; None = no expiry
    api_key: Optional[str] = None

    def __post_init__(self):
        if not self.min_interval_per_host > 0:
            raise ValueError("min_interval_per_host must be > 0")
        if not self.timeout > 0:
            raise ValueError("timeout must be > 0")


@dataclass(frozen=True)
class CachedResponse:
    url: str
    fetched_at: float
    status: int
    body: bytes


class Transport(Protocol):
    def __call__(self, url: str, *, timeout: float, headers: dict) -> tuple[int, bytes]:
        ...


def urllib_transport(url: str, *, timeout: float, headers: dict) -> tuple[int, bytes]:
    req = urllib.request.Request(url, headers=headers, method="GET")
    try:
        with urllib.request.urlopen(req, timeout=timeout) as resp:
            return resp.status, resp.read()
    except urllib.error.HTTPError as exc:
        return exc.code, exc.read() or b""
    except (socket.timeout, TimeoutError) as exc:
        raise Timeout(f"timed out fetching {url}") from exc
    except urllib.error.URLError as exc:
        if isinstance(exc.reason, (socket.timeout, TimeoutError)):
            raise Timeout(f"timed out fetching {url}") from exc
        raise


def cache_key(url: str) -> str:
    """Hex SHA-256 of the UTF-8 url."""
    if not url:
        raise ValueError("empty url")
    return hashlib.sha256(url.encode("utf-8")).hexdigest()


def _atomic_write(path: Path, data: bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


class ResponseCache:
    """``<dir>/<key>.body`` plus a three-line ``<dir>/<key>.meta``."""

    def __init__(self, directory):
        self.directory = Path(directory)

    def _paths(self, url):
        key = cache_key(url)
        return self.directory / f"{key}.body", self.directory / f"{key}.meta"

    def get(self, url: str) -> Optional[CachedResponse]:
        body_path, meta_path = self._paths(url)
        try:
            meta = meta_path.read_text(encoding="utf-8").splitlines()
            body = body_path.read_bytes()
        except OSError:
            return None
        if len(meta) < 3 or meta[0] != url:
            return None
        return CachedResponse(meta[0], float(meta[1]), int(meta[2]), body)

    def put(self, resp: CachedResponse) -> None:
        body_path, meta_path = self._paths(resp.url)
        meta = f"{resp.url}\n{resp.fetched_at!r}\n{resp.status}\n".encode("utf-8")
        try:
            self.directory.mkdir(parents=True, exist_ok=True)
            # body first: a reader only trusts entries whose meta exists
            _atomic_write(body_path, resp.body)
            _atomic_write(meta_path, meta)
        except OSError as exc:
            raise CacheWriteFailed(f"cannot write cache entry for {resp.url}: {exc}") from exc


class Fetcher:
    def __init__(self, config: FetchConfig = FetchConfig(), transport: Optional[Transport] = None,
                 clock: Callable[[], float] = time.monotonic,
                 sleep: Callable[[float], None] = time.sleep,
                 wall_clock: Callable[[], float] = time.time):
        self.config = config
        self.transport = transport or urllib_transport
        self.clock = clock
        self.sleep = sleep
        self.wall_clock = wall_clock
        self.cache = ResponseCache(config.cache_dir)
        self._lock = threading.Lock()
        self._host_locks: dict[str, threading.Lock] = {}
        self._last_start: dict[str, float] = {}
        self._robots: dict[str, urllib.robotparser.RobotFileParser] = {}
        self.request_log: list[tuple[str, float]] = []

    def _host_lock(self, host: str) -> threading.Lock:
        with self._lock:
            return self._host_locks.setdefault(host, threading.Lock())

    def _headers(self) -> dict:
        return {"User-Agent": self.config.user_agent}

    def _request(self, url: str) -> tuple[int, bytes]:
        host = urlsplit(url).netloc.lower()
        with self._host_lock(host):
            last = self._last_start.get(host)
            if last is not None:
                wait = last + self.config.min_interval_per_host - self.clock()
                while wait > 0:
                    self.sleep(wait)
                    wait = last + self.config.min_interval_per_host - self.clock()
            start = self.clock()
            self._last_start[host] = start
            self.request_log.append((url, start))
            try:
                return self.transport(url, timeout=self.config.timeout, headers=self._headers())
            except (socket.timeout, TimeoutError) as exc:
                raise Timeout(f"timed out fetching {url}") from exc

    def _robots_for(self, url: str) -> urllib.robotparser.RobotFileParser:
        parts = urlsplit(url)
        root = f"{parts.scheme}://{parts.netloc}"
        with self._host_lock("robots:" + parts.netloc.lower()):
            rp = self._robots.get(root)
            if rp is None:
                rp = urllib.robotparser.RobotFileParser(root + "/robots.txt")
                status, body = self._request(root + "/robots.txt")
                # same reading of failures as RobotFileParser.read()
                if status in (401, 403) or status >= 500:
                    rp.disallow_all = True
                elif status >= 400:
                    rp.allow_all = True
                else:
                    rp.parse(body.decode("utf-8", errors="replace").splitlines())
                self._robots[root] = rp
            return rp

    def fetch(self, url: str) -> bytes:
        """Return the body for ``url``, from cache when possible.

        Raises
        ------
        NetworkDisabled
            Cache miss while ``allow_network`` is false.
        RobotsDisallowed, Timeout, HttpError, CacheWriteFailed
        """
        parts = urlsplit(url)
        if parts.scheme not in ("http", "https") or not parts.netloc:
            raise ValueError(f"not an http(s) url: {url!r}")
        hit = self.cache.get(url)
        if hit is not None:
            age = self.wall_clock() - hit.fetched_at
            if self.config.max_age is None or age <= self.config.max_age:
                return hit.body
        if not self.config.allow_network:
            raise NetworkDisabled(f"{url} is not cached and network access is disabled")
        if self.config.respect_robots:
            if not self._robots_for(url).can_fetch(self.config.user_agent, url):
                raise RobotsDisallowed(url)
        status, body = self._request(url)
        if not 200 <= status < 300:
            raise HttpError(status, url)
        self.cache.put(CachedResponse(url, self.wall_clock(), status, body))
        return body


@functools.lru_cache(maxsize=None)
def _shared_fetcher(config: FetchConfig) -> Fetcher:
    return Fetcher(config)


def fetch(url: str, config: FetchConfig = FetchConfig()) -> bytes:
    """Fetch through a process-wide ``Fetcher`` per config (robots cached per host)."""
    return _shared_fetcher(config).fetch(url)
