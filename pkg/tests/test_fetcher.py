import re
import threading

import pytest
from hypothesis import given, strategies as st

from cinerec.errors import CacheWriteFailed, HttpError, NetworkDisabled, RobotsDisallowed, Timeout
from cinerec.fetcher import CachedResponse, FetchConfig, Fetcher, ResponseCache, cache_key


class FakeClock:
    def __init__(self):
        self.now = 100.0

    def __call__(self):
        return self.now

    def sleep(self, seconds):
        self.now += seconds


class ScriptedTransport:
    """Serves fixed responses and records every call."""

    def __init__(self, routes, clock=None, delay=0.0):
        self.routes = routes
        self.calls = []
        self.clock = clock
        self.delay = delay

    def __call__(self, url, *, timeout, headers):
        self.calls.append(url)
        if self.clock is not None:
            self.clock.now += self.delay
        resp = self.routes.get(url, (404, b""))
        if isinstance(resp, BaseException):
            raise resp
        return resp


def failing_transport(url, *, timeout, headers):
    raise AssertionError(f"transport invoked for {url}")


def make(tmp_path, routes=None, **cfg):
    clock = FakeClock()
    transport = ScriptedTransport(routes or {}, clock)
    config = FetchConfig(cache_dir=str(tmp_path / "cache"), **cfg)
    return Fetcher(config, transport, clock=clock, sleep=clock.sleep, wall_clock=clock), transport, clock


class TestCacheKey:
    def test_deterministic(self):
        assert cache_key("https://a.example/x") == cache_key("https://a.example/x")

    def test_one_char_differs(self):
        assert cache_key("https://a.example/x?q=1") != cache_key("https://a.example/x?q=2")

    @given(st.text(min_size=1))
    def test_hex_only(self, url):
        assert re.fullmatch(r"[0-9a-f]{64}", cache_key(url))

    def test_empty(self):
        with pytest.raises(ValueError):
            cache_key("")


def test_config_invariants():
    with pytest.raises(ValueError):
        FetchConfig(min_interval_per_host=0)
    with pytest.raises(ValueError):
        FetchConfig(timeout=-1)
    assert FetchConfig().allow_network is False


def test_cached_body_without_network(tmp_path):
    url = "https://a.example/page"
    ResponseCache(tmp_path / "cache").put(CachedResponse(url, 1.0, 200, b"hello"))
    f = Fetcher(FetchConfig(cache_dir=str(tmp_path / "cache")), failing_transport)
    assert f.fetch(url) == b"hello"


def test_uncached_network_disabled(tmp_path):
    f = Fetcher(FetchConfig(cache_dir=str(tmp_path / "cache")), failing_transport)
    with pytest.raises(NetworkDisabled):
        f.fetch("https://a.example/page")


def test_spacing_with_fake_clock(tmp_path):
    routes = {"https://a.example/robots.txt": (404, b""),
              "https://a.example/1": (200, b"one"), "https://a.example/2": (200, b"two"),
              "https://b.example/robots.txt": (404, b""), "https://b.example/1": (200, b"b")}
    f, transport, clock = make(tmp_path, routes, allow_network=True, min_interval_per_host=1.0)
    assert f.fetch("https://a.example/1") == b"one"
    assert f.fetch("https://a.example/2") == b"two"
    f.fetch("https://b.example/1")
    starts = {}
    for url, t in f.request_log:
        starts.setdefault(url.split("/")[2], []).append(t)
    a = starts["a.example"]
    assert len(a) == 3  # robots, 1, 2
    assert all(t2 - t1 >= 1.0 for t1, t2 in zip(a, a[1:]))
    # the other host is not held back by the first
    assert starts["b.example"][0] < a[-1] + 1.0


def test_spacing_concurrent_callers(tmp_path):
    urls = [f"https://c.example/{k}" for k in range(8)]
    routes = {u: (200, u.encode()) for u in urls}
    transport = ScriptedTransport(routes)
    config = FetchConfig(cache_dir=str(tmp_path / "cache"), allow_network=True,
                         respect_robots=False, min_interval_per_host=0.03)
    f = Fetcher(config, transport)
    threads = [threading.Thread(target=f.fetch, args=(u,)) for u in urls]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    starts = sorted(t for _, t in f.request_log)
    assert len(starts) == 8
    assert all(b - a >= 0.03 for a, b in zip(starts, starts[1:]))


def test_robots_disallow_and_fetched_once(tmp_path):
    routes = {"https://r.example/robots.txt": (200, b"User-agent: *\nDisallow: /private\n"),
              "https://r.example/public": (200, b"ok")}
    f, transport, _ = make(tmp_path, routes, allow_network=True)
    with pytest.raises(RobotsDisallowed):
        f.fetch("https://r.example/private/a")
    assert f.fetch("https://r.example/public") == b"ok"
    assert transport.calls.count("https://r.example/robots.txt") == 1


def test_robots_forbidden_blocks_everything(tmp_path):
    f, _, _ = make(tmp_path, {"https://r.example/robots.txt": (403, b"")}, allow_network=True)
    with pytest.raises(RobotsDisallowed):
        f.fetch("https://r.example/anything")


def test_robots_ignored_when_configured(tmp_path):
    routes = {"https://r.example/private": (200, b"x")}
    f, transport, _ = make(tmp_path, routes, allow_network=True, respect_robots=False)
    assert f.fetch("https://r.example/private") == b"x"
    assert transport.calls == ["https://r.example/private"]


def test_http_error_not_cached(tmp_path):
    f, transport, _ = make(tmp_path, {"https://h.example/x": (500, b"boom")},
                           allow_network=True, respect_robots=False)
    with pytest.raises(HttpError) as exc:
        f.fetch("https://h.example/x")
    assert exc.value.status == 500
    assert ResponseCache(tmp_path / "cache").get("https://h.example/x") is None


def test_timeout(tmp_path):
    f, _, _ = make(tmp_path, {"https://t.example/x": TimeoutError()},
                   allow_network=True, respect_robots=False)
    with pytest.raises(Timeout):
        f.fetch("https://t.example/x")


def test_cache_written_and_idempotent(tmp_path):
    url = "https://w.example/x"
    f, transport, _ = make(tmp_path, {url: (200, b"body")}, allow_network=True, respect_robots=False)
    assert f.fetch(url) == b"body"
    assert f.fetch(url) == b"body"
    assert transport.calls == [url]
    key = cache_key(url)
    meta = (tmp_path / "cache" / f"{key}.meta").read_text().splitlines()
    assert meta[0] == url and meta[2] == "200"
    assert (tmp_path / "cache" / f"{key}.body").read_bytes() == b"body"
    assert not list((tmp_path / "cache").glob("*.tmp"))


def test_max_age_refetches(tmp_path):
    url = "https://w.example/x"
    f, transport, clock = make(tmp_path, {url: (200, b"body")}, allow_network=True,
                               respect_robots=False, max_age=60)
    f.fetch(url)
    clock.now += 120
    f.fetch(url)
    assert transport.calls == [url, url]


def test_cache_write_failure(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("not a dir")
    url = "https://w.example/x"
    config = FetchConfig(cache_dir=str(blocker / "sub"), allow_network=True, respect_robots=False)
    f = Fetcher(config, ScriptedTransport({url: (200, b"x")}))
    with pytest.raises(CacheWriteFailed):
        f.fetch(url)


def test_rejects_non_http(tmp_path):
    f, _, _ = make(tmp_path)
    with pytest.raises(ValueError):
        f.fetch("file:///etc/passwd")


def test_robots_server_error_blocks(tmp_path):
    f, _, _ = make(tmp_path, {"https://r.example/robots.txt": (503, b"")}, allow_network=True)
    with pytest.raises(RobotsDisallowed):
        f.fetch("https://r.example/page")


def test_robots_missing_allows(tmp_path):
    f, _, _ = make(tmp_path, {"https://r.example/page": (200, b"ok")}, allow_network=True)
    assert f.fetch("https://r.example/page") == b"ok"
