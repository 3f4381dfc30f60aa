import socket
from pathlib import Path

import pytest

from cinerec.catalog import Catalog, MovieRecord

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"
GOLDEN = Path(__file__).resolve().parent / "golden"


@pytest.fixture
def fixtures_dir():
    return FIXTURES


@pytest.fixture
def no_network(monkeypatch):
    """Fail the test if anything tries to open a socket connection."""
    calls = []

    def guard(*args, **kwargs):
        calls.append(args)
        raise AssertionError("network access attempted")

    monkeypatch.setattr(socket.socket, "connect", guard)
    monkeypatch.setattr(socket, "create_connection", guard)
    return calls


def movie(movie_id, title=None, **kw):
    return MovieRecord(movie_id=movie_id, title=title or f"Movie {movie_id}", **kw)


@pytest.fixture
def small_catalog():
    return Catalog([
        movie("A", "Alpha", genres=("Drama",), director=("Jane Doe",), popularity=5.0, vote_count=10),
        movie("B", "Beta", genres=("Comedy",), director=("Jane Doe",), popularity=3.0, vote_count=5),
        movie("C", "Gamma", genres=("Horror",), director=("John Roe",), popularity=9.0, vote_count=7),
    ])


def jsonable(obj):
    """Dataclasses, tuples and dates rendered the way the golden files store them."""
    import dataclasses
    import datetime as dt

    if dataclasses.is_dataclass(obj):
        return {f.name: jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, dict):
        return {k: jsonable(v) for k, v in obj.items()}
    if isinstance(obj, dt.date):
        return obj.isoformat()
    return obj


def run_cli(*argv):
    """Run the CLI in-process; returns ``(exit_code, stdout, stderr)``."""
    import io

    from cinerec.cli import run_command

    out, err = io.StringIO(), io.StringIO()
    code = run_command([str(a) for a in argv], stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def ingested(tmp_path):
    data = tmp_path / "data"
    code, _, err = run_cli("ingest", "--movies", FIXTURES / "data" / "movies.csv",
                           "--ratings", FIXTURES / "data" / "ratings.csv", "--data-dir", data)
    assert code == 0, err
    return data


@pytest.fixture
def trained(ingested):
    code, _, err = run_cli("train", "--data-dir", ingested, "--factors", "8", "--epochs", "30")
    assert code == 0, err
    return ingested


ACCEPTANCE: dict = {}


class criterion:
    """Time a block, enforce its runtime budget and record PASS/FAIL.

    Usage: ``with criterion(3, "similarity oracle", budget=10.0): ...``
    """

    def __init__(self, number, name, budget=None):
        self.number, self.name, self.budget = number, name, budget

    def __enter__(self):
        import time

        self.start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        import time

        elapsed = time.perf_counter() - self.start
        over = self.budget is not None and elapsed >= self.budget
        ok = exc_type is None and not over
        detail = f"{elapsed:.2f}s" + (f" (budget {self.budget:g}s)" if self.budget else "")
        if exc_type is not None:
            detail += f" {exc_type.__name__}: {str(exc).splitlines()[0] if str(exc) else ''}"
        elif over:
            detail += " over budget"
        ACCEPTANCE[self.number] = (self.name, ok, detail)
        line = f"ACCEPTANCE {self.number} {'PASS' if ok else 'FAIL'}  {self.name}  [{detail}]"
        print(line)
        if exc_type is None and over:
            raise AssertionError(line)
        return False


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        name, ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"{n}. {'PASS' if ok else 'FAIL'}  {name}  [{detail}]")
