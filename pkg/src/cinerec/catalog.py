"""Movie catalog loading, normalization, merging and title lookup."""

from __future__ import annotations

import csv
import datetime as dt
import json
import logging
import sys
import unicodedata
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Mapping, Optional

from .errors import (
    EmptyCatalog,
    FileUnreadable,
    IdentityMismatch,
    MissingColumn,
    MissingId,
    MissingTitle,
)

logger = logging.getLogger(__name__)

csv.field_size_limit(min(sys.maxsize, 2**31 - 1))

SOURCE_CATALOG = "catalog"
SOURCE_EXTRACTED = "extracted"


def normalize_title(title: str) -> str:
    """Case-fold and collapse runs of whitespace."""
    return " ".join(unicodedata.normalize("NFC", title).casefold().split())


def normalize_term(value: str) -> str:
    return " ".join(value.casefold().split())


@dataclass(frozen=True)
class ColumnMapping:
    """Header names for each record field; ``None`` marks a field as absent.

    Defaults follow the TMDB 2023 Kaggle export, which carries no director
    or cast columns.
    """

    id: str = "id"
    title: str = "title"
    release_date: Optional[str] = "release_date"
    genres: Optional[str] = "genres"
    overview: Optional[str] = "overview"
    popularity: Optional[str] = "popularity"
    vote_average: Optional[str] = "vote_average"
    vote_count: Optional[str] = "vote_count"
    keywords: Optional[str] = "keywords"
    director: Optional[str] = None
    cast: Optional[str] = None
    list_delimiter: str = ","

    @classmethod
    def from_dict(cls, d: Mapping[str, Optional[str]]) -> "ColumnMapping":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown column mapping keys: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class MovieRecord:
    movie_id: str
    title: str
    release_date: Optional[dt.date] = None
    genres: tuple[str, ...] = ()
    director: tuple[str, ...] = ()
    cast: tuple[str, ...] = ()
    keywords: tuple[str, ...] = ()
    overview: Optional[str] = None
    popularity: Optional[float] = None
    vote_average: Optional[float] = None
    vote_count: int = 0
    sources: frozenset = frozenset({SOURCE_CATALOG})

    @property
    def year(self) -> Optional[int]:
        return self.release_date.year if self.release_date else None

    def to_dict(self) -> dict:
        return {
            "movie_id": self.movie_id,
            "title": self.title,
            "release_date": self.release_date.isoformat() if self.release_date else None,
            "genres": list(self.genres),
            "director": list(self.director),
            "cast": list(self.cast),
            "keywords": list(self.keywords),
            "overview": self.overview,
            "popularity": self.popularity,
            "vote_average": self.vote_average,
            "vote_count": self.vote_count,
            "sources": sorted(self.sources),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "MovieRecord":
        return cls(
            movie_id=d["movie_id"],
            title=d["title"],
            release_date=_parse_date(d.get("release_date")),
            genres=tuple(d.get("genres", ())),
            director=tuple(d.get("director", ())),
            cast=tuple(d.get("cast", ())),
            keywords=tuple(d.get("keywords", ())),
            overview=d.get("overview"),
            popularity=d.get("popularity"),
            vote_average=d.get("vote_average"),
            vote_count=int(d.get("vote_count", 0)),
            sources=frozenset(d.get("sources", (SOURCE_CATALOG,))),
        )


@dataclass(frozen=True)
class LoadReport:
    n_rows: int = 0
    n_malformed: int = 0
    n_duplicates: int = 0


class Catalog:
    """Immutable, indexed collection of ``MovieRecord``.

    Records keep the order in which their ids first appeared; that order
    defines the dense index used everywhere else.
    """

    def __init__(self, records: Iterable[MovieRecord], report: Optional[LoadReport] = None):
        self._records: tuple[MovieRecord, ...] = tuple(records)
        self.id_to_index: dict[str, int] = {}
        for i, rec in enumerate(self._records):
            if not rec.movie_id:
                raise MissingId("record without movie_id")
            if rec.movie_id in self.id_to_index:
                raise ValueError(f"duplicate movie_id {rec.movie_id!r}")
            self.id_to_index[rec.movie_id] = i
        self.title_index: dict[str, list[str]] = {}
        for rec in self._records:
            self.title_index.setdefault(normalize_title(rec.title), []).append(rec.movie_id)
        self.load_report = report or LoadReport(n_rows=len(self._records))

    @property
    def records(self) -> tuple[MovieRecord, ...]:
        return self._records

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self):
        return iter(self._records)

    def __contains__(self, movie_id) -> bool:
        return movie_id in self.id_to_index

    def __getitem__(self, movie_id: str) -> MovieRecord:
        return self._records[self.id_to_index[movie_id]]

    def get(self, movie_id: str, default=None):
        i = self.id_to_index.get(movie_id)
        return default if i is None else self._records[i]

    def popularity(self) -> dict[str, float]:
        return {r.movie_id: (r.popularity or 0.0) for r in self._records}

    def replace_records(self, updated: Iterable[MovieRecord]) -> "Catalog":
        """Return a new catalog with records swapped in by movie_id."""
        records = list(self._records)
        for rec in updated:
            records[self.id_to_index[rec.movie_id]] = rec
        return Catalog(records, self.load_report)

    def to_json(self) -> str:
        return json.dumps([r.to_dict() for r in self._records], ensure_ascii=False,
                          sort_keys=True, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "Catalog":
        return cls(MovieRecord.from_dict(d) for d in json.loads(text))

    def save(self, path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "Catalog":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise FileUnreadable(f"cannot read catalog {path}: {exc}") from exc
        return cls.from_json(text)


def _parse_date(text) -> Optional[dt.date]:
    if not text:
        return None
    try:
        return dt.date.fromisoformat(str(text).strip())
    except ValueError:
        return None


def _parse_float(text) -> Optional[float]:
    if text is None:
        return None
    try:
        x = float(str(text).strip())
    except ValueError:
        return None
    return x if x == x and abs(x) != float("inf") else None


def _parse_int(text) -> Optional[int]:
    x = _parse_float(text)
    if x is None or x != int(x):
        return None
    return int(x)


def _split_list(text, delimiter: str) -> tuple[str, ...]:
    if not text:
        return ()
    return tuple(p.strip() for p in str(text).split(delimiter) if p.strip())


def _dedupe(values: Iterable[str]) -> tuple[str, ...]:
    seen = set()
    out = []
    for v in values:
        key = normalize_term(v)
        if key not in seen:
            seen.add(key)
            out.append(v)
    return tuple(out)


def normalize_record(raw: Mapping[str, Optional[str]], mapping: ColumnMapping = ColumnMapping()) -> MovieRecord:
    """Turn one raw row into a ``MovieRecord``.

    List cells are split on ``mapping.list_delimiter`` and trimmed; display
    casing is kept and duplicates are removed case-insensitively.
    Unparseable dates and numbers become missing values. A zero vote count
    makes the vote average missing.
    """
    movie_id = (raw.get(mapping.id) or "").strip()
    if not movie_id:
        raise MissingId("row has no id")
    title = (raw.get(mapping.title) or "").strip()
    if not title:
        raise MissingTitle(f"row {movie_id!r} has no title")

    def cell(name):
        return raw.get(name) if name else None

    def listed(name):
        return _dedupe(_split_list(cell(name), mapping.list_delimiter))

    popularity = _parse_float(cell(mapping.popularity))
    if popularity is not None and popularity < 0:
        popularity = None
    vote_count = _parse_int(cell(mapping.vote_count))
    if vote_count is None or vote_count < 0:
        vote_count = 0
    vote_average = _parse_float(cell(mapping.vote_average))
    if vote_count == 0 or (vote_average is not None and not 0 <= vote_average <= 10):
        vote_average = None
    overview = cell(mapping.overview)
    overview = overview.strip() or None if overview else None

    return MovieRecord(
        movie_id=movie_id,
        title=title,
        release_date=_parse_date(cell(mapping.release_date)),
        genres=listed(mapping.genres),
        director=listed(mapping.director),
        cast=listed(mapping.cast),
        keywords=listed(mapping.keywords),
        overview=overview,
        popularity=popularity,
        vote_average=vote_average,
        vote_count=vote_count,
    )


def load_movie_catalog(path, mapping: ColumnMapping = ColumnMapping()) -> Catalog:
    """Load a delimited movie file into a ``Catalog``.

    Rows sharing an id collapse to the one with the larger vote count (the
    earlier row wins ties). Malformed rows are counted in
    ``Catalog.load_report`` and skipped.

    Raises
    ------
    FileUnreadable
        The file cannot be opened or decoded.
    MissingColumn
        The header lacks the id or title column.
    EmptyCatalog
        No row produced a valid record.
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames or []
            for required in (mapping.id, mapping.title):
                if required not in header:
                    raise MissingColumn(required)
            records: dict[str, MovieRecord] = {}
            n_rows = n_bad = n_dup = 0
            for row in reader:
                n_rows += 1
                if None in row or any(v is None for v in row.values()):
                    n_bad += 1
                    continue
                try:
                    rec = normalize_record(row, mapping)
                except (MissingId, MissingTitle):
                    n_bad += 1
                    continue
                prev = records.get(rec.movie_id)
                if prev is not None:
                    n_dup += 1
                    if rec.vote_count > prev.vote_count:
                        records[rec.movie_id] = rec
                else:
                    records[rec.movie_id] = rec
    except (OSError, UnicodeDecodeError) as exc:
        raise FileUnreadable(f"cannot read {path}: {exc}") from exc
    except csv.Error as exc:
        raise FileUnreadable(f"cannot parse {path}: {exc}") from exc

    if not records:
        raise EmptyCatalog(f"{path}: no valid rows ({n_bad} malformed)")
    if n_bad:
        logger.warning("%s: skipped %d malformed rows", path, n_bad)
    return Catalog(records.values(), LoadReport(n_rows, n_bad, n_dup))


def _union(base: tuple[str, ...], extra: tuple[str, ...]) -> tuple[str, ...]:
    return _dedupe(base + extra)


def merge_records(base: MovieRecord, update: MovieRecord, linked: bool = False) -> MovieRecord:
    """Fold extraction-derived ``update`` into ``base``.

    Missing scalar fields of ``base`` are filled from ``update``; list fields
    become an ordered union with base entries first. ``base.movie_id`` is
    kept. Unless ``linked`` is set, the normalized titles must agree.
    """
    if not linked and normalize_title(base.title) != normalize_title(update.title):
        raise IdentityMismatch(f"{base.title!r} vs {update.title!r}")

    def pick(a, b):
        return b if a is None else a

    return replace(
        base,
        release_date=pick(base.release_date, update.release_date),
        genres=_union(base.genres, update.genres),
        director=_union(base.director, update.director),
        cast=_union(base.cast, update.cast),
        keywords=_union(base.keywords, update.keywords),
        overview=pick(base.overview, update.overview),
        popularity=pick(base.popularity, update.popularity),
        vote_average=pick(base.vote_average, update.vote_average),
        sources=base.sources | {SOURCE_EXTRACTED},
    )


def lookup_title(catalog: Catalog, title: str) -> list[MovieRecord]:
    """Records whose normalized title matches, most-voted first."""
    ids = catalog.title_index.get(normalize_title(title), [])
    return sorted((catalog[i] for i in ids), key=lambda r: -r.vote_count)
