"""Parsers for saved movie pages and API payloads.

All functions here work on text already in memory; none touch the network.
"""

from __future__ import annotations

import datetime as dt
import json
import logging
import time
from dataclasses import dataclass, field
from html.parser import HTMLParser
from typing import Iterable, Optional, Sequence

from .catalog import Catalog, MovieRecord, SOURCE_EXTRACTED, lookup_title, normalize_title
from .errors import (
    AnchorNotFound,
    MalformedJson,
    MalformedPayload,
    MissingDataPath,
    MissingMoviesField,
    NoJsonLdBlock,
    NotAMovieBlock,
)

logger = logging.getLogger(__name__)

LD_JSON_TYPE = "application/ld+json"
DIRECTOR_ATTR = ("data-qa", "movie-info-director")


class ParsedList(list):
    """A list that also records how many input elements were skipped."""

    def __init__(self, items=(), skipped: int = 0):
        super().__init__(items)
        self.skipped = skipped


@dataclass(frozen=True)
class JsonLdMovie:
    name: str
    directors: tuple[str, ...] = ()
    genres: Optional[tuple[str, ...]] = None
    date_published: Optional[dt.date] = None
    aggregate_rating: Optional[float] = None
    source_url: Optional[str] = None

    def to_record(self, movie_id: str = "") -> MovieRecord:
        return MovieRecord(
            movie_id=movie_id or self.source_url or self.name,
            title=self.name,
            release_date=self.date_published,
            genres=self.genres or (),
            director=self.directors,
            sources=frozenset({SOURCE_EXTRACTED}),
        )


@dataclass(frozen=True)
class MovieDetailsPayload:
    title: str
    mpaa_rating: Optional[str] = None
    synopsis: Optional[str] = None
    critics_consensus: Optional[str] = None
    abridged_cast: tuple[str, ...] = ()
    runtime_minutes: Optional[int] = None
    critics_score: Optional[int] = None
    audience_score: Optional[int] = None
    links: dict = field(default_factory=dict)

    def to_record(self, movie_id: str = "") -> MovieRecord:
        return MovieRecord(
            movie_id=movie_id or self.title,
            title=self.title,
            cast=self.abridged_cast,
            overview=self.synopsis,
            sources=frozenset({SOURCE_EXTRACTED}),
        )


@dataclass(frozen=True)
class InTheatersEntry:
    title: str
    payload_id: Optional[str] = None


@dataclass(frozen=True)
class GraphQlTitle:
    title: str
    release_date: Optional[dt.date] = None


@dataclass(frozen=True)
class TrendingSet:
    """movie_id -> weight in (0, 1], plus titles that did not resolve."""

    entries: dict
    as_of: float
    unresolved: tuple[str, ...] = ()

    def __contains__(self, movie_id) -> bool:
        return movie_id in self.entries

    def weight(self, movie_id) -> float:
        return self.entries.get(movie_id, 0.0)

    def union(self, other: "TrendingSet") -> "TrendingSet":
        merged = dict(self.entries)
        for k, w in other.entries.items():
            merged[k] = max(w, merged.get(k, 0.0))
        unresolved = tuple(dict.fromkeys(self.unresolved + other.unresolved))
        return TrendingSet(merged, max(self.as_of, other.as_of), unresolved)

    def to_dict(self) -> dict:
        return {"as_of": self.as_of, "entries": dict(sorted(self.entries.items())),
                "unresolved": list(self.unresolved)}

    @classmethod
    def from_dict(cls, d) -> "TrendingSet":
        return cls(dict(d.get("entries", {})), float(d.get("as_of", 0.0)),
                   tuple(d.get("unresolved", ())))

    @classmethod
    def empty(cls) -> "TrendingSet":
        return cls({}, 0.0)


# --- HTML ---------------------------------------------------------------

class _ScriptCollector(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=False)
        self.blocks: list[str] = []
        self._buf: Optional[list[str]] = None

    def handle_starttag(self, tag, attrs):
        if tag == "script":
            kind = (dict(attrs).get("type") or "").split(";")[0].strip().lower()
            if kind == LD_JSON_TYPE:
                self._buf = []

    def handle_endtag(self, tag):
        if tag == "script" and self._buf is not None:
            self.blocks.append("".join(self._buf))
            self._buf = None

    def handle_data(self, data):
        if self._buf is not None:
            self._buf.append(data)


class _AnchorFinder(HTMLParser):
    def __init__(self, attr: tuple[str, str]):
        super().__init__(convert_charrefs=True)
        self.attr = attr
        self.text: Optional[str] = None
        self._depth = 0
        self._buf: list[str] = []

    def handle_starttag(self, tag, attrs):
        if self.text is not None:
            return
        if self._depth:
            if tag == "a":
                self._depth += 1
            return
        if tag == "a" and dict(attrs).get(self.attr[0]) == self.attr[1]:
            self._depth = 1

    def handle_endtag(self, tag):
        if self._depth and tag == "a":
            self._depth -= 1
            if not self._depth:
                self.text = "".join(self._buf)

    def handle_data(self, data):
        if self._depth:
            self._buf.append(data)


def _is_movie(obj) -> bool:
    kind = obj.get("@type")
    if isinstance(kind, list):
        return "Movie" in kind
    return kind == "Movie"


def _candidates(doc) -> Iterable[dict]:
    if isinstance(doc, list):
        for d in doc:
            yield from _candidates(d)
    elif isinstance(doc, dict):
        yield doc
        if isinstance(doc.get("@graph"), list):
            yield from _candidates(doc["@graph"])


def _names(value) -> tuple[str, ...]:
    if value is None:
        return ()
    if not isinstance(value, list):
        value = [value]
    out = []
    for v in value:
        name = v.get("name") if isinstance(v, dict) else v
        if isinstance(name, str) and name.strip():
            out.append(name.strip())
    return tuple(out)


def _date(value) -> Optional[dt.date]:
    if not isinstance(value, str):
        return None
    try:
        return dt.date.fromisoformat(value.strip()[:10])
    except ValueError:
        return None


def extract_jsonld_movie(html: str) -> JsonLdMovie:
    """Read the first schema.org ``Movie`` object from linked-data scripts.

    ``director`` may be a list of Person objects, a single object, or plain
    strings; names come back in document order.
    """
    collector = _ScriptCollector()
    collector.feed(html)
    collector.close()
    if not collector.blocks:
        raise NoJsonLdBlock("no application/ld+json script element")
    first_error: Optional[MalformedJson] = None
    for body in collector.blocks:
        try:
            doc = json.loads(body)
        except json.JSONDecodeError as exc:
            first_error = first_error or MalformedJson(exc.pos, exc.msg)
            continue
        for obj in _candidates(doc):
            if not _is_movie(obj):
                continue
            name = obj.get("name")
            if not isinstance(name, str) or not name.strip():
                continue
            genre = obj.get("genre")
            rating = obj.get("aggregateRating")
            value = None
            if isinstance(rating, dict):
                try:
                    value = float(rating.get("ratingValue"))
                except (TypeError, ValueError):
                    value = None
            return JsonLdMovie(
                name=name.strip(),
                directors=_names(obj.get("director")),
                genres=_names(genre) if genre is not None else None,
                date_published=_date(obj.get("datePublished")),
                aggregate_rating=value,
                source_url=obj.get("url") if isinstance(obj.get("url"), str) else None,
            )
    if first_error is not None:
        raise first_error
    raise NotAMovieBlock("linked-data present but no Movie object")


def extract_director_anchor(html: str) -> str:
    """Text of the first ``<a data-qa="movie-info-director">``, trimmed."""
    finder = _AnchorFinder(DIRECTOR_ATTR)
    finder.feed(html)
    finder.close()
    if finder.text is None:
        raise AnchorNotFound("no anchor with data-qa=movie-info-director")
    return finder.text.strip()


# --- JSON payloads --------------------------------------------------------

def _load(payload: str):
    try:
        return json.loads(payload)
    except json.JSONDecodeError as exc:
        raise MalformedPayload(f"invalid JSON at position {exc.pos}: {exc.msg}") from exc


def _movies(payload: str) -> list:
    doc = _load(payload)
    if not isinstance(doc, dict):
        raise MalformedPayload("top level is not an object")
    if "movies" not in doc:
        raise MissingMoviesField("no 'movies' field")
    movies = doc["movies"]
    if not isinstance(movies, list):
        raise MalformedPayload("'movies' is not an array")
    return movies


def _title(obj) -> Optional[str]:
    if not isinstance(obj, dict):
        return None
    t = obj.get("title")
    return t.strip() if isinstance(t, str) and t.strip() else None


def parse_in_theaters(payload: str) -> ParsedList:
    """Entries of an in-theaters list; untitled elements are skipped."""
    out, skipped = [], 0
    for m in _movies(payload):
        title = _title(m)
        if title is None:
            skipped += 1
            continue
        pid = m.get("id")
        out.append(InTheatersEntry(title, None if pid is None else str(pid)))
    return ParsedList(out, skipped)


def _score(value) -> Optional[int]:
    if value is None or value == "" or isinstance(value, bool):
        return None
    try:
        score = int(value)
    except (TypeError, ValueError):
        raise MalformedPayload(f"score {value!r} is not an integer") from None
    if score == -1:
        return None
    if not 0 <= score <= 100:
        raise MalformedPayload(f"score {score} outside [0, 100]")
    return score


def _text(value) -> Optional[str]:
    return value if isinstance(value, str) and value != "" else None


def parse_movie_details(payload: str) -> ParsedList:
    """Movie-details records; a critics score of -1 means no score."""
    out, skipped = [], 0
    for m in _movies(payload):
        title = _title(m)
        if title is None:
            skipped += 1
            continue
        ratings = m.get("ratings") or {}
        if not isinstance(ratings, dict):
            raise MalformedPayload(f"{title!r}: 'ratings' is not an object")
        runtime = m.get("runtime")
        try:
            runtime = int(runtime) if runtime not in (None, "") else None
        except (TypeError, ValueError):
            runtime = None
        links = m.get("links") or {}
        out.append(MovieDetailsPayload(
            title=title,
            mpaa_rating=_text(m.get("mpaa_rating")),
            synopsis=_text(m.get("synopsis")),
            critics_consensus=_text(m.get("critics_consensus")),
            abridged_cast=_names(m.get("abridged_cast")),
            runtime_minutes=runtime,
            critics_score=_score(ratings.get("critics_score")),
            audience_score=_score(ratings.get("audience_score")),
            links={k: v for k, v in links.items() if isinstance(v, str)} if isinstance(links, dict) else {},
        ))
    return ParsedList(out, skipped)


def parse_graphql_titles(payload: str) -> ParsedList:
    """Titles from a ``data.movies.edges[].node`` GraphQL response."""
    doc = _load(payload)
    node = doc
    path = []
    for key in ("data", "movies", "edges"):
        path.append(key)
        if not isinstance(node, dict) or key not in node:
            raise MissingDataPath(".".join(path))
        node = node[key]
    if not isinstance(node, list):
        raise MalformedPayload("'edges' is not an array")
    out, skipped = [], 0
    for edge in node:
        item = edge.get("node") if isinstance(edge, dict) else None
        title = _title(item)
        if title is None:
            skipped += 1
            continue
        out.append(GraphQlTitle(title, _date(item.get("releaseDate"))))
    return ParsedList(out, skipped)


def trending_weight(audience_score: Optional[int]) -> float:
    if audience_score is None:
        return 0.5
    return 0.5 + 0.5 * (audience_score / 100)


def build_trending_set(entries: Sequence[InTheatersEntry], details: Sequence[MovieDetailsPayload],
                       catalog: Catalog, now: Optional[float] = None) -> TrendingSet:
    """Resolve currently-playing titles against the catalog and weight them.

    Weight is ``0.5 + 0.5 * audience_score / 100`` when a details record with
    an audience score exists for the title, else 0.5.
    """
    scores = {}
    for d in details:
        key = normalize_title(d.title)
        if key not in scores or scores[key] is None:
            scores[key] = d.audience_score
    weights: dict[str, float] = {}
    unresolved = []
    for e in entries:
        hits = lookup_title(catalog, e.title)
        if not hits:
            unresolved.append(e.title)
            continue
        w = trending_weight(scores.get(normalize_title(e.title)))
        mid = hits[0].movie_id
        weights[mid] = max(w, weights.get(mid, 0.0))
    if unresolved:
        logger.info("trending: %d titles not in catalog", len(unresolved))
    return TrendingSet(weights, time.time() if now is None else float(now), tuple(unresolved))
