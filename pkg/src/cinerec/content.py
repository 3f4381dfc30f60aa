"""TF-IDF feature vectors over catalog metadata and cosine similarity search."""

from __future__ import annotations

import math
import operator
import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import check_fitted, check_positive_int
from .catalog import Catalog, MovieRecord, normalize_term
from .errors import EmptyCatalog, UnknownMovie

NAMESPACES = ("genre", "director", "cast", "keyword", "overview")
DEFAULT_NAMESPACES = ("genre", "director", "cast", "keyword")
CAST_LIMIT = 5

# fmt: off
STOPWORDS = frozenset("""
a an and are as at be been but by for from has have he her his in into is
it its of on or she that the their them they this to was were which while
who will with after when where about over not no so than then
""".split())
# fmt: on
_TOKEN = re.compile(r"[^0-9a-z]+")


def movie_terms(movie: MovieRecord, namespaces: Iterable[str] = DEFAULT_NAMESPACES,
                cast_limit: int = CAST_LIMIT) -> dict[str, int]:
    """Namespaced term -> term frequency for one movie.

    Categorical fields contribute each distinct value once; the optional
    ``overview`` namespace counts word occurrences.
    """
    ns = set(namespaces)
    terms: dict[str, int] = {}

    def add(prefix, values):
        for v in values:
            key = normalize_term(v)
            if key:
                terms[f"{prefix}:{key}"] = 1

    if "genre" in ns:
        add("genre", movie.genres)
    if "director" in ns:
        add("director", movie.director)
    if "cast" in ns:
        add("cast", movie.cast[:cast_limit])
    if "keyword" in ns:
        add("keyword", movie.keywords)
    if "overview" in ns and movie.overview:
        for tok in _TOKEN.split(movie.overview.casefold()):
            if tok and tok not in STOPWORDS:
                key = f"overview:{tok}"
                terms[key] = terms.get(key, 0) + 1
    return terms


@dataclass(frozen=True)
class FeatureVocabulary:
    term_to_index: dict
    doc_freq: tuple[int, ...]
    n_docs: int
    namespaces: tuple[str, ...] = DEFAULT_NAMESPACES
    cast_limit: int = CAST_LIMIT
    min_df: int = 1

    def __len__(self):
        return len(self.term_to_index)

    @property
    def terms(self) -> list[str]:
        out = [""] * len(self.term_to_index)
        for t, i in self.term_to_index.items():
            out[i] = t
        return out

    def idf(self, index: int) -> float:
        return math.log(self.n_docs / (1 + self.doc_freq[index])) + 1.0

    def to_dict(self) -> dict:
        return {"terms": self.terms, "doc_freq": list(self.doc_freq), "n_docs": self.n_docs,
                "namespaces": list(self.namespaces), "cast_limit": self.cast_limit,
                "min_df": self.min_df}

    @classmethod
    def from_dict(cls, d) -> "FeatureVocabulary":
        return cls({t: i for i, t in enumerate(d["terms"])}, tuple(d["doc_freq"]), d["n_docs"],
                   tuple(d["namespaces"]), d["cast_limit"], d["min_df"])


@dataclass(frozen=True, eq=False)
class FeatureVector:
    """Sparse unit vector: strictly increasing ``indices`` with positive ``weights``."""

    indices: np.ndarray
    weights: np.ndarray

    @classmethod
    def empty(cls) -> "FeatureVector":
        return cls(np.zeros(0, dtype=np.int64), np.zeros(0))

    @classmethod
    def from_raw(cls, raw: Mapping[int, float]) -> "FeatureVector":
        """L2-normalize a sparse index -> weight mapping (non-positive weights dropped)."""
        items = sorted((i, w) for i, w in raw.items() if w > 0)
        if not items:
            return cls.empty()
        idx = np.array([i for i, _ in items], dtype=np.int64)
        w = np.array([w for _, w in items], dtype=np.float64)
        return cls(idx, w / math.sqrt(float(np.dot(w, w))))

    def __len__(self):
        return len(self.indices)

    @property
    def norm(self) -> float:
        return math.sqrt(float(np.dot(self.weights, self.weights)))

    def as_dict(self) -> dict[int, float]:
        return dict(zip(self.indices.tolist(), self.weights.tolist()))


def build_vocabulary(catalog: Iterable[MovieRecord], namespaces: Iterable[str] = DEFAULT_NAMESPACES,
                     cast_limit: int = CAST_LIMIT, min_df: int = 1) -> FeatureVocabulary:
    """Document frequencies of every namespaced term; indices follow sorted term order."""
    namespaces = tuple(n for n in NAMESPACES if n in set(namespaces))
    df: dict[str, int] = {}
    n_docs = 0
    for movie in catalog:
        n_docs += 1
        for t in movie_terms(movie, namespaces, cast_limit):
            df[t] = df.get(t, 0) + 1
    if n_docs == 0:
        raise EmptyCatalog("cannot build a vocabulary from an empty catalog")
    kept = sorted(t for t, c in df.items() if c >= min_df)
    return FeatureVocabulary({t: i for i, t in enumerate(kept)}, tuple(df[t] for t in kept),
                             n_docs, namespaces, cast_limit, min_df)


def vectorize(movie: MovieRecord, vocab: FeatureVocabulary) -> FeatureVector:
    """tf * (ln(n_docs / (1 + df)) + 1), L2-normalized; unknown terms ignored."""
    raw = {}
    for term, tf in movie_terms(movie, vocab.namespaces, vocab.cast_limit).items():
        i = vocab.term_to_index.get(term)
        if i is not None:
            raw[i] = tf * vocab.idf(i)
    return FeatureVector.from_raw(raw)


def cosine(a: FeatureVector, b: FeatureVector) -> float:
    if not len(a) or not len(b):
        return 0.0
    _, ia, ib = np.intersect1d(a.indices, b.indices, assume_unique=True, return_indices=True)
    # sequential sum in index order, matching CSR row products
    dot = sum(map(operator.mul, a.weights[ia].tolist(), b.weights[ib].tolist()))
    return min(1.0, max(0.0, dot))


def user_content_profile(user_ratings: Mapping[str, float] | Sequence, vectors: Mapping[str, FeatureVector],
                         like_threshold: float = 3.5) -> FeatureVector:
    """Mean of the vectors of liked movies, re-normalized.

    ``user_ratings`` is either a movie_id -> rating mapping or a sequence of
    ``RatingEvent``.
    """
    if not isinstance(user_ratings, Mapping):
        user_ratings = {e.movie_id: e.rating for e in user_ratings}
    liked = [vectors[m] for m, r in user_ratings.items() if r >= like_threshold and m in vectors]
    if len(liked) == 1:
        # already unit norm; renormalizing would only add rounding
        return liked[0]
    total: dict[int, float] = {}
    for v in liked:
        for i, w in zip(v.indices.tolist(), v.weights.tolist()):
            total[i] = total.get(i, 0.0) + w
    if not liked:
        return FeatureVector.empty()
    return FeatureVector.from_raw({i: w / len(liked) for i, w in total.items()})


def _rank_key(movie_id: str, score: float, popularity: Mapping[str, float]):
    return (-score, -popularity.get(movie_id, 0.0), movie_id)


class ContentRecommender(BaseEstimator, TransformerMixin):
    """TF-IDF vectorizer and exact cosine search over a catalog.

    Parameters
    ----------
    namespaces : tuple of str
        Metadata fields that contribute terms. ``overview`` is opt-in.
    cast_limit : int
        Only the first ``cast_limit`` billed names contribute cast terms.
    min_df : int
        Minimum document frequency for a term to enter the vocabulary.

    Attributes
    ----------
    vocabulary_ : FeatureVocabulary
    movie_ids_ : list of str
        Row order of ``matrix_``.
    matrix_ : scipy.sparse.csr_matrix
        Unit-norm TF-IDF rows, one per catalog movie.
    """

    def __init__(self, namespaces=DEFAULT_NAMESPACES, cast_limit=CAST_LIMIT, min_df=1):
        self.namespaces = namespaces
        self.cast_limit = cast_limit
        self.min_df = min_df

    def fit(self, catalog: Catalog, y=None, vocabulary: Optional[FeatureVocabulary] = None):
        unknown = set(self.namespaces) - set(NAMESPACES)
        if unknown:
            raise ValueError(f"unknown namespaces: {sorted(unknown)}")
        check_positive_int(self.cast_limit, "cast_limit")
        check_positive_int(self.min_df, "min_df")
        records = list(catalog)
        self.vocabulary_ = vocabulary or build_vocabulary(
            records, self.namespaces, self.cast_limit, self.min_df)
        self.movie_ids_ = [r.movie_id for r in records]
        self.row_of_ = {m: k for k, m in enumerate(self.movie_ids_)}
        self.vectors_ = {r.movie_id: vectorize(r, self.vocabulary_) for r in records}
        self.popularity_ = {r.movie_id: (r.popularity or 0.0) for r in records}
        self.matrix_ = self._stack(self.vectors_[m] for m in self.movie_ids_)
        return self

    def _stack(self, vectors) -> sp.csr_matrix:
        vectors = list(vectors)
        indptr = np.zeros(len(vectors) + 1, dtype=np.int64)
        np.cumsum([len(v) for v in vectors], out=indptr[1:])
        indices = np.concatenate([v.indices for v in vectors]) if vectors else np.zeros(0, np.int64)
        data = np.concatenate([v.weights for v in vectors]) if vectors else np.zeros(0)
        return sp.csr_matrix((data, indices, indptr), shape=(len(vectors), len(self.vocabulary_)))

    def transform(self, records: Iterable[MovieRecord]) -> sp.csr_matrix:
        check_fitted(self, "vocabulary_")
        return self._stack(vectorize(r, self.vocabulary_) for r in records)

    def vector(self, movie_id: str) -> FeatureVector:
        check_fitted(self, "vectors_")
        try:
            return self.vectors_[movie_id]
        except KeyError:
            raise UnknownMovie(movie_id) from None

    def scores(self, query: FeatureVector) -> np.ndarray:
        """Cosine of ``query`` against every catalog row."""
        dense = np.zeros(len(self.vocabulary_))
        dense[query.indices] = query.weights
        return np.clip(self.matrix_ @ dense, 0.0, 1.0)

    def rank(self, query: FeatureVector, k: int, exclude=()) -> list[tuple[str, float]]:
        check_positive_int(k, "k")
        s = self.scores(query).tolist()
        exclude = set(exclude)
        cands = [(m, x) for m, x in zip(self.movie_ids_, s) if m not in exclude]
        cands.sort(key=lambda t: _rank_key(t[0], t[1], self.popularity_))
        return cands[:k]

    def top_k_similar(self, movie_id: str, k: int = 10) -> list[tuple[str, float]]:
        """The ``k`` most similar other movies; ties by popularity, then id."""
        return self.rank(self.vector(movie_id), k, exclude={movie_id})

    def profile(self, user_ratings, like_threshold: float = 3.5) -> FeatureVector:
        check_fitted(self, "vectors_")
        return user_content_profile(user_ratings, self.vectors_, like_threshold)
