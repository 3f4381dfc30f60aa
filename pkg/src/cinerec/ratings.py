"""Rating events, the compressed user-item matrix, and train/test splits."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import EmptyRatings, FileUnreadable, MissingColumn

logger = logging.getLogger(__name__)

DEFAULT_SCALE = (0.5, 5.0)


@dataclass(frozen=True)
class RatingEvent:
    user_id: str
    movie_id: str
    rating: float
    timestamp: Optional[int] = None


@dataclass(frozen=True)
class RatingColumns:
    user: str = "userId"
    item: str = "movieId"
    rating: str = "rating"
    timestamp: Optional[str] = "timestamp"


@dataclass(frozen=True)
class RatingSummary:
    n_events: int
    n_users: int
    n_items: int
    n_rejected: int


class LoadedRatings(NamedTuple):
    events: list
    summary: RatingSummary


def summarize(events: Sequence[RatingEvent], n_rejected: int = 0) -> RatingSummary:
    return RatingSummary(
        n_events=len(events),
        n_users=len({e.user_id for e in events}),
        n_items=len({e.movie_id for e in events}),
        n_rejected=n_rejected,
    )


def load_ratings(path, columns: RatingColumns = RatingColumns(),
                 scale: tuple[float, float] = DEFAULT_SCALE,
                 id_map: Optional[dict] = None) -> LoadedRatings:
    """Read rating events in file order.

    Ratings outside ``scale`` or that fail to parse are rejected and counted.
    ``id_map`` optionally translates item ids (for example MovieLens
    ``movieId`` to TMDB ids); events whose item has no mapping are rejected.
    """
    r_min, r_max = scale
    events: list[RatingEvent] = []
    rejected = 0
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames or []
            for name in (columns.user, columns.item, columns.rating):
                if name not in header:
                    raise MissingColumn(name)
            has_ts = columns.timestamp is not None and columns.timestamp in header
            for row in reader:
                user = (row.get(columns.user) or "").strip()
                item = (row.get(columns.item) or "").strip()
                try:
                    rating = float(row[columns.rating])
                except (TypeError, ValueError):
                    rejected += 1
                    continue
                if not user or not item or not (r_min <= rating <= r_max):
                    rejected += 1
                    continue
                if id_map is not None:
                    item = id_map.get(item)
                    if item is None:
                        rejected += 1
                        continue
                ts = None
                if has_ts:
                    try:
                        ts = int(row[columns.timestamp])
                    except (TypeError, ValueError):
                        ts = None
                events.append(RatingEvent(user, item, rating, ts))
    except (OSError, UnicodeDecodeError) as exc:
        raise FileUnreadable(f"cannot read {path}: {exc}") from exc
    if not events:
        raise EmptyRatings(f"{path}: no valid rating rows ({rejected} rejected)")
    if rejected:
        logger.warning("%s: rejected %d rating rows", path, rejected)
    return LoadedRatings(events, summarize(events, rejected))


def save_ratings(events: Iterable[RatingEvent], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["userId", "movieId", "rating", "timestamp"])
        for e in events:
            w.writerow([e.user_id, e.movie_id, repr(e.rating),
                        "" if e.timestamp is None else e.timestamp])


def deduplicate(events: Sequence[RatingEvent]) -> list[RatingEvent]:
    """Keep one event per (user, item).

    The later timestamp wins when both events carry one; otherwise the event
    later in the sequence wins. Output follows first-appearance order of the
    pair.
    """
    best: dict[tuple[str, str], RatingEvent] = {}
    for e in events:
        key = (e.user_id, e.movie_id)
        prev = best.get(key)
        if prev is None:
            best[key] = e
        elif prev.timestamp is not None and e.timestamp is not None:
            if e.timestamp >= prev.timestamp:
                best[key] = e
        else:
            best[key] = e
    return list(best.values())


@dataclass(frozen=True, eq=False)
class InteractionMatrix:
    """Users x items ratings in compressed-row layout.

    ``user_ids[u]`` / ``item_ids[i]`` give the external id of dense index
    ``u`` / ``i``; ``user_index`` / ``item_index`` are the inverse maps.
    """

    row_offsets: np.ndarray
    col_indices: np.ndarray
    values: np.ndarray
    user_ids: tuple
    item_ids: tuple
    scale: tuple[float, float] = DEFAULT_SCALE

    def __post_init__(self):
        object.__setattr__(self, "user_index", {u: k for k, u in enumerate(self.user_ids)})
        object.__setattr__(self, "item_index", {m: k for k, m in enumerate(self.item_ids)})

    @property
    def n_users(self) -> int:
        return len(self.user_ids)

    @property
    def n_items(self) -> int:
        return len(self.item_ids)

    @property
    def nnz(self) -> int:
        return int(self.row_offsets[-1])

    def row(self, u: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.row_offsets[u], self.row_offsets[u + 1]
        return self.col_indices[lo:hi], self.values[lo:hi]

    def user_ratings(self, user_id) -> dict:
        """External item id -> rating for one user (empty if unknown)."""
        u = self.user_index.get(user_id)
        if u is None:
            return {}
        cols, vals = self.row(u)
        return {self.item_ids[c]: float(v) for c, v in zip(cols, vals)}

    def row_indices(self) -> np.ndarray:
        """Dense user index of each stored entry."""
        return np.repeat(np.arange(self.n_users), np.diff(self.row_offsets))

    def to_csr(self) -> sp.csr_matrix:
        return sp.csr_matrix((self.values, self.col_indices, self.row_offsets),
                             shape=(self.n_users, self.n_items))

    def triples(self) -> list[tuple]:
        rows = self.row_indices()
        return [(self.user_ids[u], self.item_ids[i], float(v))
                for u, i, v in zip(rows, self.col_indices, self.values)]

    def item_counts(self) -> np.ndarray:
        return np.bincount(self.col_indices, minlength=self.n_items)


def build_interaction_matrix(events: Sequence[RatingEvent],
                             scale: tuple[float, float] = DEFAULT_SCALE) -> InteractionMatrix:
    """Build the compressed-row matrix; dense ids follow first appearance."""
    if not events:
        raise EmptyRatings("no events")
    users: dict[str, int] = {}
    items: dict[str, int] = {}
    for e in events:
        users.setdefault(e.user_id, len(users))
        items.setdefault(e.movie_id, len(items))
    kept = deduplicate(events)
    r_min, r_max = scale
    for e in kept:
        if not r_min <= e.rating <= r_max:
            raise ValueError(f"rating {e.rating} outside scale {scale}")

    u = np.fromiter((users[e.user_id] for e in kept), dtype=np.int64, count=len(kept))
    i = np.fromiter((items[e.movie_id] for e in kept), dtype=np.int64, count=len(kept))
    v = np.fromiter((e.rating for e in kept), dtype=np.float64, count=len(kept))
    order = np.lexsort((i, u))
    u, i, v = u[order], i[order], v[order]
    offsets = np.zeros(len(users) + 1, dtype=np.int64)
    np.cumsum(np.bincount(u, minlength=len(users)), out=offsets[1:])
    return InteractionMatrix(offsets, i, v, tuple(users), tuple(items), tuple(scale))


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie in (0, 1)")


def split_ratings(events: Sequence[RatingEvent], spec: SplitSpec = SplitSpec()) -> tuple[list, list]:
    """Per-user stratified split.

    Each user keeps ``round(train_fraction * n)`` events in train, clamped to
    ``[1, n]``, chosen by a seeded shuffle. Both halves preserve input order.
    """
    if not events:
        raise EmptyRatings("no events")
    by_user: dict[str, list[int]] = {}
    for k, e in enumerate(events):
        by_user.setdefault(e.user_id, []).append(k)
    rng = np.random.default_rng(spec.seed)
    in_train = np.zeros(len(events), dtype=bool)
    for idx in by_user.values():
        n = len(idx)
        n_train = min(n, max(1, math.floor(spec.train_fraction * n + 0.5)))
        perm = rng.permutation(n)
        in_train[np.asarray(idx)[perm[:n_train]]] = True
    train = [e for e, t in zip(events, in_train) if t]
    test = [e for e, t in zip(events, in_train) if not t]
    return train, test
