"""Held-out rating error and top-k ranking metrics."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

from .collaborative import MatrixFactorization
from .errors import EmptyInput, EmptyTestSet


@dataclass(frozen=True)
class EvalReport:
    rmse: float
    mae: float
    precision_at_k: float
    recall_at_k: float
    k: int
    n_test_events: int
    n_users_evaluated: int
    like_threshold: float

    def to_dict(self) -> dict:
        return asdict(self)

    def format(self) -> str:
        rows = [
            ("rmse", f"{self.rmse:.4f}"),
            ("mae", f"{self.mae:.4f}"),
            (f"precision@{self.k}", f"{self.precision_at_k:.4f}"),
            (f"recall@{self.k}", f"{self.recall_at_k:.4f}"),
            ("test events", str(self.n_test_events)),
            ("users evaluated", str(self.n_users_evaluated)),
            ("like threshold", f"{self.like_threshold:g}"),
        ]
        width = max(len(name) for name, _ in rows)
        return "\n".join(f"{name:<{width}}  {value}" for name, value in rows)


def rmse(pairs: Sequence[tuple[float, float]]) -> float:
    """Root mean squared error of ``(predicted, actual)`` pairs."""
    if not pairs:
        raise EmptyInput("rmse of no pairs")
    return math.sqrt(sum((p - a) ** 2 for p, a in pairs) / len(pairs))


def mae(pairs: Sequence[tuple[float, float]]) -> float:
    if not pairs:
        raise EmptyInput("mae of no pairs")
    return sum(abs(p - a) for p, a in pairs) / len(pairs)


def precision_recall_at_k(recommended: Sequence, relevant: set, k: int) -> tuple[float, float]:
    """Precision uses ``min(k, len(recommended))`` as denominator.

    An empty ``relevant`` set gives ``(0.0, 0.0)``; callers drop such users.
    """
    if k <= 0:
        raise ValueError("k must be positive")
    if not relevant:
        return 0.0, 0.0
    top = list(recommended)[:k]
    if not top:
        return 0.0, 0.0
    hits = len(set(top) & set(relevant))
    return hits / min(k, len(top)), hits / len(relevant)


def evaluate(model: MatrixFactorization, train: Iterable, test: Iterable, catalog=None,
             k: int = 10, like_threshold: float = 3.5) -> EvalReport:
    """Score ``model`` on a split from ``split_ratings``.

    Rating error covers test events of users the model knows. Ranking metrics
    average over known test users with at least one test rating at or above
    ``like_threshold``, recommending ``k`` items outside each user's train
    items. ``catalog`` popularity, when given, breaks ranking ties.
    """
    test = list(test)
    if not test:
        raise EmptyTestSet("no test events")
    seen: dict[str, set] = {}
    for e in train:
        seen.setdefault(e.user_id, set()).add(e.movie_id)

    scored = [e for e in test if model.knows_user(e.user_id)]
    if not scored:
        raise EmptyTestSet("no test events for users known to the model")
    preds = model.predict([(e.user_id, e.movie_id) for e in scored])
    pairs = [(float(p), e.rating) for p, e in zip(preds, scored)]

    relevant: dict[str, set] = {}
    for e in scored:
        relevant.setdefault(e.user_id, set())
        if e.rating >= like_threshold:
            relevant[e.user_id].add(e.movie_id)

    popularity = catalog.popularity() if catalog is not None else None
    precisions, recalls = [], []
    for user, rel in relevant.items():
        if not rel:
            continue
        recs = model.recommend(user, k, seen.get(user, ()), popularity)
        p, r = precision_recall_at_k([m for m, _ in recs], rel, k)
        precisions.append(p)
        recalls.append(r)
    n_users = len(precisions)
    return EvalReport(
        rmse=rmse(pairs),
        mae=mae(pairs),
        precision_at_k=sum(precisions) / n_users if n_users else 0.0,
        recall_at_k=sum(recalls) / n_users if n_users else 0.0,
        k=k,
        n_test_events=len(pairs),
        n_users_evaluated=n_users,
        like_threshold=like_threshold,
    )
