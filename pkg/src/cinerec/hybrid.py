"""Collaborative candidates re-ranked by content similarity and trending boosts."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Iterable, Mapping, Optional, Sequence

from sklearn.base import BaseEstimator

from ._validation import check_positive_int, check_real
from .collaborative import MatrixFactorization
from .content import FeatureVector, cosine
from .errors import ColdStartUnresolvable, EmptyList
from .extractor import TrendingSet


@dataclass(frozen=True)
class HybridConfig:
    alpha: float = 0.7
    beta: float = 0.1
    candidate_m: int = 100
    n: int = 5


@dataclass(frozen=True)
class HybridRecommendation:
    movie_id: str
    cf_score_norm: float
    content_score: float
    trending_boost: float
    final_score: float


def min_max_normalize(scores: Sequence[float]) -> list[float]:
    """Rescale to [0, 1]; a constant list maps to 0.5 everywhere."""
    if len(scores) == 0:
        raise EmptyList("cannot normalize an empty list")
    lo, hi = min(scores), max(scores)
    if hi == lo:
        return [0.5] * len(scores)
    span = hi - lo
    return [(s - lo) / span for s in scores]


def blend(alpha: float, beta: float, cf: float, content: float, boost: float) -> float:
    return alpha * cf + (1 - alpha) * content + beta * boost


class HybridRecommender(BaseEstimator):
    """Two-stage recommender.

    Stage one takes the ``candidate_m`` best unseen items from the latent
    factor model (or, for users the model has never seen, the most popular
    unseen items with a neutral CF score of 0.5). Stage two scores each
    candidate as
    ``alpha * cf_norm + (1 - alpha) * cosine(profile, item) + beta * trending``
    and keeps the top ``n``.
    """

    def __init__(self, alpha=0.7, beta=0.1, candidate_m=100, n=5):
        self.alpha = alpha
        self.beta = beta
        self.candidate_m = candidate_m
        self.n = n

    @classmethod
    def from_config(cls, config: HybridConfig) -> "HybridRecommender":
        return cls(**asdict(config))

    def fit(self, model: MatrixFactorization, vectors: Mapping[str, FeatureVector],
            popularity: Optional[Mapping[str, float]] = None, y=None):
        """Attach the trained model, per-movie vectors and popularity table."""
        check_real(self.alpha, "alpha", 0.0, 1.0)
        check_real(self.beta, "beta", low=0.0)
        check_positive_int(self.candidate_m, "candidate_m")
        check_positive_int(self.n, "n")
        self.model_ = model
        self.vectors_ = vectors
        if popularity is None:
            popularity = dict(zip(model.item_ids_, model.item_popularity_.tolist()))
        self.popularity_ = dict(popularity)
        return self

    def _candidates(self, user_id, seen: set) -> list[tuple[str, float]]:
        if self.model_.knows_user(user_id):
            top = self.model_.recommend(user_id, self.candidate_m, seen, self.popularity_)
            if not top:
                return []
            norm = min_max_normalize([s for _, s in top])
            return [(m, c) for (m, _), c in zip(top, norm)]
        pool = set(self.model_.item_ids_) | set(self.popularity_)
        pool -= seen
        ranked = sorted(pool, key=lambda m: (-self.popularity_.get(m, 0.0), m))
        return [(m, 0.5) for m in ranked[: self.candidate_m]]

    def recommend(self, user_id, profile: FeatureVector, trending: Optional[TrendingSet] = None,
                  seen: Iterable = (), n: Optional[int] = None) -> list[HybridRecommendation]:
        """Ranked recommendations, ties broken by popularity then id.

        Raises
        ------
        ColdStartUnresolvable
            The user is unknown to the model and the profile is empty.
        """
        if not hasattr(self, "model_"):
            raise RuntimeError("HybridRecommender is not fitted yet; call fit first")
        n = self.n if n is None else check_positive_int(n, "n")
        if not self.model_.knows_user(user_id) and len(profile) == 0:
            raise ColdStartUnresolvable(f"user {user_id!r} has no ratings and no content profile")
        trending = trending or TrendingSet.empty()
        empty = FeatureVector.empty()
        out = []
        for movie_id, cf in self._candidates(user_id, set(seen)):
            content = cosine(profile, self.vectors_.get(movie_id, empty))
            boost = float(trending.weight(movie_id))
            out.append(HybridRecommendation(movie_id, cf, content, boost,
                                            blend(self.alpha, self.beta, cf, content, boost)))
        out.sort(key=lambda r: (-r.final_score, -self.popularity_.get(r.movie_id, 0.0), r.movie_id))
        return out[:n]


def recommend_hybrid(user_id, model: MatrixFactorization, profile: FeatureVector,
                     trending: Optional[TrendingSet], config: HybridConfig = HybridConfig(), *,
                     vectors: Mapping[str, FeatureVector], seen: Iterable = (),
                     popularity: Optional[Mapping[str, float]] = None) -> list[HybridRecommendation]:
    rec = HybridRecommender.from_config(config).fit(model, vectors, popularity)
    return rec.recommend(user_id, profile, trending, seen)
