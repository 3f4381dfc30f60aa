"""Biased matrix factorization trained by SGD, and an item-kNN alternative."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from typing import Iterable, Mapping, Optional

import numba
import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator

from ._validation import check_fitted, check_positive_int, check_real
from .errors import DivergedTraining, EmptyMatrix, UnknownUser
from .ratings import InteractionMatrix

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    n_factors: int = 32
    learning_rate: float = 0.005
    regularization: float = 0.02
    n_epochs: int = 20
    seed: int = 0
    init_scale: float = 0.1


@dataclass(frozen=True)
class KnnConfig:
    k_neighbors: int = 40
    min_overlap: int = 2
    shrinkage: float = 10.0


@numba.njit(cache=False)
def _sgd_epoch(rows, cols, vals, order, mu, bu, bi, P, Q, lr, reg):
    f = P.shape[1]
    for t in range(order.shape[0]):
        k = order[t]
        u = rows[k]
        i = cols[k]
        dot = 0.0
        for j in range(f):
            dot += P[u, j] * Q[i, j]
        e = vals[k] - (mu + bu[u] + bi[i] + dot)
        bu[u] += lr * (e - reg * bu[u])
        bi[i] += lr * (e - reg * bi[i])
        for j in range(f):
            pu = P[u, j]
            qi = Q[i, j]
            P[u, j] += lr * (e * qi - reg * pu)
            Q[i, j] += lr * (e * pu - reg * qi)


def _ranked(ids, scores, popularity: Mapping[str, float]) -> list[tuple[str, float]]:
    pairs = list(zip(ids, scores))
    pairs.sort(key=lambda t: (-t[1], -popularity.get(t[0], 0.0), t[0]))
    return pairs


class MatrixFactorization(BaseEstimator):
    """Biased latent-factor rating model.

    Predicts ``mu + b_u + b_i + p_u . q_i`` clamped to the rating scale and
    fits it by per-rating stochastic gradient descent on the regularized
    squared error. The visit order is reshuffled every epoch from a
    generator seeded by ``seed``, so a given matrix and parameter set always
    yields the same model.

    Parameters
    ----------
    n_factors : int, default=32
    learning_rate : float, default=0.005
    regularization : float, default=0.02
        L2 penalty shared by biases and factors.
    n_epochs : int, default=20
    seed : int, default=0
    init_scale : float, default=0.1
        Factors start uniform in ``+-init_scale / sqrt(n_factors)``.

    Attributes
    ----------
    global_mean_ : float
    user_bias_, item_bias_ : ndarray
    user_factors_ : ndarray of shape (n_users, n_factors)
    item_factors_ : ndarray of shape (n_items, n_factors)
    user_ids_, item_ids_ : list of str
    item_popularity_ : ndarray
        Training rating count per item; the default tie-break for rankings.
    training_rmse_ : list of float
        Training RMSE after each epoch.
    """

    def __init__(self, n_factors=32, learning_rate=0.005, regularization=0.02, n_epochs=20,
                 seed=0, init_scale=0.1):
        self.n_factors = n_factors
        self.learning_rate = learning_rate
        self.regularization = regularization
        self.n_epochs = n_epochs
        self.seed = seed
        self.init_scale = init_scale

    def _validate_params(self):
        check_positive_int(self.n_factors, "n_factors")
        check_positive_int(self.n_epochs, "n_epochs")
        check_real(self.learning_rate, "learning_rate", low=0, low_open=True)
        check_real(self.regularization, "regularization", low=0)
        check_real(self.init_scale, "init_scale", low=0, low_open=True)
        if isinstance(self.seed, bool) or not isinstance(self.seed, (int, np.integer)):
            raise ValueError(f"seed must be an integer, got {self.seed!r}")

    def fit(self, X: InteractionMatrix, y=None):
        self._validate_params()
        if X.nnz == 0:
            raise EmptyMatrix("interaction matrix has no ratings")
        rows = X.row_indices().astype(np.int64)
        cols = np.asarray(X.col_indices, dtype=np.int64)
        vals = np.asarray(X.values, dtype=np.float64)
        f = self.n_factors
        rng = np.random.default_rng(self.seed)
        bound = self.init_scale / math.sqrt(f)
        mu = float(vals.mean())
        P = rng.uniform(-bound, bound, size=(X.n_users, f))
        Q = rng.uniform(-bound, bound, size=(X.n_items, f))
        bu = np.zeros(X.n_users)
        bi = np.zeros(X.n_items)

        self._set_maps(X.user_ids, X.item_ids)
        self.scale_ = tuple(float(s) for s in X.scale)
        self.global_mean_ = mu
        self.item_popularity_ = X.item_counts().astype(np.float64)
        self.training_rmse_ = []
        lr = float(self.learning_rate)
        reg = float(self.regularization)
        for epoch in range(self.n_epochs):
            order = rng.permutation(len(vals))
            _sgd_epoch(rows, cols, vals, order, mu, bu, bi, P, Q, lr, reg)
            if not (np.isfinite(bu).all() and np.isfinite(bi).all()
                    and np.isfinite(P).all() and np.isfinite(Q).all()):
                raise DivergedTraining(
                    f"parameters became non-finite in epoch {epoch + 1}; "
                    f"learning_rate={lr} is too high")
            pred = mu + bu[rows] + bi[cols] + np.einsum("ij,ij->i", P[rows], Q[cols])
            rmse = float(np.sqrt(np.mean((vals - pred) ** 2)))
            if not math.isfinite(rmse):
                raise DivergedTraining(f"training error overflowed in epoch {epoch + 1}")
            self.training_rmse_.append(rmse)
            logger.debug("epoch %d train rmse %.6f", epoch + 1, rmse)
        self.user_bias_, self.item_bias_ = bu, bi
        self.user_factors_, self.item_factors_ = P, Q
        return self

    def _set_maps(self, user_ids, item_ids):
        self.user_ids_ = list(user_ids)
        self.item_ids_ = list(item_ids)
        self.user_index_ = {u: k for k, u in enumerate(self.user_ids_)}
        self.item_index_ = {m: k for k, m in enumerate(self.item_ids_)}

    @classmethod
    def from_parameters(cls, *, global_mean, user_bias, item_bias, user_factors, item_factors,
                        user_ids, item_ids, scale=(0.5, 5.0), item_popularity=None,
                        training_rmse=(), **params) -> "MatrixFactorization":
        """Rebuild a fitted model from stored arrays."""
        model = cls(**params)
        model._set_maps(user_ids, item_ids)
        model.global_mean_ = float(global_mean)
        model.user_bias_ = np.asarray(user_bias, dtype=np.float64)
        model.item_bias_ = np.asarray(item_bias, dtype=np.float64)
        model.user_factors_ = np.asarray(user_factors, dtype=np.float64).reshape(len(user_ids), -1)
        model.item_factors_ = np.asarray(item_factors, dtype=np.float64).reshape(len(item_ids), -1)
        model.scale_ = tuple(float(s) for s in scale)
        model.item_popularity_ = (np.zeros(len(item_ids)) if item_popularity is None
                                  else np.asarray(item_popularity, dtype=np.float64))
        model.training_rmse_ = list(training_rmse)
        return model

    @property
    def train_config(self) -> TrainConfig:
        return TrainConfig(**self.get_params())

    def knows_user(self, user_id) -> bool:
        check_fitted(self, "user_index_")
        return user_id in self.user_index_

    def _raw(self, us: np.ndarray, its: np.ndarray) -> np.ndarray:
        """Unclamped scores for dense index arrays; -1 marks an unknown id."""
        ku, ki = us >= 0, its >= 0
        both = ku & ki
        out = np.full(len(us), self.global_mean_)
        out[ku] += self.user_bias_[us[ku]]
        out[ki] += self.item_bias_[its[ki]]
        if both.any():
            out[both] += np.einsum("ij,ij->i", self.user_factors_[us[both]],
                                   self.item_factors_[its[both]])
        return out

    def predict(self, X) -> np.ndarray:
        """Predicted ratings for an iterable of ``(user_id, movie_id)`` pairs.

        Unknown ids fall back to the parts of the model that are known; two
        unknown ids give the global mean.
        """
        check_fitted(self, "global_mean_")
        pairs = list(X)
        us = np.array([self.user_index_.get(u, -1) for u, _ in pairs], dtype=np.int64)
        its = np.array([self.item_index_.get(m, -1) for _, m in pairs], dtype=np.int64)
        raw = self._raw(us, its)
        clamped = np.clip(raw, *self.scale_)
        neither = (us < 0) & (its < 0)
        clamped[neither] = self.global_mean_
        return clamped

    def predict_one(self, user_id, movie_id) -> float:
        return float(self.predict([(user_id, movie_id)])[0])

    def user_scores(self, user_id) -> np.ndarray:
        """Clamped predictions of one known user for every model item."""
        u = self.user_index_[user_id]
        n = len(self.item_ids_)
        raw = self._raw(np.full(n, u, dtype=np.int64), np.arange(n, dtype=np.int64))
        return np.clip(raw, *self.scale_)

    def recommend(self, user_id, n: int, seen: Iterable = (),
                  popularity: Optional[Mapping[str, float]] = None) -> list[tuple[str, float]]:
        """Top-``n`` unseen items by predicted rating.

        Ties fall to higher ``popularity`` (default: training rating counts)
        and then to the lexicographically smaller id.
        """
        check_fitted(self, "global_mean_")
        check_positive_int(n, "n")
        if user_id not in self.user_index_:
            raise UnknownUser(f"user {user_id!r} is not in the model")
        if popularity is None:
            popularity = dict(zip(self.item_ids_, self.item_popularity_.tolist()))
        seen = set(seen)
        scores = self.user_scores(user_id).tolist()
        ids, vals = [], []
        for m, s in zip(self.item_ids_, scores):
            if m not in seen:
                ids.append(m)
                vals.append(s)
        return _ranked(ids, vals, popularity)[:n]


def train_mf(matrix: InteractionMatrix, config: TrainConfig = TrainConfig()) -> MatrixFactorization:
    return MatrixFactorization(**asdict(config)).fit(matrix)


def predict(model: MatrixFactorization, user_id, movie_id) -> float:
    return model.predict_one(user_id, movie_id)


def recommend_top_n(model: MatrixFactorization, user_id, n: int, seen: Iterable = (),
                    popularity: Optional[Mapping[str, float]] = None) -> list[tuple[str, float]]:
    return model.recommend(user_id, n, seen, popularity)


class ItemKNN(BaseEstimator):
    """Item-item neighbourhood scorer with shrunk adjusted cosine.

    Similarity between items ``i`` and ``j`` is the cosine of their
    user-mean-centred rating columns restricted to users who rated both,
    multiplied by ``overlap / (overlap + shrinkage)``. Pairs with fewer than
    ``min_overlap`` co-raters are dropped.

    A user's score for an unseen item is their mean rating plus the sum of
    ``sim * (r - user_mean)`` over the items they rated that are among the
    item's ``k_neighbors`` most similar items.
    """

    def __init__(self, k_neighbors=40, min_overlap=2, shrinkage=10.0):
        self.k_neighbors = k_neighbors
        self.min_overlap = min_overlap
        self.shrinkage = shrinkage

    def fit(self, X: InteractionMatrix, y=None):
        check_positive_int(self.k_neighbors, "k_neighbors")
        check_positive_int(self.min_overlap, "min_overlap")
        check_real(self.shrinkage, "shrinkage", low=0)
        if X.nnz == 0:
            raise EmptyMatrix("interaction matrix has no ratings")
        self.matrix_ = X
        counts = np.diff(X.row_offsets)
        sums = np.bincount(X.row_indices(), weights=X.values, minlength=X.n_users)
        self.user_mean_ = np.divide(sums, counts, out=np.zeros(X.n_users), where=counts > 0)
        centred = X.values - np.repeat(self.user_mean_, counts)

        shape = (X.n_users, X.n_items)
        ind = sp.csr_matrix((np.ones(X.nnz), X.col_indices, X.row_offsets), shape=shape)
        dev = sp.csr_matrix((centred, X.col_indices, X.row_offsets), shape=shape)
        dev2 = sp.csr_matrix((centred ** 2, X.col_indices, X.row_offsets), shape=shape)

        overlap = (ind.T @ ind).tocoo()
        i, j, n_co = overlap.row, overlap.col, overlap.data
        keep = i != j
        i, j, n_co = i[keep], j[keep], n_co[keep].astype(np.float64)
        if not len(i):
            i = j = np.zeros(1, dtype=np.int64)  # placeholder pair, filtered below
            n_co = np.zeros(1)
        num = np.asarray((dev.T @ dev).tocsr()[i, j]).ravel()
        sq = (dev2.T @ ind).tocsr()
        den_i = np.asarray(sq[i, j]).ravel()
        den_j = np.asarray(sq[j, i]).ravel()
        valid = (n_co >= self.min_overlap) & (den_i > 0) & (den_j > 0)
        i, j, n_co, num = i[valid], j[valid], n_co[valid], num[valid]
        adj = num / np.sqrt(den_i[valid] * den_j[valid])
        shrunk = adj * (n_co / (n_co + self.shrinkage))
        self.adjusted_cosine_ = sp.csr_matrix((adj, (i, j)), shape=(X.n_items, X.n_items))
        self.similarity_ = sp.csr_matrix((shrunk, (i, j)), shape=(X.n_items, X.n_items))

        ids = X.item_ids
        self.neighbors_ = []
        S = self.similarity_
        for a in range(X.n_items):
            lo, hi = S.indptr[a], S.indptr[a + 1]
            nb = sorted(zip(S.indices[lo:hi].tolist(), S.data[lo:hi].tolist()),
                        key=lambda t: (-t[1], ids[t[0]]))
            self.neighbors_.append(nb[: self.k_neighbors])
        return self

    def similarity(self, item_a, item_b, shrunk: bool = True) -> float:
        check_fitted(self, "similarity_")
        a = self.matrix_.item_index[item_a]
        b = self.matrix_.item_index[item_b]
        S = self.similarity_ if shrunk else self.adjusted_cosine_
        return float(S[a, b])

    def scores(self, user_id) -> list[tuple[str, float]]:
        check_fitted(self, "similarity_")
        X = self.matrix_
        u = X.user_index.get(user_id)
        if u is None:
            raise UnknownUser(f"user {user_id!r} is not in the matrix")
        cols, vals = X.row(u)
        rated = dict(zip(cols.tolist(), vals.tolist()))
        mean = float(self.user_mean_[u])
        out = []
        for item in range(X.n_items):
            if item in rated:
                continue
            hits = [(s, rated[nb]) for nb, s in self.neighbors_[item] if nb in rated]
            if not hits:
                continue
            out.append((X.item_ids[item], mean + sum(s * (r - mean) for s, r in hits)))
        out.sort(key=lambda t: (-t[1], t[0]))
        return out


def item_knn_scores(matrix: InteractionMatrix, user_id, config: KnnConfig = KnnConfig()) -> list[tuple[str, float]]:
    return ItemKNN(**asdict(config)).fit(matrix).scores(user_id)
