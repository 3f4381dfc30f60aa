import numpy as np
import pytest
from hypothesis import given, strategies as st

from cinerec.catalog import load_movie_catalog
from cinerec.collaborative import MatrixFactorization, TrainConfig, train_mf
from cinerec.content import ContentRecommender, FeatureVector, cosine
from cinerec.errors import ColdStartUnresolvable, EmptyList
from cinerec.extractor import TrendingSet
from cinerec.hybrid import HybridConfig, HybridRecommender, blend, min_max_normalize, recommend_hybrid
from cinerec.ratings import build_interaction_matrix, load_ratings

from conftest import FIXTURES


@pytest.fixture(scope="module")
def world():
    catalog = load_movie_catalog(FIXTURES / "data" / "movies.csv")
    events, _ = load_ratings(FIXTURES / "data" / "ratings.csv")
    matrix = build_interaction_matrix(events)
    model = train_mf(matrix, TrainConfig(n_factors=8, n_epochs=30))
    content = ContentRecommender().fit(catalog)
    return catalog, matrix, model, content


def setup(world, user="42"):
    catalog, matrix, model, content = world
    seen = set(matrix.user_ratings(user))
    profile = content.profile(matrix.user_ratings(user))
    return catalog, matrix, model, content, seen, profile


class TestMinMax:
    def test_endpoints(self):
        assert min_max_normalize([1, 2, 3]) == [0, 0.5, 1]

    def test_constant(self):
        assert min_max_normalize([4, 4, 4]) == [0.5, 0.5, 0.5]

    def test_empty(self):
        with pytest.raises(EmptyList):
            min_max_normalize([])

    def test_random_direct_formula(self):
        xs = np.random.default_rng(3).normal(size=20).tolist()
        out = min_max_normalize(xs)
        lo, hi = min(xs), max(xs)
        assert min(out) == 0 and max(out) == 1
        assert out == [(x - lo) / (hi - lo) for x in xs]
        assert np.array_equal(np.argsort(out, kind="stable"), np.argsort(xs, kind="stable"))


class TestDegeneracies:
    def test_alpha_one_is_cf_order(self, world):
        catalog, matrix, model, content, seen, profile = setup(world)
        pop = catalog.popularity()
        out = recommend_hybrid("42", model, profile, None, HybridConfig(1.0, 0.0, 100, 100),
                               vectors=content.vectors_, seen=seen, popularity=pop)
        cf = model.recommend("42", 100, seen, pop)
        assert [r.movie_id for r in out] == [m for m, _ in cf]

    def test_alpha_zero_is_content_order(self, world):
        catalog, matrix, model, content, seen, profile = setup(world)
        pop = catalog.popularity()
        out = recommend_hybrid("42", model, profile, None, HybridConfig(0.0, 0.0, 100, 100),
                               vectors=content.vectors_, seen=seen, popularity=pop)
        cands = [m for m, _ in model.recommend("42", 100, seen, pop)]
        empty = FeatureVector.empty()
        expected = sorted(cands, key=lambda m: (-cosine(profile, content.vectors_.get(m, empty)),
                                                -pop.get(m, 0.0), m))
        assert [r.movie_id for r in out] == expected

    def test_trending_breaks_a_tie(self):
        ids = ["a", "b"]
        model = MatrixFactorization.from_parameters(
            global_mean=3.0, user_bias=[0.0], item_bias=[0.0, 0.0], user_factors=[[0.0]],
            item_factors=[[0.0], [0.0]], user_ids=["u"], item_ids=ids, n_factors=1)
        vectors = {m: FeatureVector.from_raw({0: 1.0}) for m in ids}
        profile = FeatureVector.from_raw({0: 1.0})
        # without a boost "a" wins on id
        base = HybridRecommender(beta=0.0).fit(model, vectors, {"a": 1.0, "b": 1.0})
        assert [r.movie_id for r in base.recommend("u", profile)] == ["a", "b"]
        trending = TrendingSet({"b": 0.5}, 0.0)
        boosted = HybridRecommender(beta=0.1).fit(model, vectors, {"a": 1.0, "b": 1.0})
        assert [r.movie_id for r in boosted.recommend("u", profile, trending)] == ["b", "a"]


class TestProperties:
    def test_identity_and_bounds(self, world):
        catalog, matrix, model, content, seen, profile = setup(world)
        trending = TrendingSet({"872585": 0.955, "346698": 0.5}, 0.0)
        rec = HybridRecommender(alpha=0.6, beta=0.3, n=10).fit(model, content.vectors_, catalog.popularity())
        out = rec.recommend("42", profile, trending, seen)
        assert len(out) == 10
        ids = [r.movie_id for r in out]
        assert len(set(ids)) == len(ids) and not set(ids) & seen
        for r in out:
            assert r.final_score == 0.6 * r.cf_score_norm + (1 - 0.6) * r.content_score + 0.3 * r.trending_boost
            assert 0 <= r.cf_score_norm <= 1 and 0 <= r.content_score <= 1 and r.trending_boost >= 0

    def test_beta_zero_ignores_trending(self, world):
        catalog, matrix, model, content, seen, profile = setup(world)
        rec = HybridRecommender(beta=0.0, n=20).fit(model, content.vectors_)
        a = [r.movie_id for r in rec.recommend("42", profile, None, seen)]
        b = [r.movie_id for r in rec.recommend("42", profile, TrendingSet({m: 1.0 for m in model.item_ids_[:9]}, 0), seen)]
        assert a == b

    @given(st.floats(0, 1), st.floats(0, 2), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.floats(0, 0.5))
    def test_monotone(self, alpha, beta, cf, content, boost, delta):
        base = blend(alpha, beta, cf, content, boost)
        assert blend(alpha, beta, cf + delta, content, boost) >= base
        assert blend(alpha, beta, cf, content + delta, boost) >= base
        assert blend(alpha, beta, cf, content, boost + delta) >= base


class TestColdStart:
    def test_unknown_user_uses_popularity(self, world):
        catalog, matrix, model, content, _, _ = setup(world)
        profile = content.vector("872585")
        pop = catalog.popularity()
        rec = HybridRecommender(alpha=1.0, beta=0.0, candidate_m=5, n=5).fit(model, content.vectors_, pop)
        out = rec.recommend("newcomer", profile, seen={"872585"})
        assert all(r.cf_score_norm == 0.5 for r in out)
        pool = sorted((set(model.item_ids_) | set(pop)) - {"872585"}, key=lambda m: (-pop.get(m, 0.0), m))
        assert {r.movie_id for r in out} == set(pool[:5])

    def test_unresolvable(self, world):
        _, _, model, content, _, _ = setup(world)
        rec = HybridRecommender().fit(model, content.vectors_)
        with pytest.raises(ColdStartUnresolvable):
            rec.recommend("newcomer", FeatureVector.empty())

    @pytest.mark.parametrize("bad", [dict(alpha=1.5), dict(beta=-0.1), dict(candidate_m=0), dict(n=0)])
    def test_bad_params(self, world, bad):
        with pytest.raises(ValueError):
            HybridRecommender(**bad).fit(world[2], world[3].vectors_)
