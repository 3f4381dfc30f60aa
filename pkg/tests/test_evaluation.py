import pytest
from hypothesis import given, strategies as st

from cinerec.collaborative import TrainConfig, train_mf
from cinerec.errors import EmptyInput, EmptyTestSet
from cinerec.evaluation import EvalReport, evaluate, mae, precision_recall_at_k, rmse
from cinerec.ratings import RatingEvent, SplitSpec, build_interaction_matrix, split_ratings

from synthetic import TOY_REPORT, TOY_TEST, TOY_TRAIN, rank2_ratings, toy_model


class TestErrors:
    def test_zero(self):
        assert rmse([(3.0, 3.0), (1.5, 1.5)]) == 0.0

    def test_hand_value(self):
        assert rmse([(3, 4), (5, 3)]) == pytest.approx(1.5811388300841898, abs=1e-12)

    def test_single(self):
        assert rmse([(2, 5)]) == 3
        assert mae([(2, 5)]) == 3

    def test_empty(self):
        with pytest.raises(EmptyInput):
            rmse([])
        with pytest.raises(EmptyInput):
            mae([])

    @given(st.lists(st.tuples(st.floats(0, 5), st.floats(0, 5)), min_size=1))
    def test_rmse_at_least_mae(self, pairs):
        assert rmse(pairs) + 1e-12 >= mae(pairs) >= 0


class TestPrecisionRecall:
    def test_enumeration(self):
        assert precision_recall_at_k(["a", "b", "c", "d", "e"], {"a", "c", "x", "y"}, 5) == (0.4, 0.5)

    def test_identity(self):
        assert precision_recall_at_k(["a", "b"], {"a", "b"}, 2) == (1.0, 1.0)

    def test_short_list(self):
        assert precision_recall_at_k(["a", "b"], {"a", "b", "c"}, 10) == (1.0, 2 / 3)

    def test_empty_relevant(self):
        assert precision_recall_at_k(["a"], set(), 3) == (0.0, 0.0)


def test_toy_split_hand_enumerated():
    report = evaluate(toy_model(), TOY_TRAIN, TOY_TEST, k=2, like_threshold=3.5)
    assert report == EvalReport(**TOY_REPORT)


def test_vacuous_threshold():
    report = evaluate(toy_model(), TOY_TRAIN, TOY_TEST, k=2, like_threshold=5.5)
    assert (report.precision_at_k, report.recall_at_k, report.n_users_evaluated) == (0.0, 0.0, 0)


def test_empty_test_set():
    with pytest.raises(EmptyTestSet):
        evaluate(toy_model(), TOY_TRAIN, [])
    with pytest.raises(EmptyTestSet):
        evaluate(toy_model(), TOY_TRAIN, [RatingEvent("ghost", "m1", 3.0)])


def test_memorized_noise_free_data():
    events, _ = rank2_ratings(noise=0.0, observed=0.8, seed=0)
    train, test = split_ratings(events, SplitSpec(0.8, 0))
    cfg = TrainConfig(n_factors=2, n_epochs=200, learning_rate=0.02, regularization=0.0)
    model = train_mf(build_interaction_matrix(train), cfg)
    assert evaluate(model, train, test).rmse <= 0.05


def test_deterministic_and_beats_baseline():
    events, _ = rank2_ratings(seed=6)
    train, test = split_ratings(events, SplitSpec(0.8, 6))
    model = train_mf(build_interaction_matrix(train), TrainConfig(n_factors=2))
    a = evaluate(model, train, test)
    assert a == evaluate(model, train, test)
    mu = sum(e.rating for e in train) / len(train)
    assert a.rmse <= rmse([(mu, e.rating) for e in test])
    assert 0 <= a.precision_at_k <= 1 and 0 <= a.recall_at_k <= 1


def test_report_format():
    report = evaluate(toy_model(), TOY_TRAIN, TOY_TEST, k=2)
    text = report.format()
    assert "precision@2" in text and "0.6250" in text
    assert report.to_dict()["n_users_evaluated"] == 4
