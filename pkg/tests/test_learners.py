import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from bns_refined.learners import (DecisionTree, ForestModel, LogisticModel, TrainConfig, TrainingError, fit_scaler,
                                  load_model, model_from_dict, model_to_dict, predict_theta, save_model, train_model)
from bns_refined.learners import nets
from bns_refined.learners.forest import build_tree, gini
from bns_refined.learners.logistic import class_weights, sigmoid
from oracles import dense_grad_errors, lstm_grad_errors, separable

FAST = TrainConfig(epochs=30, trees_count=25)


@pytest.fixture(scope="module")
def sep():
    return separable(1000, 11), separable(1000, 12)


def accuracy(model, data):
    _, pred = predict_theta(model, data)
    return float(np.mean(pred == data.theta))


# ---------------------------------------------------------------- scaler

def test_scaler_standardizes():
    x = np.random.default_rng(0).normal(50, 9, (300, 7))
    z = fit_scaler(x).transform(x)
    assert np.all(np.abs(z.mean(axis=0)) < 1e-9)
    np.testing.assert_allclose(z.std(axis=0), 1.0, rtol=1e-12)


def test_scaler_constant_column_and_inverse():
    x = np.random.default_rng(1).normal(50, 9, (40, 7))
    x[:, 3] = 42.0
    sc = fit_scaler(x)
    assert sc.std[3] == pytest.approx(1e-8)
    assert np.all(sc.transform(x)[:, 3] == 0)
    np.testing.assert_allclose(sc.inverse_transform(sc.transform(x)), x, rtol=1e-12)
    with pytest.raises(ValueError):
        fit_scaler(np.empty((0, 7)))


# ---------------------------------------------------------------- logistic

def test_logistic_closed_form_probabilities():
    x = np.random.default_rng(2).normal(size=(5, 7))
    assert np.allclose(LogisticModel(0.0, np.zeros(7)).predict_proba(x), 0.5)
    assert np.allclose(LogisticModel(math.log(3), np.zeros(7)).predict_proba(x), 0.75)
    prob, lab = predict_theta(LogisticModel(0.0, np.zeros(7)), x, threshold=0.3)
    assert lab.tolist() == [1] * 5
    prob, lab = predict_theta(LogisticModel(0.0, np.zeros(7)), x)
    assert lab.tolist() == [0] * 5


@given(arrays(np.float64, 20, elements=st.floats(-800, 800)))
def test_sigmoid_range(z):
    s = sigmoid(z)
    assert np.all((s >= 0) & (s <= 1)) and np.all(np.isfinite(s))
    np.testing.assert_allclose(s + sigmoid(-z), 1.0, atol=1e-15)


def test_logistic_loss_monotone_small_step(sep):
    cfg = TrainConfig(logistic_learning_rate=1e-3, logistic_epochs=100)
    h = np.array(train_model("lr", sep[0], cfg).loss_history)
    assert len(h) == 101
    assert np.all(np.diff(h) <= 0)


def test_logistic_single_class_warns():
    d = separable(50, 3)
    one = d.subset(d.theta == 1)
    with pytest.warns(RuntimeWarning, match="single class"):
        train_model("lr", one, TrainConfig(logistic_epochs=5))


def test_class_weights():
    y = np.array([0, 0, 0, 1])
    w = class_weights(y, "balanced")
    assert w[y == 0].sum() == pytest.approx(w[y == 1].sum())
    assert np.all(class_weights(y, None) == 1)


# ---------------------------------------------------------------- forest

def test_single_deep_tree_memorises():
    d = separable(200, 4, shift=0.3)
    cfg = TrainConfig(trees_count=1, max_depth=None, bootstrap=False, features_per_split=7)
    assert accuracy(train_model("rf", d, cfg), d) == 1.0


def test_pure_node_is_leaf():
    x = np.random.default_rng(0).normal(size=(30, 7))
    t = build_tree(x, np.ones(30, dtype=np.int64), None, 3, np.random.default_rng(0))
    assert t.n_nodes == 1 and t.predict(x).tolist() == [1] * 30


def _stump(vote: int) -> DecisionTree:
    counts = np.array([[0, 1]] if vote else [[1, 0]])
    return DecisionTree(np.array([-1]), np.array([0.0]), np.array([-1]), np.array([-1]), counts)


def test_vote_fraction_and_ties():
    x = np.zeros((2, 7))
    prob, lab = predict_theta(ForestModel([_stump(1), _stump(1), _stump(0)], None, 3), x)
    assert prob[0] == pytest.approx(2 / 3) and lab[0] == 1
    prob, lab = predict_theta(ForestModel([_stump(1), _stump(0)], None, 3), x)
    assert prob[0] == 0.5 and lab[0] == 0


def test_tree_structure(sep):
    m = train_model("rf", sep[0], TrainConfig(trees_count=10, max_depth=4))
    for t in m.trees:
        split = t.feature >= 0
        assert np.all(t.feature[split] <= 6)
        assert t.depth() <= 4
        leaves = ~split
        assert np.all(t.counts[leaves].sum(axis=1) > 0)


def test_gini():
    assert gini(np.array([5, 5])) == 0.5
    assert gini(np.array([0, 9])) == 0.0
    assert gini(np.array([0, 0])) == 0.0


def test_forest_vote_converges():
    d = separable(200, 5, shift=0.4)
    probe = separable(200, 6, shift=0.4)
    small = train_model("rf", d, TrainConfig(trees_count=500, max_depth=6))
    big = train_model("rf", d, TrainConfig(trees_count=2000, max_depth=6))
    assert np.max(np.abs(small.predict_proba(probe.features) - big.predict_proba(probe.features))) < 0.05


# ---------------------------------------------------------------- networks

def test_dense_gradients():
    assert max(dense_grad_errors(10, seed=1)) < 1e-4


def test_lstm_gradients():
    assert max(lstm_grad_errors(10, seed=2)) < 1e-4


def test_lstm_batchnorm_gradients():
    assert max(lstm_grad_errors(5, seed=3, use_batchnorm=True)) < 1e-4


def test_zero_dense_predicts_one():
    p = {k: np.zeros_like(v) for k, v in nets.init_head(np.random.default_rng(0), 7, 4, 4).items()}
    m = nets.DenseNet(p)
    prob, lab = predict_theta(m, np.ones((3, 7)))
    assert np.allclose(prob, 0.5) and lab.tolist() == [1, 1, 1]


def test_zero_lstm_hidden_state_is_zero():
    p = nets.init_lstm(np.random.default_rng(0), 5, 4, 4, False)
    p = {k: np.zeros_like(v) for k, v in p.items()}
    h, caches = nets.lstm_sequence(p, np.random.default_rng(1).normal(size=(4, 7)))
    assert np.all(h == 0)
    for *_, i, f, o, g, tc in caches:
        assert np.all(i == 0.5) and np.all(f == 0.5) and np.all(o == 0.5) and np.all(g == 0)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 40), st.integers(0, 10_000))
def test_batchnorm_normalises(n, seed):
    h = np.random.default_rng(seed).normal(3.0, 2.0, (n, 6))
    out, _ = nets.batchnorm_forward(h, np.ones(6), np.zeros(6), eps=1e-12)
    assert np.all(np.abs(out.mean(axis=0)) < 1e-6)
    assert np.all(np.abs(out.var(axis=0) - 1) < 1e-6)


def test_batchnorm_rejects_single_row():
    with pytest.raises(TrainingError):
        nets.batchnorm_forward(np.ones((1, 3)), np.ones(3), np.zeros(3), 1e-5)
    with pytest.raises(TrainingError):
        train_model("lstm-bn", separable(20, 0), TrainConfig(batch_size=1, epochs=1))


@given(arrays(np.float64, (3, 2), elements=st.floats(-50, 50)), st.permutations([0, 1]))
def test_softmax(logits, perm):
    s = nets.softmax(logits)
    assert np.all(s > 0)
    np.testing.assert_allclose(s.sum(axis=1), 1.0, atol=1e-9)
    np.testing.assert_allclose(nets.softmax(logits[:, perm]), s[:, perm], atol=1e-12)


def test_minibatches_cover_all_rows():
    b = nets.minibatches(65, 32, np.random.default_rng(0))
    assert sorted(np.concatenate(b).tolist()) == list(range(65))
    assert min(len(x) for x in b) >= 2


def test_nan_loss_aborts(monkeypatch):
    monkeypatch.setattr(nets, "dense_loss_and_grad", lambda *a, **k: (float("nan"), {}))
    with pytest.raises(TrainingError, match="nan"):
        nets.train_dense(separable(40, 0), FAST)


# ---------------------------------------------------------------- shared contract

@pytest.mark.parametrize("name", ["lr", "rf", "nn"])
def test_separable_accuracy(sep, name):
    model = train_model(name, sep[0], TrainConfig())
    assert accuracy(model, sep[1]) >= 0.95


@pytest.mark.parametrize("name", ["lstm", "lstm-bn"])
def test_lstm_learns_separable(sep, name):
    model = train_model(name, sep[0].subset(np.arange(1000) < 300), TrainConfig(epochs=30))
    assert model.loss_history[-1] < model.loss_history[0]
    assert accuracy(model, sep[1]) >= 0.9


@pytest.mark.parametrize("name", ["lr", "rf", "nn", "lstm", "lstm-bn"])
def test_deterministic_and_serialisable(tmp_path, name):
    d, probe = separable(120, 7), separable(30, 8)
    a, b = train_model(name, d, FAST), train_model(name, d, FAST)
    assert model_to_dict(a) == model_to_dict(b)
    loaded = load_model(save_model(a, tmp_path / "m.json"))
    assert np.array_equal(loaded.predict_proba(probe.features), a.predict_proba(probe.features))
    assert model_from_dict(model_to_dict(a)).threshold == a.threshold
    prob, lab = predict_theta(a, probe)
    assert np.array_equal(lab, (prob > a.threshold).astype(int))
    assert np.all((prob >= 0) & (prob <= 1))


def test_seed_changes_networks():
    d = separable(60, 9)
    a = train_model("nn", d, FAST)
    b = train_model("nn", d, TrainConfig(epochs=30, trees_count=25, rng_seed=1))
    assert model_to_dict(a) != model_to_dict(b)


def test_default_thresholds(sep):
    assert train_model("nn", separable(40, 1), FAST).threshold == 0.3
    assert train_model("lr", separable(40, 1), FAST).threshold == 0.5


def test_predict_width_check():
    with pytest.raises(ValueError, match="7 features"):
        predict_theta(LogisticModel(0.0, np.zeros(7)), np.zeros((2, 6)))


def test_train_config_validation():
    with pytest.raises(ValueError, match="epochs"):
        TrainConfig(epochs=0)
    with pytest.raises(ValueError, match="class1_threshold"):
        TrainConfig(class1_threshold=1.5)
    with pytest.raises(ValueError, match="unknown"):
        TrainConfig.from_dict({"epochz": 3})
    cfg = TrainConfig(max_depth=None)
    assert TrainConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ValueError):
        train_model("svm", separable(10, 0), FAST)
    with pytest.raises(TrainingError):
        train_model("nn", separable(10, 0).subset(np.zeros(10, bool)), FAST)
