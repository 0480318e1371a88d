import numpy as np
import pytest

from scalesim.data import Label, LabeledExample, PartitionMode, partition
from scalesim.errors import NumericalDivergence
from scalesim.model import (
    Metrics,
    ModelWeights,
    TrainConfig,
    evaluate,
    evaluate_xy,
    objective,
    predict,
    subgradient,
    to_xy,
    train_local,
    train_local_xy,
)


def example(features, label) -> LabeledExample:
    return LabeledExample(np.asarray(features, dtype=np.float64), label)


def toy_pair(dim=4):
    pos = np.zeros(dim)
    pos[0] = 1.0
    return [example(pos, Label.MALIGNANT), example(-pos, Label.BENIGN)]


class TestTrainLocal:
    def test_zero_epochs_returns_start_unchanged(self):
        start = ModelWeights(np.array([1.0, -2.0]), 0.5)
        out = train_local(start, toy_pair(2), TrainConfig(epochs=0))
        np.testing.assert_array_equal(out.w, start.w)
        assert out.b == start.b
        assert out is not start and out.w is not start.w

    def test_loss_decreases_on_separable_toy(self):
        data = toy_pair()
        X, y = to_xy(data)
        weights = ModelWeights.zeros(4)
        losses = [objective(weights.w, weights.b, X, y, 0.0)]
        for epoch in range(10):
            weights = train_local(weights, data,
                                  TrainConfig(epochs=1, learning_rate=0.1,
                                              l2_lambda=0.0, batch_size=2, seed=epoch))
            losses.append(objective(weights.w, weights.b, X, y, 0.0))
        assert all(b < a for a, b in zip(losses, losses[1:]))

    def test_single_step_matches_hand_subgradient(self):
        x = np.array([0.5, -1.5, 2.0])
        data = [example(x, Label.MALIGNANT)]
        lr = 0.5
        out = train_local(ModelWeights.zeros(3), data,
                          TrainConfig(epochs=1, learning_rate=lr, l2_lambda=0.0,
                                      batch_size=4, seed=0))
        np.testing.assert_array_equal(out.w, lr * x)
        assert out.b == lr

    def test_negative_label_hand_step(self):
        x = np.array([1.0, 2.0])
        data = [example(x, Label.BENIGN)]
        out = train_local(ModelWeights.zeros(2), data,
                          TrainConfig(epochs=1, learning_rate=0.25, l2_lambda=0.0,
                                      batch_size=1, seed=0))
        np.testing.assert_array_equal(out.w, -0.25 * x)
        assert out.b == -0.25

    def test_bit_identical_reruns(self, wdbc):
        X, y = to_xy(wdbc[:64])
        cfg = TrainConfig(epochs=3, seed=123)
        a = train_local_xy(ModelWeights.zeros(30), X, y, cfg)
        b = train_local_xy(ModelWeights.zeros(30), X, y, cfg)
        np.testing.assert_array_equal(a.w, b.w)
        assert a.b == b.b

    def test_empty_data_rejected(self):
        with pytest.raises(ValueError):
            train_local(ModelWeights.zeros(2), [], TrainConfig())

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_divergence_detected(self):
        data = toy_pair(2)
        with pytest.raises(NumericalDivergence):
            train_local(ModelWeights.zeros(2), data,
                        TrainConfig(epochs=3, learning_rate=1e308, seed=0))

    def test_config_validation(self):
        with pytest.raises(ValueError):
            TrainConfig(learning_rate=0.0)
        with pytest.raises(ValueError):
            TrainConfig(batch_size=0)
        with pytest.raises(ValueError):
            TrainConfig(epochs=-1)


class TestSubgradient:
    def test_matches_finite_differences(self):
        rng = np.random.default_rng(211)
        checked = 0
        while checked < 200:
            dim = 6
            w = rng.normal(size=dim)
            b = float(rng.normal())
            x = rng.normal(size=(1, dim))
            y = np.array([1.0 if rng.random() < 0.5 else -1.0])
            l2 = float(rng.uniform(0, 0.1))
            margin = float(y[0] * (x[0] @ w + b))
            if abs(1.0 - margin) < 0.05:
                continue
            grad_w, grad_b = subgradient(w, b, x, y, l2)
            h = 1e-6
            for j in range(dim):
                e = np.zeros(dim)
                e[j] = h
                num = (objective(w + e, b, x, y, l2) - objective(w - e, b, x, y, l2)) / (2 * h)
                assert num == pytest.approx(grad_w[j], rel=1e-5, abs=1e-7)
            num_b = (objective(w, b + h, x, y, l2) - objective(w, b - h, x, y, l2)) / (2 * h)
            assert num_b == pytest.approx(grad_b, rel=1e-5, abs=1e-7)
            checked += 1


class TestPredict:
    def test_zero_weights_tie_is_malignant(self):
        m = ModelWeights.zeros(3)
        assert predict(m, np.array([1.0, -1.0, 0.5])) is Label.MALIGNANT

    def test_positive_margin(self):
        x = np.array([0.3, -0.2, 1.0])
        assert predict(ModelWeights(x.copy(), 0.0), x) is Label.MALIGNANT

    def test_negative_margin(self):
        x = np.array([0.3, -0.2, 1.0])
        assert predict(ModelWeights(-x, 0.0), x) is Label.BENIGN


class TestEvaluate:
    def test_all_correct(self):
        data = toy_pair()
        m = ModelWeights(np.array([1.0, 0, 0, 0]), 0.0)
        assert evaluate(m, data) == Metrics(1.0, 1.0, 1.0, 1.0)

    def test_all_wrong(self):
        data = toy_pair()
        m = ModelWeights(np.array([-1.0, 0, 0, 0]), 0.0)
        metrics = evaluate(m, data)
        assert metrics.accuracy == 0.0
        assert metrics.precision == 0.0
        assert metrics.recall == 0.0
        assert metrics.f1 == 0.0

    def test_hand_confusion_matrix(self):
        # one feature, unit weight: prediction is sign(x)
        m = ModelWeights(np.array([1.0]), 0.0)
        rows = (
            [(1.0, Label.MALIGNANT)] * 2      # TP
            + [(1.0, Label.BENIGN)] * 1       # FP
            + [(-1.0, Label.MALIGNANT)] * 1   # FN
            + [(-1.0, Label.BENIGN)] * 6      # TN
        )
        data = [example([x], lbl) for x, lbl in rows]
        metrics = evaluate(m, data)
        assert metrics.precision == pytest.approx(2 / 3)
        assert metrics.recall == pytest.approx(2 / 3)
        assert metrics.f1 == pytest.approx(2 / 3)
        assert metrics.accuracy == pytest.approx(0.8)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            evaluate(ModelWeights.zeros(1), [])


class TestCentralAnchor:
    def test_central_training_beats_90_percent(self, wdbc):
        split = partition(wdbc, 1, PartitionMode.IID, test_fraction=0.2, seed=29)[0]
        cfg = TrainConfig(epochs=30, learning_rate=0.01, l2_lambda=0.001,
                          batch_size=16, seed=29)
        m = train_local(ModelWeights.zeros(30), split.train, cfg)
        metrics = evaluate(m, split.test)
        assert metrics.accuracy >= 0.90
