import json
import math

import numpy as np
import pytest

from neva import FoveationConfig, Stimulus, TaskLossModel, mlp_forward, task_loss
from neva.errors import InvalidModel, InvalidParameter
from neva.foveation import agent_state, init_state, update_state
from neva.task_models import (Layer, MlpWeights, bright_side_classifier, load_model,
                              model_from_dict, reconstruction_proxy_loss, save_model, softmax)

from conftest import random_stimulus


def naive_forward(layers, x):
    """Triple-loop matrix multiply, independent of numpy's matmul."""
    x = list(map(float, x))
    for L in layers:
        out = []
        for j in range(L.cols):
            acc = float(L.bias[j])
            for i in range(L.rows):
                acc += x[i] * float(L.weights[i, j])
            out.append(acc)
        if L.activation == "relu":
            out = [max(v, 0.0) for v in out]
        elif L.activation == "softmax":
            m = max(out)
            e = [math.exp(v - m) for v in out]
            out = [v / sum(e) for v in e]
        x = out
    return np.array(x)


class TestForward:
    def test_identity(self):
        w = MlpWeights([Layer(np.eye(4), np.zeros(4))], "mse")
        np.testing.assert_array_equal(mlp_forward(w, [0.1, 0.2, 0.3, 0.4]), [0.1, 0.2, 0.3, 0.4])

    def test_relu(self):
        w = MlpWeights([Layer(np.eye(2), np.zeros(2), "relu")], "mse")
        np.testing.assert_array_equal(mlp_forward(w, [-1, 2]), [0, 2])

    def test_two_layer_vs_naive(self, rng):
        layers = [Layer(rng.normal(size=(12, 7)), rng.normal(size=7), "relu"),
                  Layer(rng.normal(size=(7, 5)), rng.normal(size=5), "softmax")]
        w = MlpWeights(layers, "cross_entropy", 1)
        for _ in range(10):
            x = rng.random(12)
            got = mlp_forward(w, x)
            np.testing.assert_allclose(got, naive_forward(layers, x), atol=1e-9)
            assert abs(got.sum() - 1) < 1e-9

    def test_shape_errors(self):
        w = MlpWeights([Layer(np.eye(3), np.zeros(3))], "mse")
        with pytest.raises(InvalidParameter):
            mlp_forward(w, np.zeros(4))
        with pytest.raises(InvalidModel):
            MlpWeights([Layer(np.ones((3, 2)), np.zeros(2)), Layer(np.ones((3, 1)), np.zeros(1))], "mse")

    def test_model_validation(self):
        with pytest.raises(InvalidModel):
            MlpWeights([Layer(np.array([[np.nan]]), np.zeros(1))], "mse")
        with pytest.raises(InvalidModel):
            MlpWeights([Layer(np.eye(2), np.zeros(2), "softmax")], "mse")
        with pytest.raises(InvalidModel):
            MlpWeights([Layer(np.eye(2), np.zeros(2), "softmax"),
                        Layer(np.eye(2), np.zeros(2))], "cross_entropy")


class TestLosses:
    def test_proxy(self, rng):
        s = random_stimulus(rng)
        assert reconstruction_proxy_loss(s, s) == 0
        assert reconstruction_proxy_loss(Stimulus(np.zeros((4, 4))), Stimulus(np.ones((4, 4)))) == 1.0
        assert task_loss(TaskLossModel(), s, Stimulus(np.zeros((32, 32)))) == \
            reconstruction_proxy_loss(s, Stimulus(np.zeros((32, 32))))

    def test_proxy_decreases_with_fixations(self, rng):
        s = random_stimulus(rng, c=3)
        cfg = FoveationConfig(3.0, 3.0, gamma=0.0)
        state = init_state(s, cfg)
        prev = task_loss(TaskLossModel(), agent_state(state, s), s)
        for fx in [(4, 4), (20, 8), (12, 28), (30, 30), (16, 16)]:
            state = update_state(state, fx, cfg)
            cur = task_loss(TaskLossModel(), agent_state(state, s), s)
            assert cur <= prev
            prev = cur

    def test_proxy_lipschitz(self, rng):
        s = random_stimulus(rng, 8, 8, 3)
        h = random_stimulus(rng, 8, 8, 3)
        base = reconstruction_proxy_loss(h, s)
        eps = 0.01
        a = h.data.copy()
        a[3, 4, 1] = min(1, a[3, 4, 1] + eps)
        bumped = reconstruction_proxy_loss(Stimulus(a), s)
        assert abs(bumped - base) <= eps * (2 + eps) / (8 * 8 * 3)

    def test_cross_entropy_certain_and_uniform(self):
        certain = MlpWeights([Layer(np.zeros((1, 3)), np.array([0.0, 100.0, 0.0]), "softmax")],
                             "cross_entropy", 1)
        m = TaskLossModel("mlp_classifier", certain, (1, 1, 1))
        one = Stimulus(np.zeros((1, 1)))
        assert task_loss(m, one, one) == pytest.approx(0, abs=1e-12)
        uniform = MlpWeights([Layer(np.zeros((1, 10)), np.zeros(10), "softmax")], "cross_entropy", 3)
        m = TaskLossModel("mlp_classifier", uniform, (1, 1, 1))
        assert task_loss(m, one, one) == pytest.approx(2.302585092994046, abs=1e-9)

    def test_cross_entropy_decreases_with_target_logit(self):
        for b in np.linspace(-3, 3, 7):
            lo = MlpWeights([Layer(np.zeros((1, 3)), np.array([b, 0.5, -1.0]))], "cross_entropy", 0)
            hi = MlpWeights([Layer(np.zeros((1, 3)), np.array([b + 0.1, 0.5, -1.0]))], "cross_entropy", 0)
            x = Stimulus(np.zeros((1, 1)))
            assert task_loss(TaskLossModel("mlp_classifier", hi, (1, 1, 1)), x, x) < \
                task_loss(TaskLossModel("mlp_classifier", lo, (1, 1, 1)), x, x)

    def test_missing_target(self):
        w = MlpWeights([Layer(np.zeros((1, 2)), np.zeros(2), "softmax")], "cross_entropy")
        m = TaskLossModel("mlp_classifier", w, (1, 1, 1))
        with pytest.raises(InvalidModel):
            task_loss(m, Stimulus(np.zeros((1, 1))), Stimulus(np.zeros((1, 1))))

    def test_autoencoder_identity_is_proxy_on_model_grid(self, rng):
        w = MlpWeights([Layer(np.eye(16), np.zeros(16))], "mse")
        m = TaskLossModel("mlp_autoencoder", w, (4, 4, 1))
        s = random_stimulus(rng, 4, 4)
        h = random_stimulus(rng, 4, 4)
        assert task_loss(m, h, s) == pytest.approx(reconstruction_proxy_loss(h, s), abs=1e-15)

    def test_losses_nonnegative(self, rng):
        m = bright_side_classifier("left")
        for _ in range(5):
            s = random_stimulus(rng, 40, 40)
            assert 0 <= task_loss(m, s, s) < np.inf


class TestWeightsFile:
    def test_round_trip(self, tmp_path, rng):
        m = bright_side_classifier("right", size=4)
        p = save_model(m, tmp_path / "w.json")
        m2 = load_model(p)
        assert m2.kind == "mlp_classifier" and m2.weights.target_index == 1
        s = random_stimulus(rng, 16, 16)
        assert task_loss(m2, s, s) == task_loss(m, s, s)

    def test_format(self, tmp_path):
        d = {"input": {"width": 2, "height": 1, "channels": 1}, "loss": "mse",
             "layers": [{"rows": 2, "cols": 2, "weights": [1, 2, 3, 4], "bias": [0, 1],
                         "activation": "identity"}]}
        m = model_from_dict(d)
        # row-major: W = [[1, 2], [3, 4]], y = x @ W + b
        np.testing.assert_array_equal(mlp_forward(m.weights, [1, 1]), [4, 7])

    @pytest.mark.parametrize("broken", [
        {"loss": "mse", "layers": []},
        {"input": {"width": 2, "height": 1, "channels": 1}, "loss": "mse",
         "layers": [{"rows": 2, "cols": 2, "weights": [1, 2, 3], "bias": [0, 1]}]},
        {"input": {"width": 3, "height": 1, "channels": 1}, "loss": "mse",
         "layers": [{"rows": 2, "cols": 2, "weights": [1, 2, 3, 4], "bias": [0, 1]}]},
    ])
    def test_malformed(self, broken):
        with pytest.raises(InvalidModel):
            model_from_dict(broken)

    def test_unreadable(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{nope")
        with pytest.raises(InvalidModel):
            load_model(p)


def test_softmax_stable():
    p = softmax(np.array([1000.0, 1000.0]))
    np.testing.assert_allclose(p, [0.5, 0.5])
