import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fedfa.exceptions import DimensionMismatchError, InvalidParameterError
from fedfa.model import ModelParams, accuracy, loss_and_grad, mean_loss, predict_proba

from conftest import random_params


def central_difference_grad(params, X, y, prox_mu=0.0, anchor=None, h=1e-5):
    """Numerical gradient of the loss over the flat parameter vector."""
    C, d = params.n_classes, params.n_features
    theta = params.flat()
    grad = np.zeros_like(theta)
    for i in range(theta.size):
        up, down = theta.copy(), theta.copy()
        up[i] += h
        down[i] -= h
        f_up = loss_and_grad(ModelParams.from_flat(up, C, d), X, y, prox_mu, anchor).loss
        f_down = loss_and_grad(ModelParams.from_flat(down, C, d), X, y, prox_mu, anchor).loss
        grad[i] = (f_up - f_down) / (2 * h)
    return grad


def relative_error(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(a) + np.linalg.norm(b), 1e-12)


class TestModelParams:
    def test_flat_layout_is_w_row_major_then_b(self):
        p = ModelParams(np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]), np.array([7.0, 8.0, 9.0]))
        np.testing.assert_array_equal(p.flat(), np.arange(1.0, 10.0))
        q = ModelParams.from_flat(p.flat(), 3, 2)
        np.testing.assert_array_equal(q.W, p.W)
        np.testing.assert_array_equal(q.b, p.b)

    def test_shape_errors(self):
        with pytest.raises(DimensionMismatchError):
            ModelParams(np.zeros((2, 3)), np.zeros(3))
        with pytest.raises(DimensionMismatchError):
            ModelParams.from_flat(np.zeros(5), 2, 2)


class TestPredictProba:
    def test_uniform_at_zero(self):
        np.testing.assert_allclose(predict_proba(ModelParams.zeros(10, 4), np.ones(4)), 0.1)

    def test_closed_form(self):
        p = ModelParams(np.zeros((2, 3)), np.array([math.log(2.0), 0.0]))
        np.testing.assert_allclose(predict_proba(p, np.ones(3)), [2 / 3, 1 / 3], rtol=1e-15)

    def test_no_overflow(self):
        p = ModelParams(np.zeros((2, 1)), np.array([1000.0, 0.0]))
        probs = predict_proba(p, np.zeros(1))
        assert np.all(np.isfinite(probs))
        assert probs[0] == pytest.approx(1.0) and probs[1] == pytest.approx(0.0, abs=1e-300)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            predict_proba(ModelParams.zeros(2, 3), np.zeros(4))

    @given(arrays(np.float64, (6,), elements=st.floats(-1e3, 1e3)))
    @settings(max_examples=200, deadline=None)
    def test_normalized(self, logits):
        p = ModelParams(np.zeros((6, 1)), logits)
        probs = predict_proba(p, np.zeros(1))
        assert abs(probs.sum() - 1.0) <= 1e-12
        assert np.all(probs >= 0) and np.all(probs <= 1)


class TestLossAndGrad:
    def test_ln_c_at_zero(self, rng):
        X = rng.normal(size=(7, 4))
        y = rng.integers(0, 10, 7)
        ev = loss_and_grad(ModelParams.zeros(10, 4), X, y)
        assert ev.loss == pytest.approx(math.log(10), rel=1e-14)

    def test_prox_zero_at_anchor(self, rng):
        p = random_params(rng, 3, 4)
        X, y = rng.normal(size=(5, 4)), rng.integers(0, 3, 5)
        plain = loss_and_grad(p, X, y)
        prox = loss_and_grad(p, X, y, prox_mu=0.1, anchor=p.copy())
        assert prox.loss == plain.loss
        np.testing.assert_array_equal(prox.grad.W, plain.grad.W)
        np.testing.assert_array_equal(prox.grad.b, plain.grad.b)

    def test_prox_gradient_part(self, rng):
        p, anchor = random_params(rng, 3, 4), random_params(rng, 3, 4)
        X, y = rng.normal(size=(5, 4)), rng.integers(0, 3, 5)
        plain = loss_and_grad(p, X, y)
        prox = loss_and_grad(p, X, y, prox_mu=0.7, anchor=anchor)
        np.testing.assert_allclose(prox.grad.flat() - plain.grad.flat(),
                                   0.7 * (p.flat() - anchor.flat()), rtol=0, atol=1e-14)
        dist = np.sum((p.flat() - anchor.flat()) ** 2)
        assert prox.loss - plain.loss == pytest.approx(0.35 * dist, rel=1e-12)

    def test_missing_anchor(self, rng):
        with pytest.raises(InvalidParameterError):
            loss_and_grad(ModelParams.zeros(2, 2), np.zeros((1, 2)), [0], prox_mu=1.0)

    def test_empty_batch(self):
        with pytest.raises(InvalidParameterError):
            loss_and_grad(ModelParams.zeros(2, 2), np.zeros((0, 2)), [])

    def test_label_out_of_range(self):
        with pytest.raises(DimensionMismatchError):
            loss_and_grad(ModelParams.zeros(2, 2), np.zeros((1, 2)), [2])

    @pytest.mark.parametrize("seed", range(20))
    def test_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        d, C = int(rng.integers(1, 6)), int(rng.integers(2, 4))
        n = int(rng.integers(1, 8))
        p = random_params(rng, C, d)
        X, y = rng.normal(size=(n, d)), rng.integers(0, C, n)
        mu = float(rng.choice([0.0, 0.3]))
        anchor = random_params(rng, C, d) if mu else None
        analytic = loss_and_grad(p, X, y, mu, anchor).grad.flat()
        numeric = central_difference_grad(p, X, y, mu, anchor)
        assert relative_error(analytic, numeric) <= 1e-4

    @given(st.integers(0, 10_000))
    @settings(max_examples=50, deadline=None)
    def test_loss_nonnegative(self, seed):
        rng = np.random.default_rng(seed)
        p = random_params(rng, 3, 4, scale=5.0)
        X, y = rng.normal(size=(6, 4)), rng.integers(0, 3, 6)
        assert loss_and_grad(p, X, y).loss >= 0.0
        assert mean_loss(p, X, y) == pytest.approx(loss_and_grad(p, X, y).loss, rel=1e-12)


class TestAccuracy:
    def test_generating_model_scores_perfectly(self, rng):
        p = random_params(rng, 4, 3)
        X = rng.normal(size=(50, 3))
        y = np.argmax(X @ p.W.T + p.b, axis=1)
        assert accuracy(p, X, y) == 1.0

    def test_zero_params_pick_class_zero(self, rng):
        X = rng.normal(size=(40, 2))
        y = rng.integers(0, 2, 40)
        expected = sum(1 for label in y if label == 0) / 40
        assert accuracy(ModelParams.zeros(2, 2), X, y) == expected

    def test_single_correct(self):
        p = ModelParams(np.array([[0.0], [1.0]]), np.zeros(2))
        assert accuracy(p, [[1.0]], [1]) == 1.0

    def test_empty(self):
        with pytest.raises(InvalidParameterError):
            accuracy(ModelParams.zeros(2, 1), np.zeros((0, 1)), [])
