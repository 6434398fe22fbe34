"""Tests for the dense network and its hand-written gradients."""
from __future__ import annotations

import math

import numpy as np
import pytest

from pdrl.nets import (
    Mlp,
    backprop_log_policy,
    backprop_value,
    bundle_sum,
    fd_gradient,
    forward_policy,
    forward_value,
    init_mlp,
    load_mlp,
    max_relative_error,
    save_mlp,
    sgd_step,
)


def zeroed(net: Mlp) -> Mlp:
    for W in net.weights:
        W[:] = 0.0
    for b in net.biases:
        b[:] = 0.0
    return net


def loop_forward(net: Mlp, x) -> list[float]:
    """Straight-line reimplementation with explicit Python loops."""
    h = [float(v) for v in x]
    last = len(net.weights) - 1
    for l, (W, b) in enumerate(zip(net.weights, net.biases)):
        z = [sum(W[i][j] * h[j] for j in range(len(h))) + b[i]
             for i in range(len(b))]
        h = z if l == last else [math.tanh(v) for v in z]
    return h


class TestForwardValue:
    def test_zero_network(self, rng):
        net = zeroed(init_mlp((4, 8, 1), rng))
        for _ in range(5):
            assert forward_value(net, rng.normal(size=4)) == 0.0

    def test_bias_passthrough(self, rng):
        net = zeroed(init_mlp((3, 5, 1), rng))
        net.biases[-1][0] = 3.75
        assert forward_value(net, rng.normal(size=3)) == 3.75

    def test_matches_loop_reimplementation(self, rng):
        for _ in range(10):
            net = init_mlp((5, 7, 6, 1), rng)
            x = rng.normal(size=5)
            assert forward_value(net, x) == pytest.approx(loop_forward(net, x)[0],
                                                          abs=1e-12)

    def test_requires_scalar_head(self, rng):
        net = init_mlp((3, 4, 2), rng)
        with pytest.raises(ValueError, match="1 output"):
            forward_value(net, np.zeros(3))

    def test_dimension_mismatch_rejected(self, rng):
        net = init_mlp((3, 4, 1), rng)
        with pytest.raises(ValueError, match="input shape"):
            forward_value(net, np.zeros(5))


class TestForwardPolicy:
    def test_zero_logits_uniform(self, rng):
        net = zeroed(init_mlp((4, 6, 3), rng))
        np.testing.assert_allclose(forward_policy(net, rng.normal(size=4)),
                                   np.full(3, 1 / 3), atol=1e-15)

    def test_extreme_logits_stable(self):
        # linear single-input net producing logits (1e4, 1e4 - 1000)
        net = Mlp((1, 2), [np.array([[1e4], [1e4 - 1000.0]])], [np.zeros(2)])
        with np.errstate(over="raise"):
            probs = forward_policy(net, np.array([1.0]))
        assert probs[0] == pytest.approx(1.0, abs=1e-12)
        assert probs[1] < 1e-300

    def test_normalization_sweep(self, rng):
        net = init_mlp((4, 16, 5), rng)
        for _ in range(10_000):
            probs = forward_policy(net, rng.normal(size=4))
            assert abs(probs.sum() - 1.0) <= 1e-12
            assert probs.min() > 0

    def test_invariant_to_output_bias_shift(self, rng):
        net = init_mlp((3, 8, 4), rng)
        x = rng.normal(size=3)
        before = forward_policy(net, x)
        net.biases[-1] += 17.3
        np.testing.assert_allclose(forward_policy(net, x), before, atol=1e-12)


class TestBackpropValue:
    def test_zero_upstream(self, rng):
        net = init_mlp((3, 5, 1), rng)
        bundle = backprop_value(net, rng.normal(size=3), upstream=0.0)
        assert all(np.all(dw == 0) for dw in bundle.d_weights)
        assert all(np.all(db == 0) for db in bundle.d_biases)

    def test_linear_in_upstream(self, rng):
        net = init_mlp((3, 5, 1), rng)
        x = rng.normal(size=3)
        one = backprop_value(net, x, upstream=1.0)
        two = backprop_value(net, x, upstream=2.0)
        for a, b in zip(one.d_weights, two.d_weights):
            np.testing.assert_array_equal(2.0 * a, b)

    def test_finite_difference_match(self, rng):
        for _ in range(5):
            sizes = (int(rng.integers(2, 6)), int(rng.integers(4, 20)), 1)
            net = init_mlp(sizes, rng)
            x = rng.normal(size=sizes[0])
            analytic = backprop_value(net, x)
            numeric = fd_gradient(lambda n: forward_value(n, x), net)
            assert max_relative_error(analytic, numeric) <= 1e-5


class TestBackpropLogPolicy:
    def test_single_action_zero_gradient(self, rng):
        net = init_mlp((3, 4, 1), rng)
        bundle = backprop_log_policy(net, rng.normal(size=3), 0)
        assert all(np.max(np.abs(dw)) <= 1e-15 for dw in bundle.d_weights)

    def test_score_function_identity(self, rng):
        net = init_mlp((4, 8, 3), rng)
        x = rng.normal(size=4)
        probs = forward_policy(net, x)
        mean = bundle_sum([backprop_log_policy(net, x, a).scaled(probs[a])
                           for a in range(3)])
        for dw in mean.d_weights + mean.d_biases:
            assert np.max(np.abs(dw)) <= 1e-10

    def test_finite_difference_match(self, rng):
        for _ in range(5):
            n_in, n_act = int(rng.integers(2, 6)), int(rng.integers(2, 5))
            net = init_mlp((n_in, 12, n_act), rng)
            x = rng.normal(size=n_in)
            a = int(rng.integers(n_act))
            analytic = backprop_log_policy(net, x, a)
            numeric = fd_gradient(
                lambda n: float(np.log(forward_policy(n, x)[a])), net)
            assert max_relative_error(analytic, numeric) <= 1e-5

    def test_action_out_of_range(self, rng):
        net = init_mlp((3, 4, 2), rng)
        with pytest.raises(ValueError, match="out of range"):
            backprop_log_policy(net, np.zeros(3), 2)


class TestSgdStep:
    def test_eta_zero_bitwise_unchanged(self, rng):
        net = init_mlp((3, 6, 1), rng)
        before = net.copy()
        grad = backprop_value(net, rng.normal(size=3))
        sgd_step(net, grad, 0.0, -1)
        for W, W0 in zip(net.weights, before.weights):
            np.testing.assert_array_equal(W, W0)

    def test_two_half_steps_equal_one(self, rng):
        x = rng.normal(size=3)
        net_a = init_mlp((3, 6, 1), rng)
        net_b = net_a.copy()
        grad = backprop_value(net_a, x)
        sgd_step(net_a, grad, 0.5, -1)
        sgd_step(net_a, grad, 0.5, -1)
        sgd_step(net_b, grad, 1.0, -1)
        for A, B in zip(net_a.weights, net_b.weights):
            np.testing.assert_allclose(A, B, rtol=1e-12, atol=1e-15)

    def test_descent_reduces_squared_error(self, rng):
        net = init_mlp((2, 16, 1), rng)
        x, y = rng.normal(size=2), 3.0
        def loss():
            return (forward_value(net, x) - y) ** 2
        first = loss()
        for _ in range(100):
            residual = forward_value(net, x) - y
            sgd_step(net, backprop_value(net, x, upstream=2 * residual), 1e-3, -1)
        assert loss() < first

    def test_shape_mismatch_rejected(self, rng):
        net = init_mlp((3, 6, 1), rng)
        other = backprop_value(init_mlp((3, 7, 1), rng), np.zeros(3))
        with pytest.raises(ValueError):
            sgd_step(net, other, 0.1, -1)


class TestInitMlp:
    def test_seed_reproducible(self):
        a = init_mlp((4, 8, 2), np.random.default_rng(42))
        b = init_mlp((4, 8, 2), np.random.default_rng(42))
        for W1, W2 in zip(a.weights, b.weights):
            np.testing.assert_array_equal(W1, W2)

    def test_fan_in_bound(self, rng):
        net = init_mlp((4, 8), rng)
        assert np.max(np.abs(net.weights[0])) <= 0.5

    def test_biases_zero(self, rng):
        net = init_mlp((4, 8, 3), rng)
        assert all(np.all(b == 0) for b in net.biases)

    def test_empirical_mean_near_zero(self):
        net = init_mlp((300, 350), np.random.default_rng(9))
        w = net.weights[0].ravel()  # 105k draws from U[-s, s]
        se = w.std(ddof=1) / np.sqrt(w.size)
        assert abs(w.mean()) <= 3 * se

    def test_too_few_layers_rejected(self, rng):
        with pytest.raises(ValueError):
            init_mlp((4,), rng)


class TestPersistence:
    def test_round_trip_bitwise(self, tmp_path, rng):
        net = init_mlp((5, 9, 3), rng)
        path = str(tmp_path / "net.bin")
        save_mlp(net, path)
        loaded = load_mlp(path)
        assert loaded.layer_sizes == net.layer_sizes
        for W1, W2 in zip(net.weights, loaded.weights):
            np.testing.assert_array_equal(W1, W2)
        for b1, b2 in zip(net.biases, loaded.biases):
            np.testing.assert_array_equal(b1, b2)

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "junk.bin"
        path.write_bytes(b"\x00" * 64)
        with pytest.raises(ValueError, match="not an Mlp"):
            load_mlp(str(path))

    def test_pure_linear_net_supported(self, tmp_path, rng):
        net = init_mlp((3, 2), rng)  # no hidden layers
        x = rng.normal(size=3)
        expected = net.weights[0] @ x
        np.testing.assert_allclose(forward_policy(net, x),
                                   np.exp(expected - expected.max())
                                   / np.exp(expected - expected.max()).sum(),
                                   atol=1e-12)
