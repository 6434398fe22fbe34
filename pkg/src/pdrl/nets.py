"""Minimal dense network with hand-written reverse-mode differentiation.

Two heads are supported on the same parameter container: a scalar linear head
(value network) and a softmax head (policy network). Hidden layers use tanh.
Plain SGD only — no momentum, clipping, or batching — so each update is
exactly theta <- theta + direction * eta * grad.

Parameters are 64-bit so finite-difference checks are meaningful at 1e-5.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class Mlp:
    """Parameter container: weights[l] is (fan_out, fan_in), biases[l] is (fan_out,).

    layer_sizes includes input and output, so len(weights) == len(layer_sizes) - 1.
    A two-entry layer_sizes is a pure linear map (no hidden layers).
    """

    layer_sizes: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @property
    def n_inputs(self) -> int:
        return self.layer_sizes[0]

    @property
    def n_outputs(self) -> int:
        return self.layer_sizes[-1]

    def copy(self) -> "Mlp":
        return Mlp(self.layer_sizes, [w.copy() for w in self.weights],
                   [b.copy() for b in self.biases])


@dataclass
class GradientBundle:
    """Per-parameter partials, shape-congruent with an Mlp."""

    d_weights: list[np.ndarray]
    d_biases: list[np.ndarray]

    def scaled(self, coef: float) -> "GradientBundle":
        return GradientBundle([coef * dw for dw in self.d_weights],
                              [coef * db for db in self.d_biases])


def bundle_sum(bundles: list[GradientBundle]) -> GradientBundle:
    """Elementwise sum of shape-congruent bundles."""
    total = bundles[0]
    dws = [dw.copy() for dw in total.d_weights]
    dbs = [db.copy() for db in total.d_biases]
    for b in bundles[1:]:
        for dw, other in zip(dws, b.d_weights):
            dw += other
        for db, other in zip(dbs, b.d_biases):
            db += other
    return GradientBundle(dws, dbs)


def init_mlp(layer_sizes, rng: np.random.Generator) -> Mlp:
    """Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero."""
    sizes = tuple(int(n) for n in layer_sizes)
    if len(sizes) < 2:
        raise ValueError("need at least input and output layer sizes")
    if any(n < 1 for n in sizes):
        raise ValueError(f"layer sizes must be positive: {sizes}")
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        scale = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-scale, scale, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return Mlp(sizes, weights, biases)


def _forward_trace(net: Mlp, x: np.ndarray):
    """Run the net, keeping each layer's input activation for backprop.

    Returns (activations, output) where activations[l] feeds layer l and
    output is the raw final-layer pre-activation (no head applied).
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (net.n_inputs,):
        raise ValueError(f"input shape {x.shape} != ({net.n_inputs},)")
    activations = [x]
    h = x
    last = len(net.weights) - 1
    for l, (W, b) in enumerate(zip(net.weights, net.biases)):
        z = W @ h + b
        h = z if l == last else np.tanh(z)
        if l != last:
            activations.append(h)
    return activations, h


def _backprop(net: Mlp, activations: list[np.ndarray],
              d_output: np.ndarray) -> GradientBundle:
    """Chain rule from a gradient at the raw output back to all parameters."""
    dws = [None] * len(net.weights)
    dbs = [None] * len(net.biases)
    delta = d_output
    for l in range(len(net.weights) - 1, -1, -1):
        dws[l] = np.outer(delta, activations[l])
        dbs[l] = delta
        if l > 0:
            # through tanh: activations[l] already stores tanh(z_l)
            delta = (net.weights[l].T @ delta) * (1.0 - activations[l] ** 2)
    return GradientBundle(dws, dbs)


def forward_value(net: Mlp, x: np.ndarray) -> float:
    """Scalar value head: linear output, requires a single output unit."""
    if net.n_outputs != 1:
        raise ValueError(f"value network must have 1 output, has {net.n_outputs}")
    _, out = _forward_trace(net, x)
    return float(out[0])


def forward_policy(net: Mlp, x: np.ndarray) -> np.ndarray:
    """Softmax head over the output units, computed with max subtraction."""
    _, logits = _forward_trace(net, x)
    z = logits - logits.max()
    e = np.exp(z)
    return e / e.sum()


def backprop_value(net: Mlp, x: np.ndarray, upstream: float = 1.0) -> GradientBundle:
    """Exact gradient of upstream * V(x) with respect to every parameter."""
    activations, _ = _forward_trace(net, x)
    return _backprop(net, activations, np.array([float(upstream)]))


def backprop_log_policy(net: Mlp, x: np.ndarray, action: int) -> GradientBundle:
    """Exact gradient of log pi(action | x).

    At the logits, d log softmax_a / d z_j = 1{a=j} - pi(j), then the usual
    chain rule through the layers.
    """
    if not 0 <= action < net.n_outputs:
        raise ValueError(f"action {action} out of range for {net.n_outputs} outputs")
    activations, logits = _forward_trace(net, x)
    z = logits - logits.max()
    e = np.exp(z)
    probs = e / e.sum()
    d_logits = -probs
    d_logits[action] += 1.0
    return _backprop(net, activations, d_logits)


def sgd_step(net: Mlp, grad: GradientBundle, eta: float, direction: int = -1) -> Mlp:
    """theta <- theta + direction * eta * grad, in place; returns the same net.

    direction is -1 for descent (value/primal) and +1 for ascent (policy/dual).
    eta = 0 leaves parameters bitwise untouched.
    """
    if len(grad.d_weights) != len(net.weights):
        raise ValueError("gradient bundle does not match network depth")
    if eta == 0.0:
        return net
    step = direction * eta
    for W, dW in zip(net.weights, grad.d_weights):
        if W.shape != dW.shape:
            raise ValueError(f"weight gradient shape {dW.shape} != {W.shape}")
        W += step * dW
    for b, db in zip(net.biases, grad.d_biases):
        if b.shape != db.shape:
            raise ValueError(f"bias gradient shape {db.shape} != {b.shape}")
        b += step * db
    return net


# -- persistence: shape header + row-major float64 payload --------------------

_MAGIC = np.int64(0x4D4C5030)  # 'MLP0'


def save_mlp(net: Mlp, path: str) -> None:
    """Flat binary dump: magic, layer count, layer sizes, then W/b per layer."""
    with open(path, "wb") as fh:
        header = np.array([_MAGIC, len(net.layer_sizes)], dtype=np.int64)
        fh.write(header.tobytes())
        fh.write(np.asarray(net.layer_sizes, dtype=np.int64).tobytes())
        for W, b in zip(net.weights, net.biases):
            fh.write(np.ascontiguousarray(W, dtype=np.float64).tobytes())
            fh.write(np.ascontiguousarray(b, dtype=np.float64).tobytes())


def load_mlp(path: str) -> Mlp:
    """Inverse of save_mlp; validates the header and payload length."""
    with open(path, "rb") as fh:
        blob = fh.read()
    header = np.frombuffer(blob, dtype=np.int64, count=2)
    if header[0] != _MAGIC:
        raise ValueError(f"{path}: not an Mlp parameter file")
    n_layers = int(header[1])
    sizes = np.frombuffer(blob, dtype=np.int64, count=n_layers, offset=16)
    offset = 16 + 8 * n_layers
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        fan_in, fan_out = int(fan_in), int(fan_out)
        W = np.frombuffer(blob, dtype=np.float64, count=fan_in * fan_out,
                          offset=offset).reshape(fan_out, fan_in).copy()
        offset += 8 * fan_in * fan_out
        b = np.frombuffer(blob, dtype=np.float64, count=fan_out, offset=offset).copy()
        offset += 8 * fan_out
        weights.append(W)
        biases.append(b)
    if offset != len(blob):
        raise ValueError(f"{path}: trailing bytes ({len(blob) - offset})")
    return Mlp(tuple(int(n) for n in sizes), weights, biases)


# -- finite-difference verification -------------------------------------------

def fd_gradient(f, net: Mlp, h: float = 1e-5) -> GradientBundle:
    """Central finite differences of a scalar function of the parameters.

    f takes the net and returns a float; every parameter is perturbed in turn.
    Touches only forward evaluations, so it is independent of the backprop code.
    """
    dws, dbs = [], []
    for arrays, out in ((net.weights, dws), (net.biases, dbs)):
        for arr in arrays:
            g = np.zeros_like(arr)
            flat = arr.reshape(-1)
            gflat = g.reshape(-1)
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + h
                hi = f(net)
                flat[i] = orig - h
                lo = f(net)
                flat[i] = orig
                gflat[i] = (hi - lo) / (2.0 * h)
            out.append(g)
    return GradientBundle(dws, dbs)


def max_relative_error(analytic: GradientBundle, numeric: GradientBundle,
                       floor: float = 1e-4) -> float:
    """max over parameters of |a - n| / max(|a|, |n|, floor).

    The floor keeps finite-difference roundoff noise (~1e-10 absolute) from
    dominating the ratio where the true gradient is tiny.
    """
    worst = 0.0
    for a_arrs, n_arrs in ((analytic.d_weights, numeric.d_weights),
                           (analytic.d_biases, numeric.d_biases)):
        for a, n in zip(a_arrs, n_arrs):
            denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
            worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst


def gradient_check_suite(n_nets: int = 20, seed: int = 0,
                         h: float = 1e-5) -> list[dict]:
    """Finite-difference sweep over random networks of widths 4..64.

    For each net: backprop_value against d/dtheta V(x) and backprop_log_policy
    against d/dtheta log pi(a|x). Returns one record per check with the
    observed worst relative error.
    """
    rng = np.random.default_rng(seed)
    results = []
    for i in range(n_nets):
        n_in = int(rng.integers(2, 8))
        width = int(rng.integers(4, 65))
        depth = int(rng.integers(1, 3))
        hidden = (width,) * depth
        x = rng.normal(size=n_in)

        vnet = init_mlp((n_in, *hidden, 1), rng)
        analytic = backprop_value(vnet, x, upstream=1.0)
        numeric = fd_gradient(lambda net: forward_value(net, x), vnet, h=h)
        results.append({"net": i, "kind": "value", "sizes": vnet.layer_sizes,
                        "max_rel_err": max_relative_error(analytic, numeric)})

        n_act = int(rng.integers(2, 5))
        pnet = init_mlp((n_in, *hidden, n_act), rng)
        action = int(rng.integers(n_act))
        analytic = backprop_log_policy(pnet, x, action)
        numeric = fd_gradient(
            lambda net: float(np.log(forward_policy(net, x)[action])), pnet, h=h)
        results.append({"net": i, "kind": "log_policy", "sizes": pnet.layer_sizes,
                        "max_rel_err": max_relative_error(analytic, numeric)})
    return results
