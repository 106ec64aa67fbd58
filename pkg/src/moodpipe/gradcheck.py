"""Finite-difference verification of the encoder's differentiable blocks.

Each check draws a random valid input from the seed, evaluates a scalar
loss (the outputs contracted with a seeded coefficient vector, so the loss
is never identically constant), backpropagates the analytic input gradient,
and compares it coordinate-wise against central differences with step 1e-5.
The returned figure is max |analytic - numeric| / max(1, |numeric|).
"""

from __future__ import annotations

from typing import Callable

import numpy as np
from scipy.special import erf

from .encoder import _masked_scores, _row_softmax, gelu

BLOCKS = ("softmax", "attention", "layernorm", "feedforward")
_STEP = 1e-5


def gradient_check(block: str, seed: int, step: float = _STEP) -> float:
    """Max relative error between analytic and central-difference gradients."""
    if block not in BLOCKS:
        raise ValueError(f"unknown block {block!r}, expected one of {BLOCKS}")
    rng = np.random.default_rng(seed)
    checker = _CHECKERS[block]
    return checker(rng, step)


def _max_relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    if not (np.isfinite(analytic).all() and np.isfinite(numeric).all()):
        raise FloatingPointError("non-finite gradient encountered")
    denom = np.maximum(1.0, np.abs(numeric))
    return float(np.max(np.abs(analytic - numeric) / denom))


def _numeric_gradient(
    loss: Callable[[np.ndarray], float], x: np.ndarray, step: float
) -> np.ndarray:
    grad = np.empty_like(x)
    flat = x.reshape(-1)
    out = grad.reshape(-1)
    for i in range(flat.size):
        saved = flat[i]
        flat[i] = saved + step
        hi = loss(x)
        flat[i] = saved - step
        lo = loss(x)
        flat[i] = saved
        if not (np.isfinite(hi) and np.isfinite(lo)):
            raise FloatingPointError("non-finite loss during finite differencing")
        out[i] = (hi - lo) / (2.0 * step)
    return grad


def _check_softmax(rng: np.random.Generator, step: float) -> float:
    n = int(rng.integers(2, 9))
    x = rng.normal(size=n)
    c = rng.normal(size=n)

    def loss(v: np.ndarray) -> float:
        e = np.exp(v - v.max())
        return float((e / e.sum()) @ c)

    e = np.exp(x - x.max())
    y = e / e.sum()
    analytic = y * (c - float(c @ y))
    return _max_relative_error(analytic, _numeric_gradient(loss, x, step))


def _check_layernorm(rng: np.random.Generator, step: float) -> float:
    n = int(rng.integers(3, 9))
    x = rng.normal(size=n)
    scale = rng.normal(1.0, 0.3, size=n)
    shift = rng.normal(size=n)
    c = rng.normal(size=n)
    eps = 1e-12

    def loss(v: np.ndarray) -> float:
        mean = v.mean()
        var = np.mean((v - mean) ** 2)
        return float((scale * (v - mean) / np.sqrt(var + eps) + shift) @ c)

    mean = x.mean()
    var = np.mean((x - mean) ** 2)
    inv = 1.0 / np.sqrt(var + eps)
    x_hat = (x - mean) * inv
    g_hat = c * scale
    analytic = inv * (g_hat - g_hat.mean() - x_hat * np.mean(g_hat * x_hat))
    return _max_relative_error(analytic, _numeric_gradient(loss, x, step))


def _check_feedforward(rng: np.random.Generator, step: float) -> float:
    n, d, f = 3, 5, 7
    x = rng.normal(size=(n, d))
    w_in = rng.normal(size=(d, f))
    b_in = rng.normal(size=f)
    w_out = rng.normal(size=(f, d))
    b_out = rng.normal(size=d)
    c = rng.normal(size=(n, d))

    def loss(v: np.ndarray) -> float:
        return float(np.sum((gelu(v @ w_in + b_in) @ w_out + b_out) * c))

    z = x @ w_in + b_in
    # d/dz gelu(z) = Phi(z) + z * phi(z)
    cdf = 0.5 * (1.0 + erf(z / np.sqrt(2.0)))
    pdf = np.exp(-0.5 * z**2) / np.sqrt(2.0 * np.pi)
    analytic = ((c @ w_out.T) * (cdf + z * pdf)) @ w_in.T
    return _max_relative_error(analytic, _numeric_gradient(loss, x, step))


def _attention_backward(
    q: np.ndarray,
    k: np.ndarray,
    v: np.ndarray,
    mask: np.ndarray,
    c: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Analytic gradients of sum(c * attention(Q, K, V, mask)) wrt Q, K, V."""
    weights = _row_softmax(_masked_scores(q, k, mask))
    g_weights = c @ v.T
    # Softmax rows: dS = W * (dW - rowsum(dW * W)); masked columns have W = 0.
    g_scores = weights * (g_weights - np.sum(g_weights * weights, axis=1, keepdims=True))
    scale = 1.0 / np.sqrt(k.shape[1])
    return g_scores @ k * scale, g_scores.T @ q * scale, weights.T @ c


def _check_attention(rng: np.random.Generator, step: float) -> float:
    n, d_k, d_v = 3, 4, 3
    q = rng.normal(size=(n, d_k))
    k = rng.normal(size=(n, d_k))
    v = rng.normal(size=(n, d_v))
    mask = (rng.random(n) < 0.8).astype(int)
    mask[int(rng.integers(0, n))] = 1  # keep at least one key unmasked
    c = rng.normal(size=(n, d_v))

    def make_loss(which: str):
        def loss(value: np.ndarray) -> float:
            args = {"q": q, "k": k, "v": v}
            args[which] = value
            weights = _row_softmax(_masked_scores(args["q"], args["k"], mask))
            return float(np.sum((weights @ args["v"]) * c))

        return loss

    g_q, g_k, g_v = _attention_backward(q, k, v, mask, c)
    errors = [
        _max_relative_error(g_q, _numeric_gradient(make_loss("q"), q.copy(), step)),
        _max_relative_error(g_k, _numeric_gradient(make_loss("k"), k.copy(), step)),
        _max_relative_error(g_v, _numeric_gradient(make_loss("v"), v.copy(), step)),
    ]
    return max(errors)


_CHECKERS = {
    "softmax": _check_softmax,
    "attention": _check_attention,
    "layernorm": _check_layernorm,
    "feedforward": _check_feedforward,
}
