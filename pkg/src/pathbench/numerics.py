"""Minimal dense numeric kernel the networks train on.

Everything runs on float64 numpy arrays: dense layers with hand-written
backward passes, masked losses, the Adam optimizer, a central-difference
gradient oracle, and a seeded RNG wrapper. No autodiff graph, no GPU.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ACTIVATIONS = ("relu", "sigmoid", "tanh", "linear")


class ShapeError(ValueError):
    """Raised when operand shapes do not conform."""


def _as_f64(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64)


# ---------------------------------------------------------------------------
# RNG
# ---------------------------------------------------------------------------


class Rng:
    """Deterministic random stream backed by numpy's PCG64 bit generator.

    PCG64 is a published, fully specified generator, so an identical seed
    yields an identical stream on every platform. All randomness in the
    package flows through instances of this class.
    """

    def __init__(self, seed: int):
        if seed < 0 or seed >= 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def uniform_int(self, lo: int, hi: int) -> int:
        """Uniform integer in the inclusive range [lo, hi]."""
        if hi < lo:
            raise ValueError(f"empty integer range [{lo}, {hi}]")
        dtype = np.uint64 if hi >= 2**63 else np.int64
        return int(self._gen.integers(lo, hi, endpoint=True, dtype=dtype))

    def uniform(self, lo: float = 0.0, hi: float = 1.0, size=None):
        out = self._gen.uniform(lo, hi, size=size)
        return float(out) if size is None else out

    def normal(self, size=None):
        out = self._gen.normal(size=size)
        return float(out) if size is None else out

    def child(self, key: int) -> "Rng":
        """Independent stream derived from (seed, key); deterministic."""
        derived = np.random.SeedSequence([self.seed, int(key)])
        rng = Rng.__new__(Rng)
        rng.seed = int(derived.generate_state(1, dtype=np.uint64)[0])
        rng._gen = np.random.Generator(np.random.PCG64(derived))
        return rng


def derive_seed(*coordinates: int) -> int:
    """Collapse integer coordinates into one 64-bit seed, deterministically."""
    ss = np.random.SeedSequence([int(c) for c in coordinates])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def glorot_uniform(rng: Rng, shape: tuple[int, ...], fan_in: int, fan_out: int) -> np.ndarray:
    """Scaled-uniform weight init in +-sqrt(6/(fan_in+fan_out))."""
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(np.float64)


# ---------------------------------------------------------------------------
# Activations
# ---------------------------------------------------------------------------


def act_forward(name: str, z: np.ndarray) -> np.ndarray:
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "sigmoid":
        return 1.0 / (1.0 + np.exp(-z))
    if name == "tanh":
        return np.tanh(z)
    if name == "linear":
        return z
    raise ValueError(f"unknown activation {name!r}; expected one of {ACTIVATIONS}")


def act_backward(name: str, z: np.ndarray, grad_out: np.ndarray) -> np.ndarray:
    """Gradient w.r.t. pre-activation z, given gradient at the output."""
    if name == "relu":
        return grad_out * (z > 0.0)
    if name == "sigmoid":
        s = 1.0 / (1.0 + np.exp(-z))
        return grad_out * s * (1.0 - s)
    if name == "tanh":
        t = np.tanh(z)
        return grad_out * (1.0 - t * t)
    if name == "linear":
        return grad_out
    raise ValueError(f"unknown activation {name!r}; expected one of {ACTIVATIONS}")


# ---------------------------------------------------------------------------
# Dense layer
# ---------------------------------------------------------------------------


@dataclass
class DenseCache:
    """Forward-pass residue needed by dense_backward."""

    x: np.ndarray
    z: np.ndarray
    weights: np.ndarray
    activation: str


def dense_forward(
    x: np.ndarray, weights: np.ndarray, bias: np.ndarray, activation: str = "linear"
) -> tuple[np.ndarray, DenseCache]:
    """out[b, o] = act(sum_i x[b, i] * weights[i, o] + bias[o])."""
    x, weights, bias = _as_f64(x), _as_f64(weights), _as_f64(bias)
    if x.ndim != 2 or weights.ndim != 2:
        raise ShapeError(f"dense_forward expects 2-d input/weights, got {x.shape} and {weights.shape}")
    if x.shape[1] != weights.shape[0]:
        raise ShapeError(f"input width {x.shape[1]} != weight rows {weights.shape[0]}")
    if bias.shape != (weights.shape[1],):
        raise ShapeError(f"bias shape {bias.shape} != ({weights.shape[1]},)")
    z = x @ weights + bias
    return act_forward(activation, z), DenseCache(x, z, weights, activation)


def dense_backward(
    cache: DenseCache, upstream_grad: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Exact gradients (grad_input, grad_weights, grad_bias) of dense_forward."""
    g = _as_f64(upstream_grad)
    if g.shape != cache.z.shape:
        raise ShapeError(f"upstream grad shape {g.shape} != output shape {cache.z.shape}")
    gz = act_backward(cache.activation, cache.z, g)
    grad_w = cache.x.T @ gz
    grad_b = gz.sum(axis=0)
    grad_x = gz @ cache.weights.T
    return grad_x, grad_w, grad_b


# ---------------------------------------------------------------------------
# Losses
# ---------------------------------------------------------------------------

BCE_EPS = 1e-12  # predictions clamped to [BCE_EPS, 1 - BCE_EPS] before the log


def loss(
    kind: str, prediction: np.ndarray, target: np.ndarray, mask: np.ndarray | None = None
) -> tuple[float, np.ndarray]:
    """Masked mean loss and its exact gradient w.r.t. the prediction.

    `mask` flags valid steps; it may have one fewer dimension than the
    prediction (per-step flags broadcast across the output width) or match
    it exactly. Padded steps contribute neither to the mean nor the gradient.
    """
    p, t = _as_f64(prediction), _as_f64(target)
    if p.shape != t.shape:
        raise ShapeError(f"prediction shape {p.shape} != target shape {t.shape}")
    if mask is None:
        m = np.ones_like(p)
    else:
        m = _as_f64(mask)
        if m.shape == p.shape[:-1]:
            m = np.broadcast_to(m[..., None], p.shape)
        elif m.shape != p.shape:
            raise ShapeError(f"mask shape {np.asarray(mask).shape} incompatible with {p.shape}")
        m = (m != 0.0).astype(np.float64)
    n = m.sum()
    if n == 0:
        raise ValueError("empty mask: no valid steps to average over")

    if kind == "mse":
        diff = (p - t) * m
        return float((diff * diff).sum() / n), (2.0 / n) * diff
    if kind == "bce":
        pc = np.clip(p, BCE_EPS, 1.0 - BCE_EPS)
        val = -(t * np.log(pc) + (1.0 - t) * np.log(1.0 - pc)) * m
        grad = ((pc - t) / (pc * (1.0 - pc))) * m / n
        return float(val.sum() / n), grad
    raise ValueError(f"unknown loss kind {kind!r}; expected 'mse' or 'bce'")


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------


@dataclass
class AdamState:
    """Per-parameter Adam moments plus hyperparameters."""

    m: np.ndarray
    v: np.ndarray
    step: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def for_param(cls, param: np.ndarray, lr: float = 1e-3) -> "AdamState":
        return cls(m=np.zeros_like(param), v=np.zeros_like(param), lr=lr)


def adam_step(param: np.ndarray, grad: np.ndarray, state: AdamState) -> np.ndarray:
    """One bias-corrected Adam update. Mutates `param` and `state` in place."""
    g = _as_f64(grad)
    if g.shape != param.shape:
        raise ShapeError(f"grad shape {g.shape} != param shape {param.shape}")
    if state.m.shape != param.shape or state.v.shape != param.shape:
        raise ShapeError("Adam state shape does not match parameter")
    if not np.all(np.isfinite(g)):
        raise ValueError("non-finite gradient passed to adam_step")
    state.step += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * g
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * g * g
    m_hat = state.m / (1.0 - state.beta1**state.step)
    v_hat = state.v / (1.0 - state.beta2**state.step)
    param -= state.lr * m_hat / (np.sqrt(v_hat) + state.epsilon)
    return param


# ---------------------------------------------------------------------------
# Finite-difference oracle
# ---------------------------------------------------------------------------


def finite_difference_grad(f, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central differences (f(x+h*e_i) - f(x-h*e_i)) / 2h, element by element.

    `f` must be a scalar-valued function that does not mutate its argument.
    Used as the independent oracle against every analytic backward pass.
    """
    x = _as_f64(x)
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = float(f(x))
        flat[i] = orig - h
        fm = float(f(x))
        flat[i] = orig
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise ValueError(f"non-finite function value while probing element {i}")
        gflat[i] = (fp - fm) / (2.0 * h)
    return grad


def relative_error(a: np.ndarray, b: np.ndarray, floor: float = 1e-8) -> float:
    """Max element-wise |a-b| / max(|a|, |b|, floor)."""
    a, b = _as_f64(a), _as_f64(b)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return float(np.max(np.abs(a - b) / denom))
