"""Randomized single-hidden-layer feature networks and their exact derivatives.

A network maps ``x in R^k`` to ``N`` features ``phi_i(x) = rho(w_i . x + b_i)``
with hidden weights and biases drawn uniformly from ``[-omega, omega]``.
Partial derivatives are again networks of the same shape:

    d^m phi_i / dx^m = (prod_j w_ij^{m_j}) * rho^{(|m|)}(w_i . x + b_i)

so derivative feature matrices cost one activation evaluation plus a column
scaling.  Finite-difference stencils are provided alongside as the
comparison pipeline.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import expit

from .errors import InvalidArgument, UnsupportedOrder

MAX_ORDER = 4


class Activation(str, enum.Enum):
    SINE = "sine"
    SIGMOID = "sigmoid"
    SWISH = "swish"
    TANH = "tanh"


def _as_activation(kind) -> Activation:
    try:
        return Activation(kind)
    except ValueError:
        raise InvalidArgument(f"unknown activation {kind!r}") from None


def _sigmoid_derivative(order: int, s: np.ndarray) -> np.ndarray:
    # polynomials in s = sigmoid(z)
    if order == 0:
        return s
    ds = s * (1.0 - s)
    if order == 1:
        return ds
    if order == 2:
        return ds * (1.0 - 2.0 * s)
    if order == 3:
        return ds * (1.0 - 6.0 * s + 6.0 * s * s)
    return ds * (1.0 - 2.0 * s) * (1.0 - 12.0 * s + 12.0 * s * s)


def _tanh_derivative(order: int, t: np.ndarray) -> np.ndarray:
    # polynomials in t = tanh(z)
    if order == 0:
        return t
    sech2 = 1.0 - t * t
    if order == 1:
        return sech2
    if order == 2:
        return -2.0 * t * sech2
    if order == 3:
        return sech2 * (6.0 * t * t - 2.0)
    return 8.0 * t * sech2 * (2.0 - 3.0 * t * t)


def activation_derivative(kind, order: int, z):
    """Closed-form ``order``-th derivative of the activation at ``z``.

    ``z`` may be a scalar or an array; the result has the same shape.
    """
    kind = _as_activation(kind)
    if not isinstance(order, (int, np.integer)) or not 0 <= order <= MAX_ORDER:
        raise UnsupportedOrder(f"derivative order {order!r} outside 0..{MAX_ORDER}")
    z = np.asarray(z, dtype=float)
    if kind is Activation.SINE:
        # sin, cos, -sin, -cos, sin, ...
        r = order % 4
        out = np.sin(z) if r % 2 == 0 else np.cos(z)
        if r >= 2:
            out = -out
    elif kind is Activation.SIGMOID:
        out = _sigmoid_derivative(order, expit(z))
    elif kind is Activation.TANH:
        out = _tanh_derivative(order, np.tanh(z))
    else:
        # swish(z) = z * sigmoid(z); Leibniz rule gives z s^(n) + n s^(n-1)
        s = expit(z)
        out = z * _sigmoid_derivative(order, s)
        if order > 0:
            out = out + order * _sigmoid_derivative(order - 1, s)
    return out if out.ndim else float(out)


@dataclass(frozen=True, eq=False)
class FeatureNetwork:
    """Fixed random hidden layer.  Arrays are read-only after construction."""

    weights: np.ndarray  # (N, k)
    biases: np.ndarray  # (N,)
    omega: float
    activation: Activation
    seed: int | None = None

    def __post_init__(self):
        w = np.array(self.weights, dtype=float, copy=True)
        b = np.array(self.biases, dtype=float, copy=True)
        if w.ndim != 2 or b.ndim != 1 or w.shape[0] != b.shape[0]:
            raise InvalidArgument(
                f"weights {w.shape} and biases {b.shape} do not describe one layer"
            )
        w.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "biases", b)
        object.__setattr__(self, "activation", _as_activation(self.activation))

    @property
    def input_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def width(self) -> int:
        return self.weights.shape[0]

    def preactivation(self, points) -> np.ndarray:
        x = _check_points(self, points)
        return x @ self.weights.T + self.biases


def init_network(input_dim: int, width: int, omega: float, activation="sine",
                 seed: int = 0) -> FeatureNetwork:
    """Draw a network with ``U(-omega, omega)`` weights and biases.

    Draw order from a PCG64 generator seeded with ``seed``: all ``width x
    input_dim`` weights in row-major order, then the ``width`` biases.
    """
    if int(input_dim) != input_dim or input_dim < 1:
        raise InvalidArgument(f"input_dim must be a positive integer, got {input_dim!r}")
    if int(width) != width or width < 1:
        raise InvalidArgument(f"width must be a positive integer, got {width!r}")
    if not (np.isfinite(omega) and omega > 0):
        raise InvalidArgument(f"omega must be positive, got {omega!r}")
    rng = np.random.Generator(np.random.PCG64(seed))
    w = rng.uniform(-omega, omega, size=(int(width), int(input_dim)))
    b = rng.uniform(-omega, omega, size=int(width))
    return FeatureNetwork(w, b, float(omega), _as_activation(activation), int(seed))


def _check_points(net: FeatureNetwork, points) -> np.ndarray:
    x = np.asarray(points, dtype=float)
    if x.ndim == 1 and net.input_dim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[1] != net.input_dim:
        raise InvalidArgument(
            f"points of shape {x.shape} do not match input_dim {net.input_dim}"
        )
    return x


def check_multi_index(m, input_dim: int) -> tuple[int, ...]:
    m = tuple(int(v) for v in m)
    if len(m) != input_dim:
        raise InvalidArgument(f"multi-index {m} has length {len(m)}, expected {input_dim}")
    if any(v < 0 for v in m):
        raise InvalidArgument(f"multi-index {m} has negative entries")
    if sum(m) > MAX_ORDER:
        raise UnsupportedOrder(f"total order {sum(m)} of {m} exceeds {MAX_ORDER}")
    return m


def eval_features(net: FeatureNetwork, points) -> np.ndarray:
    """Feature matrix ``Phi[p, i] = rho(w_i . x_p + b_i)`` of shape (P, N)."""
    return activation_derivative(net.activation, 0, net.preactivation(points))


def weight_monomial(net: FeatureNetwork, m) -> np.ndarray:
    """Per-feature factor ``prod_j w_ij^{m_j}``."""
    m = check_multi_index(m, net.input_dim)
    out = np.ones(net.width)
    for j, mj in enumerate(m):
        if mj:
            out = out * net.weights[:, j] ** mj
    return out


def eval_derivative_features(net: FeatureNetwork, m, points) -> np.ndarray:
    """Exact ``d^m phi_i(x_p)`` for every point and feature."""
    m = check_multi_index(m, net.input_dim)
    order = sum(m)
    if order == 0:
        return eval_features(net, points)
    z = net.preactivation(points)
    return activation_derivative(net.activation, order, z) * weight_monomial(net, m)


# --------------------------------------------------------------------------
# finite differences

DEFAULT_STEPS = {
    "central1": 1.0e-10,
    "central2": 1.0e-5,
    "mixed2": 1.0e-5,
    "fourth": 3.0e-3,
    "mixed22": 3.0e-3,
}


@dataclass(frozen=True)
class FdScheme:
    kind: str
    step: float | None = None

    def __post_init__(self):
        if self.kind not in DEFAULT_STEPS:
            raise InvalidArgument(f"unknown finite-difference scheme {self.kind!r}")
        if self.step is None:
            object.__setattr__(self, "step", DEFAULT_STEPS[self.kind])
        if not self.step > 0:
            raise InvalidArgument(f"step must be positive, got {self.step!r}")


def _shift(x: np.ndarray, offsets: dict[int, float]) -> np.ndarray:
    y = x.copy()
    for axis, d in offsets.items():
        y[:, axis] += d
    return y


def fd_derivative(field: Callable[[np.ndarray], np.ndarray], scheme: FdScheme,
                  points, axes) -> np.ndarray:
    """Apply one central-difference stencil to a point-evaluable field.

    ``field`` maps a (P, k) array to an array whose leading axis is P (a
    vector, or a (P, N) feature matrix).  ``axes`` is a single axis for
    ``central1``, ``central2`` and ``fourth``, and a pair of distinct axes for
    ``mixed2`` and ``mixed22``.
    """
    x = np.atleast_2d(np.asarray(points, dtype=float))
    k = x.shape[1]
    h = scheme.step
    ax = (axes,) if np.isscalar(axes) else tuple(axes)
    ax = tuple(int(a) for a in ax)
    want = 2 if scheme.kind in ("mixed2", "mixed22") else 1
    if len(ax) != want or any(not 0 <= a < k for a in ax) or len(set(ax)) != want:
        raise InvalidArgument(f"axes {axes!r} invalid for {scheme.kind} in dimension {k}")

    if scheme.kind == "central1":
        (i,) = ax
        return (field(_shift(x, {i: h})) - field(_shift(x, {i: -h}))) / (2.0 * h)
    if scheme.kind == "central2":
        (i,) = ax
        return (field(_shift(x, {i: h})) - 2.0 * field(x) + field(_shift(x, {i: -h}))) / h**2
    if scheme.kind == "fourth":
        (i,) = ax
        outer = field(_shift(x, {i: 2 * h})) + field(_shift(x, {i: -2 * h}))
        inner = -4.0 * (field(_shift(x, {i: h})) + field(_shift(x, {i: -h})))
        return (outer + inner + 6.0 * field(x)) / h**4
    i, j = ax
    if scheme.kind == "mixed2":
        u1 = field(_shift(x, {i: h, j: h})) - field(_shift(x, {i: h, j: -h}))
        u2 = field(_shift(x, {i: -h, j: h})) - field(_shift(x, {i: -h, j: -h}))
        return (u1 - u2) / (4.0 * h**2)
    # mixed22: nine-point d^4 / dx_i^2 dx_j^2
    u1 = field(_shift(x, {i: h, j: h})) + field(_shift(x, {i: -h, j: -h}))
    u2 = -2.0 * (field(_shift(x, {i: h})) + field(_shift(x, {i: -h})))
    u3 = field(_shift(x, {i: -h, j: h})) + field(_shift(x, {i: h, j: -h}))
    u4 = -2.0 * (field(_shift(x, {j: h})) + field(_shift(x, {j: -h})))
    return (u1 + u2 + u3 + u4 + 4.0 * field(x)) / h**4


def scheme_for(m: Sequence[int]) -> tuple[str, tuple[int, ...]] | None:
    """Stencil kind and axes that approximate ``d^m``; None for ``m = 0``."""
    nz = [(j, v) for j, v in enumerate(m) if v]
    if not nz:
        return None
    if len(nz) == 1:
        j, v = nz[0]
        kind = {1: "central1", 2: "central2", 4: "fourth"}.get(v)
        if kind:
            return kind, (j,)
    elif len(nz) == 2 and nz[0][1] == nz[1][1] and nz[0][1] in (1, 2):
        kind = "mixed2" if nz[0][1] == 1 else "mixed22"
        return kind, (nz[0][0], nz[1][0])
    raise UnsupportedOrder(f"no finite-difference stencil for multi-index {tuple(m)}")


def fd_derivative_features(net: FeatureNetwork, m, points,
                           steps: dict[str, float] | None = None) -> np.ndarray:
    """Finite-difference counterpart of :func:`eval_derivative_features`."""
    m = check_multi_index(m, net.input_dim)
    x = _check_points(net, points)
    found = scheme_for(m)
    if found is None:
        return eval_features(net, x)
    kind, axes = found
    step = (steps or {}).get(kind)
    return fd_derivative(lambda y: eval_features(net, y), FdScheme(kind, step), x,
                         axes if len(axes) > 1 else axes[0])


def multi_indices(input_dim: int, max_order: int = MAX_ORDER):
    """All multi-indices of length ``input_dim`` with total order <= max_order."""
    if input_dim == 1:
        for v in range(max_order + 1):
            yield (v,)
        return
    for first in range(max_order + 1):
        for rest in multi_indices(input_dim - 1, max_order - first):
            yield (first,) + rest
