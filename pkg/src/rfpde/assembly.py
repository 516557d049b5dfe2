"""Collocation linear systems over feature networks, and their solution.

Each scalar equation is an :class:`OperatorSpec`: a sum of terms
``coeff * d^m (field)``.  Evaluated at P collocation points it yields a
P x C row block whose columns are the concatenated features of every field
network (in the order the networks are given).  Blocks are stacked with
their penalty weight applied to both rows and right-hand side, then solved in
the minimum-norm least-squares sense.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, NamedTuple, Sequence

import numpy as np
import scipy.linalg

from .errors import DegenerateReference, InvalidArgument
from .features import (
    FeatureNetwork,
    activation_derivative,
    check_multi_index,
    fd_derivative_features,
    weight_monomial,
)

RCOND = 1e-14

# coefficient callables receive (points, normals) and return one value per point
Coefficient = float | Callable[[np.ndarray, np.ndarray | None], np.ndarray]


@dataclass(frozen=True)
class Term:
    coeff: Coefficient
    multi_index: tuple[int, ...]
    field: str = "u"
    uses_normals: bool = False


@dataclass(frozen=True)
class OperatorSpec:
    terms: tuple[Term, ...]

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if not self.terms:
            raise InvalidArgument("an operator needs at least one term")

    @property
    def needs_normals(self) -> bool:
        return any(t.uses_normals for t in self.terms)

    @property
    def fields(self) -> set[str]:
        return {t.field for t in self.terms}


def identity(field: str = "u", k: int = 2) -> OperatorSpec:
    return OperatorSpec((Term(1.0, (0,) * k, field),))


def laplacian(k: int, coeff: float = 1.0, field: str = "u") -> OperatorSpec:
    return OperatorSpec(tuple(
        Term(coeff, tuple(2 if j == i else 0 for j in range(k)), field) for i in range(k)
    ))


class Block(NamedTuple):
    matrix: np.ndarray
    rhs: np.ndarray
    weight: float = 1.0
    label: str = ""


@dataclass(frozen=True, eq=False)
class LinearSystem:
    matrix: np.ndarray
    rhs: np.ndarray
    block_index: list[tuple[str, slice, float]] = field(default_factory=list)

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    def dump(self, path) -> None:
        """Write ``R C`` header, block index lines, then rows ``a_1 .. a_C b``."""
        r, c = self.matrix.shape
        with open(path, "w") as fh:
            fh.write(f"# R={r} C={c}\n")
            for label, rows, w in self.block_index:
                fh.write(f"# block {label or '-'} rows={rows.start}:{rows.stop} weight={w!r}\n")
            np.savetxt(fh, np.column_stack([self.matrix, self.rhs]), delimiter=",", fmt="%.17g")


@dataclass(frozen=True, eq=False)
class Solution:
    alpha: np.ndarray
    networks: dict[str, FeatureNetwork]
    residual_norm: float = float("nan")

    def __post_init__(self):
        total = sum(n.width for n in self.networks.values())
        if self.networks and len(self.alpha) != total:
            raise InvalidArgument(f"alpha has length {len(self.alpha)}, networks have {total} features")

    def columns(self, field: str) -> slice:
        start = 0
        for name, net in self.networks.items():
            if name == field:
                return slice(start, start + net.width)
            start += net.width
        raise InvalidArgument(f"unknown field {field!r}; solution has {list(self.networks)}")


def _field_slices(nets: Mapping[str, FeatureNetwork]) -> dict[str, slice]:
    out, start = {}, 0
    for name, net in nets.items():
        out[name] = slice(start, start + net.width)
        start += net.width
    return out


def _coeff_values(term: Term, points, normals) -> float | np.ndarray:
    c = term.coeff
    if callable(c):
        return np.asarray(c(points, normals), dtype=float)[:, None]
    return float(c)


def assemble_block(nets: Mapping[str, FeatureNetwork], spec: OperatorSpec, points,
                   normals=None, data=None, derivative: str = "analytic",
                   fd_steps: dict[str, float] | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Row block and right-hand side of one equation at ``points``.

    ``data`` is either None (zero right-hand side) or a callable of
    ``(points, normals)``.  ``derivative`` selects exact derivative networks
    (``"analytic"``) or finite-difference stencils (``"fd"``).
    """
    x = np.asarray(points, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if spec.needs_normals and normals is None:
        raise InvalidArgument("operator references normals but none were given")
    missing = spec.fields - set(nets)
    if missing:
        raise InvalidArgument(f"operator uses fields {sorted(missing)} without networks")
    slices = _field_slices(nets)
    block = np.zeros((len(x), sum(net.width for net in nets.values())))

    if derivative == "analytic":
        # one activation evaluation per (field, order), shared by all its terms
        groups: dict[tuple[str, int], list[Term]] = {}
        for t in spec.terms:
            m = check_multi_index(t.multi_index, nets[t.field].input_dim)
            groups.setdefault((t.field, sum(m)), []).append(t)
        for (name, order), terms in sorted(groups.items(), key=lambda kv: (kv[0][0], kv[0][1])):
            net = nets[name]
            act = activation_derivative(net.activation, order, net.preactivation(x))
            const = np.zeros(net.width)
            varying = None
            for t in terms:
                c = _coeff_values(t, x, normals)
                scale = weight_monomial(net, t.multi_index)
                if np.ndim(c) == 0:
                    const = const + c * scale
                else:
                    part = c * scale
                    varying = part if varying is None else varying + part
            factor = const if varying is None else varying + const
            block[:, slices[name]] += act * factor
    elif derivative == "fd":
        for t in spec.terms:
            net = nets[t.field]
            d = fd_derivative_features(net, t.multi_index, x, fd_steps)
            block[:, slices[t.field]] += _coeff_values(t, x, normals) * d
    else:
        raise InvalidArgument(f"derivative method must be 'analytic' or 'fd', got {derivative!r}")

    rhs = np.zeros(len(x)) if data is None else np.asarray(data(x, normals), dtype=float).reshape(len(x))
    return block, rhs


def assemble_system(blocks: Sequence[Block | tuple]) -> LinearSystem:
    """Stack blocks, multiplying each block's rows and rhs by its weight."""
    blocks = [b if isinstance(b, Block) else Block(*b) for b in blocks]
    if not blocks:
        raise InvalidArgument("no blocks to assemble")
    width = blocks[0].matrix.shape[1]
    index, start = [], 0
    for b in blocks:
        if b.matrix.ndim != 2 or b.matrix.shape[1] != width:
            raise InvalidArgument(
                f"block {b.label!r} has shape {b.matrix.shape}, expected {width} columns"
            )
        if b.rhs.shape != (b.matrix.shape[0],):
            raise InvalidArgument(f"block {b.label!r} rhs has shape {b.rhs.shape}")
        index.append((b.label, slice(start, start + b.matrix.shape[0]), float(b.weight)))
        start += b.matrix.shape[0]
    matrix = np.empty((start, width))
    rhs = np.empty(start)
    for b, (_, rows, w) in zip(blocks, index):
        if w == 1.0:
            matrix[rows], rhs[rows] = b.matrix, b.rhs
        else:
            matrix[rows], rhs[rows] = w * b.matrix, w * b.rhs
    return LinearSystem(matrix, rhs, index)


def min_norm_lstsq(matrix: np.ndarray, rhs: np.ndarray, rcond: float = RCOND) -> np.ndarray:
    """Pseudo-inverse solution: singular values below ``rcond * s_max`` are dropped."""
    a = np.asarray(matrix, dtype=float)
    b = np.asarray(rhs, dtype=float)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise InvalidArgument(f"matrix must be 2-d and non-empty, got shape {a.shape}")
    if not (np.isfinite(a).all() and np.isfinite(b).all()):
        raise InvalidArgument("linear system contains non-finite entries")
    # gelsd: SVD-based, returns the minimum-norm solution
    x, *_ = scipy.linalg.lstsq(a, b, cond=rcond, lapack_driver="gelsd", check_finite=False)
    return x


def solve_min_norm_lsq(system: LinearSystem, networks: Mapping[str, FeatureNetwork] | None = None,
                       rcond: float = RCOND) -> Solution:
    alpha = min_norm_lstsq(system.matrix, system.rhs, rcond)
    residual = float(np.linalg.norm(system.matrix @ alpha - system.rhs))
    return Solution(alpha, dict(networks or {}), residual)


def evaluate_solution(solution: Solution, field: str, points, m=None) -> np.ndarray:
    """``sum_i alpha_i d^m phi_i(x)`` over the field's own columns."""
    cols = solution.columns(field)
    net = solution.networks[field]
    x = np.asarray(points, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    m = (0,) * net.input_dim if m is None else check_multi_index(m, net.input_dim)
    act = activation_derivative(net.activation, sum(m), net.preactivation(x))
    return act @ (weight_monomial(net, m) * solution.alpha[cols])


def l2_relative_error(predicted, truth) -> float:
    predicted = np.asarray(predicted, dtype=float).ravel()
    truth = np.asarray(truth, dtype=float).ravel()
    if predicted.shape != truth.shape:
        raise InvalidArgument(f"length mismatch {predicted.shape} vs {truth.shape}")
    ref = np.linalg.norm(truth)
    if ref == 0.0:
        raise DegenerateReference("reference field has zero L2 norm")
    return float(np.linalg.norm(predicted - truth) / ref)
