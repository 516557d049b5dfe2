"""Newton iteration over the output weights for problems with a pointwise nonlinearity.

The interior equation is ``L u + n(u) = f`` with ``L`` linear (already in the
operator spec) and ``n`` the problem's :class:`NonlinearTerm` function.  At an
iterate ``u_k = Phi alpha_k`` the interior rows become

    (L Phi + diag(n'(u_k)) Phi) alpha = f - n(u_k) + n'(u_k) u_k

and the weighted boundary rows are unchanged.  Every step is one min-norm
least-squares solve.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .assembly import LinearSystem, Solution, min_norm_lstsq
from .collocation import CollocationSet, assemble_problem
from .errors import DivergenceError, InvalidArgument
from .features import FeatureNetwork, eval_features
from .problems import PdeProblem


@dataclass(frozen=True)
class NewtonConfig:
    max_iters: int = 10
    abs_tol: float = 1e-12
    damping: float = 1.0

    def __post_init__(self):
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise InvalidArgument(f"max_iters must be a positive integer, got {self.max_iters!r}")
        if not 0.0 < self.damping <= 1.0:
            raise InvalidArgument(f"damping must lie in (0, 1], got {self.damping!r}")
        if not self.abs_tol >= 0.0:
            raise InvalidArgument(f"abs_tol must be non-negative, got {self.abs_tol!r}")


@dataclass
class NewtonTrace:
    residual_norms: list[float] = field(default_factory=list)
    step_norms: list[float] = field(default_factory=list)
    converged: bool = False

    @property
    def iterations(self) -> int:
        return len(self.step_norms)

    def rows(self):
        return [(i + 1, r, s) for i, (r, s) in enumerate(zip(self.residual_norms, self.step_norms))]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iter", "residual_norm", "step_norm"])
            for it, r, s in self.rows():
                w.writerow([it, f"{r:.17g}", f"{s:.17g}"])


def _interior_rows(system: LinearSystem) -> slice:
    # interior equations are assembled first and carry weight 1
    label, rows, weight = system.block_index[0]
    return rows


def newton_solve(problem: PdeProblem, nets: Mapping[str, FeatureNetwork], colloc: CollocationSet,
                 config: NewtonConfig | None = None, derivative: str = "analytic",
                 fd_steps=None) -> tuple[Solution, NewtonTrace]:
    """Newton iteration from ``alpha = 0``; returns the last iterate and its trace.

    Stops when ``|d alpha| / (1 + |alpha|) <= abs_tol``, when the linearization
    remainder of the new iterate is exactly zero (the nonlinearity is affine
    there, so the iterate already solves the nonlinear system), or after
    ``max_iters`` solves.
    """
    config = config or NewtonConfig()
    term = problem.nonlinear
    if term is None:
        raise InvalidArgument(f"problem {problem.id} has no nonlinear term")
    if len(nets) != 1:
        raise InvalidArgument("newton_solve supports a single field")
    (name, net), = nets.items()

    base = assemble_problem(nets, colloc, derivative, fd_steps)
    rows = _interior_rows(base)
    lin_rows = base.matrix[rows]
    f = base.rhs[rows]
    phi = eval_features(net, colloc.interior.points)

    matrix = base.matrix.copy()
    rhs = base.rhs.copy()
    alpha = np.zeros(base.shape[1])
    u = phi @ alpha
    trace = NewtonTrace()
    for _ in range(config.max_iters):
        slope = term.deriv(u)
        matrix[rows] = lin_rows + slope[:, None] * phi
        rhs[rows] = f - term.func(u) + slope * u
        candidate = min_norm_lstsq(matrix, rhs)
        new_alpha = alpha + config.damping * (candidate - alpha) if config.damping != 1.0 else candidate
        if not np.all(np.isfinite(new_alpha)):
            raise DivergenceError("Newton iterate became non-finite", trace)
        step = float(np.linalg.norm(new_alpha - alpha))
        u_new = phi @ new_alpha
        remainder = term.func(u_new) - term.func(u) - slope * (u_new - u)
        alpha, u = new_alpha, u_new

        # residual of the nonlinear system at the new iterate
        residual = base.matrix @ alpha - base.rhs
        residual[rows] += term.func(u)
        trace.residual_norms.append(float(np.linalg.norm(residual)))
        trace.step_norms.append(step)
        if not np.isfinite(trace.residual_norms[-1]):
            raise DivergenceError("Newton residual became non-finite", trace)
        if step / (1.0 + float(np.linalg.norm(alpha))) <= config.abs_tol or not np.any(remainder):
            trace.converged = True
            break
    return Solution(alpha, {name: net}, trace.residual_norms[-1]), trace
