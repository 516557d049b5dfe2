"""Benchmark PDE problems with closed-form solutions.

A :class:`PdeProblem` lists point groups (interior and boundary components),
each carrying one or more equations, plus the hyperparameter names that size
and weight every group.  Problem ids:

``poisson1d_sweep``  -u'' = f on [0, 1], u = sin(2 pi x) + sin(kappa pi x)
``koch_poisson``     -Laplace u = f on a level-5 Koch snowflake
``wave1d``           u_tt - 100 u_xx = 0 on (0, 1) x (0, 1) in (x, t)
``plate``            Kirchhoff-Love plate, simply supported, sinusoidal load
``highdim_poisson``  -Laplace u = f on [-1, 1]^d
``lame``             plane elasticity in a thick-walled cylinder (annulus)
``helmholtz_nl``     Laplace u - 100 u + 10 cos(u) = f on [0, 1]^2
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from . import geometry
from .assembly import OperatorSpec, Solution, Term, evaluate_solution, identity, l2_relative_error, laplacian
from .errors import InvalidArgument

PI = math.pi
EVAL_SEED = 1234
EVAL_SAMPLES = 10_000
GRID_PER_AXIS = 100
GRID_1D = 1001

PointFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Equation:
    spec: OperatorSpec
    data: Callable | None = None  # (points, normals) -> values
    label: str = ""


@dataclass(frozen=True)
class PointGroup:
    """Collocation points of one region, with the equations enforced there.

    ``count`` and ``weight`` name hyperparameters; interior groups carry no
    weight (implicitly 1).  ``subset`` is passed to boundary sampling.
    """

    label: str
    count: str
    equations: tuple[Equation, ...]
    weight: str | None = None
    interior: bool = False
    subset: object = None


@dataclass(frozen=True)
class NetworkSlot:
    field: str
    width: str
    omega: str


@dataclass(frozen=True)
class NonlinearTerm:
    """Pointwise nonlinearity ``func(u)`` added to the interior operator.

    ``linear`` records the part of the reaction term that already sits in the
    operator spec, so that ``g(u) = linear * u + func(u)`` is the whole
    zeroth-order term.  Newton linearizes ``func`` only.
    """

    func: Callable[[np.ndarray], np.ndarray]
    deriv: Callable[[np.ndarray], np.ndarray]
    linear: float = 0.0

    def g(self, u):
        return self.linear * u + self.func(u)

    def g_prime(self, u):
        return self.linear + self.deriv(u)


@dataclass(frozen=True, eq=False)
class PdeProblem:
    id: str
    domain: geometry.Domain
    fields: tuple[str, ...]
    networks: tuple[NetworkSlot, ...]
    groups: tuple[PointGroup, ...]
    analytic: dict[str, PointFn]
    forcing: PointFn | None = None
    nonlinear: NonlinearTerm | None = None
    params: dict = field(default_factory=dict)
    eval_kind: str = "grid"  # "grid" or "samples"

    @property
    def dimension(self) -> int:
        return self.domain.dimension

    def hyperparameter_names(self) -> list[str]:
        names = []
        for slot in self.networks:
            names += [slot.width, slot.omega]
        for g in self.groups:
            if g.weight:
                names.append(g.weight)
        names += [g.count for g in self.groups]
        return list(dict.fromkeys(names))

    def evaluation_points(self, seed: int = EVAL_SEED) -> np.ndarray:
        if self.eval_kind == "samples":
            return geometry.sample_interior(self.domain, EVAL_SAMPLES, seed)
        per_axis = GRID_1D if self.dimension == 1 else GRID_PER_AXIS
        pts = geometry.evaluation_grid(self.domain, per_axis)
        return pts[geometry.contains(self.domain, pts)]

    def exact(self, field: str, points) -> np.ndarray:
        return self.analytic[field](np.atleast_2d(np.asarray(points, dtype=float)))


def fitness(problem: PdeProblem, solution: Solution, points=None, eval_seed: int = EVAL_SEED) -> float:
    """Relative L2 error, summed over fields (u + v for the Lame problem)."""
    pts = problem.evaluation_points(eval_seed) if points is None else points
    return sum(
        l2_relative_error(evaluate_solution(solution, f, pts), problem.exact(f, pts))
        for f in problem.fields
    )


def field_errors(problem: PdeProblem, solution: Solution, points) -> dict[str, float]:
    return {
        f: l2_relative_error(evaluate_solution(solution, f, points), problem.exact(f, points))
        for f in problem.fields
    }


# --------------------------------------------------------------------------
# helpers


def _mi(k: int, **orders) -> tuple[int, ...]:
    m = [0] * k
    for key, v in orders.items():
        m[int(key[1:]) - 1] = v
    return tuple(m)


def _zero(points, normals=None):
    return np.zeros(len(points))


def _dirichlet_from(u: PointFn):
    return lambda points, normals=None: u(points)


# --------------------------------------------------------------------------
# 1D multi-frequency Poisson


def _poisson1d(kappa: float = 10.0) -> PdeProblem:
    def u(x):
        return np.sin(2 * PI * x[:, 0]) + np.sin(kappa * PI * x[:, 0])

    def f(x):
        return (4 * PI**2 * np.sin(2 * PI * x[:, 0])
                + (kappa * PI) ** 2 * np.sin(kappa * PI * x[:, 0]))

    return PdeProblem(
        id="poisson1d_sweep",
        domain=geometry.Box((0.0,), (1.0,)),
        fields=("u",),
        networks=(NetworkSlot("u", "N", "omega"),),
        groups=(
            PointGroup("interior", "N1", (Equation(laplacian(1, -1.0), lambda x, n=None: f(x)),),
                       interior=True),
            PointGroup("dirichlet", "N2", (Equation(identity("u", 1), _dirichlet_from(u)),),
                       weight="lambda"),
        ),
        analytic={"u": u},
        forcing=f,
        params={"kappa": kappa},
    )


# --------------------------------------------------------------------------
# Koch snowflake Poisson


def _koch_poisson(gamma: float = 15 * PI, level: int = 5) -> PdeProblem:
    def u(x):
        return np.sin(gamma * x[:, 0]) * np.sin(gamma * x[:, 1])

    def f(x):
        return 2 * gamma**2 * np.sin(gamma * x[:, 0]) * np.sin(gamma * x[:, 1])

    return PdeProblem(
        id="koch_poisson",
        domain=geometry.Koch(level),
        fields=("u",),
        networks=(NetworkSlot("u", "N", "omega"),),
        groups=(
            PointGroup("interior", "N1", (Equation(laplacian(2, -1.0), lambda x, n=None: f(x)),),
                       interior=True),
            PointGroup("dirichlet", "N2", (Equation(identity(), _dirichlet_from(u)),),
                       weight="lambda"),
        ),
        analytic={"u": u},
        forcing=f,
        params={"gamma": gamma, "level": level},
        eval_kind="samples",
    )


# --------------------------------------------------------------------------
# 1D wave equation in space-time


def _wave1d(speed2: float = 100.0) -> PdeProblem:
    c = math.sqrt(speed2)

    def u(x):
        s, t = x[:, 0], x[:, 1]
        return np.sin(PI * s) * np.cos(c * PI * t) + np.sin(2 * PI * s) * np.cos(2 * c * PI * t)

    def dirichlet(x, normals=None):
        # u(0, t) = u(1, t) = 0 and u(x, 0) = sin(pi x) + sin(2 pi x)
        s, t = x[:, 0], x[:, 1]
        initial = np.sin(PI * s) + np.sin(2 * PI * s)
        return np.where((t == 0.0) & (s != 0.0) & (s != 1.0), initial, 0.0)

    interior = OperatorSpec((Term(1.0, (0, 2)), Term(-speed2, (2, 0))))
    return PdeProblem(
        id="wave1d",
        domain=geometry.Box((0.0, 0.0), (1.0, 1.0)),
        fields=("u",),
        networks=(NetworkSlot("u", "N", "omega"),),
        groups=(
            PointGroup("interior", "N1", (Equation(interior, _zero),), interior=True),
            PointGroup("dirichlet", "N2", (Equation(identity(), dirichlet),),
                       weight="lambda1", subset=("x1-", "x1+", "x2-")),
            PointGroup("neumann", "N3", (Equation(OperatorSpec((Term(1.0, (0, 1)),)), _zero),),
                       weight="lambda2", subset="x2-"),
        ),
        analytic={"u": u},
        params={"speed2": speed2},
    )


# --------------------------------------------------------------------------
# Kirchhoff-Love plate


@dataclass(frozen=True)
class PlateConstants:
    a: float = 2.0
    b: float = 3.0
    h: float = 0.01
    E: float = 2.6e2
    nu: float = 0.25
    q0: float = 1e-2

    @property
    def D(self) -> float:
        return self.E * self.h**3 / (12.0 * (1.0 - self.nu**2))

    @property
    def _k(self) -> float:
        return 1.0 / self.a**2 + 1.0 / self.b**2

    def load(self, x):
        return self.q0 * np.sin(PI * x[:, 0] / self.a) * np.sin(PI * x[:, 1] / self.b)

    def deflection(self, x):
        amp = self.q0 / (self.D * PI**4 * self._k**2)
        return amp * np.sin(PI * x[:, 0] / self.a) * np.sin(PI * x[:, 1] / self.b)

    def resultants(self, x) -> dict[str, np.ndarray]:
        """Closed-form moments and shear forces of the exact deflection.

        The twisting moment is ``q0 (1 - nu) / (pi^2 k^2 a b) cos cos`` with
        ``k = 1/a^2 + 1/b^2``, which is what ``D (1 - nu) u_xy`` gives.
        """
        a, b, nu, q0, k = self.a, self.b, self.nu, self.q0, self._k
        sx, sy = np.sin(PI * x[:, 0] / a), np.sin(PI * x[:, 1] / b)
        cx, cy = np.cos(PI * x[:, 0] / a), np.cos(PI * x[:, 1] / b)
        m = q0 / (PI**2 * k**2)
        return {
            "M_x1": m * (1 / a**2 + nu / b**2) * sx * sy,
            "M_x2": m * (nu / a**2 + 1 / b**2) * sx * sy,
            "M_x1x2": m * (1 - nu) / (a * b) * cx * cy,
            "Q_x1": q0 / (PI * a * k) * cx * sy,
            "Q_x2": q0 / (PI * b * k) * sx * cy,
        }


def _plate(constants: PlateConstants | None = None) -> PdeProblem:
    pc = constants or PlateConstants()
    D, nu = pc.D, pc.nu
    interior = OperatorSpec((
        Term(D, (4, 0)), Term(2.0 * D, (2, 2)), Term(D, (0, 4)),
    ))
    # normal bending moment; on x1-faces n = (+-1, 0), on x2-faces n = (0, +-1)
    moment = OperatorSpec((
        Term(lambda x, n: -D * (n[:, 0] ** 2 + nu * n[:, 1] ** 2), (2, 0), uses_normals=True),
        Term(lambda x, n: -D * (nu * n[:, 0] ** 2 + n[:, 1] ** 2), (0, 2), uses_normals=True),
    ))
    return PdeProblem(
        id="plate",
        domain=geometry.rectangle(pc.a, pc.b),
        fields=("u",),
        networks=(NetworkSlot("u", "N", "omega"),),
        groups=(
            PointGroup("interior", "N1", (Equation(interior, lambda x, n=None: pc.load(x)),),
                       interior=True),
            PointGroup("displacement", "N2", (Equation(identity(), _zero),), weight="lambda1"),
            PointGroup("moment", "N3", (Equation(moment, _zero),), weight="lambda2"),
        ),
        analytic={"u": pc.deflection},
        forcing=pc.load,
        params={"constants": pc},
    )


def plate_postprocess(solution: Solution, constants: PlateConstants, points) -> dict[str, np.ndarray]:
    """Bending/twisting moments and shear forces from a deflection solution."""
    D, nu = constants.D, constants.nu

    def d(m):
        return evaluate_solution(solution, "u", points, m)

    u11, u22, u12 = d((2, 0)), d((0, 2)), d((1, 1))
    return {
        "M_x1": -D * (u11 + nu * u22),
        "M_x2": -D * (u22 + nu * u11),
        "M_x1x2": D * (1.0 - nu) * u12,
        "Q_x1": -D * (d((3, 0)) + d((1, 2))),
        "Q_x2": -D * (d((2, 1)) + d((0, 3))),
    }


# --------------------------------------------------------------------------
# high-dimensional Poisson


def _highdim_poisson(d: int = 5) -> PdeProblem:
    if int(d) != d or d < 2:
        raise InvalidArgument(f"highdim_poisson needs integer d >= 2, got {d!r}")
    d = int(d)

    def u(x):
        s = x.mean(axis=1)
        return s**2 + np.sin(s)

    def f(x):
        return (np.sin(x.mean(axis=1)) - 2.0) / d

    return PdeProblem(
        id="highdim_poisson",
        domain=geometry.hypercube(d),
        fields=("u",),
        networks=(NetworkSlot("u", "N", "omega"),),
        groups=(
            PointGroup("interior", "N1", (Equation(laplacian(d, -1.0), lambda x, n=None: f(x)),),
                       interior=True),
            PointGroup("dirichlet", "N2", (Equation(identity("u", d), _dirichlet_from(u)),),
                       weight="lambda"),
        ),
        analytic={"u": u},
        forcing=f,
        params={"d": d},
        eval_kind="samples",
    )


# --------------------------------------------------------------------------
# Lame equations on an annulus


@dataclass(frozen=True)
class LameConstants:
    E: float = 2.1
    mu: float = 0.25
    q1: float = 30.0
    q2: float = 2.0
    a: float = 1.0
    b: float = 2.0

    @property
    def A(self) -> float:
        E, mu, a, b = self.E, self.mu, self.a, self.b
        return self.q1 * (1 - mu**2) * b**2 / (b**2 * (1 + mu) + a**2 * (1 - mu)) / E

    @property
    def B(self) -> float:
        return self.q2 * (1 + self.mu) * self.b**2 / self.a**2 / self.E

    def displacement(self, x) -> tuple[np.ndarray, np.ndarray]:
        x1, x2 = x[:, 0], x[:, 1]
        ratio = self.a**2 / (x1**2 + x2**2)
        u = self.A * (ratio - 1) * x1 + self.B * (1 - ratio) * x2
        v = self.A * (ratio - 1) * x2 - self.B * (1 - ratio) * x1
        return u, v


def lame_traction_rhs(point, normal, q1: float, q2: float):
    """Traction data ``(-q1 n1 + q2 n2, -q1 n2 - q2 n1)``; vectorized over rows."""
    n = np.asarray(normal, dtype=float)
    n1, n2 = n[..., 0], n[..., 1]
    return -q1 * n1 + q2 * n2, -q1 * n2 - q2 * n1


def _lame(constants: LameConstants | None = None) -> PdeProblem:
    lc = constants or LameConstants()
    mu = lc.mu
    K = lc.E / (1 - mu**2)
    half_minus, half_plus = (1 - mu) / 2, (1 + mu) / 2

    def nrm(j, scale):
        return lambda x, n: scale * n[:, j]

    F1 = OperatorSpec((
        Term(K, (2, 0), "u"), Term(K * half_minus, (0, 2), "u"), Term(K * half_plus, (1, 1), "v"),
    ))
    F2 = OperatorSpec((
        Term(K * half_plus, (1, 1), "u"), Term(K, (0, 2), "v"), Term(K * half_minus, (2, 0), "v"),
    ))
    B1 = OperatorSpec((
        Term(nrm(0, K), (1, 0), "u", True), Term(nrm(1, K * half_minus), (0, 1), "u", True),
        Term(nrm(0, K * mu), (0, 1), "v", True), Term(nrm(1, K * half_minus), (1, 0), "v", True),
    ))
    B2 = OperatorSpec((
        Term(nrm(1, K * mu), (1, 0), "u", True), Term(nrm(0, K * half_minus), (0, 1), "u", True),
        Term(nrm(1, K), (0, 1), "v", True), Term(nrm(0, K * half_minus), (1, 0), "v", True),
    ))

    def h1(x, n):
        return lame_traction_rhs(x, n, lc.q1, lc.q2)[0]

    def h2(x, n):
        return lame_traction_rhs(x, n, lc.q1, lc.q2)[1]

    return PdeProblem(
        id="lame",
        domain=geometry.Annulus(lc.a, lc.b),
        fields=("u", "v"),
        networks=(NetworkSlot("u", "N_u", "omega1"), NetworkSlot("v", "N_v", "omega2")),
        groups=(
            PointGroup("interior", "N1", (Equation(F1, _zero, "F1"), Equation(F2, _zero, "F2")),
                       interior=True),
            PointGroup("outer", "N2", (Equation(B1, h1, "B1"), Equation(B2, h2, "B2")),
                       weight="lambda1", subset="outer"),
            PointGroup("inner", "N3", (Equation(identity("u"), _zero, "B3"),
                                       Equation(identity("v"), _zero, "B4")),
                       weight="lambda2", subset="inner"),
        ),
        analytic={"u": lambda x: lc.displacement(x)[0], "v": lambda x: lc.displacement(x)[1]},
        params={"constants": lc},
        eval_kind="samples",
    )


# --------------------------------------------------------------------------
# nonlinear Helmholtz


def _helmholtz_u(x):
    return 4.0 * np.cos(3 * PI * x[:, 0] ** 2) * np.sin(3 * PI * x[:, 1] ** 2)


def _helmholtz_laplacian(x):
    x1, x2 = x[:, 0], x[:, 1]
    c, s = np.cos(3 * PI * x1**2), np.sin(3 * PI * x2**2)
    cpp = -6 * PI * np.sin(3 * PI * x1**2) - 36 * PI**2 * x1**2 * c
    spp = 6 * PI * np.cos(3 * PI * x2**2) - 36 * PI**2 * x2**2 * s
    return 4.0 * (cpp * s + c * spp)


def _helmholtz_nl(strength: float = 10.0, reaction: float = -100.0) -> PdeProblem:
    nonlinear = NonlinearTerm(
        func=lambda u: strength * np.cos(u),
        deriv=lambda u: -strength * np.sin(u),
        linear=reaction,
    )

    def f(x):
        u = _helmholtz_u(x)
        return _helmholtz_laplacian(x) + reaction * u + strength * np.cos(u)

    interior = OperatorSpec(laplacian(2).terms + (Term(reaction, (0, 0)),))
    return PdeProblem(
        id="helmholtz_nl",
        domain=geometry.Box((0.0, 0.0), (1.0, 1.0)),
        fields=("u",),
        networks=(NetworkSlot("u", "N", "omega"),),
        groups=(
            PointGroup("interior", "N1", (Equation(interior, lambda x, n=None: f(x)),), interior=True),
            PointGroup("dirichlet", "N2", (Equation(identity(), _dirichlet_from(_helmholtz_u)),),
                       weight="lambda"),
        ),
        analytic={"u": _helmholtz_u},
        forcing=f,
        nonlinear=nonlinear,
        params={"strength": strength, "reaction": reaction},
    )


_FACTORIES = {
    "poisson1d_sweep": _poisson1d,
    "koch_poisson": _koch_poisson,
    "wave1d": _wave1d,
    "plate": _plate,
    "highdim_poisson": _highdim_poisson,
    "lame": _lame,
    "helmholtz_nl": _helmholtz_nl,
}

PROBLEM_IDS = tuple(_FACTORIES)


def make_problem(problem_id: str, **params) -> PdeProblem:
    try:
        factory = _FACTORIES[problem_id]
    except KeyError:
        raise InvalidArgument(f"unknown problem id {problem_id!r}; choose from {PROBLEM_IDS}") from None
    try:
        return factory(**params)
    except TypeError as exc:
        raise InvalidArgument(f"bad parameters for {problem_id}: {exc}") from None
