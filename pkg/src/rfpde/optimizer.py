"""Swarm search over solver hyperparameters.

Three algorithms share one search space and one trace format:

``msc_pso``        particle swarm with linearly scheduled inertia and learning
                   factors, attraction toward the mean of the current elite, and
                   Gaussian position mutation with exponentially decaying scale
``pso``            the classic update with fixed constants
``random_search``  ``M * T_max`` uniform samples, ``M`` per generation

Random numbers for particle ``i`` at generation ``t`` come from their own
substream ``SeedSequence(seed, spawn_key=(t, i))`` (``t = 0`` is the
initialization), so results do not depend on evaluation order.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import InvalidArgument, RfpdeError

Fitness = Callable[[np.ndarray], float]

PSO_INERTIA = 0.7
PSO_COGNITIVE = 1.5
PSO_SOCIAL = 1.5
ALGORITHMS = ("msc_pso", "pso", "random_search")


@dataclass(frozen=True)
class Dim:
    name: str
    lower: float
    upper: float
    integer: bool = False


@dataclass(frozen=True)
class HyperparamSpace:
    dims: tuple[Dim, ...]

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(d if isinstance(d, Dim) else Dim(*d) for d in self.dims))
        if not self.dims:
            raise InvalidArgument("search space has no dimensions")
        names = [d.name for d in self.dims]
        if len(set(names)) != len(names):
            raise InvalidArgument(f"duplicate dimension names in {names}")
        for d in self.dims:
            if not (np.isfinite(d.lower) and np.isfinite(d.upper) and d.lower < d.upper):
                raise InvalidArgument(f"dimension {d.name!r} needs finite lower < upper")

    @classmethod
    def from_ranges(cls, ranges: Mapping[str, Sequence[float]], integer: Iterable[str] = ()) -> "HyperparamSpace":
        ints = set(integer)
        return cls(tuple(Dim(k, float(lo), float(hi), k in ints) for k, (lo, hi) in ranges.items()))

    @property
    def names(self) -> list[str]:
        return [d.name for d in self.dims]

    @property
    def size(self) -> int:
        return len(self.dims)

    @property
    def lower(self) -> np.ndarray:
        return np.array([d.lower for d in self.dims])

    @property
    def upper(self) -> np.ndarray:
        return np.array([d.upper for d in self.dims])

    @property
    def v_max(self) -> np.ndarray:
        return 0.2 * (self.upper - self.lower)

    @property
    def sigma_max(self) -> np.ndarray:
        return 0.1 * (self.upper - self.lower)

    def clip(self, position: np.ndarray) -> np.ndarray:
        return np.clip(position, self.lower, self.upper)


def decode_position(space: HyperparamSpace, position) -> dict[str, float]:
    """Named hyperparameters; integer dimensions rounded to the nearest value."""
    x = np.asarray(position, dtype=float)
    if x.shape != (space.size,):
        raise InvalidArgument(f"position has shape {x.shape}, space has {space.size} dims")
    return {
        d.name: int(round(v)) if d.integer else float(v)
        for d, v in zip(space.dims, x)
    }


@dataclass(frozen=True)
class MscPsoConfig:
    T_max: int = 50
    M: int = 20
    seed: int = 0
    eta_max: float = 0.9
    eta_min: float = 0.4
    c1_max: float = 2.5
    c1_min: float = 0.5
    c2_max: float = 2.5
    c2_min: float = 0.5
    c3: float = 0.4
    elite_fraction: float = 0.2
    # multiplies sigma_max; 0 turns the mutation off
    mutation_scale: float = 1.0

    def __post_init__(self):
        if int(self.T_max) != self.T_max or self.T_max < 1:
            raise InvalidArgument(f"T_max must be a positive integer, got {self.T_max!r}")
        if int(self.M) != self.M or self.M < 1:
            raise InvalidArgument(f"M must be a positive integer, got {self.M!r}")
        for name in ("eta_max", "eta_min", "c1_max", "c1_min", "c2_max", "c2_min"):
            if not getattr(self, name) > 0:
                raise InvalidArgument(f"{name} must be positive")
        if self.c3 < 0 or self.mutation_scale < 0 or not 0 <= self.elite_fraction <= 1:
            raise InvalidArgument("c3, mutation_scale must be >= 0 and elite_fraction in [0, 1]")


def schedule_params(config: MscPsoConfig, t: int) -> tuple[float, float, float]:
    """Inertia and learning factors at generation ``t`` in 1..T_max."""
    if not 1 <= t <= config.T_max:
        raise InvalidArgument(f"t must lie in 1..{config.T_max}, got {t}")
    frac = t / config.T_max
    eta = config.eta_max - frac * (config.eta_max - config.eta_min)
    c1 = config.c1_max - frac * (config.c1_max - config.c1_min)
    c2 = config.c2_min + frac * (config.c2_max - config.c2_min)
    return eta, c1, c2


def mutation_sigma(space: HyperparamSpace, config: MscPsoConfig, t: int) -> np.ndarray:
    return config.mutation_scale * space.sigma_max * math.exp(-t / config.T_max)


@dataclass
class SwarmState:
    positions: np.ndarray          # (M, D)
    velocities: np.ndarray         # (M, D)
    fvals: np.ndarray              # current generation, (M,)
    best_positions: np.ndarray     # personal bests
    best_fvals: np.ndarray
    global_position: np.ndarray
    global_fval: float
    elite_position: np.ndarray
    t: int = 0

    @property
    def M(self) -> int:
        return len(self.positions)

    def copy(self) -> "SwarmState":
        return SwarmState(
            self.positions.copy(), self.velocities.copy(), self.fvals.copy(),
            self.best_positions.copy(), self.best_fvals.copy(), self.global_position.copy(),
            self.global_fval, self.elite_position.copy(), self.t,
        )


def elite_count(M: int, fraction: float = 0.2) -> int:
    return max(1, math.floor(fraction * M))


def elite_mean(positions: np.ndarray, fvals: np.ndarray, fraction: float = 0.2) -> np.ndarray:
    """Mean position of the best ``max(1, floor(fraction * M))`` particles; ties by index."""
    positions = np.atleast_2d(np.asarray(positions, dtype=float))
    order = np.argsort(np.asarray(fvals, dtype=float), kind="stable")
    return positions[order[: elite_count(len(positions), fraction)]].mean(axis=0)


def _safe(value) -> float:
    try:
        v = float(value)
    except (TypeError, ValueError):
        return math.inf
    return v if math.isfinite(v) else math.inf


def _particle_rng(seed: int, t: int, i: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(t), int(i))))


def init_swarm(space: HyperparamSpace, M: int, seed: int, fitness: Fitness,
               fraction: float = 0.2) -> SwarmState:
    """Uniform positions in the box, uniform velocities in ``+-V_max``."""
    lo, hi, vmax = space.lower, space.upper, space.v_max
    pos = np.empty((M, space.size))
    vel = np.empty((M, space.size))
    for i in range(M):
        rng = _particle_rng(seed, 0, i)
        pos[i] = rng.uniform(lo, hi)
        vel[i] = rng.uniform(-vmax, vmax)
    f = np.array([_safe(fitness(x)) for x in pos])
    g = int(np.argmin(f))
    return SwarmState(pos, vel, f, pos.copy(), f.copy(), pos[g].copy(), float(f[g]),
                      elite_mean(pos, f, fraction), 0)


def _finish_generation(state: SwarmState, fraction: float) -> None:
    # elite mean first, then global best (Algorithm ordering)
    state.elite_position = elite_mean(state.positions, state.fvals, fraction)
    g = int(np.argmin(state.best_fvals))
    if state.best_fvals[g] < state.global_fval:
        state.global_fval = float(state.best_fvals[g])
        state.global_position = state.best_positions[g].copy()


def pso_iterate(state: SwarmState, space: HyperparamSpace, config: MscPsoConfig,
                fitness: Fitness) -> SwarmState:
    """One MSC-PSO generation; returns a new state (the input is not modified)."""
    s = state.copy()
    t = s.t + 1
    eta, c1, c2 = schedule_params(config, t)
    sigma = mutation_sigma(space, config, t)
    vmax = space.v_max
    for i in range(s.M):
        rng = _particle_rng(config.seed, t, i)
        r1, r2, r3 = (rng.random(space.size) for _ in range(3))
        noise = rng.standard_normal(space.size)
        x = s.positions[i]
        v = (eta * s.velocities[i]
             + c1 * r1 * (s.best_positions[i] - x)
             + c2 * r2 * (s.global_position - x)
             + config.c3 * r3 * (s.elite_position - x))
        v = np.clip(v, -vmax, vmax)
        x = space.clip(x + v + sigma * noise)
        f = _safe(fitness(x))
        s.positions[i], s.velocities[i], s.fvals[i] = x, v, f
        if f < s.best_fvals[i]:
            s.best_fvals[i], s.best_positions[i] = f, x.copy()
    s.t = t
    _finish_generation(s, config.elite_fraction)
    return s


def vanilla_pso_iterate(state: SwarmState, space: HyperparamSpace, seed: int, fitness: Fitness,
                        inertia: float = PSO_INERTIA, cognitive: float = PSO_COGNITIVE,
                        social: float = PSO_SOCIAL) -> SwarmState:
    """Classic PSO generation with fixed constants, same clamping and substreams."""
    s = state.copy()
    t = s.t + 1
    lo, hi, vmax = space.lower, space.upper, space.v_max
    for i in range(s.M):
        rng = _particle_rng(seed, t, i)
        r1 = rng.random(space.size)
        r2 = rng.random(space.size)
        x = s.positions[i]
        v = inertia * s.velocities[i] + cognitive * r1 * (s.best_positions[i] - x) \
            + social * r2 * (s.global_position - x)
        v = np.minimum(np.maximum(v, -vmax), vmax)
        x = np.minimum(np.maximum(x + v, lo), hi)
        f = _safe(fitness(x))
        s.positions[i], s.velocities[i], s.fvals[i] = x, v, f
        if f < s.best_fvals[i]:
            s.best_fvals[i], s.best_positions[i] = f, x.copy()
    s.t = t
    _finish_generation(s, 0.2)
    return s


@dataclass
class OptimizeResult:
    best_position: np.ndarray
    best_fval: float
    trace: list[dict] = field(default_factory=list)
    evaluations: int = 0

    def to_csv(self, path, space: HyperparamSpace) -> None:
        """Columns: generation, best_fval, mean_fval, then one per dimension."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["generation", "best_fval", "mean_fval", *space.names])
            for row in self.trace:
                w.writerow([row["generation"], f"{row['best_fval']:.17g}", f"{row['mean_fval']:.17g}",
                            *(f"{v:.17g}" for v in row["best_position"])])


def _mean_finite(f: np.ndarray) -> float:
    finite = f[np.isfinite(f)]
    return float(finite.mean()) if len(finite) else math.inf


def _trace_row(t: int, best: float, fvals: np.ndarray, pos: np.ndarray) -> dict:
    return {"generation": t, "best_fval": best, "mean_fval": _mean_finite(fvals),
            "best_position": pos.copy()}


def optimize(space: HyperparamSpace, fitness: Fitness, algorithm: str = "msc_pso",
             budget: tuple[int, int] = (20, 50), seed: int = 0,
             config: MscPsoConfig | None = None, callback=None) -> OptimizeResult:
    """Minimize ``fitness`` over ``space``; the trace has one row per generation."""
    M, T = budget
    if algorithm not in ALGORITHMS:
        raise InvalidArgument(f"algorithm must be one of {ALGORITHMS}, got {algorithm!r}")
    cfg = replace(config or MscPsoConfig(), M=M, T_max=T, seed=seed)
    counted = _Counter(fitness)

    if algorithm == "random_search":
        best_f, best_x = math.inf, None
        trace = []
        for t in range(1, T + 1):
            f_gen = np.empty(M)
            x_gen = np.empty((M, space.size))
            for i in range(M):
                x_gen[i] = _particle_rng(seed, t, i).uniform(space.lower, space.upper)
                f_gen[i] = _safe(counted(x_gen[i]))
            g = int(np.argmin(f_gen))
            if best_x is None or f_gen[g] < best_f:
                best_f, best_x = float(f_gen[g]), x_gen[g].copy()
            trace.append(_trace_row(t, best_f, f_gen, best_x))
            if callback:
                callback(trace[-1])
        return OptimizeResult(best_x, best_f, trace, counted.calls)

    state = init_swarm(space, M, seed, counted, cfg.elite_fraction)
    trace = []
    for _ in range(T):
        if algorithm == "msc_pso":
            state = pso_iterate(state, space, cfg, counted)
        else:
            state = vanilla_pso_iterate(state, space, seed, counted)
        trace.append(_trace_row(state.t, state.global_fval, state.fvals, state.global_position))
        if callback:
            callback(trace[-1])
    return OptimizeResult(state.global_position.copy(), state.global_fval, trace, counted.calls)


class _Counter:
    def __init__(self, fn):
        self.fn, self.calls = fn, 0

    def __call__(self, x):
        self.calls += 1
        return self.fn(x)


def inner_fitness(problem, hyperparams: Mapping[str, float], inner_seed: int, activation="sine",
                  derivative: str = "analytic", newton=None, eval_points=None) -> float:
    """Relative L2 error of one inner solve; any solver failure scores ``+inf``."""
    from .collocation import solve_problem
    from .problems import fitness

    try:
        sol, _ = solve_problem(problem, hyperparams, inner_seed, activation, derivative, newton=newton)
        return _safe(fitness(problem, sol, eval_points))
    except (RfpdeError, np.linalg.LinAlgError, FloatingPointError, MemoryError):
        return math.inf


def problem_fitness(problem, space: HyperparamSpace, fixed: Mapping[str, float], inner_seed: int,
                    activation="sine", derivative: str = "analytic", newton=None) -> Fitness:
    """Position -> fitness closure: decode, merge fixed hyperparameters, solve."""
    eval_points = problem.evaluation_points()

    def f(position):
        hp = {**fixed, **decode_position(space, position)}
        return inner_fitness(problem, hp, inner_seed, activation, derivative, newton, eval_points)

    return f
