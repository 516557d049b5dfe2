"""From a problem and a hyperparameter map to an assembled, solved system.

Every random draw of one inner solve (network weights, interior points, each
boundary group) comes from its own stream derived from a single inner seed,
so a solve is a pure function of ``(problem, hyperparams, inner_seed)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from . import geometry
from .assembly import Block, LinearSystem, Solution, assemble_block, assemble_system, solve_min_norm_lsq
from .errors import InvalidArgument
from .features import FeatureNetwork, init_network
from .problems import Equation, PdeProblem

# stream families for derive_seed
NETWORK_STREAM = 0
GROUP_STREAM = 1

INTEGER_NAMES = frozenset({"N", "N_u", "N_v", "N1", "N2", "N3"})


def derive_seed(seed: int, *key: int) -> int:
    """A 64-bit child seed, independent for each ``key`` path."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, np.uint64)[0])


def validate_hyperparams(problem: PdeProblem, hyperparams: Mapping[str, float]) -> dict[str, float]:
    """Check every slot is bound and in range; integer slots come back as int."""
    out = {}
    for name in problem.hyperparameter_names():
        if name not in hyperparams:
            raise InvalidArgument(f"hyperparameter {name!r} is required by {problem.id}")
        value = hyperparams[name]
        try:
            value = float(value)
        except (TypeError, ValueError):
            raise InvalidArgument(f"hyperparameter {name!r} must be a number, got {value!r}") from None
        if not np.isfinite(value):
            raise InvalidArgument(f"hyperparameter {name!r} is not finite")
        if name in INTEGER_NAMES:
            if value != round(value) or value < 1:
                raise InvalidArgument(f"hyperparameter {name!r} must be a positive integer, got {value!r}")
            value = int(round(value))
        elif value <= 0:
            raise InvalidArgument(f"hyperparameter {name!r} must be positive, got {value!r}")
        out[name] = value
    return out


@dataclass(frozen=True, eq=False)
class CollocationGroup:
    label: str
    points: np.ndarray
    normals: np.ndarray | None
    weight: float
    equations: tuple[Equation, ...]
    interior: bool = False


@dataclass(frozen=True, eq=False)
class CollocationSet:
    groups: tuple[CollocationGroup, ...]

    @property
    def interior(self) -> CollocationGroup:
        return next(g for g in self.groups if g.interior)

    def counts(self) -> dict[str, int]:
        return {g.label: len(g.points) for g in self.groups}


def build_networks(problem: PdeProblem, hyperparams: Mapping[str, float], seed: int,
                   activation="sine") -> dict[str, FeatureNetwork]:
    hp = validate_hyperparams(problem, hyperparams)
    return {
        slot.field: init_network(problem.dimension, hp[slot.width], hp[slot.omega], activation,
                                 derive_seed(seed, NETWORK_STREAM, j))
        for j, slot in enumerate(problem.networks)
    }


def sample_collocation(problem: PdeProblem, hyperparams: Mapping[str, float], seed: int) -> CollocationSet:
    hp = validate_hyperparams(problem, hyperparams)
    groups = []
    for g_index, g in enumerate(problem.groups):
        s = derive_seed(seed, GROUP_STREAM, g_index)
        n = hp[g.count]
        if g.interior:
            pts, normals = geometry.sample_interior(problem.domain, n, s), None
        else:
            bg = geometry.sample_boundary(problem.domain, n, s, g.subset)
            pts, normals = bg.points, bg.normals
        weight = 1.0 if g.weight is None else hp[g.weight]
        groups.append(CollocationGroup(g.label, pts, normals, weight, g.equations, g.interior))
    return CollocationSet(tuple(groups))


def _label(group: CollocationGroup, eq: Equation) -> str:
    return f"{group.label}:{eq.label}" if eq.label else group.label


def assemble_problem(nets: Mapping[str, FeatureNetwork], colloc: CollocationSet,
                     derivative: str = "analytic", fd_steps=None) -> LinearSystem:
    """Stack every equation of every group, in problem order, with its group weight."""
    blocks = []
    for g in colloc.groups:
        for eq in g.equations:
            mat, rhs = assemble_block(nets, eq.spec, g.points, g.normals, eq.data, derivative, fd_steps)
            blocks.append(Block(mat, rhs, g.weight, _label(g, eq)))
    return assemble_system(blocks)


def solve_problem(problem: PdeProblem, hyperparams: Mapping[str, float], seed: int,
                  activation="sine", derivative: str = "analytic", fd_steps=None,
                  newton=None):
    """One inner solve.  Returns ``(solution, trace)``; ``trace`` is None for linear problems."""
    nets = build_networks(problem, hyperparams, seed, activation)
    colloc = sample_collocation(problem, hyperparams, seed)
    if problem.nonlinear is not None:
        from .nonlinear import newton_solve

        return newton_solve(problem, nets, colloc, newton, derivative, fd_steps)
    system = assemble_problem(nets, colloc, derivative, fd_steps)
    return solve_min_norm_lsq(system, nets), None
