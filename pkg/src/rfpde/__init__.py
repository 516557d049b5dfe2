"""Random-feature collocation PDE solvers with swarm-tuned hyperparameters."""
from .assembly import Solution, evaluate_solution, l2_relative_error, solve_min_norm_lsq
from .collocation import solve_problem
from .features import Activation, FeatureNetwork, init_network
from .problems import PROBLEM_IDS, make_problem

__version__ = "0.1.0"

__all__ = [
    "Activation", "FeatureNetwork", "PROBLEM_IDS", "Solution", "evaluate_solution", "init_network",
    "l2_relative_error", "make_problem", "solve_min_norm_lsq", "solve_problem",
]
