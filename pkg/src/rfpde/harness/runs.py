"""Experiment runners behind the CLI verbs.

Every runner writes delimited data (CSV) plus a PNG rendering into ``out``,
and a ``report.json`` summary.  CSV files hold only seed-determined numbers
(written with 17 significant digits), so reruns reproduce them byte for byte;
wall-clock timings live in ``report.json`` only.
"""
from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .. import geometry
from ..assembly import evaluate_solution, l2_relative_error
from ..collocation import solve_problem, validate_hyperparams
from ..errors import InvalidArgument
from ..nonlinear import NewtonConfig
from ..optimizer import decode_position, optimize, problem_fitness
from ..problems import PdeProblem, field_errors, make_problem, plate_postprocess
from . import plotting
from .config import ConfigError, ExperimentConfig


@dataclass
class RunReport:
    command: str
    problem: str
    fvals: dict[str, float] = field(default_factory=dict)
    residual_norm: float = math.nan
    seconds: float = math.nan
    hyperparams: dict[str, Any] = field(default_factory=dict)
    seeds: dict[str, int] = field(default_factory=dict)
    files: list[str] = field(default_factory=list)
    extra: dict[str, Any] = field(default_factory=dict)

    def write(self, out: Path) -> Path:
        path = out / "report.json"
        self.files.append(path.name)
        path.write_text(json.dumps(asdict(self), indent=2, default=_jsonable) + "\n")
        return path


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    return str(v)


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return f"{float(v):.17g}"


def write_csv(path: Path, header: list[str], rows) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def read_csv(path) -> tuple[list[str], np.ndarray]:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    return header, np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


def _out_dir(cfg: ExperimentConfig, out) -> Path:
    target = out or cfg.out
    if target is None:
        raise ConfigError("no output directory given (use --out or 'out' in the config)")
    path = Path(target)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _problem(cfg: ExperimentConfig) -> PdeProblem:
    return make_problem(cfg.problem, **cfg.params)


def _newton(cfg: ExperimentConfig) -> NewtonConfig:
    return NewtonConfig(**asdict(cfg.newton))


def _seeds(cfg: ExperimentConfig) -> dict[str, int]:
    return asdict(cfg.seeds)


def _solve(cfg: ExperimentConfig, problem: PdeProblem, derivative: str):
    if cfg.hyperparams is None:
        raise ConfigError("this command needs explicit 'hyperparams'")
    hp = validate_hyperparams(problem, cfg.hyperparams)
    t0 = time.perf_counter()
    sol, trace = solve_problem(problem, hp, cfg.seeds.inner, cfg.activation, derivative,
                               newton=_newton(cfg))
    return hp, sol, trace, time.perf_counter() - t0


def _dump_solution(out: Path, problem: PdeProblem, sol, points) -> tuple[Path, dict[str, float]]:
    k = points.shape[1]
    header = [f"x{j + 1}" for j in range(k)]
    cols = [points[:, j] for j in range(k)]
    errors = {}
    for f in problem.fields:
        pred = evaluate_solution(sol, f, points)
        exact = problem.exact(f, points)
        errors[f] = l2_relative_error(pred, exact)
        header += [f"{f}_pred", f"{f}_exact", f"{f}_abserr"]
        cols += [pred, exact, np.abs(pred - exact)]
    path = write_csv(out / "solution.csv", header, zip(*cols))
    return path, errors


def errors_from_solution_csv(path) -> dict[str, float]:
    """Relative L2 errors recomputed from a dumped ``solution.csv``."""
    header, data = read_csv(path)
    out = {}
    for j, name in enumerate(header):
        if name.endswith("_pred"):
            f = name[: -len("_pred")]
            out[f] = l2_relative_error(data[:, j], data[:, header.index(f"{f}_exact")])
    return out


def _plate_resultants(out: Path, problem: PdeProblem, sol, points) -> tuple[Path, dict[str, float]]:
    pc = problem.params["constants"]
    pred = plate_postprocess(sol, pc, points)
    exact = pc.resultants(points)
    header = ["x1", "x2"]
    cols = [points[:, 0], points[:, 1]]
    errors = {}
    for name in pred:
        errors[name] = l2_relative_error(pred[name], exact[name])
        header += [f"{name}_pred", f"{name}_exact", f"{name}_abserr"]
        cols += [pred[name], exact[name], np.abs(pred[name] - exact[name])]
    return write_csv(out / "resultants.csv", header, zip(*cols)), errors


def run_solve(cfg: ExperimentConfig, out=None) -> RunReport:
    """One inner solve at fixed hyperparameters; solution on the evaluation set."""
    out = _out_dir(cfg, out)
    problem = _problem(cfg)
    hp, sol, trace, seconds = _solve(cfg, problem, cfg.derivative)
    points = problem.evaluation_points(cfg.seeds.eval)
    report = RunReport("solve", problem.id, residual_norm=sol.residual_norm, seconds=seconds,
                       hyperparams=hp, seeds=_seeds(cfg))
    path, report.fvals = _dump_solution(out, problem, sol, points)
    report.files.append(path.name)
    f0 = problem.fields[0]
    png = plotting.plot_solution(points, evaluate_solution(sol, f0, points), problem.exact(f0, points),
                                 out / "solution.png", f"{problem.id}: {f0}")
    report.files.append(png.name)
    if problem.id == "plate":
        path, errs = _plate_resultants(out, problem, sol, points)
        report.extra["resultant_errors"] = errs
        report.files.append(path.name)
    if isinstance(problem.domain, geometry.Koch):
        poly = problem.domain.polygon
        poly.to_csv(out / "polygon.csv")
        report.files.append("polygon.csv")
        report.files.append(plotting.plot_polygon(poly.vertices, out / "polygon.png").name)
    if trace is not None:
        trace.to_csv(out / "newton_trace.csv")
        report.files.append("newton_trace.csv")
        report.extra["newton_iterations"] = trace.iterations
        report.extra["newton_converged"] = trace.converged
    report.write(out)
    return report


def run_optimize(cfg: ExperimentConfig, out=None) -> RunReport:
    """Outer search for every requested (activation, algorithm) pair."""
    out = _out_dir(cfg, out)
    problem = _problem(cfg)
    space = cfg.search_space()
    missing = set(problem.hyperparameter_names()) - set(space.names) - set(cfg.fixed)
    if missing:
        raise ConfigError(f"hyperparameters {sorted(missing)} are neither searched nor fixed")
    budget = (cfg.optimizer.M, cfg.optimizer.T_max)
    report = RunReport("optimize", problem.id, seeds=_seeds(cfg))
    summary, curves = [], {}
    t0 = time.perf_counter()
    for act in cfg.optimizer.activations:
        fit = problem_fitness(problem, space, cfg.fixed, cfg.seeds.inner, act, "analytic", _newton(cfg))
        for alg in cfg.optimizer.algorithms:
            res = optimize(space, fit, alg, budget, cfg.seeds.outer)
            name = f"trace_{act}_{alg}.csv"
            res.to_csv(out / name, space)
            report.files.append(name)
            best = {**cfg.fixed, **decode_position(space, res.best_position)}
            report.fvals[f"{act}/{alg}"] = res.best_fval
            report.extra[f"{act}/{alg}"] = {"hyperparams": best, "evaluations": res.evaluations}
            summary.append([act, alg, res.best_fval, *(best[n] for n in space.names)])
            curves[f"{act} {alg}"] = np.array([r["best_fval"] for r in res.trace])
    report.seconds = time.perf_counter() - t0
    write_csv(out / "optimize.csv", ["activation", "algorithm", "best_fval", *space.names], summary)
    report.files.append("optimize.csv")
    report.files.append(plotting.plot_convergence(curves, out / "convergence.png", problem.id).name)
    report.extra["budget"] = {"M": budget[0], "T_max": budget[1]}
    report.write(out)
    return report


def sweep_rows(cfg: ExperimentConfig) -> list[dict]:
    """Relative error for every (activation, kappa, omega) on the 1D Poisson problem."""
    s = cfg.sweep
    rows = []
    for act in s.activations:
        for kappa in s.kappas:
            problem = make_problem("poisson1d_sweep", kappa=float(kappa))
            points = problem.evaluation_points(cfg.seeds.eval)
            for omega in s.omegas:
                hp = {"N": s.N, "omega": float(omega), "lambda": s.weight, "N1": s.N1, "N2": s.N2}
                sol, _ = solve_problem(problem, hp, cfg.seeds.inner, act)
                fval = field_errors(problem, sol, points)["u"]
                rows.append({"activation": act, "kappa": float(kappa), "omega": float(omega), "fval": fval})
    return rows


def run_sweep(cfg: ExperimentConfig, out=None) -> RunReport:
    out = _out_dir(cfg, out)
    if cfg.problem != "poisson1d_sweep":
        raise ConfigError("sweep runs on the poisson1d_sweep problem")
    t0 = time.perf_counter()
    rows = sweep_rows(cfg)
    report = RunReport("sweep", cfg.problem, seconds=time.perf_counter() - t0, seeds=_seeds(cfg))
    write_csv(out / "sweep.csv", ["activation", "kappa", "omega", "fval"],
              ([r["activation"], r["kappa"], r["omega"], r["fval"]] for r in rows))
    report.files += ["sweep.csv", plotting.plot_sweep(rows, out / "sweep.png").name]
    report.fvals = {f"{r['activation']}/kappa={r['kappa']:g}/omega={r['omega']:g}": r["fval"] for r in rows}
    s = cfg.sweep
    report.hyperparams = {"N": s.N, "N1": s.N1, "N2": s.N2, "lambda": s.weight}
    report.write(out)
    return report


def run_derivative_bench(cfg: ExperimentConfig, out=None) -> RunReport:
    """Same solve with derivative networks and with finite differences."""
    out = _out_dir(cfg, out)
    problem = _problem(cfg)
    points = problem.evaluation_points(cfg.seeds.eval)
    report = RunReport("dbench", problem.id, seeds=_seeds(cfg))
    rows, timings, errors = [], {}, {}
    for method in ("analytic", "fd"):
        hp, sol, _, seconds = _solve(cfg, problem, method)
        errors[method] = field_errors(problem, sol, points)
        timings[method] = seconds
        for f, e in errors[method].items():
            rows.append([method, f, e])
        report.hyperparams = hp
    write_csv(out / "dbench.csv", ["method", "field", "fval"], rows)
    report.files.append("dbench.csv")
    report.fvals = {f"{m}/{f}": e for m, errs in errors.items() for f, e in errs.items()}
    report.extra["seconds"] = timings
    report.extra["fd_over_analytic"] = {
        f: (errors["fd"][f] / errors["analytic"][f]) if errors["analytic"][f] > 0 else math.inf
        for f in problem.fields
    }
    report.seconds = sum(timings.values())
    report.write(out)
    return report


COMMANDS = {
    "solve": run_solve,
    "optimize": run_optimize,
    "sweep": run_sweep,
    "dbench": run_derivative_bench,
}


def run_command(name: str, cfg: ExperimentConfig, out=None) -> RunReport:
    try:
        runner = COMMANDS[name]
    except KeyError:
        raise InvalidArgument(f"unknown command {name!r}") from None
    return runner(cfg, out)
