"""PNG figures rendered next to the CSV outputs (non-interactive Agg backend)."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# fixed metadata keeps PNG bytes independent of the run date
_META = {"Software": None}


def _save(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, dpi=110, bbox_inches="tight", metadata=_META)
    plt.close(fig)
    return path


def plot_solution(points: np.ndarray, predicted: np.ndarray, exact: np.ndarray, path, title: str = "") -> Path:
    """1D: curves and error; 2D: exact field and absolute error; higher d: error histogram."""
    err = np.abs(predicted - exact)
    k = points.shape[1]
    if k == 1:
        fig, (a0, a1) = plt.subplots(1, 2, figsize=(10, 3.5))
        order = np.argsort(points[:, 0])
        a0.plot(points[order, 0], exact[order], "k-", lw=1.5, label="analytic")
        a0.plot(points[order, 0], predicted[order], "r--", lw=1, label="predicted")
        a0.legend()
        a1.semilogy(points[order, 0], np.maximum(err[order], 1e-300))
        a1.set_title("absolute error")
    elif k == 2:
        fig, (a0, a1) = plt.subplots(1, 2, figsize=(10, 4))
        for ax, values, label in ((a0, exact, "analytic"), (a1, err, "absolute error")):
            sc = ax.tricontourf(points[:, 0], points[:, 1], values, levels=60, cmap="jet")
            fig.colorbar(sc, ax=ax)
            ax.set_aspect("equal")
            ax.set_title(label)
    else:
        fig, a0 = plt.subplots(figsize=(5, 3.5))
        a0.hist(np.log10(np.maximum(err, 1e-300)), bins=50)
        a0.set_xlabel("log10 absolute error")
    if title:
        fig.suptitle(title)
    return _save(fig, path)


def plot_convergence(traces: dict[str, np.ndarray], path, title: str = "") -> Path:
    fig, ax = plt.subplots(figsize=(5.5, 4))
    for label, best in traces.items():
        ax.semilogy(np.arange(1, len(best) + 1), best, marker="o", ms=3, label=label)
    ax.set_xlabel("generation")
    ax.set_ylabel("best relative L2 error")
    ax.legend()
    if title:
        ax.set_title(title)
    return _save(fig, path)


def plot_sweep(rows: list[dict], path) -> Path:
    """One panel per kappa, one line per activation over omega."""
    kappas = sorted({r["kappa"] for r in rows})
    fig, axes = plt.subplots(1, len(kappas), figsize=(5 * len(kappas), 4), squeeze=False)
    for ax, kappa in zip(axes[0], kappas):
        sub = [r for r in rows if r["kappa"] == kappa]
        for act in dict.fromkeys(r["activation"] for r in sub):
            pts = sorted((r["omega"], r["fval"]) for r in sub if r["activation"] == act)
            ax.semilogy([p[0] for p in pts], [p[1] for p in pts], marker="s", label=act)
        ax.set_xlabel("omega")
        ax.set_title(f"kappa = {kappa:g}")
        ax.legend()
    axes[0][0].set_ylabel("relative L2 error")
    return _save(fig, path)


def plot_polygon(vertices: np.ndarray, path) -> Path:
    fig, ax = plt.subplots(figsize=(4, 4))
    closed = np.vstack([vertices, vertices[:1]])
    ax.plot(closed[:, 0], closed[:, 1], "k-", lw=0.6)
    ax.set_aspect("equal")
    return _save(fig, path)
