"""Total-variation decay curves, rate fits, and the spectral-gap sweep."""

import math
from dataclasses import dataclass

import numpy as np

from .chain import run_ensemble
from .errors import TooFewReplicas, WindowDegenerate
from .spectral import assemble_metropolis, discretize, neumann_spectrum, \
    assemble_laplacian, spectrum


@dataclass
class TVCurve:
    steps: np.ndarray
    values: np.ndarray
    mode: str                    # "exact" | "empirical"
    note: str = ""

    def export_csv(self, path):
        with open(path, "w") as fh:
            fh.write("n,tv,mode\n")
            for n, tv in zip(self.steps, self.values):
                fh.write(f"{int(n)},{float(tv)!r},{self.mode}\n")


def tv_exact(operator, start_cell, n_max):
    """TV distance of the n-step row to uniform, by vector-matrix products."""
    n_cells = operator.size
    row = np.zeros(n_cells)
    row[start_cell] = 1.0
    uniform = 1.0 / n_cells
    values = [0.5 * np.abs(row - uniform).sum()]
    for _ in range(n_max):
        row = operator.matrix.T @ row
        values.append(0.5 * np.abs(row - uniform).sum())
    return TVCurve(steps=np.arange(n_max + 1), values=np.array(values),
                   mode="exact")


def tv_empirical(polytope, family, h, x0, n_list, replicas, grid, rng):
    """Histogram TV estimate over the grid-cell sigma-algebra.

    This is a lower bound for the true TV (the sup runs over bin unions
    only); mass falling in lattice cells outside the kept grid is counted
    against a zero reference.
    """
    n_list = sorted(int(n) for n in n_list)
    if replicas < 20 * grid.size:
        raise TooFewReplicas(
            f"need >= {20 * grid.size} replicas for {grid.size} bins")
    snaps = run_ensemble(polytope, family, h, x0, n_list, replicas, rng)
    uniform = 1.0 / grid.size
    values = []
    for n in n_list:
        states = snaps[n]
        idx = np.floor((states - grid.origin) / grid.spacing).astype(np.int64)
        np.clip(idx, 0, np.array(grid.shape) - 1, out=idx)
        bins = grid.lookup(idx)
        inside = bins >= 0
        counts = np.bincount(bins[inside], minlength=grid.size)
        p_hat = counts / replicas
        outside = 1.0 - inside.mean()
        values.append(0.5 * (np.abs(p_hat - uniform).sum() + outside))
    return TVCurve(steps=np.array(n_list), values=np.array(values),
                   mode="empirical",
                   note="histogram estimator; lower bound for the true TV")


def fit_rate(curve, window=None, floor=1e-12):
    """Least-squares fit of log TV_n = log C - r n over the window.

    Default window skips the transient: the first max(10, 1/r_guess) steps,
    with r_guess read off the tail of the curve.
    """
    steps = np.asarray(curve.steps, dtype=float)
    values = np.asarray(curve.values, dtype=float)
    if window is None:
        usable = values > floor
        if usable.sum() >= 2:
            tail = np.flatnonzero(usable)
            i0, i1 = tail[0], tail[-1]
            if values[i0] > 0 and values[i1] > 0 and steps[i1] > steps[i0]:
                r_guess = max(1e-6, (math.log(values[i0]) - math.log(values[i1]))
                              / (steps[i1] - steps[i0]))
            else:
                r_guess = 1e-6
            start = max(10.0, 1.0 / r_guess)
            window = (start, steps[i1])
        else:
            window = (steps[0], steps[-1])
    lo, hi = window
    mask = (steps >= lo) & (steps <= hi) & (values > floor)
    if mask.sum() < 2:
        raise WindowDegenerate("fewer than two usable points in the window")
    coeffs = np.polyfit(steps[mask], np.log(values[mask]), 1)
    rate = -float(coeffs[0])
    intercept = float(math.exp(coeffs[1]))
    return rate, intercept


@dataclass
class SweepRow:
    h: float
    gap: float
    gap_over_h2: float


@dataclass
class SweepTable:
    rows: list
    nu1_reference: float | None = None

    def export_csv(self, path):
        with open(path, "w") as fh:
            fh.write("h,gap,gap_over_h2,nu1_reference\n")
            ref = "" if self.nu1_reference is None else repr(float(self.nu1_reference))
            for row in self.rows:
                fh.write(f"{row.h!r},{row.gap!r},{row.gap_over_h2!r},{ref}\n")


def gap_sweep(polytope, family, h_list, resolution_rule=None, k=8,
              nu1_spacing=None):
    """g(h) and g(h)/h^2 along a decreasing h list, plus the limit nu_1
    from the assembled Laplacian on the finest grid."""
    if resolution_rule is None:
        resolution_rule = lambda h: h / 8.0
    rows = []
    finest_grid = None
    for h in h_list:
        grid = discretize(polytope, resolution_rule(h))
        finest_grid = grid
        op = assemble_metropolis(polytope, family, h, grid)
        rep = spectrum(op, k=k)
        rows.append(SweepRow(h=float(h), gap=float(rep.gap),
                             gap_over_h2=float(rep.gap / h ** 2)))
    nu1 = None
    if finest_grid is not None:
        ref_grid = finest_grid
        if nu1_spacing is not None:
            ref_grid = discretize(polytope, nu1_spacing)
        lap = assemble_laplacian(polytope, family, ref_grid)
        vals, clusters = neumann_spectrum(lap, k=8)
        nonzero = [c for c, _ in clusters if c > 1e-8]
        nu1 = float(nonzero[0]) if nonzero else None
    return SweepTable(rows=rows, nu1_reference=nu1)
