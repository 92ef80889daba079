"""Grid discretization of the Metropolis operator and of its limit Laplacian.

The operator matrix is assembled with exact segment/cell overlap: along each
proposal chord the admissible parameter interval is partitioned into pieces
on which the nearest-cell binning is constant (the partition is the same for
every row because cell centers sit on a common lattice), and each piece's
length contributes its exact share of proposal mass.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (
    DisconnectedStencil,
    MinorizationNotFound,
    NoConvergence,
    ResolutionTooCoarse,
    SolverFailure,
    TooManyCells,
)
from .geometry import ContinuousFamily

DEFAULT_CELL_CAP = 200_000
DENSE_CUTOFF = 5000


@dataclass(frozen=True)
class Grid:
    spacing: float
    origin: np.ndarray            # lattice corner (bounding box lower corner)
    shape: tuple                  # lattice extents per axis
    centers: np.ndarray           # (n, d) kept cell centers
    lattice: np.ndarray           # int array, shape `shape`, row index or -1
    indices: np.ndarray           # (n, d) integer lattice coordinates

    @property
    def size(self):
        return len(self.centers)

    @property
    def dim(self):
        return self.centers.shape[1]

    @property
    def cell_volume(self):
        return self.spacing ** self.dim

    def lookup(self, idx):
        """Row indices for integer lattice coordinates (-1 if absent)."""
        idx = np.asarray(idx)
        ok = np.all((idx >= 0) & (idx < np.array(self.shape)), axis=-1)
        out = np.full(idx.shape[:-1], -1, dtype=np.int64)
        if np.any(ok):
            sel = idx[ok]
            out[ok] = self.lattice[tuple(sel.T)]
        return out


def discretize(polytope, s, cell_cap=DEFAULT_CELL_CAP):
    """Regular lattice of spacing s over the bounding box, keeping cells
    whose center lies strictly inside the polytope."""
    lo, hi = polytope.bounding_box
    d = polytope.intrinsic_dim
    counts = tuple(int(math.ceil((hi[i] - lo[i]) / s - 1e-9)) for i in range(d))
    total = int(np.prod(counts))
    if total > 50 * cell_cap:
        raise TooManyCells(f"lattice of {total} candidate cells")
    axes = [lo[i] + s * (np.arange(counts[i]) + 0.5) for i in range(d)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.column_stack([m.ravel() for m in mesh])
    inside = np.all(pts @ polytope.forms.T > polytope.offsets, axis=1)
    n = int(inside.sum())
    if n > cell_cap:
        raise TooManyCells(f"{n} cells exceeds the cap {cell_cap}")
    lattice = np.full(total, -1, dtype=np.int64)
    lattice[inside] = np.arange(n)
    lattice = lattice.reshape(counts)
    centers = pts[inside]
    indices = np.column_stack(np.nonzero(inside.reshape(counts)))
    return Grid(spacing=float(s), origin=np.asarray(lo, dtype=float),
                shape=counts, centers=centers, lattice=lattice,
                indices=indices)


@dataclass
class OperatorMatrix:
    matrix: sp.csr_matrix
    h: float
    grid: Grid

    @property
    def size(self):
        return self.matrix.shape[0]

    def dense(self):
        return self.matrix.toarray()

    def export_coo(self, path):
        """Coordinate text format: row col value, one entry per line."""
        coo = self.matrix.tocoo()
        with open(path, "w") as fh:
            for r, c, v in zip(coo.row, coo.col, coo.data):
                fh.write(f"{r} {c} {float(v)!r}\n")


def _chord_bounds(polytope, centers, e, h):
    """Vectorized per-cell chord intervals along direction e."""
    vals = centers @ polytope.forms.T - polytope.offsets
    rates = h * (polytope.forms @ e)
    lo = np.full(len(centers), -1.0)
    hi = np.full(len(centers), 1.0)
    for j, a in enumerate(rates):
        if a > 0.0:
            np.maximum(lo, -vals[:, j] / a, out=lo)
        elif a < 0.0:
            np.minimum(hi, -vals[:, j] / a, out=hi)
    return lo, hi


def _binning_breakpoints(r):
    """Sorted t-values in [-1, 1] where floor(0.5 + r_i t) jumps, plus ends."""
    taus = [-1.0, 1.0]
    for ri in r:
        if ri == 0.0:
            continue
        kmax = int(math.floor(abs(ri) + 0.5))
        for k in range(-kmax, kmax + 1):
            t = (k + 0.5) / ri
            if -1.0 < t < 1.0:
                taus.append(t)
    return np.unique(np.array(taus))


def assemble_metropolis(polytope, family, h, grid, enforce_resolution=True):
    """Grid discretization of the Metropolis operator at scale h.

    Row construction conserves probability exactly (leftover chord mass and
    mass binned to missing cells both land on the diagonal); the result is
    then symmetrized and the diagonal re-adjusted so rows still sum to one.
    """
    if isinstance(family, ContinuousFamily):
        family = family.reduce()
    s = grid.spacing
    if enforce_resolution and s > h / 4 + 1e-12:
        raise ResolutionTooCoarse(f"spacing {s} exceeds h/4 = {h / 4}")
    n = grid.size
    rows_acc = []
    cols_acc = []
    data_acc = []
    all_rows = np.arange(n)
    for e, w in zip(family.vectors, family.weights):
        lo, hi = _chord_bounds(polytope, grid.centers, e, h)
        r = h * np.asarray(e, dtype=float) / s
        taus = _binning_breakpoints(r)
        for t0, t1 in zip(taus[:-1], taus[1:]):
            mid = 0.5 * (t0 + t1)
            offset = np.floor(0.5 + r * mid).astype(np.int64)
            target = grid.lookup(grid.indices + offset)
            overlap = np.minimum(hi, t1) - np.maximum(lo, t0)
            mask = (overlap > 0) & (target >= 0)
            if not np.any(mask):
                continue
            rows_acc.append(all_rows[mask])
            cols_acc.append(target[mask])
            data_acc.append(0.5 * w * overlap[mask])
    mat = sp.coo_matrix(
        (np.concatenate(data_acc),
         (np.concatenate(rows_acc), np.concatenate(cols_acc))),
        shape=(n, n),
    ).tocsr()
    # Rejection + out-of-grid mass to the diagonal: rows sum to 1 exactly.
    deficit = 1.0 - np.asarray(mat.sum(axis=1)).ravel()
    mat = mat + sp.diags(deficit)
    # Exact self-adjointness, then restore unit row sums on the diagonal.
    mat = (mat + mat.T) * 0.5
    deficit = 1.0 - np.asarray(mat.sum(axis=1)).ravel()
    mat = (mat + sp.diags(deficit)).tocsr()
    return OperatorMatrix(matrix=mat, h=h, grid=grid)


@dataclass
class SpectralReport:
    eigenvalues: np.ndarray       # descending
    h: float | None = None
    n_total: int | None = None
    truncated: bool = False
    bottom: float | None = None

    @property
    def gap(self):
        return 1.0 - self.eigenvalues[1]

    @property
    def rescaled(self):
        return (1.0 - self.eigenvalues) / self.h ** 2

    def clusters(self, values=None, rel_tol=0.15, abs_tol=0.05):
        """Group sorted values into (center, multiplicity) clusters."""
        if values is None:
            values = np.sort(self.rescaled)
        else:
            values = np.sort(np.asarray(values, dtype=float))
        groups = []
        current = [values[0]]
        for v in values[1:]:
            ref = current[-1]
            if v - ref <= max(abs_tol, rel_tol * max(abs(ref), abs(v))):
                current.append(v)
            else:
                groups.append(current)
                current = [v]
        groups.append(current)
        return [(float(np.mean(g)), len(g)) for g in groups]

    def export_csv(self, path):
        with open(path, "w") as fh:
            fh.write("index,eigenvalue,rescaled,cluster\n")
            rescaled = self.rescaled if self.h else np.zeros_like(self.eigenvalues)
            clusters = self.clusters(rescaled)
            edges = np.cumsum([m for _, m in clusters])
            order = np.argsort(rescaled)
            cluster_of = np.empty(len(rescaled), dtype=int)
            for pos, idx in enumerate(order):
                cluster_of[idx] = np.searchsorted(edges, pos, side="right")
            for i, (lam, res) in enumerate(zip(self.eigenvalues, rescaled)):
                fh.write(f"{i},{float(lam)!r},{float(res)!r},{cluster_of[i]}\n")


def spectrum(operator, k=16, dense_cutoff=DENSE_CUTOFF):
    """Top-k (and bottom) eigenvalues of the symmetric operator matrix.

    Dense solve below the cutoff; above it, shift-invert Lanczos around 1
    for the top cluster plus one Lanczos run for the spectral floor.
    """
    mat = operator.matrix
    n = mat.shape[0]
    k = min(k, n)
    if n <= dense_cutoff:
        vals = scipy.linalg.eigh(mat.toarray(), eigvals_only=True)
        desc = vals[::-1]
        return SpectralReport(eigenvalues=desc[:k], h=operator.h, n_total=n,
                              truncated=(k < n), bottom=float(vals[0]))
    try:
        top = spla.eigsh(mat.tocsc(), k=k, sigma=1.0 + 1e-5, which="LM",
                         return_eigenvectors=False)
        bottom = spla.eigsh(mat, k=1, which="SA",
                            return_eigenvectors=False)
    except spla.ArpackNoConvergence as exc:
        raise NoConvergence(str(exc)) from exc
    desc = np.sort(top)[::-1]
    return SpectralReport(eigenvalues=desc, h=operator.h, n_total=n,
                          truncated=True, bottom=float(bottom[0]))


def weyl_count(report, lam, h):
    """Eigenvalues of M_h in [1 - h^2 lam, 1], with multiplicity."""
    cut = 1.0 - h * h * lam
    if report.truncated and report.eigenvalues[-1] > cut:
        raise NoConvergence(
            "spectral report truncated above the requested counting cut")
    return int(np.count_nonzero(report.eigenvalues >= cut - 1e-12))


@dataclass
class LaplacianMatrix:
    stiffness: sp.csr_matrix      # symmetric PSD, constants in the kernel
    grid: Grid

    @property
    def mass(self):
        return self.grid.cell_volume


def assemble_laplacian(polytope, family, grid):
    """Galerkin assembly of the family Dirichlet form with snapped
    directional differences.  Cells with no admissible neighbor in a
    direction contribute nothing there (variational Neumann condition)."""
    if isinstance(family, ContinuousFamily):
        family = family.reduce()
    s = grid.spacing
    n = grid.size
    d = grid.dim
    rows, cols, data = [], [], []
    touched = np.zeros(n, dtype=bool)
    for e, w in zip(family.vectors, family.weights):
        norm_e = float(np.linalg.norm(e))
        unit = np.asarray(e, dtype=float) / norm_e
        offset = np.floor(0.5 + unit).astype(np.int64)
        if not np.any(offset):
            i = int(np.argmax(np.abs(unit)))
            offset[i] = 1 if unit[i] > 0 else -1
        gap = s * float(np.linalg.norm(offset))
        neighbor = grid.lookup(grid.indices + offset)
        mask = neighbor >= 0
        if not np.any(mask):
            continue
        c = np.arange(n)[mask]
        nb = neighbor[mask]
        touched[c] = True
        touched[nb] = True
        coef = w * (norm_e ** 2) * grid.cell_volume / (6.0 * gap * gap)
        rows.extend([c, nb, c, nb])
        cols.extend([c, nb, nb, c])
        data.extend([np.full(len(c), coef), np.full(len(c), coef),
                     np.full(len(c), -coef), np.full(len(c), -coef)])
    if not np.all(touched):
        raise DisconnectedStencil(
            f"{int((~touched).sum())} cells have no stencil neighbor")
    a = sp.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    ).tocsr()
    return LaplacianMatrix(stiffness=a, grid=grid)


def neumann_spectrum(laplacian, k=None, cluster_rel_tol=1e-3):
    """Generalized eigenvalues nu of A v = nu (s^d I) v, ascending, with
    tolerance-grouped multiplicities."""
    a = laplacian.stiffness.toarray() / laplacian.mass
    vals = scipy.linalg.eigh(a, eigvals_only=True)
    vals = np.maximum(vals, 0.0)  # clip -1e-14 round-off in the kernel
    if k is not None:
        vals = vals[:k]
    groups = []
    current = [vals[0]]
    for v in vals[1:]:
        if v - current[-1] <= max(1e-9, cluster_rel_tol * max(v, 1e-9)):
            current.append(v)
        else:
            groups.append(current)
            current = [v]
    groups.append(current)
    clusters = [(float(np.mean(g)), len(g)) for g in groups]
    return vals, clusters


def dirichlet_form_bh(u, v, polytope, family, h, grid, t_nodes=8):
    """Bilinear form of (1 - M_h): midpoint quadrature in x over grid cells,
    Gauss-Legendre in the chord parameter with exact chord limits."""
    if isinstance(family, ContinuousFamily):
        family = family.reduce()
    nodes, weights = np.polynomial.legendre.leggauss(t_nodes)
    centers = grid.centers
    ux = np.array([u(x) for x in centers])
    vx = np.array([v(x) for x in centers])
    total = 0.0
    for e, w in zip(family.vectors, family.weights):
        lo, hi = _chord_bounds(polytope, centers, e, h)
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        valid = half > 0
        acc = np.zeros(len(centers))
        for tq, wq in zip(nodes, weights):
            t = mid + half * tq          # chord parameter in [-1, 1]
            pts = centers + (h * t)[:, None] * np.asarray(e, dtype=float)
            du = ux - np.array([u(p) for p in pts])
            dv = vx - np.array([v(p) for p in pts])
            acc += wq * du * np.conj(dv)
        acc *= half * h                  # dt = h * dtau, scaled to the chord
        total += w * np.sum(acc[valid]) * grid.cell_volume / (4.0 * h)
    return total


def iterated_form(operator, u, k=1):
    """< (1 - M_h^k) u, u > with cell-volume weights, via matrix powers."""
    vec = np.asarray(u, dtype=float)
    w = vec.copy()
    for _ in range(k):
        w = operator.matrix @ w
    return float((vec - w) @ vec) * operator.grid.cell_volume


def resolvent_error(polytope, family, z, g, h, grid):
    """L2 distance between the resolvents of (1 - M_h)/h^2 and of the
    assembled limit Laplacian, applied to g on the same grid."""
    op = assemble_metropolis(polytope, family, h, grid)
    lap = assemble_laplacian(polytope, family, grid)
    n = grid.size
    gv = np.array([g(x) for x in grid.centers], dtype=float)
    ident = sp.identity(n, format="csr")
    try:
        a1 = ((ident - op.matrix) / h ** 2 - z * ident).tocsc()
        f_h = spla.spsolve(a1, gv)
        a2 = (lap.stiffness / lap.mass - z * ident).tocsc()
        f = spla.spsolve(a2, gv)
    except Exception as exc:  # singular factorization etc.
        raise SolverFailure(str(exc)) from exc
    if np.any(~np.isfinite(f_h)) or np.any(~np.isfinite(f)):
        raise SolverFailure("non-finite resolvent solution")
    return float(np.sqrt(np.sum((f_h - f) ** 2) * grid.cell_volume))


def minorization_check(operator, h, c2, n_max=12):
    """Smallest N <= n_max such that the N-step kernel dominates a uniform
    density on |x - y| < c2 h, and the best constant c1."""
    grid = operator.grid
    pts = grid.centers
    diff = pts[:, None, :] - pts[None, :, :]
    mask = np.einsum("ijk,ijk->ij", diff, diff) < (c2 * h) ** 2
    dense = operator.dense()
    power = np.eye(grid.size)
    for n_steps in range(1, n_max + 1):
        power = power @ dense
        local_min = power[mask].min()
        if local_min > 0.0:
            c1 = (h ** grid.dim) * local_min / grid.cell_volume
            return n_steps, float(c1)
    raise MinorizationNotFound(n_max)
