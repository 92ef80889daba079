"""Local Metropolis chain on a convex polytope.

One step: pick a family direction (uniform index for a finite family, a
density draw for a spherical one), pick u uniform in [-h, h], propose
x + u e and keep it iff it stays strictly inside the polytope.  The uniform
measure on the polytope is stationary.
"""

import csv
import itertools
from dataclasses import dataclass

import numpy as np

from .errors import BadSize, InvalidStart, SamplerBoundViolated
from .geometry import (
    AffineEmbedding,
    ContinuousFamily,
    DiscreteFamily,
    build_polytope,
    chord_interval,
    contains,
)


@dataclass(frozen=True)
class ChainConfig:
    h: float
    seed: int = 0
    thinning: int = 1
    burn_in: int = 0

    def __post_init__(self):
        if self.h <= 0:
            raise ValueError("h must be positive")
        if self.thinning < 1:
            raise ValueError("thinning must be >= 1")
        if self.burn_in < 0:
            raise ValueError("burn_in must be >= 0")


@dataclass
class Trajectory:
    start: np.ndarray
    states: np.ndarray          # (k, d) recorded states, intrinsic coords
    accepted: int
    steps: int

    @property
    def acceptance_rate(self):
        return self.accepted / self.steps if self.steps else 0.0

    def to_csv(self, path):
        """Columns: step, x1..xd, accepted-so-far flag is omitted; the
        per-row acceptance indicator is whether the state changed."""
        d = self.states.shape[1] if self.states.size else self.start.size
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["step"] + [f"x{i + 1}" for i in range(d)]
                            + ["accepted"])
            prev = None
            for i, row in enumerate(self.states):
                moved = 0 if prev is None else int(not np.array_equal(row, prev))
                writer.writerow([i] + [repr(float(v)) for v in row] + [moved])
                prev = row


def draw_direction(family, rng):
    """Draw one direction from the family's mixing measure."""
    if isinstance(family, DiscreteFamily):
        j = int(rng.integers(family.size))
        return family.vectors[j]
    if family.sampler is not None:
        e = np.asarray(family.sampler(rng), dtype=float)
        return e / np.linalg.norm(e)
    # Rejection sampling against the uniform sphere measure.
    if family.density_bound is None:
        raise ValueError("continuous family needs a sampler or density bound")
    bound = family.density_bound
    for _ in range(100000):
        g = rng.standard_normal(family.dim)
        e = g / np.linalg.norm(g)
        rho = family.density(e)
        if rho > bound * (1.0 + 1e-12):
            raise SamplerBoundViolated(
                f"rho(e)={rho} exceeds declared bound {bound}")
        if rng.uniform() * bound <= rho:
            return e
    raise SamplerBoundViolated("rejection sampler starved (bound too large?)")


def metropolis_step(polytope, family, h, x, rng):
    """One kernel draw.  Returns (next state, accepted flag, direction)."""
    x = np.asarray(x, dtype=float)
    if not contains(polytope, x):
        raise InvalidStart("state is not strictly inside the polytope")
    e = draw_direction(family, rng)
    u = rng.uniform(-h, h)
    y = x + u * e
    if contains(polytope, y):
        return y, True, e
    return x, False, e


def rejection_mass(polytope, family, h, x):
    """Exact holding probability m_h(x) from the chord lengths."""
    if isinstance(family, ContinuousFamily):
        family = family.reduce()
    total = 0.0
    for e, w in zip(family.vectors, family.weights):
        total += w * chord_interval(polytope, x, e, h).keep_mass
    return 1.0 - total


def run_chain(polytope, family, config, x0, n):
    """Run n sequential steps; deterministic for a fixed (seed, inputs).

    Records every ``thinning``-th state after ``burn_in``; the start state is
    always recorded first (so n=0 yields a single-row trajectory).
    """
    x0 = np.asarray(x0, dtype=float)
    if not contains(polytope, x0):
        raise InvalidStart("start point is not strictly inside the polytope")
    rng = np.random.default_rng(config.seed)
    h = config.h

    if isinstance(family, DiscreteFamily):
        return _run_discrete(polytope, family, config, x0, n, rng)

    x = x0.copy()
    states = [x0.copy()]
    accepted = 0
    for step in range(1, n + 1):
        x, ok, _ = metropolis_step(polytope, family, h, x, rng)
        accepted += ok
        if step > config.burn_in and (step - config.burn_in) % config.thinning == 0:
            states.append(x.copy())
    return Trajectory(x0, np.array(states), accepted, n)


def _run_discrete(polytope, family, config, x0, n, rng):
    # Hot loop on plain Python floats; numpy per-step overhead dominates
    # otherwise for long desk-scale runs.
    h = config.h
    d = x0.size
    forms = [list(map(float, row)) for row in polytope.forms]
    offs = [float(b) for b in polytope.offsets]
    vecs = [list(map(float, v)) for v in family.vectors]
    x = list(map(float, x0))
    states = [tuple(x)]
    accepted = 0
    chunk = 1 << 16
    step = 0
    burn_in, thinning = config.burn_in, config.thinning
    while step < n:
        k = min(chunk, n - step)
        idx = rng.integers(family.size, size=k)
        us = rng.uniform(-h, h, size=k)
        for j, u in zip(idx, us):
            step += 1
            e = vecs[j]
            y = [x[i] + u * e[i] for i in range(d)]
            ok = True
            for row, b in zip(forms, offs):
                s = 0.0
                for i in range(d):
                    s += row[i] * y[i]
                if s <= b:
                    ok = False
                    break
            if ok:
                x = y
                accepted += 1
            if step > burn_in and (step - burn_in) % thinning == 0:
                states.append(tuple(x))
    return Trajectory(x0, np.array(states), accepted, n)


def run_ensemble(polytope, family, h, x0, checkpoints, replicas, rng):
    """Vectorized independent replicas of the same chain.

    Returns {n: (replicas, d) array of states after n steps} for each n in
    ``checkpoints``.  Used for empirical distribution estimates.
    """
    x0 = np.asarray(x0, dtype=float)
    if not contains(polytope, x0):
        raise InvalidStart("start point is not strictly inside the polytope")
    if isinstance(family, ContinuousFamily):
        raise NotImplementedError("ensemble runner requires a discrete family")
    checkpoints = sorted(set(int(n) for n in checkpoints))
    lt = polytope.forms.T
    offsets = polytope.offsets
    vectors = family.vectors
    out = {}
    x = np.tile(x0, (replicas, 1))
    step = 0
    if checkpoints and checkpoints[0] == 0:
        out[0] = x.copy()
        checkpoints = checkpoints[1:]
    for target in checkpoints:
        while step < target:
            step += 1
            j = rng.integers(family.size, size=replicas)
            u = rng.uniform(-h, h, size=replicas)
            y = x + u[:, None] * vectors[j]
            ok = np.all(y @ lt > offsets, axis=1)
            x[ok] = y[ok]
        out[target] = x.copy()
    return out


def birkhoff_moves(N):
    """All sign-distinct margin-preserving 2x2 minor moves F(i1,i2,j1,j2),
    as full N x N matrices."""
    moves = []
    for i1, i2 in itertools.combinations(range(N), 2):
        for j1, j2 in itertools.combinations(range(N), 2):
            f = np.zeros((N, N))
            f[i1, j1] = 1.0
            f[i1, j2] = -1.0
            f[i2, j1] = -1.0
            f[i2, j2] = 1.0
            moves.append(f)
    return moves


def birkhoff(N):
    """Doubly stochastic N x N matrices as a polytope in intrinsic
    coordinates (the upper-left (N-1) x (N-1) block), plus the move family.

    The affine embedding completes the last row and column from the margin
    constraints, so intrinsic trajectories preserve all row/column sums
    exactly by construction.
    """
    if N < 2:
        raise BadSize("need N >= 2")
    d = (N - 1) ** 2

    def block_form(coef_block, const):
        # a_ij expressed as (form @ y + const); constraint a_ij > 0 means
        # form @ y > -const.
        return coef_block.reshape(d), -const

    forms = []
    offsets = []
    emb_rows = []
    emb_offs = []
    for i in range(N):
        for j in range(N):
            coef = np.zeros((N - 1, N - 1))
            if i < N - 1 and j < N - 1:
                coef[i, j] = 1.0
                const = 0.0
            elif i < N - 1:          # last column: 1 - row sum of the block
                coef[i, :] = -1.0
                const = 1.0
            elif j < N - 1:          # last row: 1 - column sum of the block
                coef[:, j] = -1.0
                const = 1.0
            else:                    # corner: 2 - N + total block sum
                coef[:, :] = 1.0
                const = 2.0 - N
            row, off = block_form(coef, const)
            forms.append(row)
            offsets.append(off)
            emb_rows.append(row.copy())
            emb_offs.append(const)

    embedding = AffineEmbedding(np.array(emb_rows), np.array(emb_offs))
    polytope = build_polytope(np.array(forms), np.array(offsets),
                              embedding=embedding)
    vectors = np.array([f[: N - 1, : N - 1].reshape(d) for f in birkhoff_moves(N)])
    return polytope, DiscreteFamily(vectors)


def embed_trajectory(polytope, trajectory):
    """Map recorded intrinsic states through the affine embedding."""
    if polytope.embedding is None:
        return trajectory.states
    return trajectory.states @ polytope.embedding.matrix.T + polytope.embedding.offset
