"""Convex polytopes in H-representation and direction families.

A polytope is the open set ``{x : forms[j] @ x > offsets[j] for all j}``.
Everything here works in *intrinsic* coordinates; an optional affine
embedding maps intrinsic points to ambient ones (used by the doubly
stochastic case, where the polytope lives in an affine subspace).
"""

import itertools
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ._simplex import INFEASIBLE, OPTIMAL, UNBOUNDED, solve_lp
from .errors import (
    DegenerateForm,
    EmptyPolytope,
    TooManySubsets,
    Unbounded,
    ZeroDirection,
)

DEFAULT_TOL = 1e-9
FACE_MARGIN_TOL = 1e-8
SUBSET_GUARD = 10**6


@dataclass(frozen=True)
class AffineEmbedding:
    """x_ambient = matrix @ x_intrinsic + offset."""

    matrix: np.ndarray
    offset: np.ndarray

    def to_ambient(self, x):
        return self.matrix @ np.asarray(x, dtype=float) + self.offset

    def from_ambient(self, y):
        rhs = np.asarray(y, dtype=float) - self.offset
        sol, *_ = np.linalg.lstsq(self.matrix, rhs, rcond=None)
        return sol


@dataclass(frozen=True)
class Polytope:
    forms: np.ndarray        # (m, d)
    offsets: np.ndarray      # (m,)
    normals: np.ndarray      # (m, d), unit inward normals
    interior_point: np.ndarray
    bounding_box: tuple      # (lo, hi) arrays
    embedding: AffineEmbedding | None = None

    @property
    def num_forms(self):
        return self.forms.shape[0]

    @property
    def intrinsic_dim(self):
        return self.forms.shape[1]

    @property
    def ambient_dim(self):
        if self.embedding is None:
            return self.intrinsic_dim
        return self.embedding.matrix.shape[0]

    def diameter(self):
        lo, hi = self.bounding_box
        return float(np.linalg.norm(hi - lo))

    def to_ambient(self, x):
        if self.embedding is None:
            return np.asarray(x, dtype=float)
        return self.embedding.to_ambient(x)


def build_polytope(forms, offsets, embedding=None):
    """Validate an H-representation and derive normals, an interior witness
    and a certified bounding box.

    Raises DegenerateForm, Unbounded or EmptyPolytope on bad input.
    """
    forms = np.atleast_2d(np.asarray(forms, dtype=float))
    offsets = np.asarray(offsets, dtype=float)
    if forms.shape[0] != offsets.size:
        raise ValueError("forms/offsets length mismatch")
    norms = np.linalg.norm(forms, axis=1)
    if np.any(norms < 1e-14):
        raise DegenerateForm("zero coefficient vector")
    m, d = forms.shape

    # Bounding box by per-coordinate LPs over the closure, x split as u - v.
    lo = np.empty(d)
    hi = np.empty(d)
    a_ub = np.hstack([-forms, forms])  # -L u + L v <= -b
    b_ub = -offsets
    for i in range(d):
        for sign, target in ((1.0, hi), (-1.0, lo)):
            c = np.zeros(2 * d)
            c[i] = sign
            c[d + i] = -sign
            sol = solve_lp(c, a_ub=a_ub, b_ub=b_ub)
            if sol.status == UNBOUNDED:
                raise Unbounded(f"coordinate {i} is unbounded")
            if sol.status == INFEASIBLE:
                raise EmptyPolytope("closure is empty")
            target[i] = sign * sol.value

    # Interior witness: max-margin (Chebyshev-style) point inside the box.
    width = np.maximum(hi - lo, 0.0)
    eps_cap = 1.0 + float(width.max(initial=0.0))
    # vars: y (shifted coords, y >= 0), eps >= 0
    rows = []
    rhs = []
    for j in range(m):
        row = np.zeros(d + 1)
        row[:d] = -forms[j]
        row[d] = norms[j]
        rows.append(row)
        rhs.append(float(forms[j] @ lo - offsets[j]))
    for i in range(d):
        row = np.zeros(d + 1)
        row[i] = 1.0
        rows.append(row)
        rhs.append(float(width[i]))
    row = np.zeros(d + 1)
    row[d] = 1.0
    rows.append(row)
    rhs.append(eps_cap)
    c = np.zeros(d + 1)
    c[d] = 1.0
    sol = solve_lp(c, a_ub=np.vstack(rows), b_ub=np.array(rhs))
    if sol.status != OPTIMAL or sol.value <= DEFAULT_TOL:
        raise EmptyPolytope("no interior point found")
    witness = lo + sol.x[:d]

    return Polytope(
        forms=forms,
        offsets=offsets,
        normals=forms / norms[:, None],
        interior_point=witness,
        bounding_box=(lo, hi),
        embedding=embedding,
    )


def contains(polytope, x):
    """Strict membership: every constraint holds with strict inequality."""
    x = np.asarray(x, dtype=float)
    if polytope.embedding is not None and x.size == polytope.ambient_dim:
        x = polytope.embedding.from_ambient(x)
    return bool(np.all(polytope.forms @ x > polytope.offsets))


def activity_count(polytope, x, tol=DEFAULT_TOL):
    """Number of active constraints at x; 0 inside, inf outside the closure."""
    x = np.asarray(x, dtype=float)
    slack = polytope.forms @ x - polytope.offsets
    if np.any(slack < -tol):
        return math.inf
    return int(np.count_nonzero(np.abs(slack) <= tol))


class Incidence(Enum):
    STRICTLY_INCOMING = "strictly_incoming"
    INCOMING = "incoming"
    PARALLEL = "parallel"
    STRICTLY_OUTGOING = "strictly_outgoing"


@dataclass(frozen=True)
class DirectionClass:
    kind: Incidence
    inner: float

    @property
    def is_incoming(self):
        """Non-strict: parallel or (strictly) incoming."""
        return self.kind in (Incidence.STRICTLY_INCOMING, Incidence.PARALLEL,
                             Incidence.INCOMING)


def classify_direction(polytope, u, k, tol=DEFAULT_TOL):
    """Classify direction u against the k-th facet hyperplane."""
    u = np.asarray(u, dtype=float)
    if np.linalg.norm(u) < 1e-14:
        raise ZeroDirection("cannot classify the zero vector")
    inner = float(polytope.normals[k] @ u)
    if inner > tol:
        kind = Incidence.STRICTLY_INCOMING
    elif inner < -tol:
        kind = Incidence.STRICTLY_OUTGOING
    else:
        kind = Incidence.PARALLEL
    return DirectionClass(kind, inner)


@dataclass(frozen=True)
class Chord:
    lo: float
    hi: float

    @property
    def length(self):
        return max(0.0, self.hi - self.lo)

    @property
    def keep_mass(self):
        """K_h applied to the constant function 1 along this direction."""
        return self.length / 2.0


def chord_interval(polytope, x, e, h):
    """Open interval {t in [-1, 1] : x + h t e inside the polytope}.

    Closed form from the constraint ratios; a single interval because the
    polytope is an intersection of open half-spaces.
    """
    x = np.asarray(x, dtype=float)
    e = np.asarray(e, dtype=float)
    vals = polytope.forms @ x - polytope.offsets
    rates = h * (polytope.forms @ e)
    lo, hi = -1.0, 1.0
    for v, a in zip(vals, rates):
        if a > 0.0:
            lo = max(lo, -v / a)
        elif a < 0.0:
            hi = min(hi, -v / a)
        elif v <= 0.0:
            return Chord(0.0, 0.0)  # constraint violated for every t
    return Chord(lo, hi) if lo < hi else Chord(0.0, 0.0)


@dataclass(frozen=True)
class Face:
    active: tuple            # sorted constraint indices
    witness: np.ndarray      # point in the relative interior
    margin: float            # LP margin of the inactive constraints

    @property
    def codim(self):
        return len(self.active)


def _subset_budget(m, max_codim):
    total = 0
    for k in range(1, max_codim + 1):
        total += math.comb(m, k)
        if total > SUBSET_GUARD:
            return total
    return total


def enumerate_faces(polytope, max_codim=None, tol=FACE_MARGIN_TOL):
    """All nonempty relatively-open faces with active-set size <= max_codim.

    Each candidate active set is tested with a max-margin LP; the LP optimum
    doubles as a witness in the relative interior of the face.
    """
    m, d = polytope.forms.shape
    if max_codim is None:
        max_codim = m
    max_codim = min(max_codim, m)
    if _subset_budget(m, max_codim) > SUBSET_GUARD:
        raise TooManySubsets(f"C({m}, <= {max_codim}) exceeds the guard")

    lo, hi = polytope.bounding_box
    width = np.maximum(hi - lo, 0.0)
    eps_cap = 1.0 + float(width.max(initial=0.0))
    faces = []
    for k in range(1, max_codim + 1):
        for subset in itertools.combinations(range(m), k):
            inactive = [j for j in range(m) if j not in subset]
            # vars: y = x - lo >= 0, eps >= 0; maximize eps
            a_eq = np.zeros((k, d + 1))
            b_eq = np.zeros(k)
            for r, i in enumerate(subset):
                a_eq[r, :d] = polytope.forms[i]
                b_eq[r] = polytope.offsets[i] - polytope.forms[i] @ lo
            n_ub = len(inactive) + d + 1
            a_ub = np.zeros((n_ub, d + 1))
            b_ub = np.zeros(n_ub)
            for r, j in enumerate(inactive):
                a_ub[r, :d] = -polytope.forms[j]
                a_ub[r, d] = 1.0
                b_ub[r] = polytope.forms[j] @ lo - polytope.offsets[j]
            for i in range(d):
                a_ub[len(inactive) + i, i] = 1.0
                b_ub[len(inactive) + i] = width[i]
            a_ub[-1, d] = 1.0
            b_ub[-1] = eps_cap
            c = np.zeros(d + 1)
            c[d] = 1.0
            sol = solve_lp(c, a_ub=a_ub, b_ub=b_ub, a_eq=a_eq, b_eq=b_eq)
            if sol.status == OPTIMAL and sol.value > tol:
                faces.append(Face(active=tuple(subset),
                                  witness=lo + sol.x[:d],
                                  margin=float(sol.value)))
    return faces


@dataclass(frozen=True)
class DiscreteFamily:
    """Finite list of move directions with mixture weights (uniform unless
    the family came from a quadrature reduction)."""

    vectors: np.ndarray              # (p, d)
    weights: np.ndarray | None = None

    def __post_init__(self):
        vectors = np.atleast_2d(np.asarray(self.vectors, dtype=float))
        object.__setattr__(self, "vectors", vectors)
        if np.any(np.linalg.norm(vectors, axis=1) < 1e-14):
            raise ZeroDirection("family contains a zero vector")
        if self.weights is None:
            w = np.full(len(vectors), 1.0 / len(vectors))
        else:
            w = np.asarray(self.weights, dtype=float)
            if w.size != len(vectors) or np.any(w < 0):
                raise ValueError("bad weight vector")
            w = w / w.sum()
        object.__setattr__(self, "weights", w)

    @property
    def size(self):
        return len(self.vectors)

    @property
    def dim(self):
        return self.vectors.shape[1]

    def check_vectors(self):
        """Vectors used by the weakly-incoming test."""
        return self.vectors


@dataclass(frozen=True)
class ContinuousFamily:
    """Spherical direction family with density rho on S^{d-1}.

    The weakly-incoming check uses the declared witness vectors (which must
    lie in supp(rho)); operator assembly reduces the family to quadrature
    directions with weights proportional to rho.
    """

    dim: int
    density: object                  # callable unit vector -> float
    witnesses: np.ndarray
    sampler: object = None           # callable rng -> unit vector, optional
    density_bound: float | None = None
    quadrature_count: int = 64
    _quad_cache: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        witnesses = np.atleast_2d(np.asarray(self.witnesses, dtype=float))
        object.__setattr__(self, "witnesses", witnesses)
        for w in witnesses:
            if np.linalg.norm(w) < 1e-14:
                raise ZeroDirection("zero witness vector")
            if self.density(w / np.linalg.norm(w)) <= 0:
                raise ValueError("witness vector outside supp(rho)")
        nodes, weights = self.quadrature()
        total = weights.sum()
        if abs(total - 1.0) > 1e-6:
            raise ValueError(f"density does not integrate to 1 (got {total})")

    def quadrature(self, q=None):
        """Quadrature nodes on the sphere with weights proportional to rho,
        exact for the uniform density (weights then sum to 1 exactly)."""
        q = q or self.quadrature_count
        if q in self._quad_cache:
            return self._quad_cache[q]
        if self.dim == 2:
            angles = (np.arange(q) + 0.5) * (2.0 * np.pi / q)
            nodes = np.column_stack([np.cos(angles), np.sin(angles)])
            weights = np.array([self.density(n) for n in nodes])
            weights = weights * (2.0 * np.pi / q)
        elif self.dim == 3:
            # Gauss-Legendre in the polar cosine, trapezoid in azimuth.
            n_z = max(2, int(round(math.sqrt(q))))
            n_phi = max(4, int(math.ceil(q / n_z)))
            z, wz = np.polynomial.legendre.leggauss(n_z)
            phi = (np.arange(n_phi) + 0.5) * (2.0 * np.pi / n_phi)
            nodes = []
            weights = []
            for zi, wi in zip(z, wz):
                r = math.sqrt(max(0.0, 1.0 - zi * zi))
                for ph in phi:
                    n = np.array([r * math.cos(ph), r * math.sin(ph), zi])
                    nodes.append(n)
                    weights.append(wi * (2.0 * np.pi / n_phi) * self.density(n))
            nodes = np.array(nodes)
            weights = np.array(weights)
        else:
            raise NotImplementedError("sphere quadrature only for d in {2, 3}")
        self._quad_cache[q] = (nodes, weights)
        return nodes, weights

    def reduce(self, q=None):
        """Quadrature reduction to a weighted discrete family."""
        nodes, weights = self.quadrature(q)
        return DiscreteFamily(nodes, weights)

    def check_vectors(self):
        return self.witnesses

    @property
    def size(self):
        return len(self.witnesses)


def uniform_sphere_family(dim, quadrature_count=64, witnesses=None):
    """Uniform density on S^{d-1} with a Gaussian-normalization sampler."""
    area = 2.0 * math.pi ** (dim / 2.0) / math.gamma(dim / 2.0)
    density = lambda e: 1.0 / area

    def sampler(rng):
        g = rng.standard_normal(dim)
        return g / np.linalg.norm(g)

    if witnesses is None:
        witnesses = np.eye(dim)
    return ContinuousFamily(dim=dim, density=density, witnesses=witnesses,
                            sampler=sampler, density_bound=1.0 / area,
                            quadrature_count=quadrature_count)


@dataclass(frozen=True)
class FaceCertificate:
    face: Face
    direction: np.ndarray
    sign: float


@dataclass(frozen=True)
class WeaklyIncomingResult:
    ok: bool
    witness_face: Face | None
    certificates: tuple

    def __bool__(self):
        return self.ok


def is_weakly_incoming(polytope, family, tol=DEFAULT_TOL, max_codim=None):
    """Face-wise weakly-incoming check.

    For each nonempty face with active set I there must be a signed family
    direction with non-negative inner product against every active normal
    and a strictly positive one against at least one.  That first-order
    condition is equivalent, for polytopes, to the activity count dropping
    along a short segment from any point of the face.
    """
    vectors = family.check_vectors()
    faces = enumerate_faces(polytope, max_codim=max_codim)
    certificates = []
    for face in faces:
        normals = polytope.normals[list(face.active)]
        found = None
        for e in vectors:
            for sign in (1.0, -1.0):
                inner = normals @ (sign * e)
                if np.all(inner >= -tol) and np.any(inner > tol):
                    found = FaceCertificate(face, e, sign)
                    break
            if found:
                break
        if found is None:
            return WeaklyIncomingResult(False, face, tuple(certificates))
        certificates.append(found)
    return WeaklyIncomingResult(True, None, tuple(certificates))


def span_check(family, tol=1e-9):
    """True iff the (witness) vectors span the intrinsic space."""
    vectors = np.atleast_2d(family.check_vectors())
    rank = np.linalg.matrix_rank(vectors, tol=tol)
    return int(rank) == vectors.shape[1]


# Handy builtin shapes used throughout the tests and the CLI.

def unit_square():
    return build_polytope(
        [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]],
        [0.0, 0.0, -1.0, -1.0],
    )


def unit_cube(d):
    forms = np.vstack([np.eye(d), -np.eye(d)])
    offsets = np.concatenate([np.zeros(d), -np.ones(d)])
    return build_polytope(forms, offsets)


SQRT3 = math.sqrt(3.0)


def equilateral_triangle():
    """Vertices A=(0, sqrt(3)), B=(-1, 0), C=(1, 0)."""
    return build_polytope(
        [[0.0, 1.0], [SQRT3, -1.0], [-SQRT3, -1.0]],
        [0.0, -SQRT3, -SQRT3],
    )


def angle_family(angles_deg):
    """Unit directions at the given polar angles (degrees)."""
    ang = np.deg2rad(np.asarray(angles_deg, dtype=float))
    return DiscreteFamily(np.column_stack([np.cos(ang), np.sin(ang)]))


def canonical_family(d):
    return DiscreteFamily(np.eye(d))
