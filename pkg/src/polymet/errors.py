"""Exception hierarchy shared by all polymet modules."""


class PolymetError(Exception):
    """Base class for all errors raised by this package."""


# geometry
class DegenerateForm(PolymetError):
    """A constraint has a zero coefficient vector."""


class EmptyPolytope(PolymetError):
    """The half-space intersection has empty interior."""


class Unbounded(PolymetError):
    """The half-space intersection is unbounded."""


class ZeroDirection(PolymetError):
    """A direction vector is (numerically) zero."""


class TooManySubsets(PolymetError):
    """Face enumeration would require too many active-set candidates."""


class LPFailure(PolymetError):
    """The internal simplex solver failed to reach a conclusive status."""


# chain
class InvalidStart(PolymetError):
    """Chain start point is not strictly inside the polytope."""


class BadSize(PolymetError):
    """Invalid problem size parameter (e.g. doubly stochastic N < 2)."""


class SamplerBoundViolated(PolymetError):
    """Observed density value exceeds the declared rejection-sampling bound."""


# spectral
class TooManyCells(PolymetError):
    """Grid would exceed the configured cell cap."""


class ResolutionTooCoarse(PolymetError):
    """Grid spacing is too coarse relative to the proposal scale."""


class NoConvergence(PolymetError):
    """Iterative eigensolver did not converge."""


class DisconnectedStencil(PolymetError):
    """Some grid cell has no admissible neighbor in any direction."""


class SolverFailure(PolymetError):
    """Linear solve failed."""


class MinorizationNotFound(PolymetError):
    """No iterate up to N_max admits a uniform local lower bound."""

    def __init__(self, n_max):
        super().__init__(f"no uniform minorization found for N <= {n_max}")
        self.n_max = n_max


# diagnostics
class TooFewReplicas(PolymetError):
    """Not enough replicas per histogram bin for a stable TV estimate."""


class WindowDegenerate(PolymetError):
    """Rate-fit window contains no usable (positive) TV values."""


# cli / config
class ConfigError(PolymetError):
    """Invalid or unparseable experiment configuration."""
