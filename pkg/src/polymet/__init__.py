"""Local Metropolis chains on convex polytopes: geometry checks, sampling,
operator spectra and mixing diagnostics."""

from .chain import (
    ChainConfig,
    Trajectory,
    birkhoff,
    draw_direction,
    metropolis_step,
    rejection_mass,
    run_chain,
)
from .diagnostics import TVCurve, fit_rate, gap_sweep, tv_empirical, tv_exact
from .geometry import (
    ContinuousFamily,
    DirectionClass,
    DiscreteFamily,
    Face,
    Polytope,
    activity_count,
    build_polytope,
    chord_interval,
    classify_direction,
    contains,
    enumerate_faces,
    is_weakly_incoming,
    span_check,
    uniform_sphere_family,
)
from .spectral import (
    Grid,
    LaplacianMatrix,
    OperatorMatrix,
    SpectralReport,
    assemble_laplacian,
    assemble_metropolis,
    dirichlet_form_bh,
    discretize,
    minorization_check,
    neumann_spectrum,
    resolvent_error,
    spectrum,
    weyl_count,
)

__version__ = "0.1.0"
