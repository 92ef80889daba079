"""Shared fixtures.  The heavy operator assemblies and dense eigensolves are
session-scoped so the acceptance suite and the unit tests reuse them."""

import numpy as np
import pytest

from polymet import spectral
from polymet.geometry import (
    angle_family,
    canonical_family,
    equilateral_triangle,
    uniform_sphere_family,
    unit_square,
)

SQUARE_H_LIST = (0.4, 0.2, 0.1)


@pytest.fixture(scope="session")
def square():
    return unit_square()


@pytest.fixture(scope="session")
def e0():
    return canonical_family(2)


@pytest.fixture(scope="session")
def triangle():
    return equilateral_triangle()


@pytest.fixture(scope="session")
def tri_passing():
    return angle_family([30.0, 90.0, 150.0])


@pytest.fixture(scope="session")
def tri_failing():
    # Covers the two base-vertex cones but misses the apex cone entirely.
    return angle_family([10.0, 135.0])


@pytest.fixture(scope="session")
def sphere_family():
    return uniform_sphere_family(2, quadrature_count=64)


@pytest.fixture(scope="session")
def square_ops(square, e0):
    """(grid, operator) for the square/axis family at s = h/8."""
    out = {}
    for h in SQUARE_H_LIST:
        grid = spectral.discretize(square, h / 8.0)
        out[h] = (grid, spectral.assemble_metropolis(square, e0, h, grid))
    return out


@pytest.fixture(scope="session")
def square_reports(square_ops):
    return {h: spectral.spectrum(op, k=60) for h, (_, op) in square_ops.items()}


@pytest.fixture(scope="session")
def square_neumann(square, e0):
    grid = spectral.discretize(square, 1.0 / 64.0)
    lap = spectral.assemble_laplacian(square, e0, grid)
    return spectral.neumann_spectrum(lap, k=8)


@pytest.fixture(scope="session")
def sphere_ops(square, sphere_family):
    out = {}
    for h in (0.2, 0.1):
        grid = spectral.discretize(square, h / 8.0)
        out[h] = (grid, spectral.assemble_metropolis(square, sphere_family,
                                                     h, grid))
    return out


@pytest.fixture(scope="session")
def sphere_reports(sphere_ops):
    return {h: spectral.spectrum(op, k=8, dense_cutoff=2000)
            for h, (_, op) in sphere_ops.items()}


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260823)
