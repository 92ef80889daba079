import math

import numpy as np
import pytest

from polymet import diagnostics, spectral
from polymet.errors import TooFewReplicas, WindowDegenerate


@pytest.fixture(scope="module")
def tv_setup(square, e0):
    grid = spectral.discretize(square, 1.0 / 16.0)
    op = spectral.assemble_metropolis(square, e0, 0.2, grid,
                                      enforce_resolution=False)
    start = int(np.argmin(np.linalg.norm(grid.centers - 0.5, axis=1)))
    return grid, op, start


def test_tv_exact_monotone_from_point_mass(tv_setup):
    _, op, start = tv_setup
    curve = diagnostics.tv_exact(op, start, 120)
    assert curve.values[0] == pytest.approx(1.0 - 1.0 / op.size)
    assert np.all(np.diff(curve.values) <= 1e-12)
    assert curve.values[-1] < 0.01
    assert curve.mode == "exact"


def test_fit_rate_matches_lambda2(tv_setup):
    _, op, start = tv_setup
    curve = diagnostics.tv_exact(op, start, 300)
    rate, c = diagnostics.fit_rate(curve)
    lam2 = spectral.spectrum(op, k=4).eigenvalues[1]
    assert rate == pytest.approx(-math.log(lam2), rel=0.05)
    assert c > 0.0


def test_fit_rate_on_synthetic_curve():
    steps = np.arange(200)
    values = 0.7 * np.exp(-0.03 * steps)
    curve = diagnostics.TVCurve(steps=steps, values=values, mode="exact")
    rate, c = diagnostics.fit_rate(curve)
    assert rate == pytest.approx(0.03, rel=1e-6)
    assert c == pytest.approx(0.7, rel=1e-6)


def test_fit_rate_window_degenerate():
    curve = diagnostics.TVCurve(steps=np.arange(5),
                                values=np.full(5, 1e-15), mode="exact")
    with pytest.raises(WindowDegenerate):
        diagnostics.fit_rate(curve)


def test_tv_empirical_needs_replicas(square, e0, tv_setup):
    grid, _, _ = tv_setup
    with pytest.raises(TooFewReplicas):
        diagnostics.tv_empirical(square, e0, 0.2, np.array([0.5, 0.5]),
                                 [10], 100, grid, np.random.default_rng(0))


def test_tv_empirical_tracks_exact(square, e0, tv_setup):
    grid, op, start = tv_setup
    exact = diagnostics.tv_exact(op, start, 60)
    emp = diagnostics.tv_empirical(square, e0, 0.2, grid.centers[start],
                                   [20, 60], 60000, grid,
                                   np.random.default_rng(42))
    assert emp.mode == "empirical"
    for n, v in zip(emp.steps, emp.values):
        assert abs(v - exact.values[n]) < 0.05


def test_tv_curve_csv(tmp_path):
    curve = diagnostics.TVCurve(steps=np.array([0, 1]),
                                values=np.array([0.9, 0.5]), mode="exact")
    path = tmp_path / "tv.csv"
    curve.export_csv(path)
    assert path.read_text().splitlines() == ["n,tv,mode", "0,0.9,exact",
                                             "1,0.5,exact"]


def test_gap_sweep_table(square, e0, tmp_path):
    table = diagnostics.gap_sweep(square, e0, [0.4, 0.2], k=6)
    assert [row.h for row in table.rows] == [0.4, 0.2]
    assert table.rows[1].gap < table.rows[0].gap
    assert table.rows[1].gap_over_h2 == pytest.approx(
        table.rows[1].gap / 0.04)
    assert table.nu1_reference == pytest.approx(math.pi ** 2 / 12.0, rel=0.02)
    path = tmp_path / "sweep.csv"
    table.export_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "h,gap,gap_over_h2,nu1_reference"
    assert len(lines) == 3
