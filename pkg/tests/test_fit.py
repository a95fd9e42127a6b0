import math

import numpy as np
import pytest

from spaghetti.errors import DegenerateInput
from spaghetti.fit import (
    FitConfig,
    TimeSeries,
    fit_for_lambda,
    least_rough_interpolator,
    select_lambda_loo,
    solve_weights,
)
from spaghetti.harness import demo_series, dense_sigma_objective_oracle
from spaghetti.kernel import KernelBasis, design_matrix, roughness_matrix
from spaghetti.linalg import fit_least_squares_line

COLLINEAR = ((0.0, 1.0), (1.0, 3.0), (2.0, 5.0), (3.0, 7.0))


def penalized_objective(points, fn, lam):
    pts = np.asarray(points, dtype=float)
    deviation = pts[:, 1] - fn(pts[:, 0])
    rough = roughness_matrix(fn.basis).data
    return float(deviation @ deviation) + lam * float(fn.weights @ rough @ fn.weights)


def test_series_sorts_and_validates():
    series = TimeSeries.from_points([(3.0, 9.0), (1.0, 1.0), (2.0, 4.0)])
    np.testing.assert_array_equal(series.xs, [1.0, 2.0, 3.0])
    np.testing.assert_array_equal(series.ys, [1.0, 4.0, 9.0])
    assert series.span == 2.0
    with pytest.raises(DegenerateInput):
        TimeSeries.from_points([(0.0, 1.0), (0.0, 2.0), (1.0, 3.0)])
    with pytest.raises(DegenerateInput):
        TimeSeries.from_points([(0.0, 1.0), (1.0, 2.0)])
    with pytest.raises(DegenerateInput):
        TimeSeries.from_points([(0.0, 1.0), (1.0, math.inf), (2.0, 3.0)])


def test_leave_out_removes_one_row():
    series = demo_series()
    retained = series.leave_out(2)
    assert retained.shape == (6, 2)
    assert 3.0 not in retained[:, 0]
    with pytest.raises(IndexError):
        series.leave_out(7)


def test_lambda_grid_covers_range_geometrically():
    grid = FitConfig().lambda_grid()
    assert grid[0] == 1e-6
    assert grid[-1] == 1e6
    assert grid.size == 97  # 8 per decade across 12 decades, inclusive
    ratios = grid[1:] / grid[:-1]
    np.testing.assert_allclose(ratios, ratios[0], rtol=1e-10)


def test_sigma_grid_spans_gap_to_span():
    xs = demo_series().xs
    grid = FitConfig().sigma_grid(xs)
    assert math.isclose(grid[0], 0.25, rel_tol=1e-12)  # quarter of the smallest gap
    assert math.isclose(grid[-1], 12.0, rel_tol=1e-12)  # twice the span
    assert np.all(np.diff(np.log(grid)) > 0)


def test_solve_weights_satisfies_normal_equations():
    pts = np.asarray(demo_series().leave_out(3), dtype=float)
    line = fit_least_squares_line(pts)
    sigma, lam = 1.4, 0.3
    weights = solve_weights(pts, line, sigma, lam)
    basis = KernelBasis(pts[:, 0], sigma)
    design = design_matrix(basis, pts[:, 0])
    rough = roughness_matrix(basis).data
    residuals = pts[:, 1] - line(pts[:, 0])
    lhs = (design.T @ design + lam * rough) @ weights
    rhs = design.T @ residuals
    assert np.abs(lhs - rhs).max() <= 1e-9 * (1.0 + np.abs(rhs).max())


def test_fit_for_lambda_beats_dense_sigma_scan():
    retained = demo_series().leave_out(2)
    lam = 1.0
    fn = fit_for_lambda(retained, lam)
    produced = penalized_objective(retained, fn, lam)
    _, reference = dense_sigma_objective_oracle(retained, lam)
    assert produced <= reference + 1e-6 * (1.0 + abs(reference))


def test_fit_for_lambda_rejects_bad_lambda():
    retained = demo_series().leave_out(0)
    with pytest.raises(DegenerateInput):
        fit_for_lambda(retained, -1.0)
    with pytest.raises(DegenerateInput):
        fit_for_lambda(retained, math.nan)


def test_shifting_y_shifts_the_fit():
    series = demo_series()
    shift = 250.0
    shifted = TimeSeries(series.xs, series.ys + shift)
    base = select_lambda_loo(series, 4)
    moved = select_lambda_loo(shifted, 4)
    xs = np.linspace(series.xs[0], series.xs[-1], 101)
    scale = 1.0 + np.abs(series.ys).max()
    assert np.abs((moved(xs) - shift) - base(xs)).max() <= 1e-6 * scale


def test_far_from_data_the_fit_is_its_line():
    retained = demo_series().leave_out(5)
    fn = fit_for_lambda(retained, 0.5)
    far = fn.basis.centers.max() + 15.0 * fn.basis.sigma
    weight_scale = np.abs(fn.weights).sum()
    assert abs(float(fn(far)) - float(fn.line(far))) <= 1e-9 * (1.0 + weight_scale)


def test_collinear_series_selects_the_stiffest_penalty():
    series = TimeSeries.from_points(COLLINEAR)
    fn = select_lambda_loo(series, 1)
    assert fn.lam == FitConfig().lambda_grid()[-1]  # flat error curve, tie to the top
    assert abs(float(series.ys[1] - fn(series.xs[1]))) <= 1e-9


def test_interpolator_passes_through_every_point():
    series = demo_series()
    h = least_rough_interpolator(series)
    gap = np.abs(h(series.xs) - series.ys).max()
    assert gap <= 1e-8 * (1.0 + np.abs(series.ys).max())
