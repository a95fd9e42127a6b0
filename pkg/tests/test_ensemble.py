import math

import numpy as np
import pytest

from spaghetti.ensemble import (
    Ensemble,
    band,
    asymmetry_report,
    build_ensemble,
    default_grid,
)
from spaghetti.errors import DegenerateInput
from spaghetti.fit import SpaghettiFunction, TimeSeries
from spaghetti.kernel import KernelBasis
from spaghetti.linalg import Line


def constant_ensemble(levels):
    """Ensemble stub whose functions are the given constants everywhere."""
    n = len(levels)
    series = TimeSeries.from_points([(float(i), 0.0) for i in range(n)])
    centers = np.arange(float(n - 1))
    functions = tuple(
        SpaghettiFunction(
            line=Line(float(level), 0.0),
            basis=KernelBasis(centers, 1.0),
            weights=np.zeros(n - 1),
            lam=1.0,
            left_out=i,
        )
        for i, level in enumerate(levels)
    )
    return Ensemble(
        series=series,
        functions=functions,
        least_squares_line=Line(0.0, 0.0),
        least_rough=functions[0],
    )


def test_demo_ensemble_has_one_function_per_point(demo, demo_ensemble):
    assert len(demo_ensemble.functions) == len(demo)
    assert sorted(f.left_out for f in demo_ensemble.functions) == list(range(len(demo)))
    assert demo_ensemble.least_rough.left_out is None


def test_minimal_three_point_series_builds():
    series = TimeSeries.from_points([(0.0, 1.0), (1.0, 2.0), (2.0, 2.5)])
    ensemble = build_ensemble(series)
    assert len(ensemble.functions) == 3


def test_ensemble_rejects_missing_left_out_index(demo, demo_ensemble):
    doubled = demo_ensemble.functions[:6] + (demo_ensemble.functions[5],)
    with pytest.raises(DegenerateInput):
        Ensemble(
            series=demo,
            functions=doubled,
            least_squares_line=demo_ensemble.least_squares_line,
            least_rough=demo_ensemble.least_rough,
        )


def test_collinear_functions_all_sit_on_one_line():
    series = TimeSeries.from_points([(0.0, 1.0), (1.0, 3.0), (2.0, 5.0), (3.0, 7.0)])
    ensemble = build_ensemble(series)
    xs = np.linspace(0.0, 3.0, 61)
    expected = 1.0 + 2.0 * xs
    for fn in ensemble.functions:
        assert np.abs(fn(xs) - expected).max() <= 1e-6


def test_band_statistics_on_listed_values():
    # seven constants with one outlier: median 4, mean 121/7
    levels = (1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 100.0)
    ensemble = constant_ensemble(levels)
    xs = np.array([0.0, 3.0])
    summary = band(ensemble, xs)
    mean = sum(levels) / 7.0
    spread = math.sqrt(sum((v - mean) ** 2 for v in levels) / 7.0)
    for column in range(2):
        assert math.isclose(summary.mu[column], 121.0 / 7.0, rel_tol=1e-14)
        assert math.isclose(summary.median[column], 4.0, rel_tol=1e-14)
        assert math.isclose(summary.s[column], spread, rel_tol=1e-12)
        assert math.isclose(summary.lower[column], mean - spread, rel_tol=1e-12)
        assert math.isclose(summary.upper[column], mean + spread, rel_tol=1e-12)
    gap = asymmetry_report(ensemble, xs)
    np.testing.assert_allclose(gap, 121.0 / 7.0 - 4.0, rtol=1e-14)


def test_even_count_median_averages_middle_pair():
    summary = band(constant_ensemble((1.0, 2.0, 10.0, 20.0)), np.array([0.0]))
    assert math.isclose(summary.median[0], 6.0, rel_tol=1e-15)


def test_band_ordering_invariants(demo_ensemble, demo_band):
    assert np.all(demo_band.lower <= demo_band.mu)
    assert np.all(demo_band.mu <= demo_band.upper)
    assert np.all(demo_band.s >= 0.0)
    values = np.stack([fn(demo_band.xs) for fn in demo_ensemble.functions])
    assert np.all(demo_band.median >= values.min(axis=0) - 1e-12)
    assert np.all(demo_band.median <= values.max(axis=0) + 1e-12)


def test_band_ignores_function_order(demo, demo_ensemble, demo_band):
    shuffled = Ensemble(
        series=demo,
        functions=demo_ensemble.functions[::-1],
        least_squares_line=demo_ensemble.least_squares_line,
        least_rough=demo_ensemble.least_rough,
    )
    redone = band(shuffled, demo_band.xs)
    np.testing.assert_allclose(redone.mu, demo_band.mu, rtol=0.0, atol=1e-12)
    np.testing.assert_array_equal(redone.median, demo_band.median)
    np.testing.assert_allclose(redone.s, demo_band.s, rtol=0.0, atol=1e-12)


def test_default_grid_covers_half_a_span_each_side(demo):
    xs = default_grid(demo)
    assert xs.size == 401
    assert xs[0] == -2.0
    assert xs[-1] == 10.0
    with pytest.raises(DegenerateInput):
        default_grid(demo, count=1)


def test_band_rejects_empty_or_bad_grid(demo_ensemble):
    with pytest.raises(DegenerateInput):
        band(demo_ensemble, np.array([]))
    with pytest.raises(DegenerateInput):
        band(demo_ensemble, np.array([0.0, math.nan]))


def test_far_field_mean_matches_mean_of_lines(demo_ensemble):
    x = 200.0  # beyond 12 widths from every center for every function
    for fn in demo_ensemble.functions:
        assert x - fn.basis.centers.max() > 12.0 * fn.basis.sigma
    mu = band(demo_ensemble, np.array([x])).mu[0]
    lines = np.mean([fn.line(x) for fn in demo_ensemble.functions])
    assert abs(mu - lines) <= 1e-8 * (1.0 + abs(x))


def test_collinear_asymmetry_is_zero():
    series = TimeSeries.from_points([(0.0, 1.0), (1.0, 3.0), (2.0, 5.0), (3.0, 7.0)])
    ensemble = build_ensemble(series)
    gap = asymmetry_report(ensemble, default_grid(series, 101))
    assert np.abs(gap).max() <= 1e-9
