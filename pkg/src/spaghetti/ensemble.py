"""Leave-one-out ensembles and their prediction band.

Building an ensemble fits one curve per withheld point plus two reference
curves: the least-squares line of all points and the least-rough exact
interpolator.  The band summarizes the curves pointwise by mean, spread,
and median; mean minus median is the asymmetry report.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInput
from .fit import (
    FitConfig,
    SpaghettiFunction,
    TimeSeries,
    fit_least_squares_line,
    least_rough_interpolator,
    select_lambda_loo,
)
from .linalg import Line

__all__ = [
    "Ensemble",
    "PredictionBand",
    "build_ensemble",
    "default_grid",
    "band",
    "asymmetry_report",
]


@dataclass(frozen=True)
class Ensemble:
    """One fitted curve per withheld point, plus the two reference curves."""

    series: TimeSeries
    functions: tuple[SpaghettiFunction, ...]
    least_squares_line: Line
    least_rough: SpaghettiFunction

    def __post_init__(self):
        object.__setattr__(self, "functions", tuple(self.functions))
        # each point withheld exactly once; order is free so that the band
        # statistics can be checked for reordering invariance
        expected = set(range(len(self.series)))
        if {f.left_out for f in self.functions} != expected or len(self.functions) != len(expected):
            raise DegenerateInput("need exactly one function per left-out point")


@dataclass(frozen=True)
class PredictionBand:
    """Pointwise ensemble statistics on a shared evaluation grid."""

    xs: np.ndarray
    mu: np.ndarray
    s: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    median: np.ndarray

    def __post_init__(self):
        arrays = {}
        for name in ("xs", "mu", "s", "lower", "upper", "median"):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.ndim != 1 or arr.size != np.asarray(self.xs).size:
                raise DegenerateInput("band arrays must be 1-d and the same length")
            arr.flags.writeable = False
            arrays[name] = arr
        if not np.all(arrays["s"] >= 0.0):
            raise DegenerateInput("spread must be nonnegative")
        for name, arr in arrays.items():
            object.__setattr__(self, name, arr)


def build_ensemble(series: TimeSeries, config: FitConfig | None = None) -> Ensemble:
    """Fit every leave-one-out curve and both reference curves."""
    cfg = config or FitConfig()
    functions = tuple(select_lambda_loo(series, i, cfg) for i in range(len(series)))
    return Ensemble(
        series=series,
        functions=functions,
        least_squares_line=fit_least_squares_line(series.points),
        least_rough=least_rough_interpolator(series, cfg),
    )


def default_grid(series: TimeSeries, count: int = 401) -> np.ndarray:
    """Evaluation grid covering the data plus half a span on each side."""
    if count < 2:
        raise DegenerateInput("grid needs at least 2 points")
    half = 0.5 * series.span
    return np.linspace(series.xs[0] - half, series.xs[-1] + half, count)


def _values(ensemble: Ensemble, xs: np.ndarray) -> np.ndarray:
    return np.stack([f(xs) for f in ensemble.functions])


def band(ensemble: Ensemble, xs) -> PredictionBand:
    """Pointwise mean, population spread, and median of the ensemble.

    The spread divides by the ensemble size (not size minus one), and the
    median of an even count averages the two middle values.
    """
    grid = np.atleast_1d(np.asarray(xs, dtype=float))
    if grid.size == 0 or not np.all(np.isfinite(grid)):
        raise DegenerateInput("evaluation grid must be nonempty and finite")
    values = _values(ensemble, grid)
    mu = values.mean(axis=0)
    s = values.std(axis=0)
    return PredictionBand(
        xs=grid,
        mu=mu,
        s=s,
        lower=mu - s,
        upper=mu + s,
        median=np.median(values, axis=0),
    )


def asymmetry_report(ensemble: Ensemble, xs) -> np.ndarray:
    """Mean minus median at each grid point; zero for a symmetric ensemble."""
    summary = band(ensemble, xs)
    return summary.mu - summary.median
