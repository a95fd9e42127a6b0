"""Leave-one-out penalized kernel regression with an ensemble prediction band.

Each of the n fits withholds one point, trades deviation from the retained
points against integrated squared second derivative, and tunes the tradeoff
to best predict the point it never saw.  The n curves together give a mean,
a spread, and a pointwise median; a least-squares line and a least-rough
interpolator bracket them as the stiff and loose extremes.
"""

from .ensemble import (
    Ensemble,
    PredictionBand,
    asymmetry_report,
    band,
    build_ensemble,
    default_grid,
)
from .errors import DegenerateInput, NotPositiveDefinite, ParseError
from .fit import (
    FitConfig,
    SpaghettiFunction,
    TimeSeries,
    fit_for_lambda,
    least_rough_interpolator,
    select_lambda_loo,
    solve_weights,
)
from .kernel import KernelBasis, design_matrix, kernel_value, roughness_matrix
from .linalg import Line, SymMatrix, fit_least_squares_line, solve_spd

__version__ = "0.1.0"

__all__ = [
    "DegenerateInput",
    "Ensemble",
    "FitConfig",
    "KernelBasis",
    "Line",
    "NotPositiveDefinite",
    "ParseError",
    "PredictionBand",
    "SpaghettiFunction",
    "SymMatrix",
    "TimeSeries",
    "asymmetry_report",
    "band",
    "build_ensemble",
    "default_grid",
    "design_matrix",
    "fit_for_lambda",
    "fit_least_squares_line",
    "kernel_value",
    "least_rough_interpolator",
    "roughness_matrix",
    "select_lambda_loo",
    "solve_spd",
    "solve_weights",
    "__version__",
]
