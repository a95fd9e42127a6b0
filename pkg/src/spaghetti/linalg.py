"""Small dense helpers for the fitting modules.

Systems here have one row per retained point, so they are tiny; the SPD
solve is a thin wrapper over a Cholesky factorization that converts
failures into :class:`NotPositiveDefinite`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve

from .errors import DegenerateInput, NotPositiveDefinite

__all__ = [
    "Line",
    "SymMatrix",
    "fit_least_squares_line",
    "solve_spd",
    "solve_spd_jittered",
]


@dataclass(frozen=True)
class Line:
    """Affine function ``intercept + slope * x``."""

    intercept: float
    slope: float

    def __call__(self, x):
        return self.intercept + self.slope * np.asarray(x, dtype=float)


@dataclass(frozen=True)
class SymMatrix:
    """Square matrix whose symmetry holds exactly as stored.

    The upper triangle is mirrored onto the lower one at construction, so
    ``data[j, k] == data[k, j]`` bitwise even when the input came from a
    matrix product with rounding noise.
    """

    data: np.ndarray

    def __post_init__(self):
        m = np.array(self.data, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DegenerateInput(f"expected a square matrix, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise DegenerateInput("matrix entries must be finite")
        upper = np.triu_indices(m.shape[0], k=1)
        m[(upper[1], upper[0])] = m[upper]
        m.flags.writeable = False
        object.__setattr__(self, "data", m)

    @property
    def order(self) -> int:
        return self.data.shape[0]


def fit_least_squares_line(points) -> Line:
    """Least-squares line through ``(x, y)`` pairs.

    Solves the 2x2 normal equations in closed form, with x centered first
    so the system stays well conditioned.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise DegenerateInput(f"expected an (n, 2) point array, got shape {pts.shape}")
    if pts.shape[0] < 2:
        raise DegenerateInput("need at least two points for a line")
    if not np.all(np.isfinite(pts)):
        raise DegenerateInput("points must be finite")
    x, y = pts[:, 0], pts[:, 1]
    x_mean = x.mean()
    dx = x - x_mean
    sxx = float(dx @ dx)
    if sxx == 0.0:
        raise DegenerateInput("all x values are equal; slope is undefined")
    slope = float(dx @ y) / sxx
    intercept = float(y.mean()) - slope * float(x_mean)
    return Line(intercept, slope)


def solve_spd(matrix: SymMatrix, rhs) -> np.ndarray:
    """Solve ``matrix @ v = rhs`` for symmetric positive-definite input."""
    b = np.asarray(rhs, dtype=float)
    try:
        chol = np.linalg.cholesky(matrix.data)
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite("nonpositive pivot in Cholesky factorization") from None
    return cho_solve((chol, True), b)


def solve_spd_jittered(matrix: SymMatrix, rhs) -> np.ndarray:
    """``solve_spd`` with one retry after adding diagonal jitter.

    The jitter is ``1e-10`` times the mean diagonal entry; a second failure
    propagates.
    """
    try:
        return solve_spd(matrix, rhs)
    except NotPositiveDefinite:
        eps = 1e-10 * float(np.trace(matrix.data)) / matrix.order
        bumped = SymMatrix(matrix.data + eps * np.eye(matrix.order))
        return solve_spd(bumped, rhs)
