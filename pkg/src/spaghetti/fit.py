"""Leave-one-out penalized kernel fits.

For a retained set of points the model is an affine part plus one Gaussian
bump per retained point,

    f(x) = intercept + slope * x + sum_k weights[k] * exp(-(x - x_k)^2 / (2 sigma^2)),

with the affine part fixed to the least-squares line of the retained points
and the weights minimizing

    sum_k (y_k - f(x_k))^2  +  lam * integral of f'' squared.

For fixed ``(sigma, lam)`` the weights solve a small SPD system
(:func:`solve_weights`).  ``sigma`` is chosen by a log-spaced grid search
refined by golden section (:func:`fit_for_lambda`).  ``lam`` is chosen per
left-out point so the fit best predicts the point that was withheld
(:func:`select_lambda_loo`).  All searches are deterministic: fixed grids,
fixed iteration counts, and ties broken toward the largest candidate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve

from .errors import DegenerateInput, NotPositiveDefinite
from .kernel import KernelBasis, design_matrix, roughness_matrix
from .linalg import Line, SymMatrix, fit_least_squares_line, solve_spd_jittered

__all__ = [
    "TimeSeries",
    "FitConfig",
    "SpaghettiFunction",
    "solve_weights",
    "fit_for_lambda",
    "select_lambda_loo",
    "least_rough_interpolator",
]

# two candidates closer than this count as tied, and ties go to the larger
# one; golden-section output replaces a grid optimum only when it beats the
# tie band, so flat objectives keep the largest grid candidate
TIE_EPS = 1e-12

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class TimeSeries:
    """Strictly increasing x with matching y, at least three points."""

    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        xs = np.array(self.xs, dtype=float)
        ys = np.array(self.ys, dtype=float)
        if xs.ndim != 1 or ys.ndim != 1 or xs.size != ys.size:
            raise DegenerateInput("xs and ys must be 1-d and the same length")
        if xs.size < 3:
            raise DegenerateInput(f"need at least 3 points, got {xs.size}")
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
            raise DegenerateInput("points must be finite")
        gaps = np.diff(xs)
        if np.any(gaps == 0.0):
            where = int(np.argmax(gaps == 0.0))
            raise DegenerateInput(f"duplicate x={xs[where]:g}")
        if np.any(gaps < 0.0):
            raise DegenerateInput("x values must be increasing; sort first (see from_points)")
        xs.flags.writeable = False
        ys.flags.writeable = False
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    @classmethod
    def from_points(cls, points) -> "TimeSeries":
        """Build from ``(x, y)`` pairs in any order; sorts by x."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise DegenerateInput(f"expected an (n, 2) point array, got shape {pts.shape}")
        order = np.argsort(pts[:, 0], kind="stable")
        pts = pts[order]
        return cls(pts[:, 0], pts[:, 1])

    def __len__(self) -> int:
        return self.xs.size

    @property
    def points(self) -> np.ndarray:
        return np.column_stack([self.xs, self.ys])

    def leave_out(self, i: int) -> np.ndarray:
        """Retained points with index ``i`` withheld."""
        if not 0 <= i < len(self):
            raise IndexError(f"point index {i} out of range for {len(self)} points")
        return np.delete(self.points, i, axis=0)

    @property
    def span(self) -> float:
        return float(self.xs[-1] - self.xs[0])


@dataclass(frozen=True)
class FitConfig:
    """Search ranges and resolutions for the nested sigma and lam searches.

    ``lambda_lo``/``lambda_hi`` bound the penalty-strength grid with
    ``lambda_points_per_decade`` samples per decade.  The sigma grid runs
    from ``sigma_lo_factor`` times the smallest adjacent gap to
    ``sigma_hi_factor`` times the span of the retained x, with
    ``sigma_grid_points`` samples.  Both searches refine the best grid
    point with ``refine_iterations`` golden-section steps.
    """

    lambda_lo: float = 1e-6
    lambda_hi: float = 1e6
    lambda_points_per_decade: int = 8
    sigma_lo_factor: float = 0.25
    sigma_hi_factor: float = 2.0
    sigma_grid_points: int = 33
    refine_iterations: int = 36

    def __post_init__(self):
        if not (0.0 < self.lambda_lo < self.lambda_hi < math.inf):
            raise ValueError("need 0 < lambda_lo < lambda_hi")
        if self.lambda_points_per_decade < 1:
            raise ValueError("lambda_points_per_decade must be at least 1")
        if not (0.0 < self.sigma_lo_factor and 0.0 < self.sigma_hi_factor):
            raise ValueError("sigma range factors must be positive")
        if self.sigma_grid_points < 2:
            raise ValueError("sigma_grid_points must be at least 2")
        if self.refine_iterations < 0:
            raise ValueError("refine_iterations must be nonnegative")

    def lambda_grid(self) -> np.ndarray:
        decades = math.log10(self.lambda_hi / self.lambda_lo)
        count = max(2, int(math.ceil(self.lambda_points_per_decade * decades)) + 1)
        return np.geomspace(self.lambda_lo, self.lambda_hi, count)

    def sigma_grid(self, xs) -> np.ndarray:
        x = np.asarray(xs, dtype=float)
        gaps = np.diff(x)
        lo = self.sigma_lo_factor * float(gaps.min())
        hi = self.sigma_hi_factor * float(x[-1] - x[0])
        if lo >= hi:
            # two retained points make gap == span; keep a genuine interval
            lo, hi = min(lo, hi), max(lo, hi) * 1.0000001
        return np.geomspace(lo, hi, self.sigma_grid_points)


@dataclass(frozen=True)
class SpaghettiFunction:
    """One fitted curve: affine part, bump basis, weights, penalty strength."""

    line: Line
    basis: KernelBasis
    weights: np.ndarray
    lam: float
    left_out: int | None = None

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 1 or w.size != len(self.basis):
            raise DegenerateInput("need exactly one weight per basis center")
        if not np.all(np.isfinite(w)):
            raise DegenerateInput("weights must be finite")
        if not (np.isfinite(self.lam) and self.lam >= 0.0):
            raise DegenerateInput(f"lam must be finite and nonnegative, got {self.lam}")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    def __call__(self, x):
        arr = np.asarray(x, dtype=float)
        flat = np.atleast_1d(arr)
        values = self.line(flat) + design_matrix(self.basis, flat) @ self.weights
        return float(values[0]) if arr.ndim == 0 else values


def solve_weights(points, line: Line, sigma: float, lam: float) -> np.ndarray:
    """Bump weights minimizing squared deviation plus ``lam`` times curvature.

    With ``r`` the residuals of the points from ``line``, ``K`` the design
    matrix at the points' own x, and ``Omega`` the roughness matrix, the
    minimizer solves ``(K'K + lam Omega) A = K'r``; one jittered retry is
    attempted before :class:`NotPositiveDefinite` propagates.
    """
    if not (np.isfinite(lam) and lam >= 0.0):
        raise DegenerateInput(f"lam must be finite and nonnegative, got {lam}")
    pts = np.asarray(points, dtype=float)
    xs, ys = pts[:, 0], pts[:, 1]
    basis = KernelBasis(xs, sigma)
    r = ys - line(xs)
    design = design_matrix(basis, xs)
    rough = roughness_matrix(basis)
    system = SymMatrix(design.T @ design + lam * rough.data)
    return solve_spd_jittered(system, design.T @ r)


def _golden_section_min(fn, lo: float, hi: float, iterations: int):
    """Golden-section minimization on ``[lo, hi]`` with a fixed step count.

    Returns the best evaluated ``(x, fn(x))``; tracking the best point seen
    keeps the result meaningful even when ``fn`` is not unimodal or returns
    ``inf`` for skipped candidates.
    """
    a, b = float(lo), float(hi)
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = fn(c), fn(d)
    if fc <= fd:
        best_x, best_f = c, fc
    else:
        best_x, best_f = d, fd
    for _ in range(iterations):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = fn(c)
            if fc < best_f:
                best_x, best_f = c, fc
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = fn(d)
            if fd < best_f:
                best_x, best_f = d, fd
    return best_x, best_f


def _tie_break_largest(values: np.ndarray, objectives: np.ndarray) -> int:
    """Index of the largest ``values`` entry whose objective ties the minimum."""
    finite = np.isfinite(objectives)
    if not finite.any():
        raise NotPositiveDefinite("every candidate failed its symmetric solve")
    best = objectives[finite].min()
    tol = TIE_EPS * (1.0 + abs(best))
    tied = np.flatnonzero(finite & (objectives <= best + tol))
    return int(tied[-1])


def _mirror(matrix: np.ndarray) -> np.ndarray:
    """Copy the upper triangle onto the lower one, as SymMatrix stores it."""
    out = matrix.copy()
    upper = np.triu_indices(matrix.shape[0], k=1)
    out[(upper[1], upper[0])] = out[upper]
    return out


def _chol_solve_or_jitter(system: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Same arithmetic as :func:`solve_spd_jittered`, minus the wrapper cost."""
    order = system.shape[0]
    try:
        chol = np.linalg.cholesky(system)
    except np.linalg.LinAlgError:
        eps = 1e-10 * float(np.trace(system)) / order
        try:
            chol = np.linalg.cholesky(system + eps * np.eye(order))
        except np.linalg.LinAlgError:
            raise NotPositiveDefinite("nonpositive pivot in Cholesky factorization") from None
    return cho_solve((chol, True), rhs)


class _PenalizedFitter:
    """Per-retained-set state shared across lam evaluations.

    The sigma grid and the squared center distances depend only on the
    retained x, so the grid's design, roughness, and Gram matrices are
    built once; each lam evaluation then assembles its systems from the
    stacks and factors them in one batched call.  The arithmetic matches
    :func:`solve_weights` (same matrices, same jitter-then-skip rule),
    assembled inline to keep the inner search cheap.
    """

    def __init__(self, points, config: FitConfig):
        pts = np.asarray(points, dtype=float)
        self.xs = pts[:, 0]
        self.ys = pts[:, 1]
        self.config = config
        self.line = fit_least_squares_line(pts)
        self.residuals = self.ys - self.line(self.xs)
        self.sigma_grid = config.sigma_grid(self.xs)
        self._diff = self.xs[:, None] - self.xs[None, :]
        designs, roughs, grams, rhs = [], [], [], []
        for sigma in self.sigma_grid:
            design, rough = self._matrices(sigma)
            designs.append(design)
            roughs.append(rough)
            grams.append(_mirror(design.T @ design))
            rhs.append(design.T @ self.residuals)
        self._design_stack = np.stack(designs)
        self._rough_stack = np.stack(roughs)
        self._gram_stack = np.stack(grams)
        self._rhs_stack = np.stack(rhs)

    def _matrices(self, sigma: float):
        """Design and roughness matrices at the retained x for one sigma.

        Same expressions, in the same order, as :func:`design_matrix` and
        :func:`roughness_matrix`, so the cached path is bitwise identical
        to the public ops.
        """
        u = self._diff / sigma
        design = np.exp(-0.5 * u * u)
        t = self._diff / (2.0 * sigma)
        t2 = t * t
        rough = (np.sqrt(np.pi) / sigma**3) * (t2 * t2 - 3.0 * t2 + 0.75) * np.exp(-t2)
        return design, rough

    def _objective(self, weights, design, rough, lam):
        dev = self.residuals - design @ weights
        return float(dev @ dev) + lam * float(weights @ rough @ weights)

    def _solve_fresh(self, sigma: float, lam: float):
        design, rough = self._matrices(sigma)
        system = design.T @ design + lam * rough
        rhs = design.T @ self.residuals
        try:
            weights = _chol_solve_or_jitter(_mirror(system), rhs)
        except NotPositiveDefinite:
            return math.inf, None
        return self._objective(weights, design, rough, lam), weights

    def _grid_solutions(self, lam: float):
        """Objective and weights for every grid sigma at one lam."""
        systems = self._gram_stack + lam * self._rough_stack
        try:
            chol = np.linalg.cholesky(systems)
        except np.linalg.LinAlgError:
            # rare: some candidate needs the jitter retry or a skip
            objectives = np.empty(self.sigma_grid.size)
            solutions = [None] * self.sigma_grid.size
            for idx, sigma in enumerate(self.sigma_grid):
                objectives[idx], solutions[idx] = self._solve_fresh(float(sigma), lam)
            return objectives, solutions
        halfway = np.linalg.solve(chol, self._rhs_stack[:, :, None])
        weights = np.linalg.solve(np.transpose(chol, (0, 2, 1)), halfway)[:, :, 0]
        deviations = self.residuals[None, :] - np.einsum(
            "gij,gj->gi", self._design_stack, weights
        )
        objectives = (deviations**2).sum(axis=1) + lam * np.einsum(
            "gi,gij,gj->g", weights, self._rough_stack, weights
        )
        return objectives, list(weights)

    def fit(self, lam: float):
        """Best ``(sigma, weights, objective)`` for this lam.

        Grid search over sigma, ties to the largest candidate, then a
        golden-section polish that only replaces the grid optimum when it
        is strictly better than the tie band.
        """
        objectives, solutions = self._grid_solutions(lam)
        best = _tie_break_largest(self.sigma_grid, objectives)
        sigma, weights, objective = (
            float(self.sigma_grid[best]),
            solutions[best],
            float(objectives[best]),
        )
        if self.config.refine_iterations > 0:
            lo = self.sigma_grid[max(best - 1, 0)]
            hi = self.sigma_grid[min(best + 1, self.sigma_grid.size - 1)]
            log_sigma, refined = _golden_section_min(
                lambda u: self._solve_fresh(math.exp(u), lam)[0],
                math.log(lo),
                math.log(hi),
                self.config.refine_iterations,
            )
            if refined < objective - TIE_EPS * (1.0 + abs(objective)):
                sigma = math.exp(log_sigma)
                objective, weights = self._solve_fresh(sigma, lam)
        return sigma, weights, objective

    def build(self, sigma: float, weights, lam: float, left_out: int | None) -> SpaghettiFunction:
        return SpaghettiFunction(
            line=self.line,
            basis=KernelBasis(self.xs, sigma),
            weights=weights,
            lam=lam,
            left_out=left_out,
        )


def fit_for_lambda(retained, lam: float, config: FitConfig | None = None) -> SpaghettiFunction:
    """Penalized fit of the retained points at a fixed penalty strength.

    The affine part is the least-squares line of the retained points; sigma
    and the weights come from :meth:`_PenalizedFitter.fit`.
    """
    if not (np.isfinite(lam) and lam >= 0.0):
        raise DegenerateInput(f"lam must be finite and nonnegative, got {lam}")
    fitter = _PenalizedFitter(retained, config or FitConfig())
    sigma, weights, _ = fitter.fit(lam)
    return fitter.build(sigma, weights, lam, left_out=None)


def select_lambda_loo(series: TimeSeries, i: int, config: FitConfig | None = None) -> SpaghettiFunction:
    """Fit with point ``i`` withheld, picking lam to best predict it.

    Parameters
    ----------
    series : TimeSeries
        The full series; point ``i`` is withheld from the fit.
    i : int
        Index of the withheld point.
    config : FitConfig, optional
        Search ranges; defaults to ``FitConfig()``.

    Returns
    -------
    SpaghettiFunction
        Fit of the retained points whose lam minimizes the absolute
        prediction error at the withheld point over the lam grid, refined
        by golden section.  Tied errors go to the largest lam, and the
        refinement only displaces the grid winner when strictly better, so
        a flat error curve (collinear data) selects the top of the grid.
    """
    cfg = config or FitConfig()
    fitter = _PenalizedFitter(series.leave_out(i), cfg)
    x_out = float(series.xs[i])
    y_out = float(series.ys[i])

    def withheld_error(lam):
        sigma, weights, _ = fitter.fit(lam)
        basis = KernelBasis(fitter.xs, sigma)
        predicted = float(fitter.line(x_out)) + float(design_matrix(basis, [x_out])[0] @ weights)
        return abs(y_out - predicted), sigma, weights

    grid = cfg.lambda_grid()
    errors = np.empty(grid.size)
    fits = [None] * grid.size
    for idx, lam in enumerate(grid):
        err, sigma_at, weights_at = withheld_error(lam)
        errors[idx] = err
        fits[idx] = (sigma_at, weights_at)
    best = _tie_break_largest(grid, errors)
    lam, error = float(grid[best]), float(errors[best])
    sigma, weights = fits[best]
    if cfg.refine_iterations > 0:
        lo = grid[max(best - 1, 0)]
        hi = grid[min(best + 1, grid.size - 1)]
        log_lam, refined = _golden_section_min(
            lambda u: withheld_error(math.exp(u))[0],
            math.log(lo),
            math.log(hi),
            cfg.refine_iterations,
        )
        if refined < error - TIE_EPS * (1.0 + abs(error)):
            lam = math.exp(log_lam)
            _, sigma, weights = withheld_error(lam)
    return fitter.build(sigma, weights, lam, left_out=i)


def least_rough_interpolator(series: TimeSeries, config: FitConfig | None = None) -> SpaghettiFunction:
    """Interpolant through every point with the smallest curvature penalty.

    The affine part is the least-squares line of all points and the weights
    solve the square kernel system exactly, so the curve passes through the
    data; sigma is selected over the usual grid-plus-refinement scheme to
    minimize the curvature ``A' Omega A``.  Candidates whose solve fails or
    whose reproduction of the data degrades past round-off are skipped.
    """
    cfg = config or FitConfig()
    line = fit_least_squares_line(series.points)
    residuals = series.ys - line(series.xs)
    interp_tol = 1e-8 * (1.0 + float(np.abs(series.ys).max()))

    def roughness_of(sigma):
        basis = KernelBasis(series.xs, sigma)
        design = design_matrix(basis, series.xs)
        try:
            weights = solve_spd_jittered(SymMatrix(design), residuals)
        except NotPositiveDefinite:
            return math.inf, None
        if float(np.abs(design @ weights - residuals).max()) > interp_tol:
            return math.inf, None
        rough = roughness_matrix(basis).data
        return float(weights @ rough @ weights), weights

    grid = cfg.sigma_grid(series.xs)
    objectives = np.empty(grid.size)
    solutions = [None] * grid.size
    for idx, sigma in enumerate(grid):
        objectives[idx], solutions[idx] = roughness_of(sigma)
    best = _tie_break_largest(grid, objectives)
    sigma, weights, objective = float(grid[best]), solutions[best], float(objectives[best])
    if cfg.refine_iterations > 0:
        lo = grid[max(best - 1, 0)]
        hi = grid[min(best + 1, grid.size - 1)]
        log_sigma, refined = _golden_section_min(
            lambda u: roughness_of(math.exp(u))[0],
            math.log(lo),
            math.log(hi),
            cfg.refine_iterations,
        )
        if refined < objective - TIE_EPS * (1.0 + abs(objective)):
            sigma = math.exp(log_sigma)
            _, weights = roughness_of(sigma)
    return SpaghettiFunction(
        line=line,
        basis=KernelBasis(series.xs, sigma),
        weights=weights,
        lam=0.0,
        left_out=None,
    )
