"""Reference data and brute-force oracles for the test suite.

Everything here exists so tests can check the production code through an
independent route: a frozen dataset that never changes, a coordinate-descent
solver that touches no linear algebra, and dense-grid searches to compare
against the production grid-plus-refinement searches.
"""
from __future__ import annotations

import dataclasses
import math

import numpy as np

from .errors import NotPositiveDefinite
from .fit import (
    GOLDEN,
    TIE_EPS,
    FitConfig,
    TimeSeries,
    _tie_break_largest,
    solve_weights,
)
from .kernel import KernelBasis, design_matrix, roughness_matrix
from .linalg import fit_least_squares_line

__all__ = [
    "DEMO_POINTS",
    "SMALL_INSTANCES",
    "demo_series",
    "brute_force_weights_oracle",
    "dense_grid_lambda_oracle",
    "dense_sigma_objective_oracle",
]

# Frozen once from the recipe below and committed; the literals are the
# dataset, the recipe is only its provenance:
#
#   x = 1..7
#   y = 1 + 0.5 x + 1.8 exp(-(x - 4)^2 / (2 * 0.9^2)) + e
#   e = numpy.random.default_rng(20250814).normal(0, 0.25, 7)
#   y rounded to 6 decimals
#
# A copy lives in data/demo7.csv in the CSV shape the command line reads.
DEMO_POINTS = (
    (1.0, 1.415243),
    (2.0, 2.280021),
    (3.0, 3.478842),
    (4.0, 4.933131),
    (5.0, 4.17937),
    (6.0, 4.501069),
    (7.0, 4.516233),
)


def demo_series() -> TimeSeries:
    """The committed seven-point demo series."""
    return TimeSeries.from_points(DEMO_POINTS)


# small weight-solve instances for the coordinate-descent cross-check:
# (name, points, sigma, lam), all sized so the descent converges quickly
SMALL_INSTANCES = (
    ("collinear-3", ((0.0, 1.0), (1.0, 3.0), (2.0, 5.0)), 1.0, 1.0),
    ("vee-4", ((0.0, 1.2), (1.0, 0.4), (2.0, 0.9), (3.0, 2.1)), 0.8, 0.5),
    ("vee-4-wide", ((0.0, 1.2), (1.0, 0.4), (2.0, 0.9), (3.0, 2.1)), 1.6, 0.02),
    ("bump-5", tuple(DEMO_POINTS[:5]), 1.1, 3.0),
    ("bump-5-stiff", tuple(DEMO_POINTS[:5]), 0.6, 1e10),
)


def brute_force_weights_oracle(points, sigma: float, lam: float, *,
                               tolerance: float = 1e-12, max_halvings: int = 200) -> np.ndarray:
    """Weights by pattern-search coordinate descent from zero.

    No linear solve anywhere: the penalized objective is evaluated directly
    for one-coordinate steps, sweeping until a full sweep improves by less
    than ``tolerance`` (relative), then halving the step.  Slow, simple,
    and arithmetically independent of :func:`solve_weights`.
    """
    pts = np.asarray(points, dtype=float)
    xs, ys = pts[:, 0], pts[:, 1]
    line = fit_least_squares_line(pts)
    residuals = ys - line(xs)
    basis = KernelBasis(xs, sigma)
    design = design_matrix(basis, xs)
    rough = roughness_matrix(basis).data

    def objective(w):
        dev = residuals - design @ w
        return float(dev @ dev) + lam * float(w @ rough @ w)

    weights = np.zeros(xs.size)
    best = objective(weights)
    step = 1.0 + float(np.abs(residuals).max())
    for _ in range(max_halvings):
        while True:
            sweep_start = best
            for idx in range(weights.size):
                for delta in (step, -step):
                    trial = weights.copy()
                    trial[idx] += delta
                    candidate = objective(trial)
                    if candidate < best:
                        weights, best = trial, candidate
            if not best < sweep_start - tolerance * (1.0 + abs(sweep_start)):
                break
        step *= 0.5
        if step < 1e-14 * (1.0 + float(np.abs(weights).max())):
            break
    return weights


def dense_sigma_objective_oracle(points, lam: float, config: FitConfig | None = None,
                                 count: int = 1000):
    """Penalized objective minimized over a dense sigma grid.

    Dense scan versus the production grid-plus-refinement: every sigma is
    solved through the public :func:`solve_weights`, failures are skipped,
    and ties go to the largest sigma.  Returns ``(sigma, objective)``.
    """
    cfg = dataclasses.replace(config or FitConfig(), sigma_grid_points=count)
    pts = np.asarray(points, dtype=float)
    xs, ys = pts[:, 0], pts[:, 1]
    line = fit_least_squares_line(pts)
    residuals = ys - line(xs)
    sigmas = cfg.sigma_grid(xs)
    objectives = np.empty(count)
    for idx, sigma in enumerate(sigmas):
        try:
            w = solve_weights(pts, line, float(sigma), lam)
        except NotPositiveDefinite:
            objectives[idx] = math.inf
            continue
        basis = KernelBasis(xs, float(sigma))
        dev = residuals - design_matrix(basis, xs) @ w
        objectives[idx] = float(dev @ dev) + lam * float(w @ roughness_matrix(basis).data @ w)
    best = _tie_break_largest(sigmas, objectives)
    return float(sigmas[best]), float(objectives[best])


def _stacked_spd_solve(systems: np.ndarray, rhs: np.ndarray):
    """Cholesky-solve a stack of symmetric systems, flagging bad rows.

    Hand-rolled factorization with explicit pivot checks so one failed
    system cannot abort the rest of the stack; failed rows get a single
    jittered retry, matching the production skip rule, then stay flagged.
    """

    def one_pass(mats, vecs):
        count, order = vecs.shape
        ok = np.ones(count, dtype=bool)
        chol = np.zeros_like(mats)
        for j in range(order):
            pivot = mats[:, j, j] - np.einsum("mt,mt->m", chol[:, j, :j], chol[:, j, :j])
            good = np.isfinite(pivot) & (pivot > 0.0)
            ok &= good
            chol[:, j, j] = np.sqrt(np.where(good, pivot, 1.0))
            if j + 1 < order:
                tail = mats[:, j + 1 :, j] - np.einsum(
                    "mit,mt->mi", chol[:, j + 1 :, :j], chol[:, j, :j]
                )
                chol[:, j + 1 :, j] = tail / chol[:, j, j][:, None]
        forward = np.zeros_like(vecs)
        for j in range(order):
            forward[:, j] = (
                vecs[:, j] - np.einsum("mt,mt->m", chol[:, j, :j], forward[:, :j])
            ) / chol[:, j, j]
        back = np.zeros_like(vecs)
        for j in reversed(range(order)):
            back[:, j] = (
                forward[:, j] - np.einsum("mt,mt->m", chol[:, j + 1 :, j], back[:, j + 1 :])
            ) / chol[:, j, j]
        return back, ok

    solution, ok = one_pass(systems, rhs)
    if not ok.all():
        bad = ~ok
        order = systems.shape[1]
        eps = 1e-10 * np.trace(systems[bad], axis1=1, axis2=2) / order
        bumped = systems[bad] + eps[:, None, None] * np.eye(order)
        retry, retry_ok = one_pass(bumped, rhs[bad])
        solution[bad] = retry
        ok[bad] = retry_ok
    return solution, ok


def dense_grid_lambda_oracle(series: TimeSeries, i: int, config: FitConfig | None = None,
                             count: int = 10000):
    """Withheld-point error minimized over a dense lam grid.

    Follows the same nested-search contract as the production selection
    (sigma grid then golden-section polish, ties to the largest candidate,
    polish kept only when strictly better) but evaluates every lam of a
    dense grid at once through its own stacked solver.  Returns the
    ``(lam, error)`` pair at the argmin, ties to the largest lam.
    """
    cfg = config or FitConfig()
    retained = series.leave_out(i)
    xs, ys = retained[:, 0], retained[:, 1]
    line = fit_least_squares_line(retained)
    residuals = ys - line(xs)
    x_out = float(series.xs[i])
    y_out = float(series.ys[i])
    lams = np.geomspace(cfg.lambda_lo, cfg.lambda_hi, count)
    diff = xs[:, None] - xs[None, :]

    def bump_matrices(sigma_vec):
        """Design and roughness stacks for one sigma per lam row."""
        sig = sigma_vec[:, None, None]
        u = diff[None, :, :] / sig
        design = np.exp(-0.5 * u * u)
        t2 = (diff[None, :, :] / (2.0 * sig)) ** 2
        rough = (np.sqrt(np.pi) / sig**3) * (t2 * t2 - 3.0 * t2 + 0.75) * np.exp(-t2)
        return design, rough

    def evaluate(sigma_vec):
        """Penalized objective and weights at (lams[row], sigma_vec[row])."""
        design, rough = bump_matrices(sigma_vec)
        gram = np.matmul(np.transpose(design, (0, 2, 1)), design)
        systems = gram + lams[:, None, None] * rough
        rhs = np.einsum("mij,i->mj", design, residuals)
        weights, ok = _stacked_spd_solve(systems, rhs)
        dev = residuals[None, :] - np.einsum("mij,mj->mi", design, weights)
        objective = (dev**2).sum(axis=1) + lams * np.einsum(
            "mi,mij,mj->m", weights, rough, weights
        )
        return np.where(ok, objective, math.inf), weights

    # sigma grid phase: scalar sigma against every lam at once
    sigma_grid = cfg.sigma_grid(xs)
    grid_objectives = np.empty((count, sigma_grid.size))
    for idx, sigma in enumerate(sigma_grid):
        grid_objectives[:, idx], _ = evaluate(np.full(count, float(sigma)))
    row_min = grid_objectives.min(axis=1)
    tol = TIE_EPS * (1.0 + np.abs(np.where(np.isfinite(row_min), row_min, 0.0)))
    tied = grid_objectives <= (row_min + tol)[:, None]
    best_idx = sigma_grid.size - 1 - np.argmax(tied[:, ::-1], axis=1)
    grid_best = grid_objectives[np.arange(count), best_idx]

    # golden-section polish in log sigma, every row at once; the probe
    # sequence mirrors the scalar polish step for step (interval reuse,
    # one fresh probe per iteration, ties to the left) so the inner sigma
    # search lands where production's does and only the lam route differs
    a = np.log(sigma_grid[np.maximum(best_idx - 1, 0)])
    b = np.log(sigma_grid[np.minimum(best_idx + 1, sigma_grid.size - 1)])
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, _ = evaluate(np.exp(c))
    fd, _ = evaluate(np.exp(d))
    polished_log = np.where(fc <= fd, c, d)
    polished_obj = np.minimum(fc, fd)
    for _ in range(cfg.refine_iterations):
        left = fc <= fd
        a_next = np.where(left, a, c)
        b_next = np.where(left, d, b)
        probe = np.where(
            left,
            b_next - GOLDEN * (b_next - a_next),
            a_next + GOLDEN * (b_next - a_next),
        )
        f_probe, _ = evaluate(np.exp(probe))
        c_next = np.where(left, probe, d)
        d_next = np.where(left, c, probe)
        fc_next = np.where(left, f_probe, fd)
        fd_next = np.where(left, fc, f_probe)
        a, b, c, d, fc, fd = a_next, b_next, c_next, d_next, fc_next, fd_next
        better = f_probe < polished_obj
        polished_obj[better] = f_probe[better]
        polished_log[better] = probe[better]

    final_sigma = sigma_grid[best_idx].astype(float)
    improved = polished_obj < grid_best - TIE_EPS * (1.0 + np.abs(grid_best))
    final_sigma[improved] = np.exp(polished_log[improved])

    _, final_weights = evaluate(final_sigma)
    kernel_row = np.exp(-0.5 * ((x_out - xs[None, :]) / final_sigma[:, None]) ** 2)
    predicted = float(line(x_out)) + np.einsum("mk,mk->m", kernel_row, final_weights)
    errors = np.where(np.isfinite(grid_best), np.abs(y_out - predicted), math.inf)
    if not np.isfinite(errors).any():
        raise NotPositiveDefinite("every candidate failed its symmetric solve")
    err_min = errors[np.isfinite(errors)].min()
    tied_lams = np.flatnonzero(errors <= err_min + TIE_EPS * (1.0 + abs(err_min)))
    pick = int(tied_lams[-1])
    return float(lams[pick]), float(errors[pick])
