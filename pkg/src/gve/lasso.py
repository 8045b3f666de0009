"""LASSO solvers and the cross-validated variance baseline.

The objective convention throughout is

    f(beta) = ||X beta - y||_2^2 + 2 * lam * ||beta||_1

(note the factor 2 on the penalty), so under an orthonormal design the
minimizer is the plain soft threshold at level ``lam``. The solver is
cyclic coordinate descent over a residual that is updated in place; the
inner loop is JIT-compiled. Intended for desk-scale problems; it makes
no attempt at screening rules or sparse storage.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import InvalidInputError
from .linalg import _as_matrix, _as_vector


@dataclass
class LassoSolution:
    """Solver output; ``objective`` is recomputable from the fields."""

    beta: np.ndarray
    lam: float
    iterations: int
    objective: float
    converged: bool
    objective_history: np.ndarray | None = None


@dataclass
class CvResult:
    """Cross-validated LASSO variance estimate.

    ``fold_mse`` is the (folds, grid) matrix of held-out mean squared
    errors; ``lambda_grid`` is the descending grid it was computed over.
    ``sigma2`` is RSS/(n − df) for the full-data refit at
    ``lambda_min_mse``, with df the refit support size and the
    denominator clamped at one.
    """

    sigma2: float
    lambda_min_mse: float
    lambda_1se: float
    fold_mse: np.ndarray
    lambda_grid: np.ndarray
    support_size: int


def soft_threshold(v, lam):
    """Coordinatewise shrink-toward-zero map sign(v)·(|v| − lam)₊."""
    if lam < 0:
        raise InvalidInputError(f"threshold must be >= 0, got {lam}")
    v = np.asarray(v, dtype=float)
    return np.sign(v) * np.maximum(np.abs(v) - lam, 0.0)


@njit(cache=True)
def _cd_sweeps(x, y, col_norms, lam, beta, tol, max_sweeps):
    """Cyclic coordinate descent sweeps; ``beta`` is updated in place.

    ``x`` should be Fortran-ordered so column reads are contiguous.
    Returns (sweeps run, max coordinate change in the final sweep,
    converged flag, objective value after each sweep).
    """
    n, p = x.shape
    r = y - np.dot(x, beta)
    objectives = np.empty(max_sweeps)
    sweeps = 0
    max_delta = 0.0
    converged = False
    for sweep in range(max_sweeps):
        max_delta = 0.0
        for j in range(p):
            nj = col_norms[j]
            bj = beta[j]
            if nj <= 0.0:
                beta[j] = 0.0
                continue
            rho = nj * bj
            for i in range(n):
                rho += x[i, j] * r[i]
            if rho > lam:
                nb = (rho - lam) / nj
            elif rho < -lam:
                nb = (rho + lam) / nj
            else:
                nb = 0.0
            d = nb - bj
            if d != 0.0:
                beta[j] = nb
                for i in range(n):
                    r[i] -= d * x[i, j]
                if abs(d) > max_delta:
                    max_delta = abs(d)
        rss = 0.0
        for i in range(n):
            rss += r[i] * r[i]
        l1 = 0.0
        for j in range(p):
            l1 += abs(beta[j])
        objectives[sweep] = rss + 2.0 * lam * l1
        sweeps = sweep + 1
        if max_delta <= tol:
            converged = True
            break
    return sweeps, max_delta, converged, objectives


def lasso_objective(x, y, beta, lam):
    """Evaluate ||X·beta − y||² + 2·lam·||beta||₁."""
    resid = x @ beta - y
    return float(resid @ resid + 2.0 * lam * np.abs(beta).sum())


def lasso_coordinate_descent(
    x, y, lam, tol=1e-8, max_sweeps=1000, warm_start=None
):
    """Solve the LASSO by cyclic coordinate descent.

    Parameters
    ----------
    x, y : np.ndarray
        Design (n×p) and response (length n).
    lam : float
        Penalty level (>= 0) in the 2·lam·||beta||₁ convention.
    tol : float
        Declare convergence when no coordinate moves more than ``tol``
        within a sweep.
    max_sweeps : int
        Sweep cap; on exhaustion the best iterate is returned with
        ``converged=False`` rather than raising.
    warm_start : np.ndarray, optional
        Initial coefficients (copied, not mutated).
    """
    x = _as_matrix(x, "design")
    y = _as_vector(y, "response")
    n, p = x.shape
    if y.shape[0] != n:
        raise InvalidInputError(f"response length {y.shape[0]} != design rows {n}")
    if lam < 0:
        raise InvalidInputError(f"penalty must be >= 0, got {lam}")
    if tol <= 0:
        raise InvalidInputError(f"tolerance must be > 0, got {tol}")
    if max_sweeps < 1:
        raise InvalidInputError(f"sweep cap must be >= 1, got {max_sweeps}")
    if warm_start is None:
        beta = np.zeros(p)
    else:
        beta = _as_vector(warm_start, "warm start").copy()
        if beta.shape[0] != p:
            raise InvalidInputError(
                f"warm start length {beta.shape[0]} != design cols {p}"
            )
    xf = np.asfortranarray(x)
    col_norms = np.square(x).sum(axis=0)
    sweeps, _, converged, history = _cd_sweeps(
        xf, y, col_norms, float(lam), beta, float(tol), int(max_sweeps)
    )
    return LassoSolution(
        beta=beta,
        lam=float(lam),
        iterations=int(sweeps),
        objective=lasso_objective(x, y, beta, lam),
        converged=bool(converged),
        objective_history=history[:sweeps].copy(),
    )


def default_lambda_grid(x, y, count=100, ratio=1e-3):
    """Descending grid from 2‖Xᵀy‖∞ down to ``ratio`` times that."""
    top = 2.0 * float(np.abs(x.T @ y).max())
    if top <= 0.0:
        return np.array([0.0])
    return np.geomspace(top, ratio * top, count)


def cv_lasso_variance(
    x,
    y,
    folds=10,
    lambda_grid=None,
    seed=0,
    tol=1e-4,
    max_sweeps=250,
    refit_tol=1e-6,
    refit_max_sweeps=2000,
):
    """Noise variance from a k-fold cross-validated LASSO path.

    Fold assignment is a seeded permutation split into ``folds`` nearly
    equal parts. Each training fold is solved over the descending grid
    with warm starts; the grid value minimizing the mean held-out MSE is
    refit on the full data and the variance is read off the residual as
    RSS/(n − df).
    """
    x = _as_matrix(x, "design")
    y = _as_vector(y, "response")
    n, p = x.shape
    if y.shape[0] != n:
        raise InvalidInputError(f"response length {y.shape[0]} != design rows {n}")
    if folds < 2:
        raise InvalidInputError(f"need at least 2 folds, got {folds}")
    if n < folds:
        raise InvalidInputError(
            f"need at least one sample per fold, got n={n} for {folds} folds"
        )
    if lambda_grid is None:
        grid = default_lambda_grid(x, y)
    else:
        grid = _as_vector(lambda_grid, "lambda grid")
        if grid.shape[0] == 0:
            raise InvalidInputError("lambda grid must be non-empty")
        if (grid < 0).any():
            raise InvalidInputError("lambda grid values must be >= 0")
        if grid.shape[0] > 1 and not (np.diff(grid) < 0).all():
            raise InvalidInputError("lambda grid must be strictly descending")

    rng = np.random.default_rng(seed)
    assignment = np.array_split(rng.permutation(n), folds)
    fold_mse = np.empty((folds, grid.shape[0]))
    for f, test_idx in enumerate(assignment):
        mask = np.ones(n, dtype=bool)
        mask[test_idx] = False
        x_train, y_train = x[mask], y[mask]
        x_test, y_test = x[test_idx], y[test_idx]
        beta = np.zeros(p)
        for g, lam in enumerate(grid):
            fit = lasso_coordinate_descent(
                x_train, y_train, lam, tol=tol, max_sweeps=max_sweeps, warm_start=beta
            )
            beta = fit.beta
            resid = x_test @ beta - y_test
            fold_mse[f, g] = float(resid @ resid) / test_idx.shape[0]

    mean_mse = fold_mse.mean(axis=0)
    min_idx = int(np.argmin(mean_mse))  # first hit = largest lambda on ties
    if folds > 1:
        sem = float(fold_mse[:, min_idx].std(ddof=1)) / np.sqrt(folds)
    else:
        sem = 0.0
    one_se_idx = int(np.argmax(mean_mse <= mean_mse[min_idx] + sem))

    refit = lasso_coordinate_descent(
        x, y, grid[min_idx], tol=refit_tol, max_sweeps=refit_max_sweeps
    )
    rss = float(np.sum((x @ refit.beta - y) ** 2))
    df = int(np.count_nonzero(refit.beta))
    sigma2 = rss / max(n - df, 1)
    return CvResult(
        sigma2=sigma2,
        lambda_min_mse=float(grid[min_idx]),
        lambda_1se=float(grid[one_se_idx]),
        fold_mse=fold_mse,
        lambda_grid=grid.copy(),
        support_size=df,
    )
