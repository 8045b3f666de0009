"""Synthetic instance generation and the Monte-Carlo grid runner.

Instances follow y = X·beta + eta: a Gaussian or random-orthogonal
design, a sparse coefficient vector with Laplace-distributed nonzero
entries rescaled to a target norm, and i.i.d. Gaussian noise. Every
random draw is seeded through a splitmix-style mixing function over
(base seed, component, cell, trial), so grid output is a pure function
of its arguments and independent of worker count or scheduling.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, NumericalError
from .estimators import (
    bias_correct,
    default_window_candidates,
    gve_rip,
    oracle_sigma,
    select_window_inflection,
)
from .lasso import cv_lasso_variance

ENSEMBLES = ("gaussian", "orthonormal")
GRID_METHODS = ("fast", "svd", "fast-bc", "svd-bc", "oracle", "cv-lasso")
DEFAULT_METHODS = GRID_METHODS

_MASK64 = (1 << 64) - 1
# component tags for sub-seed derivation; values are arbitrary but frozen
_TAG_DESIGN = 0xD5
_TAG_SIGNAL = 0x51
_TAG_NOISE = 0x01
_TAG_CV = 0xCF


def _splitmix64(v):
    v = (v + 0x9E3779B97F4A7C15) & _MASK64
    v = ((v ^ (v >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    v = ((v ^ (v >> 27)) * 0x94D049BB133111EB) & _MASK64
    return v ^ (v >> 31)


def derive_seed(*parts):
    """Fold integers into one well-mixed 64-bit seed."""
    state = 0
    for part in parts:
        state = _splitmix64(state ^ (int(part) & _MASK64))
    return state


@dataclass
class InstanceConfig:
    """One cell of the synthetic grid.

    The support size is ceil(n^alpha); nonzero coefficients are drawn
    Laplace(1) on a uniform support and rescaled so the coefficient
    vector has the requested Euclidean norm.
    """

    n: int
    p: int
    alpha: float
    beta_norm: float
    sigma2: float = 1.0
    ensemble: str = "gaussian"
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.p < 1:
            raise InvalidInputError(f"dimensions must be >= 1, got n={self.n}, p={self.p}")
        if self.beta_norm < 0:
            raise InvalidInputError(f"target norm must be >= 0, got {self.beta_norm}")
        if self.sigma2 < 0:
            raise InvalidInputError(f"noise variance must be >= 0, got {self.sigma2}")
        if self.ensemble not in ENSEMBLES:
            raise InvalidInputError(
                f"ensemble must be one of {ENSEMBLES}, got {self.ensemble!r}"
            )
        if self.ensemble == "orthonormal" and self.n != self.p:
            raise InvalidInputError(
                f"orthonormal ensemble requires n = p, got {self.n} != {self.p}"
            )
        if not 1 <= self.sparsity <= self.p:
            raise InvalidInputError(
                f"support size {self.sparsity} outside [1, p={self.p}] "
                f"(n={self.n}, alpha={self.alpha})"
            )

    @property
    def sparsity(self):
        # the tiny slack keeps exact integer powers from ceiling upward
        return math.ceil(self.n**self.alpha - 1e-9)


@dataclass
class RegressionInstance:
    """A design/response pair, with the generating truth when synthetic."""

    x: np.ndarray
    y: np.ndarray
    beta: np.ndarray | None = None
    eta: np.ndarray | None = None
    sigma2: float | None = None


@dataclass
class ReportRow:
    """One estimator run on one synthetic trial."""

    method: str
    n: int
    p: int
    alpha: float
    beta_norm: float
    sigma2_true: float
    trial: int
    sigma2_hat: float
    window_l: int
    runtime_us: int
    seed: int
    status: str = "ok"


@dataclass
class SummaryRow:
    """Per-cell, per-method aggregate of report rows."""

    method: str
    n: int
    p: int
    alpha: float
    beta_norm: float
    sigma2_true: float
    trials: int
    failures: int
    mean_error: float
    bias: float
    std_dev: float
    median_relative_error: float


def generate_design(n, p, ensemble="gaussian", seed=0):
    """Draw a design matrix from the named ensemble.

    "gaussian": i.i.d. entries with standard deviation n^{-1/2};
    "orthonormal": a Haar-distributed orthogonal matrix (requires n = p).
    """
    if n < 1 or p < 1:
        raise InvalidInputError(f"dimensions must be >= 1, got n={n}, p={p}")
    rng = np.random.default_rng(seed)
    if ensemble == "gaussian":
        return rng.normal(0.0, n**-0.5, size=(n, p))
    if ensemble == "orthonormal":
        if n != p:
            raise InvalidInputError(
                f"orthonormal ensemble requires n = p, got {n} != {p}"
            )
        q, r = np.linalg.qr(rng.standard_normal((n, n)))
        signs = np.sign(np.diagonal(r))
        signs = np.where(signs == 0.0, 1.0, signs)
        return q * signs
    raise InvalidInputError(f"ensemble must be one of {ENSEMBLES}, got {ensemble!r}")


def _standard_laplace(rng, size):
    # inverse CDF of the unit Laplace distribution on a uniform draw
    u = rng.random(size)
    u = np.clip(u, 2.0**-53, 1.0 - 2.0**-53)
    return np.where(u < 0.5, np.log(2.0 * u), -np.log(2.0 * (1.0 - u)))


def generate_signal(p, s, beta_norm, seed=0):
    """Sparse coefficients: s Laplace(1) draws on a uniform support,
    rescaled to the requested Euclidean norm."""
    if s < 0 or s > p:
        raise InvalidInputError(f"support size must satisfy 0 <= s <= p={p}, got {s}")
    beta = np.zeros(p)
    if s == 0 or beta_norm == 0:
        return beta
    rng = np.random.default_rng(seed)
    support = rng.choice(p, size=s, replace=False)
    values = _standard_laplace(rng, s)
    norm = np.linalg.norm(values)
    if norm == 0.0:  # astronomically unlikely; resample deterministically
        values = np.ones(s)
        norm = math.sqrt(s)
    beta[support] = values * (beta_norm / norm)
    return beta


def generate_instance(cfg):
    """Compose design, signal, and noise draws into one instance.

    The three components use independently derived sub-seeds so that,
    for example, the same design can be reproduced without replaying the
    signal stream.
    """
    x = generate_design(
        cfg.n, cfg.p, cfg.ensemble, derive_seed(cfg.seed, _TAG_DESIGN)
    )
    beta = generate_signal(
        cfg.p, cfg.sparsity, cfg.beta_norm, derive_seed(cfg.seed, _TAG_SIGNAL)
    )
    noise_rng = np.random.default_rng(derive_seed(cfg.seed, _TAG_NOISE))
    eta = noise_rng.normal(0.0, math.sqrt(cfg.sigma2), size=cfg.n)
    y = x @ beta + eta
    return RegressionInstance(x=x, y=y, beta=beta, eta=eta, sigma2=cfg.sigma2)


def _run_method(method, instance, window, trial_seed):
    """Run one roster method; returns (sigma2_hat, window_length_used)."""
    if method == "oracle":
        return oracle_sigma(instance.eta).sigma2, 0
    if method == "cv-lasso":
        result = cv_lasso_variance(
            instance.x, instance.y, folds=10, seed=derive_seed(trial_seed, _TAG_CV)
        )
        return result.sigma2, 0
    base = method.removesuffix("-bc")
    if base not in ("fast", "svd"):
        raise InvalidInputError(f"unknown method {method!r}")
    if window == "auto":
        n, p = instance.x.shape
        candidates = default_window_candidates(n, p)
        length, estimates = select_window_inflection(
            instance.x, instance.y, candidates, base
        )
        estimate = estimates[candidates.index(length)]
    else:
        length = int(window)
        estimate = gve_rip(instance.x, instance.y, length, base)
    if method.endswith("-bc"):
        estimate = bias_correct(estimate, instance.x.shape[1])
    return estimate.sigma2, length


def _run_trial(cell_index, cfg, trial, methods, base_seed, window, timing):
    trial_seed = derive_seed(base_seed, cell_index, trial)
    instance = generate_instance(
        InstanceConfig(
            n=cfg.n,
            p=cfg.p,
            alpha=cfg.alpha,
            beta_norm=cfg.beta_norm,
            sigma2=cfg.sigma2,
            ensemble=cfg.ensemble,
            seed=trial_seed,
        )
    )
    rows = []
    for method in methods:
        start = time.perf_counter_ns()
        try:
            sigma2_hat, length = _run_method(method, instance, window, trial_seed)
            status = "ok"
        except (InvalidInputError, NumericalError) as exc:
            sigma2_hat, length = float("nan"), 0
            status = f"error:{type(exc).__name__}"
        # wall time is only recorded on request so that default output
        # stays a pure function of the arguments
        runtime_us = (time.perf_counter_ns() - start) // 1000 if timing else 0
        rows.append(
            ReportRow(
                method=method,
                n=cfg.n,
                p=cfg.p,
                alpha=cfg.alpha,
                beta_norm=cfg.beta_norm,
                sigma2_true=cfg.sigma2,
                trial=trial,
                sigma2_hat=sigma2_hat,
                window_l=length,
                runtime_us=int(runtime_us),
                seed=trial_seed,
                status=status,
            )
        )
    return rows


def run_grid(
    grid,
    methods=DEFAULT_METHODS,
    trials=1,
    base_seed=0,
    workers=1,
    window="auto",
    timing=False,
):
    """Run every roster method on every (cell, trial) of the grid.

    Returns rows in canonical (cell, trial, method) order. Estimator
    failures become rows with an error status; the run continues. With
    ``workers > 1`` the (cell, trial) jobs execute in a process pool;
    output is identical to the sequential run. ``timing`` fills
    ``runtime_us`` with measured wall time, making output run-dependent;
    it is zero by default so reruns reproduce results exactly.
    """
    grid = list(grid)
    methods = list(methods)
    if not grid:
        raise InvalidInputError("grid must be non-empty")
    if not methods:
        raise InvalidInputError("method roster must be non-empty")
    unknown = [m for m in methods if m not in GRID_METHODS]
    if unknown:
        raise InvalidInputError(
            f"unknown methods {unknown}; available: {list(GRID_METHODS)}"
        )
    if trials < 1:
        raise InvalidInputError(f"trial count must be >= 1, got {trials}")
    if workers < 1:
        raise InvalidInputError(f"worker count must be >= 1, got {workers}")

    jobs = [
        (cell_index, cfg, trial)
        for cell_index, cfg in enumerate(grid)
        for trial in range(trials)
    ]
    if workers == 1:
        results = [
            _run_trial(cell_index, cfg, trial, methods, base_seed, window, timing)
            for cell_index, cfg, trial in jobs
        ]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(
                    _run_trial, cell_index, cfg, trial, methods, base_seed, window, timing
                )
                for cell_index, cfg, trial in jobs
            ]
            results = [f.result() for f in futures]
    rows = []
    for trial_rows in results:
        rows.extend(trial_rows)
    return rows


def summarize(rows):
    """Aggregate report rows per (cell, method).

    Error rows are excluded from the moments but counted in ``failures``.
    ``bias`` is mean(estimate) − truth; ``median_relative_error`` uses
    |estimate − truth| / max(truth, 1e-12).
    """
    rows = list(rows)
    if not rows:
        raise InvalidInputError("no rows to summarize")
    groups: dict[tuple, list[ReportRow]] = {}
    for row in rows:
        key = (row.method, row.n, row.p, row.alpha, row.beta_norm, row.sigma2_true)
        groups.setdefault(key, []).append(row)
    summaries = []
    for key, members in groups.items():
        method, n, p, alpha, beta_norm, sigma2_true = key
        ok = [r.sigma2_hat for r in members if r.status == "ok"]
        failures = len(members) - len(ok)
        if ok:
            hats = np.array(ok)
            errors = np.abs(hats - sigma2_true)
            mean_error = float(errors.mean())
            bias = float(hats.mean() - sigma2_true)
            std_dev = float(hats.std(ddof=1)) if hats.shape[0] > 1 else 0.0
            median_rel = float(np.median(errors / max(sigma2_true, 1e-12)))
        else:
            mean_error = bias = std_dev = median_rel = float("nan")
        summaries.append(
            SummaryRow(
                method=method,
                n=n,
                p=p,
                alpha=alpha,
                beta_norm=beta_norm,
                sigma2_true=sigma2_true,
                trials=len(members),
                failures=failures,
                mean_error=mean_error,
                bias=bias,
                std_dev=std_dev,
                median_relative_error=median_rel,
            )
        )
    return summaries
