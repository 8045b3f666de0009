"""Window-based noise variance estimators.

The estimators share one primitive: split a (possibly preconditioned)
response into consecutive windows of length L, compute each window's mean
square, and average the smallest half of those window statistics. Windows
that overlap the sparse signal inflate their statistic, so keeping only
the small half rejects signal contamination while the clean windows
concentrate around the noise variance.

Variants differ in the vector being windowed:

* ``gve_orthonormal`` — the raw response (design already orthonormal);
* ``gve_rip`` — Zᵀy for the blockwise orthonormal factor Z (``svd``), or
  the cheaper Xᵀy (``fast``);
* ``gve_tv`` — consecutive differences of the response, for signals whose
  discrete derivative is sparse; halved, since the difference of two
  independent noise terms has twice the variance.

The trimmed average is biased slightly downward; ``bias_correct``
multiplies by 1 + 1/log(p) to offset it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidInputError
from .linalg import _as_matrix, _as_vector, build_regularized_design, transpose_matvec

METHODS = ("ortho", "svd", "fast", "tv", "oracle")


@dataclass
class WindowPlan:
    """How a vector of ``domain_length`` entries was windowed.

    ``length`` is L, ``count`` the number m of full windows, ``trim`` the
    number k of smallest window statistics averaged, and ``dropped_tail``
    the trailing entries that fit no full window.
    """

    length: int
    count: int
    trim: int
    dropped_tail: int


@dataclass
class VarianceEstimate:
    """A noise-variance estimate together with how it was produced.

    ``window_values`` holds the per-window variance estimates the trimmed
    average ran over (for the ``tv`` method these are the half difference
    statistics, so the trim bounds min ≤ sigma2 ≤ mean hold uniformly).
    ``plan`` and ``window_values`` are None for the oracle method, which
    uses no windows.
    """

    sigma2: float
    sigma: float
    method: str
    plan: WindowPlan | None = None
    window_values: np.ndarray | None = None
    bias_corrected: bool = False


def window_stats(v, length):
    """Mean square of each length-``length`` window of ``v``.

    Trailing entries that do not fill a window are ignored. At least two
    full windows are required.
    """
    v = _as_vector(v)
    if length < 1:
        raise InvalidInputError(f"window length must be >= 1, got {length}")
    count = v.shape[0] // length
    if count < 2:
        raise InvalidInputError(
            f"need at least 2 full windows, got {count} "
            f"(len={v.shape[0]}, L={length})"
        )
    head = v[: count * length]
    return np.square(head).reshape(count, length).mean(axis=1)


def trimmed_window_average(stats, trim):
    """Mean of the ``trim`` smallest window statistics."""
    stats = _as_vector(stats, "window statistics")
    if trim < 1 or trim > stats.shape[0]:
        raise InvalidInputError(
            f"trim count must satisfy 1 <= k <= {stats.shape[0]}, got {trim}"
        )
    return float(np.sort(stats)[:trim].mean())


def default_trim(count):
    """Default trim count: the smaller half, at least one window."""
    return max(1, count // 2)


def _windowed_estimate(values, length, method, scale=1.0):
    stats = window_stats(values, length) * scale
    count = stats.shape[0]
    trim = default_trim(count)
    sigma2 = trimmed_window_average(stats, trim)
    plan = WindowPlan(
        length=length,
        count=count,
        trim=trim,
        dropped_tail=values.shape[0] - count * length,
    )
    return VarianceEstimate(
        sigma2=sigma2,
        sigma=math.sqrt(sigma2),
        method=method,
        plan=plan,
        window_values=stats,
    )


def gve_orthonormal(y, length):
    """Trimmed window estimate on a response in the orthonormal frame."""
    y = _as_vector(y, "response")
    return _windowed_estimate(y, length, "ortho")


def gve_rip(x, y, length, preconditioner="svd"):
    """Trimmed window estimate after preconditioning by the design.

    Parameters
    ----------
    x : np.ndarray
        n×p design matrix.
    y : np.ndarray
        Length-n response.
    length : int
        Window length L; must satisfy L <= n and floor(p/L) >= 2.
    preconditioner : {"svd", "fast"}
        "svd" windows Zᵀy for the blockwise orthonormal factor Z;
        "fast" windows Xᵀy directly.
    """
    x = _as_matrix(x, "design")
    y = _as_vector(y, "response")
    n, p = x.shape
    if y.shape[0] != n:
        raise InvalidInputError(
            f"response length {y.shape[0]} != design rows {n}"
        )
    if preconditioner not in ("svd", "fast"):
        raise InvalidInputError(
            f"preconditioner must be 'svd' or 'fast', got {preconditioner!r}"
        )
    if length < 1 or length > n:
        raise InvalidInputError(
            f"window length must satisfy 1 <= L <= n={n}, got {length}"
        )
    if p // length < 2:
        raise InvalidInputError(
            f"need floor(p/L) >= 2 windows, got p={p}, L={length}"
        )
    if preconditioner == "svd":
        z = build_regularized_design(x, length).z
        transformed = transpose_matvec(z, y)
    else:
        transformed = transpose_matvec(x, y)
    return _windowed_estimate(transformed, length, preconditioner)


def gve_tv(y, length):
    """Trimmed window estimate over consecutive differences of ``y``.

    Suits signals that are sparse in the discrete derivative. Each
    difference carries the noise of two entries, so the window statistics
    are halved to estimate the per-entry variance.
    """
    y = _as_vector(y, "response")
    if y.shape[0] < 2:
        raise InvalidInputError("need at least 2 entries to form differences")
    diffs = np.diff(y)
    return _windowed_estimate(diffs, length, "tv", scale=0.5)


def bias_correct(estimate, p):
    """Multiply an estimate by 1 + 1/log(p) to offset the trimming bias.

    Not idempotent: applying it twice multiplies twice. The
    ``bias_corrected`` flag records that the correction has been applied.
    """
    if p < 3:
        raise InvalidInputError(f"dimension must be >= 3 for bias correction, got {p}")
    factor = 1.0 + 1.0 / math.log(p)
    sigma2 = estimate.sigma2 * factor
    return replace(
        estimate,
        sigma2=sigma2,
        sigma=math.sqrt(sigma2),
        bias_corrected=True,
    )


def oracle_sigma(eta, n=None):
    """Benchmark estimate ‖η‖₂/√n from the true noise vector."""
    eta = _as_vector(eta, "noise")
    if eta.shape[0] < 1:
        raise InvalidInputError("noise vector must be non-empty")
    if n is None:
        n = eta.shape[0]
    elif n != eta.shape[0]:
        raise InvalidInputError(f"stated length {n} != vector length {eta.shape[0]}")
    sigma = float(np.linalg.norm(eta)) / math.sqrt(n)
    return VarianceEstimate(sigma2=sigma * sigma, sigma=sigma, method="oracle")


def lambda_from_sigma(sigma2, n):
    """Regularization level 4·σ²·log(n)/n for an n-sample LASSO fit."""
    if n < 2:
        raise InvalidInputError(f"sample count must be >= 2, got {n}")
    if sigma2 < 0:
        raise InvalidInputError(f"variance must be >= 0, got {sigma2}")
    return 4.0 * sigma2 * math.log(n) / n


def default_window_candidates(n, domain_length):
    """Geometric sweep {2, 4, 8, ...} ∪ {n}, filtered to valid lengths.

    A length is valid when it does not exceed ``n`` and leaves at least
    two full windows over ``domain_length`` entries.
    """
    candidates = set()
    length = 2
    while length <= n:
        candidates.add(length)
        length *= 2
    candidates.add(n)
    return sorted(
        length
        for length in candidates
        if 1 <= length <= n and domain_length // length >= 2
    )


def _candidate_estimates(x, y, candidates, method):
    if method in ("svd", "fast"):
        if x is None:
            raise InvalidInputError(f"method {method!r} requires a design matrix")
        return [gve_rip(x, y, length, method) for length in candidates]
    if method == "ortho":
        return [gve_orthonormal(y, length) for length in candidates]
    if method == "tv":
        return [gve_tv(y, length) for length in candidates]
    raise InvalidInputError(f"unknown estimation method {method!r}")


def inflection_index(values):
    """Index of the first sign change in the second differences.

    ``values`` are estimates at ascending window lengths. Returns the
    index of the candidate at which the changed sign first holds, or the
    last index when the second differences never change sign strictly.
    """
    values = _as_vector(values, "estimate sequence")
    if values.shape[0] < 4:
        raise InvalidInputError(
            f"need at least 4 candidates for inflection detection, got {values.shape[0]}"
        )
    second = np.diff(values, n=2)
    for i in range(second.shape[0] - 1):
        if second[i] * second[i + 1] < 0.0:
            return i + 2
    return values.shape[0] - 1


def select_window_inflection(x, y, candidates, method="svd"):
    """Pick a window length from the shape of the estimate-vs-L curve.

    Runs the estimator at each candidate length (ascending) and selects
    the smallest candidate where the discrete second difference of the
    estimates changes sign; monotone curvature falls back to the largest
    candidate. Returns ``(selected_length, estimates)`` with one estimate
    per candidate.
    """
    candidates = sorted(set(int(c) for c in candidates))
    if len(candidates) < 4:
        raise InvalidInputError(
            f"need at least 4 candidate window lengths, got {len(candidates)}"
        )
    estimates = _candidate_estimates(x, y, candidates, method)
    idx = inflection_index([e.sigma2 for e in estimates])
    return candidates[idx], estimates


def select_window_oracle(x, y, sigma2_true, candidates, method="svd"):
    """Pick the window length whose estimate is closest to a known σ².

    Ties break toward the larger length (more averaging). Returns
    ``(selected_length, estimates, errors)`` where ``errors[i]`` is
    |σ̂²(Lᵢ) − σ²_true| for the i-th candidate.
    """
    if sigma2_true < 0:
        raise InvalidInputError(f"true variance must be >= 0, got {sigma2_true}")
    candidates = sorted(set(int(c) for c in candidates))
    if not candidates:
        raise InvalidInputError("need at least one candidate window length")
    estimates = _candidate_estimates(x, y, candidates, method)
    errors = np.array([abs(e.sigma2 - sigma2_true) for e in estimates])
    best = 0
    for i in range(1, len(candidates)):
        if errors[i] <= errors[best]:  # <= prefers the larger length on ties
            best = i
    return candidates[best], estimates, errors
