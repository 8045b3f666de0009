"""Dense linear-algebra kernels for the window estimators.

Matrices are plain 2-D ``float64`` numpy arrays in row-major order. The
central construction is the blockwise orthonormal factor Z of a design
matrix X: X is split into column blocks of a given width, each block is
replaced by the orthogonal factor of its polar decomposition (singular
values flattened to one), and the blocks are concatenated back. Applying
Zᵀ instead of Xᵀ preconditions the response so per-block noise keeps unit
covariance.

The per-block factor is computed from the L×L Gram matrix: with
XᵦᵀXᵦ = V Σ² Vᵀ, the factor is Z = Xᵦ V Σ⁻¹ Vᵀ. Only small symmetric
eigenproblems are needed, solved here by a cyclic Jacobi iteration that
is vectorized across all equal-width blocks at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import ConvergenceError, DegenerateBlockError, InvalidInputError

# Jacobi converges quadratically; 30 sweeps is far beyond need up to L ~ 1000.
JACOBI_MAX_SWEEPS = 30
JACOBI_TOL = 1e-12

# A block is declared degenerate when sigma_min <= RANK_TOL * sigma_max.
RANK_TOL = 1e-10


@dataclass
class BlockOrthogonalizer:
    """Blockwise orthonormal factor of a design matrix.

    Attributes
    ----------
    z : np.ndarray
        n×p matrix whose column blocks each have orthonormal columns.
    block_width : int
        Nominal block width L; the trailing block is narrower when L
        does not divide p.
    block_singular_values : list[np.ndarray]
        Non-increasing singular values of each original block.
    conditioning_tolerance : float
        Relative threshold below which a block counts as degenerate.
    """

    z: np.ndarray
    block_width: int
    block_singular_values: list[np.ndarray]
    conditioning_tolerance: float


@dataclass
class RipProbeResult:
    """Sampled lower bound on the restricted-isometry constant.

    ``delta_lower_bound`` is the max over sampled s-column subsets of
    max(1 − λ_min, λ_max − 1) for the subset Gram spectrum. Sampling can
    only under-estimate the true constant, so this is a lower bound, not
    a certificate.
    """

    order: int
    delta_lower_bound: float
    subsets_sampled: int
    seed: int


def _as_matrix(a, name="matrix"):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise InvalidInputError(f"{name} must be 2-dimensional, got ndim={a.ndim}")
    if a.size and not np.isfinite(a).all():
        raise InvalidInputError(f"{name} contains non-finite entries")
    return a


def _as_vector(v, name="vector"):
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise InvalidInputError(f"{name} must be 1-dimensional, got ndim={v.ndim}")
    if v.size and not np.isfinite(v).all():
        raise InvalidInputError(f"{name} contains non-finite entries")
    return v


def matvec(a, v):
    """Return A·v, rejecting a length mismatch."""
    a = _as_matrix(a)
    v = _as_vector(v)
    if v.shape[0] != a.shape[1]:
        raise InvalidInputError(
            f"matvec: vector length {v.shape[0]} != matrix cols {a.shape[1]}"
        )
    return a @ v


def transpose_matvec(a, u):
    """Return Aᵀ·u without materializing the transpose."""
    a = _as_matrix(a)
    u = _as_vector(u)
    if u.shape[0] != a.shape[0]:
        raise InvalidInputError(
            f"transpose_matvec: vector length {u.shape[0]} != matrix rows {a.shape[0]}"
        )
    return a.T @ u


@njit(cache=True)
def _jacobi_sweeps(g, v, threshold, max_sweeps):
    """Cyclic Jacobi rotations on one symmetric matrix, in place.

    ``v`` must arrive as the identity; it accumulates the eigenvector
    columns. Pairs already below ``threshold`` are skipped. Returns the
    final max off-diagonal magnitude.
    """
    ell = g.shape[0]
    for _ in range(max_sweeps):
        off = 0.0
        for i in range(ell - 1):
            for j in range(i + 1, ell):
                if abs(g[i, j]) > off:
                    off = abs(g[i, j])
        if off <= threshold:
            return off
        for p in range(ell - 1):
            for q in range(p + 1, ell):
                apq = g[p, q]
                if abs(apq) <= threshold:
                    continue
                # tan of the annihilating angle, smaller root for stability
                tau = (g[q, q] - g[p, p]) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + math.sqrt(1.0 + tau * tau))
                else:
                    t = 1.0 / (tau - math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                for k in range(ell):
                    gpk = g[p, k]
                    gqk = g[q, k]
                    g[p, k] = c * gpk - s * gqk
                    g[q, k] = s * gpk + c * gqk
                for k in range(ell):
                    gkp = g[k, p]
                    gkq = g[k, q]
                    g[k, p] = c * gkp - s * gkq
                    g[k, q] = s * gkp + c * gkq
                g[p, q] = 0.0
                g[q, p] = 0.0
                for k in range(ell):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - s * vkq
                    v[k, q] = s * vkp + c * vkq
    off = 0.0
    for i in range(ell - 1):
        for j in range(i + 1, ell):
            if abs(g[i, j]) > off:
                off = abs(g[i, j])
    return off


@njit(cache=True)
def _jacobi_stack_kernel(gs, threshold, max_sweeps):
    b, ell = gs.shape[0], gs.shape[1]
    vs = np.zeros((b, ell, ell))
    worst = 0.0
    for i in range(b):
        for k in range(ell):
            vs[i, k, k] = 1.0
        off = _jacobi_sweeps(gs[i], vs[i], threshold, max_sweeps)
        if off > worst:
            worst = off
    return vs, worst


def _jacobi_batch(gs, tol, max_sweeps):
    """Diagonalize a stack of symmetric matrices by cyclic Jacobi.

    ``gs`` (B, L, L) is modified in place into the diagonalized form.
    Returns (eigenvalues (B, L), eigenvectors (B, L, L), achieved max
    off-diagonal). Off-diagonals are driven below tol·scale/L so that L
    leftover entries cannot breach the advertised residual tolerance.
    """
    b, ell, _ = gs.shape
    if ell == 1:
        return gs[:, :, 0].copy(), np.ones((b, 1, 1)), 0.0
    scale = max(1.0, float(np.abs(gs).max()) if gs.size else 0.0)
    threshold = tol * scale / ell
    gs = np.ascontiguousarray(gs)
    vs, achieved = _jacobi_stack_kernel(gs, threshold, max_sweeps)
    return np.einsum("bii->bi", gs).copy(), vs, float(achieved)


def symmetric_eigendecomposition(g, tol=JACOBI_TOL, max_sweeps=JACOBI_MAX_SWEEPS):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi.

    Parameters
    ----------
    g : np.ndarray
        L×L symmetric matrix (relative asymmetry above 1e-12 is rejected).
    tol : float
        Off-diagonal entries are driven below ``tol * max(1, |g|_max)``.

    Returns
    -------
    (eigenvalues, eigenvectors)
        Eigenvalues in non-increasing order; eigenvectors as the matching
        orthonormal columns.
    """
    g = _as_matrix(g, "symmetric matrix")
    if g.shape[0] != g.shape[1] or g.shape[0] < 1:
        raise InvalidInputError(f"expected a square matrix, got shape {g.shape}")
    scale = max(1.0, float(np.abs(g).max()) if g.size else 0.0)
    asym = float(np.abs(g - g.T).max())
    if asym > 1e-12 * scale:
        raise InvalidInputError(
            f"matrix is not symmetric: max |G - G^T| = {asym:.3e} (relative to {scale:.3e})"
        )
    work = 0.5 * (g + g.T)  # exact symmetrization kills roundoff skew
    vals, vecs, achieved = _jacobi_batch(work[None], tol, max_sweeps)
    if achieved > tol * scale / g.shape[0]:
        raise ConvergenceError(
            f"Jacobi did not converge in {max_sweeps} sweeps "
            f"(max off-diagonal {achieved:.3e})",
            residual=achieved,
        )
    order = np.argsort(vals[0])[::-1]
    return vals[0][order], vecs[0][:, order]


def _orthonormal_factors(blocks, conditioning_tolerance, block_offset=0):
    """Per-block polar factors for a (B, n, L) stack of column blocks.

    Returns (z_blocks, singular_values) or raises on a degenerate block,
    identifying it by ``block_offset`` plus its position in the stack.
    """
    grams = blocks.transpose(0, 2, 1) @ blocks
    grams = 0.5 * (grams + grams.transpose(0, 2, 1))
    scale = max(1.0, float(np.abs(grams).max()) if grams.size else 0.0)
    vals, vecs, achieved = _jacobi_batch(grams, JACOBI_TOL, JACOBI_MAX_SWEEPS)
    if achieved > JACOBI_TOL * scale / grams.shape[-1]:
        raise ConvergenceError(
            f"Jacobi did not converge on block Gram matrices "
            f"(max off-diagonal {achieved:.3e})",
            residual=achieved,
        )
    sigmas = np.sqrt(np.clip(vals, 0.0, None))
    sig_max = sigmas.max(axis=1)
    sig_min = sigmas.min(axis=1)
    bad = sig_min <= conditioning_tolerance * np.maximum(sig_max, np.finfo(float).tiny)
    if bad.any():
        idx = int(np.argmax(bad))
        raise DegenerateBlockError(
            f"column block {block_offset + idx} is numerically rank deficient "
            f"(sigma_min={sig_min[idx]:.3e}, sigma_max={sig_max[idx]:.3e})",
            block_index=block_offset + idx,
        )
    # Z = X V diag(1/sigma) V^T, the orthogonal polar factor of each block
    whiten = (vecs / sigmas[:, None, :]) @ vecs.transpose(0, 2, 1)
    z_blocks = blocks @ whiten
    order = np.argsort(sigmas, axis=1)[:, ::-1]
    sorted_sigmas = np.take_along_axis(sigmas, order, axis=1)
    return z_blocks, sorted_sigmas


def block_orthonormal_factor(xblock, conditioning_tolerance=RANK_TOL):
    """Orthonormal factor of one n×L column block.

    Replaces the block's singular values by one while preserving its
    column space and singular directions, so Zᵀ·X has the same singular
    values as X. Raises ``DegenerateBlockError`` when the smallest
    singular value falls at or below ``conditioning_tolerance`` times the
    largest.
    """
    xblock = _as_matrix(xblock, "block")
    n, ell = xblock.shape
    if ell < 1 or ell > n:
        raise InvalidInputError(
            f"block width must satisfy 1 <= L <= rows, got {ell}x{n}"
        )
    z, sig = _orthonormal_factors(xblock[None], conditioning_tolerance)
    return z[0], sig[0]


def build_regularized_design(x, block_width, conditioning_tolerance=RANK_TOL):
    """Concatenate per-block orthonormal factors of the full design.

    Columns are split into consecutive blocks of ``block_width``; when
    the width does not divide p, the final block keeps the remaining
    p mod L columns. All full-width blocks are factored in one batched
    Jacobi pass.
    """
    x = _as_matrix(x, "design")
    n, p = x.shape
    if block_width < 1 or block_width > n:
        raise InvalidInputError(
            f"block width must satisfy 1 <= L <= n={n}, got {block_width}"
        )
    full = p // block_width
    rem = p - full * block_width
    z = np.empty_like(x)
    singular_values: list[np.ndarray] = []
    if full:
        stacked = (
            x[:, : full * block_width]
            .reshape(n, full, block_width)
            .transpose(1, 0, 2)
            .copy()
        )
        z_blocks, sigmas = _orthonormal_factors(stacked, conditioning_tolerance)
        z[:, : full * block_width] = z_blocks.transpose(1, 0, 2).reshape(
            n, full * block_width
        )
        singular_values.extend(sigmas)
    if rem:
        if rem > n:
            raise InvalidInputError(
                f"trailing block width {rem} exceeds row count {n}"
            )
        z_tail, sig_tail = _orthonormal_factors(
            x[:, full * block_width :][None], conditioning_tolerance, block_offset=full
        )
        z[:, full * block_width :] = z_tail[0]
        singular_values.append(sig_tail[0])
    return BlockOrthogonalizer(
        z=z,
        block_width=block_width,
        block_singular_values=singular_values,
        conditioning_tolerance=conditioning_tolerance,
    )


def estimate_rip_delta(x, order, subsets, seed):
    """Sampled lower bound on the order-``order`` isometry constant.

    Draws ``subsets`` uniformly random column subsets of the given size
    and records the worst spectral deviation of their Gram matrices from
    the identity. Deterministic for a fixed seed, and monotone
    non-decreasing in ``subsets`` because later draws extend the same
    stream.
    """
    x = _as_matrix(x, "design")
    n, p = x.shape
    if order < 1 or order > min(n, p):
        raise InvalidInputError(
            f"sparsity order must satisfy 1 <= s <= min(n, p)={min(n, p)}, got {order}"
        )
    if subsets < 1:
        raise InvalidInputError(f"subset count must be >= 1, got {subsets}")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(subsets):
        cols = rng.choice(p, size=order, replace=False)
        gram = x[:, cols].T @ x[:, cols]
        eigs = np.linalg.eigvalsh(gram)
        worst = max(worst, float(1.0 - eigs[0]), float(eigs[-1] - 1.0))
    return RipProbeResult(
        order=order,
        delta_lower_bound=worst,
        subsets_sampled=subsets,
        seed=seed,
    )
