"""Dense linear algebra used by the fitting and evaluation code.

Data matrices are float64 numpy arrays with columns as samples. Everything
here is a pure function; arrays handed in are never mutated.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import NumericalError

# Singular values below RANK_RTOL * s_max are treated as zero wherever an
# inverse of the spectrum is needed, so rank-deficient data never yields Inf.
RANK_RTOL = 1e-12


class SvdResult(NamedTuple):
    """Thin SVD A = u @ diag(s) @ v.T with orthonormal u, v columns."""

    u: np.ndarray  # (m, r) left singular vectors
    s: np.ndarray  # (r,) singular values, non-increasing, >= 0
    v: np.ndarray  # (n, r) right singular vectors


def as_matrix(values, name: str = "matrix") -> np.ndarray:
    """Validate and return a float64 matrix with at least one row and column.

    Raises ValueError when the input is not 2-D, is empty, or contains
    NaN/Inf entries; non-finite values are rejected at construction so the
    rest of the code can assume finite data.
    """
    a = np.asarray(values, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {a.shape}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"{name} must have at least one row and column, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise ValueError(f"{name} contains non-finite entries")
    return a


def center_columns(x) -> tuple[np.ndarray, np.ndarray]:
    """Subtract the per-row mean; returns (centered matrix, mean vector)."""
    x = as_matrix(x)
    mean = x.mean(axis=1)
    return x - mean[:, None], mean


def frobenius_norm(a) -> float:
    """sqrt of the sum of squared entries."""
    return float(np.linalg.norm(as_matrix(a)))


def svd(a, r: int) -> SvdResult:
    """Thin rank-r SVD with a deterministic sign convention.

    Each left singular vector is oriented so its largest-magnitude entry is
    positive (ties resolved by the first such entry); the matching right
    vector is flipped with it, keeping a = u @ diag(s) @ v.T.

    Raises ValueError when r is outside [1, min(m, n)] and NumericalError
    when the decomposition fails to converge.
    """
    a = as_matrix(a)
    m, n = a.shape
    if not 1 <= r <= min(m, n):
        raise ValueError(f"rank r={r} outside [1, {min(m, n)}] for shape {m}x{n}")
    try:
        u, s, vt = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError:
        # gesdd occasionally fails where the transposed problem succeeds
        try:
            v_full, s, ut = np.linalg.svd(a.T, full_matrices=False)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"SVD did not converge after 2 attempts: {exc}") from exc
        u, vt = ut.T, v_full.T
    u = np.ascontiguousarray(u[:, :r])
    s = s[:r].copy()
    v = np.ascontiguousarray(vt[:r].T)
    peak = np.argmax(np.abs(u), axis=0)
    flip = u[peak, np.arange(r)] < 0
    u[:, flip] = -u[:, flip]
    v[:, flip] = -v[:, flip]
    return SvdResult(u, s, v)


def rank_mask(s: np.ndarray) -> np.ndarray:
    """Boolean mask of singular values counted as nonzero (see RANK_RTOL)."""
    s = np.asarray(s, dtype=np.float64)
    if s.size == 0:
        return np.zeros(0, dtype=bool)
    return (s >= RANK_RTOL * s.max()) & (s > 0.0)


def largest_principal_angle(basis_a: np.ndarray, basis_b: np.ndarray) -> float:
    """Largest principal angle (radians) between two orthonormal column bases.

    The cosine route (SVD of the Gram product) cannot resolve angles below
    ~1e-8, so near-zero angles are refined through the sine of the angle.
    """
    a, b = np.asarray(basis_a), np.asarray(basis_b)
    if a.shape[1] < b.shape[1]:
        a, b = b, a
    cosines = np.clip(np.linalg.svd(a.T @ b, compute_uv=False), -1.0, 1.0)
    theta = float(np.arccos(cosines.min()))
    if theta < 1e-4:
        sines = np.linalg.svd(b - a @ (a.T @ b), compute_uv=False)
        theta = float(np.arcsin(np.clip(sines.max(), 0.0, 1.0)))
    return theta
