"""Small dense symmetric linear algebra.

The simulator only ever deals with tiny symmetric matrices (feature
dimension <= 8), so the eigensolver is a cyclic Jacobi iteration: it is
unconditionally stable on symmetric input, needs no pivot heuristics, and
its output is trivial to verify by reconstruction.  Cholesky is the
textbook left-looking variant, kept local so a failed pivot can be
reported by index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_JACOBI_MAX_SWEEPS = 64
# Stop once the off-diagonal Frobenius mass is negligible next to the
# diagonal mass.
_JACOBI_TOL = 1e-14


class NotPositiveDefiniteError(ValueError):
    """Raised when a factorization pivot is not strictly positive."""

    def __init__(self, pivot_index: int):
        self.pivot_index = pivot_index
        super().__init__(f"matrix is not positive definite (pivot {pivot_index} <= 0)")


@dataclass(frozen=True)
class EigenResult:
    """Spectral decomposition of a symmetric matrix.

    eigenvalues are sorted descending; eigenvectors are the matching
    unit-norm columns.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def lambda_min(self) -> float:
        return float(self.eigenvalues[-1])


def require_symmetric(a, tol: float = 1e-12, what: str = "matrix") -> np.ndarray:
    """Validate and return `a` as a square symmetric float64 array."""
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{what} must be square, got shape {m.shape}")
    if m.shape[0] < 1:
        raise ValueError(f"{what} must have at least one row")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{what} has non-finite entries")
    scale = np.max(np.abs(m))
    skew = np.max(np.abs(m - m.T)) if m.size else 0.0
    if skew > tol * max(scale, 1e-300):
        raise ValueError(
            f"{what} is not symmetric: max |a - a^T| = {skew:.3e} "
            f"exceeds {tol:.0e} relative to max |a| = {scale:.3e}"
        )
    return m.copy()


def _eigen_2x2(m: np.ndarray) -> EigenResult:
    """Closed form for the 2x2 case: mean +/- radius of the diagonal.

    Keeps the eigenvalue sum exactly equal to the trace, which the larger
    analytics rely on when step sizes reduce to clean rationals.
    """
    half_trace = 0.5 * (m[0, 0] + m[1, 1])
    radius = np.hypot(0.5 * (m[0, 0] - m[1, 1]), m[0, 1])
    w = np.array([half_trace + radius, half_trace - radius])
    if m[0, 1] == 0.0 and m[0, 0] >= m[1, 1]:
        v = np.eye(2)
    elif m[0, 1] == 0.0:
        v = np.array([[0.0, 1.0], [1.0, 0.0]])
    else:
        # Eigenvector of the larger eigenvalue, picked for stability.
        if m[0, 0] >= m[1, 1]:
            u = np.array([w[0] - m[1, 1], m[0, 1]])
        else:
            u = np.array([m[0, 1], w[0] - m[0, 0]])
        u = u / np.sqrt(u @ u)
        v = np.column_stack([u, [-u[1], u[0]]])
    return EigenResult(w, v)


def sym_eigen(a) -> EigenResult:
    """Eigendecomposition of a symmetric matrix via cyclic Jacobi rotations."""
    m = require_symmetric(a)
    n = m.shape[0]
    v = np.eye(n)
    if n == 1:
        return EigenResult(m[0].copy(), v)
    if n == 2:
        return _eigen_2x2(m)

    off_diag = ~np.eye(n, dtype=bool)
    for _ in range(_JACOBI_MAX_SWEEPS):
        # Sum the off-diagonal mass directly: computing it as a difference
        # of full and diagonal sums cancels catastrophically near
        # convergence.
        off_mass = np.sqrt(np.sum(m[off_diag] ** 2))
        if off_mass <= _JACOBI_TOL * np.sqrt(np.sum(np.diag(m) ** 2)):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = m[p, q]
                if apq == 0.0:
                    continue
                # Rotation angle that annihilates m[p, q]; hypot keeps the
                # tiny-pivot case (huge tau) from overflowing.
                tau = (m[q, q] - m[p, p]) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + np.hypot(1.0, tau))
                else:
                    t = -1.0 / (-tau + np.hypot(1.0, tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c

                mp = m[:, p].copy()
                mq = m[:, q].copy()
                m[:, p] = c * mp - s * mq
                m[:, q] = s * mp + c * mq
                mp = m[p, :].copy()
                mq = m[q, :].copy()
                m[p, :] = c * mp - s * mq
                m[q, :] = s * mp + c * mq
                # The rotation zeroes this pair analytically; pin it to kill
                # round-off drift and keep the iterate exactly symmetric.
                m[p, q] = 0.0
                m[q, p] = 0.0

                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    else:  # pragma: no cover - Jacobi always converges on symmetric input
        raise ArithmeticError("Jacobi iteration did not converge")

    w = np.diag(m).copy()
    order = np.argsort(-w, kind="stable")
    return EigenResult(w[order], v[:, order])


def cholesky(a) -> np.ndarray:
    """Lower-triangular L with L L^T = a for symmetric positive definite a."""
    m = require_symmetric(a)
    n = m.shape[0]
    lower = np.zeros_like(m)
    for j in range(n):
        pivot = m[j, j] - np.dot(lower[j, :j], lower[j, :j])
        if pivot <= 0.0 or not np.isfinite(pivot):
            raise NotPositiveDefiniteError(j)
        lower[j, j] = np.sqrt(pivot)
        if j + 1 < n:
            lower[j + 1 :, j] = (
                m[j + 1 :, j] - lower[j + 1 :, :j] @ lower[j, :j]
            ) / lower[j, j]
    return lower


def spectral_norm_shifted(jacobian, alpha: float) -> float:
    """max_i |1 - alpha * lambda_i| over the eigenvalues of `jacobian`.

    This is the spectral radius of I - alpha * J for symmetric J: the
    per-step contraction factor of a gradient map with step size alpha.
    """
    if alpha < 0.0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    eig = sym_eigen(jacobian)
    return float(np.max(np.abs(1.0 - alpha * eig.eigenvalues)))
