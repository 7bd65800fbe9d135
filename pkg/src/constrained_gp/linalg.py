"""Dense linear algebra with explicit conditioning policies.

Pseudo-inverses are computed by SVD with a fixed relative truncation
threshold, so rank-deficient inputs degrade deterministically instead of
amplifying noise.  Symmetric positive definite solves go through Cholesky
with a bounded jitter ladder; once the ladder is exhausted the failure
surfaces as a typed error rather than silent over-regularization.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

# Relative singular value cutoff used by every pseudo-inverse in the package.
SVD_RTOL = 1e-10


class NumericalError(RuntimeError):
    """A dense factorization failed beyond recovery."""


class NotPositiveDefiniteError(NumericalError):
    """Cholesky kept failing after the jitter ladder was exhausted."""

    def __init__(self, message, jitter_tried):
        super().__init__(message)
        self.jitter_tried = jitter_tried


def require_finite(name, a):
    """Raise ValueError if ``a`` contains NaN or Inf."""
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")


def pseudo_inverse(m, rtol=SVD_RTOL):
    """Moore-Penrose pseudoinverse via SVD truncation.

    Singular values below ``rtol * sigma_max`` are treated as exactly zero.
    Supports stacked inputs of shape ``(..., r, c)``; the pseudoinverse is
    taken over the trailing two axes.

    Parameters
    ----------
    m : ndarray, shape (..., r, c)
    rtol : float
        Relative truncation threshold.

    Returns
    -------
    ndarray, shape (..., c, r)
    """
    m = np.asarray(m, dtype=float)
    require_finite("matrix", m)
    if m.ndim < 2:
        raise ValueError("pseudo_inverse expects at least a 2-d array")
    try:
        u, s, vt = np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            "SVD did not converge for matrix of shape "
            f"{m.shape} (max |entry| {np.abs(m).max():.3e}, "
            f"fro norm {np.linalg.norm(m):.3e})"
        ) from exc
    cutoff = rtol * s.max(axis=-1, keepdims=True)
    inv_s = np.where(s > cutoff, 1.0 / np.where(s > 0, s, 1.0), 0.0)
    return np.einsum("...ji,...j,...kj->...ik", vt, inv_s, u)


@dataclass(frozen=True)
class JitterPolicy:
    """Diagonal jitter ladder, scaled by the mean diagonal of the matrix.

    Retries start at ``initial * mean(diag)`` and grow by ``growth`` until
    ``maximum * mean(diag)`` is exceeded.
    """

    initial: float = 1e-10
    growth: float = 10.0
    maximum: float = 1e-4

    def ladder(self, scale):
        jitter = self.initial * scale
        top = self.maximum * scale
        while jitter <= top * (1 + 1e-12):
            yield jitter
            jitter *= self.growth


DEFAULT_JITTER = JitterPolicy()


class CholeskyFactor:
    """Lower-triangular Cholesky factor plus the jitter that was applied."""

    def __init__(self, lower, jitter):
        self.lower = lower
        self.jitter = jitter

    @property
    def log_det(self):
        return 2.0 * np.sum(np.log(np.diag(self.lower)))

    def solve(self, rhs):
        return cho_solve((self.lower, True), rhs)

    def half_solve(self, rhs):
        """Solve L x = rhs (useful for whitening / Mahalanobis terms)."""
        return solve_triangular(self.lower, rhs, lower=True)


def cholesky_factor(spd, policy=DEFAULT_JITTER, symmetry_rtol=1e-8):
    """Factor a symmetric positive definite matrix, retrying with jitter.

    Parameters
    ----------
    spd : ndarray, shape (n, n)
        Symmetric within ``symmetry_rtol`` relative.
    policy : JitterPolicy

    Raises
    ------
    NotPositiveDefiniteError
        If the jitter ladder is exhausted.
    ValueError
        On non-finite or asymmetric input.
    """
    spd = np.asarray(spd, dtype=float)
    require_finite("spd matrix", spd)
    if spd.ndim != 2 or spd.shape[0] != spd.shape[1]:
        raise ValueError(f"expected square matrix, got shape {spd.shape}")
    scale = np.linalg.norm(spd)
    if np.linalg.norm(spd - spd.T) > symmetry_rtol * max(scale, 1e-300):
        raise ValueError("matrix is not symmetric within tolerance")
    sym = 0.5 * (spd + spd.T)
    try:
        return CholeskyFactor(np.linalg.cholesky(sym), 0.0)
    except np.linalg.LinAlgError:
        pass
    diag_scale = float(np.mean(np.diag(sym)))
    if not diag_scale > 0:
        diag_scale = 1.0
    eye = np.eye(sym.shape[0])
    jitter = 0.0
    for jitter in policy.ladder(diag_scale):
        try:
            return CholeskyFactor(np.linalg.cholesky(sym + jitter * eye), jitter)
        except np.linalg.LinAlgError:
            continue
    raise NotPositiveDefiniteError(
        f"matrix of shape {sym.shape} is not positive definite; "
        f"final jitter tried {jitter:.3e}",
        jitter_tried=jitter,
    )


def chol_solve(spd, rhs, policy=DEFAULT_JITTER):
    """Solve ``spd @ X = rhs`` by Cholesky with the jitter ladder."""
    rhs = np.asarray(rhs, dtype=float)
    require_finite("rhs", rhs)
    return cholesky_factor(spd, policy).solve(rhs)


def log_det_chol(spd, policy=DEFAULT_JITTER):
    """Log determinant from the (jittered) Cholesky factor."""
    return cholesky_factor(spd, policy).log_det
