"""Constrained rigid-body dynamics via Gauss' principle of least constraint.

A mechanical system with symmetric positive definite mass matrix ``M``,
unconstrained acceleration ``a`` and non-ideal constraining acceleration
``z`` subject to an affine constraining equation ``A(x) qdd = b(x)``
realizes the acceleration that minimizes ``(qdd - abar)^T M (qdd - abar)``
over the feasible set, with ``abar = a + z`` (Gauss 1829).  The closed-form
minimizer is given by the Udwadia-Kalaba equation (Udwadia & Kalaba 1992):

    qdd = L b + T abar
    L   = M^-1 A^T (A M^-1 A^T)^+
    T   = I - L A

``T`` is an oblique (M-weighted) projection onto the nullspace of ``A``,
so the result satisfies the constraining equation whenever it is
consistent.  Everything here is a pure function of its inputs; models are
plain containers of vectorized evaluators operating on batches of input
rows.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .linalg import pseudo_inverse, require_finite


class DomainError(ValueError):
    """An input violates a model precondition (e.g. mass matrix not SPD)."""


@dataclass(frozen=True)
class State:
    """A single dynamics input point: positions, velocities, time, controls."""

    q: np.ndarray
    qdot: np.ndarray
    t: float = 0.0
    u: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "q", np.atleast_1d(np.asarray(self.q, dtype=float)))
        object.__setattr__(self, "qdot", np.atleast_1d(np.asarray(self.qdot, dtype=float)))
        if self.u is not None:
            object.__setattr__(self, "u", np.atleast_1d(np.asarray(self.u, dtype=float)))
        if self.q.shape != self.qdot.shape:
            raise DomainError(
                f"q and qdot dimensions differ: {self.q.shape} vs {self.qdot.shape}"
            )
        require_finite("state", self.q)
        require_finite("state", self.qdot)
        if self.u is not None:
            require_finite("state", self.u)

    def as_row(self):
        """Flatten to the canonical input layout (q, qdot, t [, u])."""
        parts = [self.q, self.qdot, [self.t]]
        if self.u is not None:
            parts.append(self.u)
        return np.concatenate([np.atleast_1d(np.asarray(p, dtype=float)) for p in parts])


@dataclass(frozen=True)
class ConstraintModel:
    """Parametric constraining equation A(x, theta) qdd = b(x, theta).

    ``eval_A`` maps an input batch (N, D) and a parameter vector to
    (N, m, n); ``eval_b`` to (N, m).
    """

    n: int
    m: int
    eval_A: Callable[[np.ndarray, np.ndarray], np.ndarray]
    eval_b: Callable[[np.ndarray, np.ndarray], np.ndarray]
    theta: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        if not self.m < self.n:
            raise DomainError(f"need m < n, got m={self.m}, n={self.n}")
        object.__setattr__(self, "theta", np.asarray(self.theta, dtype=float))

    def A(self, X, theta=None):
        return np.asarray(self.eval_A(np.atleast_2d(X), self._theta(theta)), dtype=float)

    def b(self, X, theta=None):
        return np.asarray(self.eval_b(np.atleast_2d(X), self._theta(theta)), dtype=float)

    def _theta(self, theta):
        return self.theta if theta is None else np.asarray(theta, dtype=float)


@dataclass(frozen=True)
class UnconstrainedModel:
    """Mass matrix, unconstrained acceleration and non-ideal term.

    ``eval_M`` maps (N, D) inputs and parameters to (N, n, n) SPD matrices;
    ``eval_a`` and ``eval_z`` map (N, D) to (N, n).
    """

    n: int
    eval_M: Callable[[np.ndarray, np.ndarray], np.ndarray]
    eval_a: Callable[[np.ndarray], np.ndarray]
    eval_z: Callable[[np.ndarray], np.ndarray]
    theta: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def M(self, X, theta=None):
        th = self.theta if theta is None else np.asarray(theta, dtype=float)
        return np.asarray(self.eval_M(np.atleast_2d(X), th), dtype=float)

    def a(self, X):
        return np.asarray(self.eval_a(np.atleast_2d(X)), dtype=float)

    def z(self, X):
        return np.asarray(self.eval_z(np.atleast_2d(X)), dtype=float)

    def abar(self, X):
        return self.a(X) + self.z(X)


def _mass_inverse(M):
    """Batched SPD inverse, validating positive definiteness via Cholesky."""
    try:
        np.linalg.cholesky(M)
    except np.linalg.LinAlgError as exc:
        raise DomainError("mass matrix is not symmetric positive definite") from exc
    return np.linalg.inv(M)


def projection_ops_batch(M, A):
    """Constraint projection operators for a batch of (M, A) pairs.

    Parameters
    ----------
    M : ndarray, shape (N, n, n)
        SPD mass matrices.
    A : ndarray, shape (N, m, n)
        Constraint matrices; rank deficiency is handled by pseudo-inverse
        truncation.

    Returns
    -------
    L : ndarray, shape (N, n, m)
    T : ndarray, shape (N, n, n)
    """
    M = np.asarray(M, dtype=float)
    A = np.asarray(A, dtype=float)
    require_finite("M", M)
    require_finite("A", A)
    Minv = _mass_inverse(M)
    MiAt = Minv @ np.swapaxes(A, -1, -2)
    S = A @ MiAt
    L = MiAt @ pseudo_inverse(S)
    T = np.eye(M.shape[-1]) - L @ A
    return L, T


def projection_ops(M, A):
    """Single-instance form of :func:`projection_ops_batch`."""
    L, T = projection_ops_batch(
        np.asarray(M, dtype=float)[None], np.asarray(A, dtype=float)[None]
    )
    return L[0], T[0]


def uke_acceleration(unconstrained, constraint, x, theta=None):
    """Constrained acceleration ``qdd = L b + T (a + z)``.

    Parameters
    ----------
    unconstrained : UnconstrainedModel
    constraint : ConstraintModel
    x : State or ndarray (N, D)
        Input point(s) in the system's canonical layout.
    theta : optional parameter override applied to both models.

    Returns
    -------
    ndarray, shape (n,) for a State input or (N, n) for a batch.
    """
    single = isinstance(x, State)
    X = x.as_row()[None] if single else np.atleast_2d(np.asarray(x, dtype=float))
    A = constraint.A(X, theta)
    b = constraint.b(X, theta)
    M = unconstrained.M(X, theta)
    L, T = projection_ops_batch(M, A)
    abar = unconstrained.abar(X)
    qdd = (L @ b[..., None])[..., 0] + (T @ abar[..., None])[..., 0]
    return qdd[0] if single else qdd


def gauss_functional(M, qddot, abar):
    """Gauss' least-constraint cost ``(qdd - abar)^T M (qdd - abar)``."""
    M = np.asarray(M, dtype=float)
    tau = np.asarray(qddot, dtype=float) - np.asarray(abar, dtype=float)
    if tau.shape[-1] != M.shape[-1]:
        raise DomainError(
            f"acceleration dimension {tau.shape[-1]} does not match mass matrix {M.shape}"
        )
    return float(tau @ M @ tau)
