"""Per-iteration factorizations of the constraint Jacobian.

Equality-only problems use a thin SVD ``U S V^T = J^T``. Problems with
bounds or inequalities use the block decomposition

    [[dh/dx, J'^T], [dh/dy, 0]] = [[Dx, Ux], [Dy, Uy]] @ [[S, R], [0, Sigma V^T]]

in which ``Dx, Dy, S`` are diagonal (the normalized columns of the ``h``
Jacobian and their norms), ``[Ux; Uy] Sigma V^T`` is a thin SVD of the
``J'^T`` block with the ``D`` directions projected out, and ``R = Dx J'^T``.
The columns of ``[D | U]`` are an orthonormal basis of the normal space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LinAlgFailure
from .problem import TransformedProblem, h_gradients

__all__ = [
    "EqualityFactorization",
    "MixedFactorization",
    "factor_equality",
    "factor_mixed",
    "project_tangent",
    "multipliers",
    "rank_threshold",
]


def rank_threshold(sigma: np.ndarray, eps_rank: float | None) -> float:
    """Absolute singular-value cutoff; ``None`` means ``1e-8 * max(1, sigma_1)``."""
    if eps_rank is not None:
        return float(eps_rank)
    top = float(sigma[0]) if len(sigma) else 0.0
    return 1e-8 * max(1.0, top)


def _thin_svd(a: np.ndarray):
    try:
        return np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise LinAlgFailure(str(exc)) from exc


@dataclass(frozen=True, eq=False)
class EqualityFactorization:
    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray
    rank: int
    m: int

    @property
    def Ur(self) -> np.ndarray:
        return self.U[:, : self.rank]

    @property
    def full_rank(self) -> bool:
        return self.rank == self.m

    def project(self, v: np.ndarray) -> np.ndarray:
        Ur = self.Ur
        return v - Ur @ (Ur.T @ v)

    def normal_components(self, v: np.ndarray) -> np.ndarray:
        return self.Ur.T @ v

    def multipliers(self, grad: np.ndarray) -> np.ndarray:
        r = self.rank
        coef = (self.U[:, :r].T @ grad) / self.sigma[:r]
        return -(self.V[:, :r] @ coef)


@dataclass(frozen=True, eq=False)
class MixedFactorization:
    Dx: np.ndarray
    Dy: np.ndarray
    S: np.ndarray
    Ux: np.ndarray
    Uy: np.ndarray
    sigma: np.ndarray
    V: np.ndarray
    R: np.ndarray
    rank: int
    m: int

    @property
    def n_prime(self) -> int:
        return len(self.Dx)

    @property
    def full_rank(self) -> bool:
        return self.rank == self.m

    @property
    def U(self) -> np.ndarray:
        return np.vstack([self.Ux, self.Uy])

    @property
    def total_rank(self) -> int:
        return self.n_prime + self.rank

    def project(self, v: np.ndarray) -> np.ndarray:
        npr = self.n_prime
        vx, vy = v[:npr], v[npr:]
        dn = self.Dx * vx + self.Dy * vy
        r = self.rank
        un = self.Ux[:, :r].T @ vx + self.Uy[:, :r].T @ vy
        out_x = vx - self.Dx * dn - self.Ux[:, :r] @ un
        out_y = vy - self.Dy * dn - self.Uy[:, :r] @ un
        return np.concatenate([out_x, out_y])

    def normal_components(self, v: np.ndarray) -> np.ndarray:
        npr = self.n_prime
        vx, vy = v[:npr], v[npr:]
        r = self.rank
        return np.concatenate(
            [self.Dx * vx + self.Dy * vy, self.Ux[:, :r].T @ vx + self.Uy[:, :r].T @ vy]
        )

    def multipliers(self, grad_x: np.ndarray):
        """Return ``(lam_h, lam_c)`` for the gradient ``(grad_x, 0)``."""
        r = self.rank
        coef = (self.Ux[:, :r].T @ grad_x) / self.sigma[:r]
        lam_c = -(self.V[:, :r] @ coef)
        lam_h = -(self.Dx * grad_x + self.R @ lam_c) / self.S
        return lam_h, lam_c


def factor_equality(J: np.ndarray, eps_rank: float | None = None) -> EqualityFactorization:
    """Thin SVD of ``J^T`` and its numerical rank."""
    J = np.atleast_2d(np.asarray(J, dtype=float))
    m, n = J.shape
    if m == 0:
        return EqualityFactorization(np.zeros((n, 0)), np.zeros(0), np.zeros((0, 0)), 0, 0)
    U, sigma, Vt = _thin_svd(J.T)
    tol = rank_threshold(sigma, eps_rank)
    rank = int(np.count_nonzero(sigma > tol))
    return EqualityFactorization(U, sigma, Vt.T, rank, m)


def factor_mixed(
    tp: TransformedProblem,
    x: np.ndarray,
    y: np.ndarray,
    Jp: np.ndarray,
    eps_rank: float | None = None,
) -> MixedFactorization:
    """Block decomposition at ``(x, y)``; ``Jp`` is the ``(m', n')`` Jacobian of ``c'``."""
    a, b = h_gradients(tp, x, y)
    S = np.hypot(a, b)
    Dx, Dy = a / S, b / S
    mp = tp.m_prime
    npr = tp.n_prime
    if mp == 0:
        empty = np.zeros((npr, 0))
        return MixedFactorization(Dx, Dy, S, empty, empty, np.zeros(0), np.zeros((0, 0)),
                                  empty, 0, 0)
    JT = np.asarray(Jp, dtype=float).T
    projected = np.vstack([(Dy * Dy)[:, None] * JT, -(Dx * Dy)[:, None] * JT])
    U, sigma, Vt = _thin_svd(projected)
    tol = rank_threshold(sigma, eps_rank)
    rank = int(np.count_nonzero(sigma > tol))
    R = Dx[:, None] * JT
    return MixedFactorization(Dx, Dy, S, U[:npr], U[npr:], sigma, Vt.T, R, rank, mp)


def project_tangent(fact, g: np.ndarray) -> np.ndarray:
    """Orthogonal projection of an ambient vector onto the tangent space."""
    return fact.project(np.asarray(g, dtype=float))


def multipliers(fact, grad: np.ndarray):
    """Least-squares multipliers restricted to the retained singular subspace.

    Returns ``lam`` for an equality factorization and ``(lam_h, lam_c)`` for a
    mixed one, where ``grad`` is the gradient with respect to ``x'``.
    """
    return fact.multipliers(np.asarray(grad, dtype=float))
