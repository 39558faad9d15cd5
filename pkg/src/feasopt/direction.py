"""Tangent-space search directions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import logging

import numpy as np

from .errors import IndefiniteProjection

__all__ = [
    "Direction",
    "GRADIENT",
    "NEWTON",
    "NEGATIVE_CURVATURE",
    "OrthonormalBasis",
    "gradient_direction",
    "projected_cg",
    "newton_direction",
    "dembo_tolerance",
]

GRADIENT = "gradient"
NEWTON = "newton"
NEGATIVE_CURVATURE = "negative_curvature"

log = logging.getLogger(__name__)


@dataclass
class Direction:
    step: np.ndarray
    kind: str
    residual: float = 0.0
    cg_iters: int = 0


class OrthonormalBasis:
    """Wrap a dense column-orthonormal matrix so it projects like a factorization."""

    def __init__(self, U: np.ndarray):
        self.U = np.asarray(U, dtype=float)

    def project(self, v):
        if self.U.shape[1] == 0:
            return np.array(v, dtype=float)
        return v - self.U @ (self.U.T @ v)

    def normal_components(self, v):
        return self.U.T @ v

    @property
    def normal_dim(self) -> int:
        return self.U.shape[1]


def _normal_dim(proj) -> int:
    for name in ("normal_dim", "total_rank", "rank"):
        if hasattr(proj, name):
            return int(getattr(proj, name))
    return 0


def _as_projector(basis):
    if hasattr(basis, "project"):
        return basis
    return OrthonormalBasis(basis)


def gradient_direction(fact, grad: np.ndarray) -> Direction:
    """Negative projected gradient."""
    step = -fact.project(np.asarray(grad, dtype=float))
    return Direction(step, GRADIENT, float(np.linalg.norm(step)), 0)


def projected_cg(
    A_action: Callable[[np.ndarray], np.ndarray],
    basis,
    b: np.ndarray,
    delta: float,
    max_iter: int | None = None,
) -> Direction:
    """Solve ``A dx + U dlam = b, U^T dx = 0`` by projected conjugate gradients.

    ``basis`` is either a column-orthonormal array ``U`` or an object with a
    ``project`` method (a factorization). Stops when the projected residual
    norm drops to ``max(delta, 1e-14 (1 + |b|))``. Without ``max_iter`` the
    loop is capped at ten times the tangent dimension; hitting the cap
    returns the current iterate with kind ``"newton"``. If a direction of nonpositive curvature is met
    it is returned normalized, with kind ``"negative_curvature"``.

    Raises
    ------
    IndefiniteProjection
        If ``r . g <= 0`` while the residual is still above ``delta``, or the
        operator produces non-finite curvature.
    """
    proj = _as_projector(basis)
    b = np.asarray(b, dtype=float)
    if max_iter is None:
        max_iter = 10 * max(1, len(b) - _normal_dim(proj))
    delta = max(delta, 1e-14 * (1.0 + float(np.linalg.norm(b))))

    dx = np.zeros_like(b)
    r = -proj.project(b)
    g = r
    p = -g
    it = 0
    rnorm = float(np.linalg.norm(r))
    while rnorm > delta and it < max_iter:
        q = A_action(p)
        pq = float(p @ q)
        if not np.isfinite(pq):
            raise IndefiniteProjection(f"non-finite curvature at CG iteration {it}")
        if pq <= 0.0:
            return Direction(p / np.linalg.norm(p), NEGATIVE_CURVATURE, rnorm, it + 1)
        rg = float(r @ g)
        if not rg > 0.0:
            raise IndefiniteProjection(f"r.g = {rg:.3e} at CG iteration {it}")
        alpha = rg / pq
        dx = dx + alpha * p
        r_plus = r + alpha * q
        g_plus = proj.project(r_plus)
        beta = float(r_plus @ g_plus) / rg
        p = -g_plus + beta * p
        # replacing r by its projection keeps roundoff out of the normal space
        r = g = g_plus
        rnorm = float(np.linalg.norm(r))
        it += 1
    if rnorm > delta:
        log.warning("projected CG stopped at the iteration cap (%d) with residual %.3e",
                    max_iter, rnorm)
    return Direction(dx, NEWTON, rnorm, it)


def newton_direction(
    fact,
    grad: np.ndarray,
    hess_action: Callable[[np.ndarray], np.ndarray],
    delta: float,
    max_iter: int | None = None,
) -> Direction:
    """Inexact Newton step from the saddle system with right-hand side ``-P grad``.

    ``hess_action`` applies the Lagrangian Hessian (plus the diagonal ``h``
    curvature blocks in the augmented case) to an ambient vector.
    """
    b = -fact.project(np.asarray(grad, dtype=float))
    return projected_cg(hess_action, fact, b, delta, max_iter=max_iter)


def dembo_tolerance(kappa: float, g_norm_now: float, g_norm_prev: float) -> float:
    """Forcing term ``kappa * min(1, g_now / g_prev) * g_now``."""
    if math.isinf(g_norm_prev) or g_norm_prev <= 0.0:
        ratio = 1.0
    else:
        ratio = min(1.0, g_norm_now / g_norm_prev)
    return kappa * ratio * g_norm_now
