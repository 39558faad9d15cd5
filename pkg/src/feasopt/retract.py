"""Retractions onto implicitly defined constraint sets.

Two families are provided for ``{x : c(x) = 0}``:

* the orthographic retraction ``x + dx + U w`` with ``w`` found by Broyden's
  "good" method started from the inverse Jacobian ``Sigma^{-1} V^T``;
* the projection retraction, a nearest-point problem solved by a sequence of
  damped Gauss-Newton steps on ``mu/2 |x - x~|^2 + 1/2 |c(x)|^2`` with
  ``mu`` tracking the current infeasibility.

For the augmented problem the bound constraints ``h`` have a closed-form
coordinate-wise retraction, and both families are composed with it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from .errors import CoordinateRetractFailed, RetractionDiverged
from .problem import (
    CIRCLE,
    PARABOLA,
    AugmentedPoint,
    TransformedProblem,
    branch_sign,
    eval_h,
    h_gradients,
    solve_y,
)

__all__ = [
    "RetractionConfig",
    "RetractionResult",
    "PROJECTION",
    "QUASI_NEWTON",
    "qn_retract_equality",
    "projection_retract",
    "h_retract",
    "qn_retract_mixed",
    "projection_retract_mixed",
]

PROJECTION = "projection"
QUASI_NEWTON = "quasi_newton"

_MU_FLOOR = 1e-12
_H_EXACT = 1e-13
_ARMIJO_SIGMA = 1e-4
_ARMIJO_SHRINK = 0.5
_ARMIJO_MAX = 30


@dataclass(frozen=True)
class RetractionConfig:
    eps_c: float = 1e-6
    k_max: int = 100
    mu0: float = 0.01
    variant: str = PROJECTION

    def __post_init__(self):
        if not self.eps_c > 0:
            raise ValueError("eps_c must be positive")
        if self.k_max < 1:
            raise ValueError("k_max must be at least 1")
        if not self.mu0 > 0:
            raise ValueError("mu0 must be positive")
        if self.variant not in (PROJECTION, QUASI_NEWTON):
            raise ValueError(f"unknown retraction variant {self.variant!r}")


@dataclass
class RetractionResult:
    point: np.ndarray
    inner_iters: int
    constraint_norm: float
    h_norm: float = 0.0
    cg_iters: int = 0
    extra: dict = field(default_factory=dict)


def _inf_norm(v):
    return float(np.max(np.abs(v))) if len(v) else 0.0


def _broyden(
    residual: Callable[[np.ndarray], tuple],
    B: np.ndarray,
    eps_c: float,
    k_max: int,
):
    """Broyden iteration on ``w`` with inverse-Jacobian estimate ``B``.

    ``residual(w)`` returns ``(point, c)``. Returns ``(point, c, k)``.
    """
    w = np.zeros(B.shape[0])
    point, ck = residual(w)
    k = 0
    while _inf_norm(ck) > eps_c:
        if k >= k_max:
            raise RetractionDiverged(
                f"no convergence in {k_max} quasi-Newton iterations (|c| = {_inf_norm(ck):.3e})"
            )
        dw = -(B @ ck)
        w = w + dw
        point, cn = residual(w)
        if not np.all(np.isfinite(cn)):
            raise RetractionDiverged("constraint evaluation became non-finite")
        k += 1
        if _inf_norm(cn) <= eps_c:
            ck = cn
            break
        dc = cn - ck
        u = dw - B @ dc
        v = B.T @ dw
        denom = float(v @ dc)
        if abs(denom) <= 1e-14 * np.linalg.norm(v) * np.linalg.norm(dc) or denom == 0.0:
            raise RetractionDiverged("Broyden update denominator vanished")
        B = B + np.outer(u, v) / denom
        ck = cn
    return point, ck, k


def qn_retract_equality(x_i, dx, c_eval, fact, cfg: RetractionConfig) -> RetractionResult:
    """Orthographic retraction ``x_i + dx + U w`` solved by Broyden's method.

    Raises
    ------
    RetractionDiverged
        When ``k_max`` iterations do not reach ``|c|_inf <= eps_c`` or the
        rank-one update breaks down.
    """
    if not fact.full_rank:
        raise ValueError("quasi-Newton retraction needs a full-rank factorization")
    x_t = np.asarray(x_i, dtype=float) + np.asarray(dx, dtype=float)
    U = fact.U
    B = fact.V.T / fact.sigma[:, None]

    def residual(w):
        x = x_t + U @ w
        return x, np.asarray(c_eval(x), dtype=float)

    x, ck, k = _broyden(residual, B, cfg.eps_c, cfg.k_max)
    return RetractionResult(x, k, _inf_norm(ck))


def _penalty_projection(z_t, residual, jac_op, cfg, finalize=None):
    """Damped Gauss-Newton on ``mu/2 |z - z_t|^2 + 1/2 |F(z)|^2``.

    ``residual(z)`` returns ``F(z)``; ``jac_op(z)`` returns ``(matvec,
    rmatvec)`` for the Jacobian of ``F`` at ``z``. ``finalize(z, F)`` may
    polish a converged point and return ``(z, F)`` or ``None`` to keep
    iterating.
    """
    z = z_t.copy()
    F = residual(z)
    mu = cfg.mu0
    k = 0
    cg_total = 0
    size = len(z)
    while True:
        if _inf_norm(F) <= cfg.eps_c:
            if finalize is None:
                break
            polished = finalize(z, F)
            if polished is not None:
                z, F = polished
                break
        if k >= cfg.k_max:
            raise RetractionDiverged(
                f"projection retraction did not converge in {cfg.k_max} iterations "
                f"(|F| = {_inf_norm(F):.3e})"
            )
        matvec, rmatvec = jac_op(z)
        grad_phi = rmatvec(F) + mu * (z - z_t)
        op = LinearOperator((size, size), matvec=lambda v, mu=mu: rmatvec(matvec(v)) + mu * v,
                            dtype=float)
        counter = [0]

        def _count(_xk):
            counter[0] += 1

        maxiter = min(size, 10 * (len(F) + 1) + 20)
        p, _info = cg(op, -grad_phi, rtol=0.0, atol=cfg.eps_c, maxiter=maxiter, callback=_count)
        cg_total += counter[0]

        phi0 = 0.5 * mu * float((z - z_t) @ (z - z_t)) + 0.5 * float(F @ F)
        slope = float(grad_phi @ p)
        if slope >= 0.0:
            # CG stopped before producing a descent direction; fall back to steepest descent
            p = -grad_phi
            slope = -float(grad_phi @ grad_phi)
        alpha = 1.0
        for _ in range(_ARMIJO_MAX):
            z_new = z + alpha * p
            F_new = residual(z_new)
            if np.all(np.isfinite(F_new)):
                d = z_new - z_t
                phi = 0.5 * mu * float(d @ d) + 0.5 * float(F_new @ F_new)
                if phi <= phi0 + _ARMIJO_SIGMA * alpha * slope:
                    break
            alpha *= _ARMIJO_SHRINK
        else:
            raise RetractionDiverged("penalty line search failed")
        z, F = z_new, F_new
        k += 1
        mu = max(float(np.linalg.norm(F)), _MU_FLOOR)
    return z, F, k, cg_total


def projection_retract(x_i, dx, c_eval, jac, cfg: RetractionConfig) -> RetractionResult:
    """Nearest-point retraction of ``x_i + dx`` onto ``{c = 0}``.

    Does not need a full-rank Jacobian.
    """
    x_t = np.asarray(x_i, dtype=float) + np.asarray(dx, dtype=float)

    def residual(x):
        return np.asarray(c_eval(x), dtype=float)

    def jac_op(x):
        J = np.asarray(jac(x), dtype=float)
        return (lambda v: J @ v), (lambda w: J.T @ w)

    x, F, k, cg_total = _penalty_projection(x_t, residual, jac_op, cfg)
    return RetractionResult(x, k, _inf_norm(F), cg_iters=cg_total)


# -- augmented problem ------------------------------------------------------


def _solve_quadratic_nearest_zero(A, B, C):
    """Real root of ``A g^2 + B g + C = 0`` closest to zero, elementwise.

    Returns ``(gamma, ok)``.
    """
    disc = B * B - 4.0 * A * C
    scale = B * B + np.abs(4.0 * A * C)
    ok = disc >= -1e-14 * scale
    sq = np.sqrt(np.maximum(disc, 0.0))
    qq = -0.5 * (B + np.copysign(sq, B))
    with np.errstate(divide="ignore", invalid="ignore"):
        g_small = np.where(qq != 0.0, C / qq, 0.0)
        g_large = np.where(A != 0.0, qq / A, np.inf)
    ok &= ~((qq == 0.0) & (C != 0.0))
    gamma = np.where(np.abs(g_small) <= np.abs(g_large), g_small, g_large)
    return gamma, ok


def h_retract(tp: TransformedProblem, z_i: AugmentedPoint, dz) -> AugmentedPoint:
    """Coordinate-wise retraction onto ``{h(x, y) = 0}``.

    Line rows step through unchanged. Parabola rows move from the proposal
    toward the point a unit distance inward along the normal at ``z_i`` until
    ``h = 0``, taking the root nearest the proposal. Circle rows are
    projected radially.

    Raises
    ------
    CoordinateRetractFailed
        If a circle proposal hits the centre or a parabola line misses.
    """
    if isinstance(dz, AugmentedPoint):
        dx, dy = dz.x, dz.y
    else:
        dz = np.asarray(dz, dtype=float)
        dx, dy = dz[: len(z_i.x)], dz[len(z_i.x) :]
    x0, y0 = z_i.x, z_i.y
    xt = x0 + dx
    yt = y0 + dy
    out_x, out_y = xt.copy(), yt.copy()

    cir = tp.kind == CIRCLE
    if np.any(cir):
        r = tp.r[cir]
        cx, cy = xt[cir] - r, yt[cir] - r
        rad = np.hypot(cx, cy)
        if np.any(rad == 0.0):
            raise CoordinateRetractFailed("circle retraction received the centre point")
        scale = np.sqrt(tp.t[cir]) / rad
        out_x[cir] = r + scale * cx
        out_y[cir] = r + scale * cy

    par = tp.kind == PARABOLA
    if np.any(par):
        s, r, t = tp.s[par], tp.r[par], tp.t[par]
        nx, ny = -s, -2.0 * (y0[par] - r)
        nn = np.hypot(nx, ny)
        xi_x = nx / nn - dx[par]
        xi_y = ny / nn - dy[par]
        X, Y = xt[par], yt[par]
        # h = x + s (y - r)^2 - t on parabola rows
        A = s * xi_y * xi_y
        Bq = xi_x + 2.0 * s * xi_y * (Y - r)
        C = X + s * (Y - r) ** 2 - t
        gamma, ok = _solve_quadratic_nearest_zero(A, Bq, C)
        if not np.all(ok):
            raise CoordinateRetractFailed("parabola retraction has no real root")
        out_x[par] = X + gamma * xi_x
        out_y[par] = Y + gamma * xi_y

    return AugmentedPoint(out_x, out_y)


def qn_retract_mixed(
    z_i: AugmentedPoint,
    dz,
    tp: TransformedProblem,
    fact,
    cfg: RetractionConfig,
    c_prime: Callable[[np.ndarray], np.ndarray] | None = None,
) -> RetractionResult:
    """Composite retraction ``R_h(dz + U w)`` with ``w`` found by Broyden's method."""
    if not fact.full_rank:
        raise ValueError("quasi-Newton retraction needs a full-rank factorization")
    if c_prime is None:
        c_prime = tp.c_prime
    dz = np.asarray(dz.as_vector() if isinstance(dz, AugmentedPoint) else dz, dtype=float)
    npr = tp.n_prime
    dx, dy = dz[:npr], dz[npr:]
    if fact.m == 0:
        z = h_retract(tp, z_i, dz)
        return RetractionResult(z.as_vector(), 0, 0.0, _inf_norm(eval_h(tp, z)))

    Ux, Uy = fact.Ux, fact.Uy
    B = fact.V.T / fact.sigma[:, None]

    def residual(w):
        z = h_retract(tp, z_i, np.concatenate([dx + Ux @ w, dy + Uy @ w]))
        return z, np.asarray(c_prime(z.x), dtype=float)

    z, ck, k = _broyden(residual, B, cfg.eps_c, cfg.k_max)
    return RetractionResult(z.as_vector(), k, _inf_norm(ck), _inf_norm(eval_h(tp, z)))


def projection_retract_mixed(
    z_i: AugmentedPoint,
    dz,
    tp: TransformedProblem,
    cfg: RetractionConfig,
    c_prime: Callable[[np.ndarray], np.ndarray] | None = None,
    jac_prime: Callable[[np.ndarray], np.ndarray] | None = None,
) -> RetractionResult:
    """Nearest-point retraction onto ``{c'(x) = 0, h(x, y) = 0}``.

    Once both residuals are within ``eps_c`` the auxiliary variables are
    re-solved exactly from ``x`` (on the current branch), so ``h`` holds to
    rounding while ``c'`` is untouched.
    """
    if c_prime is None:
        c_prime = tp.c_prime
    if jac_prime is None:
        raise ValueError("jac_prime is required")
    dz = np.asarray(dz.as_vector() if isinstance(dz, AugmentedPoint) else dz, dtype=float)
    npr = tp.n_prime
    mp = tp.m_prime
    z_t = z_i.as_vector() + dz

    def split(z):
        return z[:npr], z[npr:]

    def residual(z):
        x, y = split(z)
        cp = np.asarray(c_prime(x), dtype=float) if mp else np.zeros(0)
        return np.concatenate([cp, eval_h(tp, AugmentedPoint(x, y))])

    def jac_op(z):
        x, y = split(z)
        Jp = np.asarray(jac_prime(x), dtype=float) if mp else np.zeros((0, npr))
        a, b = h_gradients(tp, x, y)

        def matvec(v):
            vx, vy = v[:npr], v[npr:]
            return np.concatenate([Jp @ vx, a * vx + b * vy])

        def rmatvec(w):
            wc, wh = w[:mp], w[mp:]
            return np.concatenate([Jp.T @ wc + a * wh, b * wh])

        return matvec, rmatvec

    def finalize(z, F):
        x, y = split(z)
        in_box = np.all((x >= tp.l) & (x <= tp.u))
        if in_box and _inf_norm(F[mp:]) <= _H_EXACT:
            return z, F
        x_c = np.clip(x, tp.l, tp.u)
        y_c = solve_y(tp, x_c, branch_sign(tp, y))
        z_c = np.concatenate([x_c, y_c])
        F_c = residual(z_c)
        if _inf_norm(F_c[:mp]) <= cfg.eps_c:
            return z_c, F_c
        return None

    z, F, k, cg_total = _penalty_projection(z_t, residual, jac_op, cfg, finalize)
    return RetractionResult(z, k, _inf_norm(F[:mp]), _inf_norm(F[mp:]), cg_iters=cg_total)
