"""Outer optimization loop.

Each iteration factors the constraint Jacobian at the current feasible
point, builds a tangent direction (projected gradient or inexact Newton),
and line-searches along the retracted arc, so every accepted iterate
satisfies the constraints to ``eps_c``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .deriv import FORWARD_DUAL, DerivativeOracle
from .direction import (
    GRADIENT,
    NEGATIVE_CURVATURE,
    NEWTON,
    dembo_tolerance,
    gradient_direction,
    newton_direction,
)
from .errors import IndefiniteProjection, InfeasibleStart, LineSearchFailed, RetractionDiverged
from .factor import factor_equality, factor_mixed
from .linesearch import ARMIJO, LineSearchConfig, armijo, golden
from .problem import AugmentedPoint, ProblemSpec, eval_h, init_augmented, transform
from .retract import (
    PROJECTION,
    QUASI_NEWTON,
    RetractionConfig,
    RetractionResult,
    projection_retract,
    projection_retract_mixed,
    qn_retract_equality,
    qn_retract_mixed,
)

__all__ = ["SolveOptions", "TraceRecord", "SolveResult", "solve", "STATUSES", "TRACE_FIELDS"]

log = logging.getLogger(__name__)

CONVERGED_F = "converged_f"
CONVERGED_X = "converged_x"
CONVERGED_GRAD = "converged_grad"
MAX_ITER = "max_iter"
LINE_SEARCH_FAILED = "line_search_failed"
STATUSES = (CONVERGED_F, CONVERGED_X, CONVERGED_GRAD, MAX_ITER, LINE_SEARCH_FAILED)


@dataclass(frozen=True)
class SolveOptions:
    """Solver settings.

    Termination tests are relative: ``|df| < ftol (1 + |f|)``,
    ``|dx| < xtol (1 + |x|)`` and ``|P grad f| < gtol``.
    """

    direction: str = NEWTON
    retraction: str = PROJECTION
    linesearch: LineSearchConfig = field(default_factory=LineSearchConfig)
    eps_c: float = 1e-6
    eps_rank: float | None = None
    kappa: float = 0.5
    mu0: float = 0.01
    ftol: float = 1e-8
    xtol: float = 1e-10
    gtol: float = 1e-6
    max_iter: int = 1000
    k_max: int = 100
    fallback_mode: str = FORWARD_DUAL
    fd_step: float | None = None
    cg_max_iter: int | None = None

    def __post_init__(self):
        if self.direction not in (GRADIENT, NEWTON):
            raise ValueError(f"unknown direction {self.direction!r}")
        if self.retraction not in (PROJECTION, QUASI_NEWTON):
            raise ValueError(f"unknown retraction {self.retraction!r}")
        for name in ("eps_c", "ftol", "xtol", "gtol", "mu0"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.eps_rank is not None and not self.eps_rank > 0:
            raise ValueError("eps_rank must be positive")
        if not 0 < self.kappa < 1:
            raise ValueError("kappa must lie in (0, 1)")
        if self.max_iter < 0:
            raise ValueError("max_iter must be nonnegative")

    def retraction_config(self) -> RetractionConfig:
        return RetractionConfig(eps_c=self.eps_c, k_max=self.k_max, mu0=self.mu0,
                                variant=self.retraction)


@dataclass
class TraceRecord:
    iter: int
    f: float
    proj_grad_norm: float
    constraint_viol_inf: float
    step_norm: float
    alpha: float
    direction_kind: str
    cg_iters: int
    retract_inner_iters: int
    cum_f_evals: int
    cum_grad_evals: int
    cum_jac_evals: int
    cum_w_actions: int


TRACE_FIELDS = tuple(f.name for f in fields(TraceRecord))


@dataclass
class SolveResult:
    x_final: np.ndarray
    f_final: float
    lam_final: np.ndarray
    status: str
    trace: list
    proj_grad_norm: float
    iterations: int
    lam_h: np.ndarray | None = None
    z_final: np.ndarray | None = None

    @property
    def converged(self) -> bool:
        return self.status.startswith("converged")


def _violation(spec, oracle, x):
    """Infinity-norm violation of the original constraints and bounds."""
    v = 0.0
    g = oracle.g(x)
    m = oracle.m
    if m:
        v = max(v, float(np.max(np.abs(g[:m]))))
    if spec.p:
        d = g[m:]
        v = max(v, float(np.max(np.maximum(spec.d_lower - d, d - spec.d_upper))))
    v = max(v, float(np.max(np.maximum(spec.x_lower - x, x - spec.x_upper))))
    return max(v, 0.0)


class _EqualityModel:
    """Problems with only equality constraints; iterates live in R^n."""

    def __init__(self, tp, oracle, opts):
        self.tp = tp
        self.spec = tp.spec
        self.oracle = oracle
        self.opts = opts
        self.rcfg = opts.retraction_config()

    def c(self, x):
        return self.oracle.g(x)

    def initial_point(self, x0):
        x0 = np.asarray(x0, dtype=float).ravel()
        if x0.shape != (self.spec.n,):
            raise ValueError(f"x0 has length {x0.size}, expected {self.spec.n}")
        if not np.all(np.isfinite(x0)):
            raise InfeasibleStart("x0 is not finite")
        if self.oracle.m == 0 or np.max(np.abs(self.c(x0))) <= self.opts.eps_c:
            return x0
        try:
            res = projection_retract(x0, np.zeros_like(x0), self.c, self.oracle.jacobian, self.rcfg)
        except RetractionDiverged as exc:
            raise InfeasibleStart(f"could not project x0 onto the constraints: {exc}") from exc
        return res.point

    def original(self, z):
        return z

    def f(self, z):
        return self.oracle.f(z)

    def grad(self, z):
        return self.oracle.gradient(z)

    def factor(self, z):
        if self.oracle.m == 0:
            return factor_equality(np.zeros((0, self.spec.n)))
        return factor_equality(self.oracle.jacobian(z), self.opts.eps_rank)

    def multipliers(self, fact, grad):
        return fact.multipliers(grad), None

    def hess_action(self, z, lam, lam_h):
        return lambda v: self.oracle.w_action(z, lam, v)

    def retract(self, z, fact, step) -> RetractionResult:
        if self.oracle.m == 0:
            return RetractionResult(z + step, 0, 0.0)
        if self.opts.retraction == QUASI_NEWTON and fact.full_rank:
            return qn_retract_equality(z, step, self.c, fact, self.rcfg)
        return projection_retract(z, step, self.c, self.oracle.jacobian, self.rcfg)


class _AugmentedModel:
    """Problems with bounds or inequalities; iterates are ``z = (x', y)``."""

    def __init__(self, tp, oracle, opts):
        self.tp = tp
        self.spec = tp.spec
        self.oracle = oracle
        self.opts = opts
        self.rcfg = opts.retraction_config()
        self.n = tp.n
        self.npr = tp.n_prime

    def c_prime(self, xp):
        if self.tp.m_prime == 0:
            return np.zeros(0)
        g = self.oracle.g(xp[: self.n])
        g[self.tp.m :] -= xp[self.n :]
        return g

    def jac_prime(self, xp):
        tp = self.tp
        if tp.m_prime == 0:
            return np.zeros((0, self.npr))
        Jg = self.oracle.jacobian(xp[: self.n])
        slack = np.zeros((tp.m_prime, tp.p))
        slack[tp.m :, :] = -np.eye(tp.p)
        return np.hstack([Jg, slack])

    def initial_point(self, x0):
        z = init_augmented(self.tp, x0, self.opts.eps_c)
        if np.max(np.abs(self.c_prime(z.x)), initial=0.0) <= self.opts.eps_c:
            return z.as_vector()
        try:
            res = projection_retract_mixed(z, np.zeros(2 * self.npr), self.tp, self.rcfg,
                                           self.c_prime, self.jac_prime)
        except RetractionDiverged as exc:
            raise InfeasibleStart(f"could not project x0 onto the constraints: {exc}") from exc
        return res.point

    def original(self, z):
        return z[: self.n]

    def point(self, z):
        return AugmentedPoint(z[: self.npr], z[self.npr :])

    def f(self, z):
        return self.oracle.f(z[: self.n])

    def grad(self, z):
        out = np.zeros(2 * self.npr)
        out[: self.n] = self.oracle.gradient(z[: self.n])
        return out

    def factor(self, z):
        return factor_mixed(self.tp, z[: self.npr], z[self.npr :], self.jac_prime(z[: self.npr]),
                            self.opts.eps_rank)

    def multipliers(self, fact, grad):
        lam_h, lam_c = fact.multipliers(grad[: self.npr])
        return lam_c, lam_h

    def hess_action(self, z, lam, lam_h):
        n, npr, tp = self.n, self.npr, self.tp
        x = z[:n]
        hx = 2.0 * lam_h * tp.q
        hy = 2.0 * lam_h * tp.s
        has_curvature = tp.m_prime > 0

        def action(v):
            vx, vy = v[:npr], v[npr:]
            out_x = hx * vx
            if has_curvature:
                out_x[:n] += self.oracle.w_action(x, lam, vx[:n])
            else:
                out_x[:n] += self.oracle.w_action(x, np.zeros(0), vx[:n])
            return np.concatenate([out_x, hy * vy])

        return action

    def retract(self, z, fact, step) -> RetractionResult:
        zp = self.point(z)
        if self.opts.retraction == QUASI_NEWTON and fact.full_rank:
            return qn_retract_mixed(zp, step, self.tp, fact, self.rcfg, self.c_prime)
        return projection_retract_mixed(zp, step, self.tp, self.rcfg, self.c_prime,
                                        self.jac_prime)


def _descent(direction, grad, fact):
    """Orient a direction downhill; fall back to the gradient if it is flat."""
    slope = float(grad @ direction.step)
    if direction.kind == NEGATIVE_CURVATURE and slope > 0:
        direction.step = -direction.step
        slope = -slope
    if slope >= 0:
        direction = gradient_direction(fact, grad)
        slope = float(grad @ direction.step)
    return direction, slope


def solve(spec: ProblemSpec, x0, opts: SolveOptions | None = None,
          trace: list | None = None) -> SolveResult:
    """Minimize ``spec.f`` from the feasible start ``x0``.

    If ``trace`` is given, one :class:`TraceRecord` per iteration is appended
    to it as the solve proceeds, so the rows survive an exception.

    Raises
    ------
    InfeasibleStart
        If ``x0`` violates its bounds or cannot be projected onto the
        constraints.
    """
    opts = opts or SolveOptions()
    x0 = np.asarray(x0, dtype=float).ravel()
    tp = transform(spec, x_probe=x0)
    oracle = DerivativeOracle(tp.spec, opts.fallback_mode, opts.fd_step)
    model = (_EqualityModel if tp.is_equality_only else _AugmentedModel)(tp, oracle, opts)

    z = model.initial_point(x0)
    f = model.f(z)
    ls_cfg = opts.linesearch
    grad_ls_cfg = ls_cfg

    if trace is None:
        trace = []
    step_info = dict(step_norm=0.0, alpha=0.0, direction_kind="none", cg_iters=0,
                     retract_inner_iters=0)
    f_prev = z_prev = None
    g_prev_norm = math.inf
    status = None
    it = 0
    lam = lam_h = None
    pg_norm = math.inf

    while True:
        fact = model.factor(z)
        grad = model.grad(z)
        pg = fact.project(grad)
        pg_norm = float(np.linalg.norm(pg))
        lam, lam_h = model.multipliers(fact, grad)
        counts = oracle.counts
        trace.append(TraceRecord(
            iter=it, f=f, proj_grad_norm=pg_norm,
            constraint_viol_inf=_violation(tp.spec, oracle, model.original(z)),
            cum_f_evals=counts.f, cum_grad_evals=counts.grad, cum_jac_evals=counts.jac,
            cum_w_actions=counts.w, **step_info,
        ))

        if it > 0:
            if abs(f_prev - f) < opts.ftol * (1.0 + abs(f)):
                status = CONVERGED_F
            elif np.linalg.norm(z - z_prev) < opts.xtol * (1.0 + np.linalg.norm(z)):
                status = CONVERGED_X
            elif pg_norm < opts.gtol:
                status = CONVERGED_GRAD
        if status is None and it >= opts.max_iter:
            status = MAX_ITER
        if status is not None:
            break

        f_prev, z_prev = f, z
        if pg_norm == 0.0 or (it == 0 and pg_norm < opts.gtol):
            step_info = dict(step_norm=0.0, alpha=0.0, direction_kind="none", cg_iters=0,
                             retract_inner_iters=0)
            it += 1
            continue

        kinds = [opts.direction] if opts.direction == GRADIENT else [NEWTON, GRADIENT]
        accepted = None
        for kind in kinds:
            if kind == NEWTON:
                delta = dembo_tolerance(opts.kappa, pg_norm, g_prev_norm)
                try:
                    direction = newton_direction(fact, grad, model.hess_action(z, lam, lam_h),
                                                 delta, opts.cg_max_iter)
                except IndefiniteProjection:
                    log.debug("iteration %d: indefinite projection, using gradient", it)
                    continue
            else:
                direction = gradient_direction(fact, grad)
            direction, slope = _descent(direction, grad, fact)
            step = direction.step
            cfg = ls_cfg if kind == opts.direction else grad_ls_cfg

            def arc(alpha, step=step):
                return model.retract(z, fact, alpha * step)

            def f_eval(res):
                return model.f(res.point)

            try:
                if cfg.method == ARMIJO:
                    ls = armijo(f_eval, arc, f, slope, cfg)
                else:
                    ls = golden(f_eval, arc, float(np.linalg.norm(step)), cfg, f_x=f)
            except LineSearchFailed:
                log.debug("iteration %d: line search failed for %s direction", it, kind)
                continue
            accepted = (direction, ls)
            break

        if accepted is None:
            status = LINE_SEARCH_FAILED
            break

        direction, ls = accepted
        z_new = ls.point.point
        step_info = dict(
            step_norm=float(np.linalg.norm(model.original(z_new) - model.original(z))),
            alpha=float(ls.alpha),
            direction_kind=direction.kind,
            cg_iters=int(direction.cg_iters),
            retract_inner_iters=int(ls.point.inner_iters),
        )
        z, f = z_new, ls.f_new
        g_prev_norm = pg_norm
        it += 1

    lam_out = np.asarray(lam if lam is not None else np.zeros(0))
    return SolveResult(
        x_final=np.array(model.original(z)),
        f_final=float(f),
        lam_final=lam_out,
        status=status,
        trace=trace,
        proj_grad_norm=pg_norm,
        iterations=it,
        lam_h=lam_h,
        z_final=None if tp.is_equality_only else np.array(z),
    )


def trace_rows(records) -> list[dict]:
    return [asdict(r) for r in records]
