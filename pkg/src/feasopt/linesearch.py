"""Step-length selection along a retracted arc ``alpha -> R(alpha * dx)``.

``arc(alpha)`` returns a point (whatever the caller's retraction produces)
or raises ``RetractionDiverged``; ``f_eval(point)`` returns the objective.
A failed retraction counts as an unacceptable step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable, NamedTuple

from .errors import LineSearchFailed, RetractionDiverged

__all__ = ["LineSearchConfig", "LineSearchResult", "armijo", "golden", "ARMIJO", "GOLDEN"]

ARMIJO = "armijo"
GOLDEN = "golden"

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class LineSearchConfig:
    method: str = ARMIJO
    alpha0: float = 1.0
    s: float = 0.5
    sigma: float = 1e-4
    max_backtracks: int = 60
    golden_rel_tol: float = 1e-6
    max_doublings: int = 60

    def __post_init__(self):
        if self.method not in (ARMIJO, GOLDEN):
            raise ValueError(f"unknown line search {self.method!r}")
        if not self.alpha0 > 0:
            raise ValueError("alpha0 must be positive")
        if not 0 < self.s < 1 or not 0 < self.sigma < 1:
            raise ValueError("s and sigma must lie in (0, 1)")


class LineSearchResult(NamedTuple):
    alpha: float
    point: Any
    f_new: float


def armijo(
    f_eval: Callable[[Any], float],
    arc: Callable[[float], Any],
    f_x: float,
    g_dot_d: float,
    cfg: LineSearchConfig = LineSearchConfig(),
) -> LineSearchResult:
    """Backtracking search for ``f(x) - f(arc(a)) >= -sigma * a * g_dot_d``.

    Tries ``a = alpha0 * s**k`` for ``k = 0, 1, ...``.
    """
    alpha = cfg.alpha0
    for _ in range(cfg.max_backtracks):
        try:
            point = arc(alpha)
        except RetractionDiverged:
            alpha *= cfg.s
            continue
        f_new = f_eval(point)
        if f_x - f_new >= -cfg.sigma * alpha * g_dot_d:
            return LineSearchResult(alpha, point, f_new)
        alpha *= cfg.s
    raise LineSearchFailed(f"no sufficient decrease after {cfg.max_backtracks} backtracks")


def golden(
    f_eval: Callable[[Any], float],
    arc: Callable[[float], Any],
    dx_norm: float,
    cfg: LineSearchConfig = LineSearchConfig(method=GOLDEN),
    f_x: float | None = None,
    max_iter: int = 200,
) -> LineSearchResult:
    """Exact search: bracket by doubling from ``alpha0``, then golden sections.

    Sections stop once the bracket is narrower than
    ``golden_rel_tol * dx_norm``; the endpoint with the lower objective is
    returned.
    """
    cache: dict[float, tuple[float, Any]] = {}

    def phi(a):
        if a not in cache:
            try:
                point = arc(a)
                val = f_eval(point)
            except RetractionDiverged:
                point, val = None, math.inf
            if math.isnan(val):
                val = math.inf
            cache[a] = (val, point)
        return cache[a][0]

    f0 = phi(0.0) if f_x is None else f_x
    if f_x is not None:
        cache[0.0] = (f_x, None)

    a0 = cfg.alpha0
    if phi(a0) < f0:
        prev, cur = 0.0, a0
        for _ in range(cfg.max_doublings):
            nxt = 2.0 * cur
            if phi(nxt) >= phi(cur):
                lo, hi = prev, nxt
                break
            prev, cur = cur, nxt
        else:
            val, point = cache[cur]
            return LineSearchResult(cur, point, val)
    else:
        lo, hi = 0.0, a0

    tol = cfg.golden_rel_tol * dx_norm
    c = hi - _INV_PHI * (hi - lo)
    d = lo + _INV_PHI * (hi - lo)
    for _ in range(max_iter):
        if hi - lo < tol:
            break
        if phi(c) < phi(d):
            hi, d = d, c
            c = hi - _INV_PHI * (hi - lo)
        else:
            lo, c = c, d
            d = lo + _INV_PHI * (hi - lo)

    # prefer the bracket endpoints; fall back to interior probes
    for group in ((lo, hi), (c, d)):
        cands = [(phi(a), a) for a in group if a > 0.0]
        cands = [(v, a) for v, a in cands if v < f0]
        if cands:
            val, a = min(cands)
            return LineSearchResult(a, cache[a][1], val)
    raise LineSearchFailed("no decrease found along the arc")
