"""Problem statement and the slack/auxiliary-variable transformation.

A user problem

    min f(x)  s.t.  c(x) = 0,  d_lower <= d(x) <= d_upper,  x_lower <= x <= x_upper

is rewritten over ``x' = (x, slack)`` of length ``n' = n + p`` and an
auxiliary vector ``y`` of the same length as the equality-constrained problem

    min f(x'[:n])  s.t.  c'(x') = (c(x), d(x) - slack) = 0,  h(x', y) = 0,

where each ``h_k`` is a line, parabola or circle in the ``(x_k, y_k)`` plane
whose zero set projects onto ``[l_k, u_k]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DegenerateBox, InfeasibleBounds, InfeasibleStart

__all__ = [
    "ProblemSpec",
    "TransformedProblem",
    "AugmentedPoint",
    "transform",
    "eval_h",
    "h_gradients",
    "init_augmented",
    "solve_y",
    "LINE",
    "PARABOLA",
    "CIRCLE",
]

LINE, PARABOLA, CIRCLE = 0, 1, 2


def _as_bounds(value, size, fill):
    if value is None:
        return np.full(size, fill, dtype=float)
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return np.full(size, float(arr))
    if arr.shape != (size,):
        raise ValueError(f"bound vector has shape {arr.shape}, expected ({size},)")
    return arr.copy()


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """User-facing problem statement.

    Parameters
    ----------
    n : int
        Number of variables.
    f : callable
        Objective ``f(x) -> float``.
    c, d : callable, optional
        Equality constraints ``c(x) -> (m,)`` and inequality functions
        ``d(x) -> (p,)``.
    x_lower, x_upper, d_lower, d_upper : array_like, optional
        Bounds; missing entries are ``-inf`` / ``+inf``.
    m, p : int, optional
        Constraint counts. ``p`` defaults to the length of the ``d`` bounds;
        ``m`` is found by evaluating ``c`` once when not given.
    grad, jac_c, jac_d, hessp : callable, optional
        Analytic derivatives. ``hessp(x, lam, v)`` returns the action of
        ``hess f + sum_k lam_k hess g_k`` on ``v`` where ``g = (c, d)`` and
        ``lam`` has length ``m + p``. Anything missing is approximated.
    """

    n: int
    f: Callable
    c: Optional[Callable] = None
    d: Optional[Callable] = None
    x_lower: Optional[np.ndarray] = None
    x_upper: Optional[np.ndarray] = None
    d_lower: Optional[np.ndarray] = None
    d_upper: Optional[np.ndarray] = None
    m: Optional[int] = None
    p: Optional[int] = None
    grad: Optional[Callable] = None
    jac_c: Optional[Callable] = None
    jac_d: Optional[Callable] = None
    hessp: Optional[Callable] = None

    def __post_init__(self):
        if int(self.n) < 1:
            raise ValueError("n must be at least 1")
        object.__setattr__(self, "n", int(self.n))

        p = self.p
        if self.d is None:
            p = 0
        elif p is None:
            for b in (self.d_lower, self.d_upper):
                if b is not None and np.ndim(b) == 1:
                    p = len(b)
                    break
            if p is None:
                raise ValueError("p must be given when d has no vector bounds")
        object.__setattr__(self, "p", int(p))
        if self.c is None:
            object.__setattr__(self, "m", 0)

        object.__setattr__(self, "x_lower", _as_bounds(self.x_lower, self.n, -np.inf))
        object.__setattr__(self, "x_upper", _as_bounds(self.x_upper, self.n, np.inf))
        object.__setattr__(self, "d_lower", _as_bounds(self.d_lower, self.p, -np.inf))
        object.__setattr__(self, "d_upper", _as_bounds(self.d_upper, self.p, np.inf))

    def with_m(self, probe) -> "ProblemSpec":
        """Return a copy with ``m`` resolved by evaluating ``c`` at ``probe``."""
        if self.m is not None:
            return self
        m = len(np.atleast_1d(np.asarray(self.c(np.asarray(probe, dtype=float)))))
        clone = ProblemSpec(**{k: getattr(self, k) for k in self.__dataclass_fields__})
        object.__setattr__(clone, "m", m)
        return clone


@dataclass(frozen=True, eq=False)
class TransformedProblem:
    """Augmented equality-constrained problem with coefficient vectors."""

    spec: ProblemSpec
    n: int
    m: int
    p: int
    q: np.ndarray
    r: np.ndarray
    s: np.ndarray
    t: np.ndarray
    l: np.ndarray
    u: np.ndarray
    kind: np.ndarray = field(repr=False)

    @property
    def n_prime(self) -> int:
        return self.n + self.p

    @property
    def m_prime(self) -> int:
        return self.m + self.p

    @property
    def is_equality_only(self) -> bool:
        return self.p == 0 and bool(np.all(self.kind == LINE))

    def c_prime(self, x: np.ndarray) -> np.ndarray:
        """Evaluate ``(c(x[:n]), d(x[:n]) - x[n:])``."""
        spec = self.spec
        xs = x[: self.n]
        parts = []
        if self.m:
            parts.append(np.atleast_1d(np.asarray(spec.c(xs), dtype=float)))
        if self.p:
            parts.append(np.atleast_1d(np.asarray(spec.d(xs), dtype=float)) - x[self.n :])
        if not parts:
            return np.zeros(0)
        return np.concatenate(parts)


@dataclass(eq=False)
class AugmentedPoint:
    """Concatenated iterate ``z = (x, y)``, both of length ``n'``."""

    x: np.ndarray
    y: np.ndarray

    @classmethod
    def from_vector(cls, z: np.ndarray) -> "AugmentedPoint":
        half = len(z) // 2
        return cls(np.array(z[:half], dtype=float), np.array(z[half:], dtype=float))

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.x, self.y])


def transform(spec: ProblemSpec, x_probe=None, min_width: float = 1e-8) -> TransformedProblem:
    """Build the augmented problem and its ``(q, r, s, t)`` coefficients.

    Raises
    ------
    InfeasibleBounds
        If any lower bound exceeds its upper bound.
    DegenerateBox
        If a doubly bounded coordinate has ``u - l <= min_width``.
    """
    l = np.concatenate([spec.x_lower, spec.d_lower])
    u = np.concatenate([spec.x_upper, spec.d_upper])
    if np.any(np.isnan(l)) or np.any(np.isnan(u)):
        raise ValueError("bounds must not be NaN")
    bad = np.flatnonzero(l > u)
    if bad.size:
        raise InfeasibleBounds(f"lower bound exceeds upper bound at indices {bad.tolist()}")

    if spec.m is None:
        if x_probe is None:
            x_probe = np.clip(np.zeros(spec.n), spec.x_lower, spec.x_upper)
        spec = spec.with_m(x_probe)

    lf, uf = np.isfinite(l), np.isfinite(u)
    size = len(l)
    q = np.zeros(size)
    r = np.zeros(size)
    s = np.zeros(size)
    t = np.zeros(size)
    kind = np.full(size, LINE, dtype=np.int8)

    lower_only = lf & ~uf
    r[lower_only] = l[lower_only]
    s[lower_only] = -1.0
    t[lower_only] = l[lower_only]

    upper_only = ~lf & uf
    r[upper_only] = u[upper_only]
    s[upper_only] = 1.0
    t[upper_only] = u[upper_only]

    both = lf & uf
    narrow = np.flatnonzero(both & (u - l <= min_width))
    if narrow.size:
        raise DegenerateBox(
            f"box width <= {min_width:g} at indices {narrow.tolist()}; "
            "fix such variables or pose them as equality constraints"
        )
    q[both] = 1.0
    r[both] = 0.5 * (u[both] + l[both])
    s[both] = 1.0
    t[both] = 0.25 * (u[both] - l[both]) ** 2

    kind[lower_only | upper_only] = PARABOLA
    kind[both] = CIRCLE

    return TransformedProblem(
        spec=spec, n=spec.n, m=int(spec.m), p=spec.p,
        q=q, r=r, s=s, t=t, l=l, u=u, kind=kind,
    )


def _h(q, r, s, t, x, y):
    return q * (x - r) ** 2 + (1 - q * q) * x + s * (y - r) ** 2 - (1 - s * s) * y - t


def eval_h(tp: TransformedProblem, z: AugmentedPoint) -> np.ndarray:
    """Evaluate the bound-encoding constraints ``h(x, y)``."""
    return _h(tp.q, tp.r, tp.s, tp.t, np.asarray(z.x, float), np.asarray(z.y, float))


def h_gradients(tp: TransformedProblem, x: np.ndarray, y: np.ndarray):
    """Diagonals of ``dh/dx`` and ``dh/dy``."""
    a = 2 * tp.q * (x - tp.r) + (1 - tp.q * tp.q)
    b = 2 * tp.s * (y - tp.r) - (1 - tp.s * tp.s)
    return a, b


def solve_y(tp: TransformedProblem, x: np.ndarray, sign=None) -> np.ndarray:
    """Solve ``h_k(x_k, y_k) = 0`` for ``y``.

    ``sign`` picks the branch (``y >= r`` for ``+1``) on parabola and circle
    rows; the default is the upper branch. ``x`` must lie within the bounds.
    """
    x = np.asarray(x, dtype=float)
    if sign is None:
        sign = np.ones_like(x)
    y = x.copy()
    par = tp.kind == PARABOLA
    # lower parabola: x = r + (y-r)^2; upper: x = r - (y-r)^2
    rad = np.maximum(-tp.s[par] * (x[par] - tp.r[par]), 0.0)
    y[par] = tp.r[par] + sign[par] * np.sqrt(rad)
    cir = tp.kind == CIRCLE
    rad = np.maximum(tp.t[cir] - (x[cir] - tp.r[cir]) ** 2, 0.0)
    y[cir] = tp.r[cir] + sign[cir] * np.sqrt(rad)
    return y


def branch_sign(tp: TransformedProblem, y: np.ndarray) -> np.ndarray:
    """Current branch of each auxiliary variable, ``+1`` where ``y == r``."""
    return np.where(y - tp.r < 0, -1.0, 1.0)


def init_augmented(tp: TransformedProblem, x0, eps_c: float = 1e-6) -> AugmentedPoint:
    """Lift a user starting point onto ``h = 0``.

    Components of ``x0`` are clamped a relative ``1e-9`` inside finite
    bounds; slacks are set to ``d(x0)`` clamped the same way. The result
    satisfies ``h`` to rounding but ``c'`` only as well as ``x0`` satisfies
    the original constraints.

    Raises
    ------
    InfeasibleStart
        If ``x0`` lies outside its box by more than ``eps_c``.
    """
    spec = tp.spec
    x0 = np.asarray(x0, dtype=float).ravel()
    if x0.shape != (tp.n,):
        raise ValueError(f"x0 has length {x0.size}, expected {tp.n}")
    if not np.all(np.isfinite(x0)):
        raise InfeasibleStart("x0 is not finite")
    viol = np.maximum(spec.x_lower - x0, x0 - spec.x_upper)
    if np.any(viol > eps_c):
        k = int(np.argmax(viol))
        raise InfeasibleStart(f"x0[{k}] violates its bounds by {viol[k]:.3g}")

    if tp.p:
        slack = np.atleast_1d(np.asarray(spec.d(x0), dtype=float))
        if not np.all(np.isfinite(slack)):
            raise InfeasibleStart("d(x0) is not finite")
        x = np.concatenate([x0, slack])
    else:
        x = x0.copy()
    x = clamp_inside(tp, x)
    return AugmentedPoint(x, solve_y(tp, x))


def clamp_inside(tp: TransformedProblem, x: np.ndarray, rel: float = 1e-9) -> np.ndarray:
    """Clamp ``x`` into ``[l + delta, u - delta]`` with a small relative margin."""
    l, u = tp.l, tp.u
    scale = np.where(np.isfinite(u - l), u - l, np.where(np.isfinite(l), np.abs(l), np.abs(u)))
    delta = rel * np.maximum(1.0, np.where(np.isfinite(scale), scale, 1.0))
    lo = np.where(np.isfinite(l), l + delta, -np.inf)
    hi = np.where(np.isfinite(u), u - delta, np.inf)
    return np.clip(x, lo, hi)
