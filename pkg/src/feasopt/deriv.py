"""Gradient, Jacobian and Lagrangian-Hessian actions.

User-supplied derivatives are used when present. Otherwise gradients and
Jacobians come from forward-mode dual numbers pushed through the user's
callbacks (which therefore must be written with numpy operations that
accept object arrays), and degrade to central differences when a callback
rejects dual inputs. Hessian actions are always directional central
differences of ``x -> grad f(x) + J(x)^T lam`` unless ``hessp`` is given.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteDerivative

__all__ = ["Dual", "DerivativeOracle", "EvalCounts", "FORWARD_DUAL", "CENTRAL_DIFFERENCE"]

FORWARD_DUAL = "forward_dual"
CENTRAL_DIFFERENCE = "central_difference"

_EPS13 = np.finfo(float).eps ** (1.0 / 3.0)


class Dual:
    """Scalar dual number ``val + der . eps`` with a vector of tangents.

    Only the operations needed by typical smooth objectives are defined;
    anything else raises ``TypeError`` so the oracle can fall back.
    """

    __slots__ = ("val", "der")
    __array_priority__ = 1000

    def __init__(self, val, der):
        self.val = float(val)
        self.der = der

    def _lift(self, other):
        if isinstance(other, Dual):
            return other
        if isinstance(other, (int, float, np.integer, np.floating)):
            return Dual(other, 0.0 * self.der)
        return NotImplemented

    def __add__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return Dual(self.val + o.val, self.der + o.der)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return Dual(self.val - o.val, self.der - o.der)

    def __rsub__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return o - self

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val * other.val, self.val * other.der + other.val * self.der)
        if isinstance(other, (int, float, np.integer, np.floating)):
            return Dual(self.val * other, self.der * other)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            inv = 1.0 / other.val
            return Dual(self.val * inv, (self.der - self.val * inv * other.der) * inv)
        if isinstance(other, (int, float, np.integer, np.floating)):
            return Dual(self.val / other, self.der / other)
        return NotImplemented

    def __rtruediv__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return o / self

    def __neg__(self):
        return Dual(-self.val, -self.der)

    def __pos__(self):
        return self

    def __abs__(self):
        return -self if self.val < 0 else self

    def __pow__(self, k):
        if isinstance(k, Dual):
            return (k * self.log()).exp()
        k = float(k)
        if k == 0.0:
            return Dual(1.0, 0.0 * self.der)
        return Dual(self.val**k, k * self.val ** (k - 1) * self.der)

    def __rpow__(self, base):
        base = float(base)
        v = base**self.val
        return Dual(v, v * math.log(base) * self.der)

    def _cmp(self, other):
        return other.val if isinstance(other, Dual) else other

    def __lt__(self, other):
        return self.val < self._cmp(other)

    def __le__(self, other):
        return self.val <= self._cmp(other)

    def __gt__(self, other):
        return self.val > self._cmp(other)

    def __ge__(self, other):
        return self.val >= self._cmp(other)

    def __eq__(self, other):
        return self.val == self._cmp(other)

    def __ne__(self, other):
        return self.val != self._cmp(other)

    __hash__ = None

    def __repr__(self):
        return f"Dual({self.val!r}, {self.der!r})"

    # methods looked up by numpy ufuncs on object arrays
    def sqrt(self):
        v = math.sqrt(self.val)
        return Dual(v, self.der / (2.0 * v))

    def exp(self):
        v = math.exp(self.val)
        return Dual(v, v * self.der)

    def expm1(self):
        return Dual(math.expm1(self.val), math.exp(self.val) * self.der)

    def log(self):
        return Dual(math.log(self.val), self.der / self.val)

    def log1p(self):
        return Dual(math.log1p(self.val), self.der / (1.0 + self.val))

    def sin(self):
        return Dual(math.sin(self.val), math.cos(self.val) * self.der)

    def cos(self):
        return Dual(math.cos(self.val), -math.sin(self.val) * self.der)

    def tan(self):
        v = math.tan(self.val)
        return Dual(v, (1.0 + v * v) * self.der)

    def arcsin(self):
        return Dual(math.asin(self.val), self.der / math.sqrt(1.0 - self.val**2))

    def arccos(self):
        return Dual(math.acos(self.val), -self.der / math.sqrt(1.0 - self.val**2))

    def arctan(self):
        return Dual(math.atan(self.val), self.der / (1.0 + self.val**2))

    def sinh(self):
        return Dual(math.sinh(self.val), math.cosh(self.val) * self.der)

    def cosh(self):
        return Dual(math.cosh(self.val), math.sinh(self.val) * self.der)

    def tanh(self):
        v = math.tanh(self.val)
        return Dual(v, (1.0 - v * v) * self.der)


def _seed(x, lo, hi):
    k = hi - lo
    out = np.empty(len(x), dtype=object)
    for i, xi in enumerate(x):
        der = np.zeros(k)
        if lo <= i < hi:
            der[i - lo] = 1.0
        out[i] = Dual(xi, der)
    return out


def _tangents(value, k):
    """Stack tangent parts of a dual-valued result into ``(len, k)``."""
    arr = np.atleast_1d(np.asarray(value, dtype=object))
    out = np.zeros((len(arr), k))
    for i, e in enumerate(arr):
        if isinstance(e, Dual):
            out[i] = e.der
        elif not isinstance(e, (int, float, np.integer, np.floating)):
            raise TypeError(f"unexpected element {type(e).__name__} in dual result")
    return out


@dataclass
class EvalCounts:
    """Cumulative evaluation counters for one solve."""

    f: int = 0
    c: int = 0
    grad: int = 0
    jac: int = 0
    w: int = 0


class DerivativeOracle:
    """Derivatives of ``f`` and the stacked constraints ``g = (c, d)``.

    Parameters
    ----------
    spec : ProblemSpec
        Problem with resolved ``m``.
    fallback_mode : {"forward_dual", "central_difference"}
        How to approximate missing gradients and Jacobians.
    fd_step : float, optional
        Relative finite-difference step; defaults to ``eps**(1/3)``.
    """

    def __init__(self, spec, fallback_mode: str = FORWARD_DUAL, fd_step: float | None = None):
        if fallback_mode not in (FORWARD_DUAL, CENTRAL_DIFFERENCE):
            raise ValueError(f"unknown fallback_mode {fallback_mode!r}")
        self.spec = spec
        self.n = spec.n
        self.m = int(spec.m or 0)
        self.p = spec.p
        self.fallback_mode = fallback_mode
        self.fd_step = _EPS13 if fd_step is None else float(fd_step)
        self.counts = EvalCounts()

    # -- plain evaluations -------------------------------------------------
    def f(self, x) -> float:
        self.counts.f += 1
        return float(self.spec.f(x))

    def g(self, x) -> np.ndarray:
        """Stacked constraint values ``(c(x), d(x))``."""
        self.counts.c += 1
        return self._g_raw(x)

    def _g_raw(self, x):
        parts = []
        if self.m:
            parts.append(np.atleast_1d(np.asarray(self.spec.c(x), dtype=float)))
        if self.p:
            parts.append(np.atleast_1d(np.asarray(self.spec.d(x), dtype=float)))
        return np.concatenate(parts) if parts else np.zeros(0)

    def _g_dual(self, xd):
        parts = []
        if self.m:
            parts.append(np.atleast_1d(np.asarray(self.spec.c(xd), dtype=object)))
        if self.p:
            parts.append(np.atleast_1d(np.asarray(self.spec.d(xd), dtype=object)))
        return np.concatenate(parts) if parts else np.zeros(0, dtype=object)

    # -- first derivatives -------------------------------------------------
    def gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        self.counts.grad += 1
        if self.spec.grad is not None:
            out = np.asarray(self.spec.grad(x), dtype=float).reshape(self.n)
        else:
            out = self._fallback(lambda z: self.spec.f(z), x, scalar=True)
        return _checked(out, "gradient")

    def jacobian(self, x) -> np.ndarray:
        """Dense ``(m + p, n)`` Jacobian of ``(c, d)``."""
        x = np.asarray(x, dtype=float)
        self.counts.jac += 1
        mp = self.m + self.p
        if mp == 0:
            return np.zeros((0, self.n))
        blocks = []
        if self.m:
            blocks.append(self._jac_block(self.spec.jac_c, self.spec.c, x, self.m))
        if self.p:
            blocks.append(self._jac_block(self.spec.jac_d, self.spec.d, x, self.p))
        return _checked(np.vstack(blocks), "Jacobian")

    def _jac_block(self, jac, fun, x, rows):
        if jac is not None:
            return np.asarray(jac(x), dtype=float).reshape(rows, self.n)
        return self._fallback(fun, x, scalar=False).reshape(rows, self.n)

    def _fallback(self, fun, x, scalar):
        if self.fallback_mode == FORWARD_DUAL:
            try:
                return self._dual_derivative(fun, x, scalar)
            except (TypeError, ValueError, AttributeError) as exc:
                warnings.warn(
                    f"callback rejected dual-number input ({exc}); "
                    "switching to central differences",
                    RuntimeWarning,
                    stacklevel=3,
                )
                self.fallback_mode = CENTRAL_DIFFERENCE
        return self._central_derivative(fun, x, scalar)

    def _dual_derivative(self, fun, x, scalar, chunk=64):
        n = len(x)
        cols = []
        for lo in range(0, n, chunk):
            hi = min(n, lo + chunk)
            val = fun(_seed(x, lo, hi))
            if scalar:
                val = np.asarray(val, dtype=object).reshape(())
                cols.append(_tangents(val.item(), hi - lo)[0])
            else:
                cols.append(_tangents(val, hi - lo))
        return np.concatenate(cols, axis=-1)

    def _central_derivative(self, fun, x, scalar):
        h = self.fd_step * (1.0 + np.max(np.abs(x)))
        cols = []
        for i in range(len(x)):
            xp = x.copy()
            xm = x.copy()
            xp[i] += h
            xm[i] -= h
            fp = np.asarray(fun(xp), dtype=float)
            fm = np.asarray(fun(xm), dtype=float)
            cols.append((fp - fm) / (2 * h))
        if scalar:
            return np.array([float(c) for c in cols])
        return np.column_stack([np.atleast_1d(c) for c in cols])

    # -- second-order action -----------------------------------------------
    def _nested_differences(self) -> bool:
        """True when the Lagrangian gradient itself comes from central differences."""
        if self.fallback_mode != CENTRAL_DIFFERENCE:
            return False
        missing = [self.spec.grad]
        if self.m:
            missing.append(self.spec.jac_c)
        if self.p:
            missing.append(self.spec.jac_d)
        return any(fn is None for fn in missing)

    def lagrangian_gradient(self, x, lam) -> np.ndarray:
        """``grad f(x) + J(x)^T lam``."""
        gval = self.gradient(x)
        if self.m + self.p:
            gval = gval + self.jacobian(x).T @ lam
        return gval

    def w_action(self, x, lam, v) -> np.ndarray:
        """Action of the Lagrangian Hessian on ``v``."""
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        lam = np.asarray(lam, dtype=float)
        if lam.shape != (self.m + self.p,):
            raise ValueError(f"lam has shape {lam.shape}, expected ({self.m + self.p},)")
        self.counts.w += 1
        if self.spec.hessp is not None:
            out = np.asarray(self.spec.hessp(x, lam, v), dtype=float).reshape(self.n)
            return _checked(out, "Hessian action")
        vnorm = np.linalg.norm(v)
        if vnorm == 0.0:
            return np.zeros(self.n)
        # fourth-order central stencil on the Lagrangian gradient.  With
        # fd_step ~ eps^(1/3) the step sqrt(fd_step) ~ eps^(1/6) balances
        # roundoff against truncation; when the gradient is itself
        # differenced its O(eps^(2/3)) error calls for a larger step
        step = self.fd_step ** 0.375 if self._nested_differences() else self.fd_step ** 0.5
        a = step * (1.0 + np.linalg.norm(x)) / (1.0 + vnorm)
        # bypass the public counters: one W-action is one unit of work
        saved = (self.counts.grad, self.counts.jac)
        g = [self.lagrangian_gradient(x + k * a * v, lam) for k in (1, -1, 2, -2)]
        self.counts.grad, self.counts.jac = saved
        out = (8.0 * (g[0] - g[1]) - (g[2] - g[3])) / (12.0 * a)
        return _checked(out, "Hessian action")


def _checked(arr, what):
    if not np.all(np.isfinite(arr)):
        raise NonFiniteDerivative(f"{what} contains NaN or inf")
    return arr
