"""Benchmark problems and independent reference solutions.

Random instances draw from ``numpy.random.Generator(PCG64(seed))`` so they
reproduce across platforms. Reference solutions (dense eigensolver, grid
search, dense KKT solve) never touch the solver's code paths.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

from .problem import ProblemSpec

__all__ = [
    "BenchProblem",
    "REGISTRY",
    "get",
    "rng_for",
    "rayleigh_diag",
    "rayleigh_sparse",
    "rayleigh_positive",
    "sphere_linear",
    "degenerate_quartic",
    "degenerate_cos",
    "sparse_symmetric",
    "min_eigenvalue",
    "grid_search_max",
    "kkt_solve",
]


@dataclass(frozen=True)
class BenchProblem:
    name: str
    spec: ProblemSpec
    x0: np.ndarray
    known_solution: Optional[np.ndarray] = None
    f_star: Optional[float] = None
    data: Optional[dict] = None


def rng_for(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def _random_unit(n, rng, positive=False):
    x = rng.standard_normal(n)
    if positive:
        x = np.abs(x) + 1e-3
    return x / np.linalg.norm(x)


def _rayleigh_spec(A, n, **bounds):
    def f(x):
        return 0.5 * (x @ (A @ x))

    def grad(x):
        return A @ x

    def c(x):
        return np.array([x @ x - 1.0])

    def jac_c(x):
        return 2.0 * x[None, :]

    def hessp(x, lam, v):
        return A @ v + 2.0 * lam[0] * v

    return ProblemSpec(n=n, f=f, c=c, m=1, grad=grad, jac_c=jac_c, hessp=hessp, **bounds)


def rayleigh_diag(n: int = 100, seed: int = 0) -> BenchProblem:
    """Rayleigh quotient of ``diag(n, ..., 1)`` on the unit sphere."""
    if n < 2:
        raise ValueError("n must be at least 2")
    diag = np.arange(n, 0, -1, dtype=float)
    A = sp.diags(diag).tocsr()
    x_star = np.zeros(n)
    x_star[-1] = 1.0
    return BenchProblem(
        "rayleigh-diag", _rayleigh_spec(A, n), _random_unit(n, rng_for(seed)),
        known_solution=x_star, f_star=0.5, data={"A": A},
    )


def sparse_symmetric(n: int, density: float, seed: int) -> sp.csr_matrix:
    """``B + B^T`` with ``B`` of density ``density / 2`` and N(0, 1) nonzeros."""
    rng = rng_for(seed)
    B = sp.random(n, n, density=density / 2.0, format="csr", random_state=rng,
                  data_rvs=rng.standard_normal)
    return (B + B.T).tocsr()


def rayleigh_sparse(n: int = 200, density: float = 0.02, seed: int = 0) -> BenchProblem:
    if n < 2:
        raise ValueError("n must be at least 2")
    A = sparse_symmetric(n, density, seed)
    x0 = _random_unit(n, rng_for(seed + 1))
    return BenchProblem("rayleigh-sparse", _rayleigh_spec(A, n), x0, data={"A": A})


def rayleigh_positive(n: int = 100, density: float = 0.02, seed: int = 0) -> BenchProblem:
    """Rayleigh quotient on the part of the unit sphere with ``x >= 0``."""
    if n < 2:
        raise ValueError("n must be at least 2")
    A = sparse_symmetric(n, density, seed)
    x0 = _random_unit(n, rng_for(seed + 1), positive=True)
    spec = _rayleigh_spec(A, n, x_lower=np.zeros(n))
    return BenchProblem("rayleigh-positive", spec, x0, data={"A": A})


def sphere_linear(n: int = 1000, seed: int = 0, coef=None) -> BenchProblem:
    """Linear objective on the solid unit ball, posed as ``x . x <= 1``."""
    cvec = rng_for(seed).standard_normal(n) if coef is None else np.asarray(coef, float)
    n = len(cvec)

    def f(x):
        return cvec @ x

    def grad(x):
        return cvec.copy()

    def d(x):
        return np.array([x @ x])

    def jac_d(x):
        return 2.0 * x[None, :]

    def hessp(x, lam, v):
        return 2.0 * lam[0] * v

    spec = ProblemSpec(n=n, f=f, d=d, d_upper=np.array([1.0]), grad=grad, jac_d=jac_d,
                       hessp=hessp)
    x_star = -cvec / np.linalg.norm(cvec)
    return BenchProblem("sphere-linear", spec, np.zeros(n), known_solution=x_star,
                        f_star=-float(np.linalg.norm(cvec)), data={"c": cvec})


def _quartic(x1):
    return (x1 + 1.0) * (x1 - 1.0) * x1 * x1


def degenerate_quartic(n: int = 2, seed: int = 0) -> BenchProblem:
    """Figure-eight region pinched at the origin; linear objective."""

    def f(x):
        return -x[0] - 0.5 * x[1]

    def grad(x):
        return np.array([-1.0, -0.5])

    def d(x):
        g = _quartic(x[0])
        return np.array([x[1] + g, x[1] - g])

    def jac_d(x):
        dg = 4.0 * x[0] ** 3 - 2.0 * x[0]
        return np.array([[dg, 1.0], [-dg, 1.0]])

    spec = ProblemSpec(n=2, f=f, d=d, d_lower=np.array([-np.inf, 0.0]),
                       d_upper=np.array([0.0, np.inf]), grad=grad, jac_d=jac_d)
    return BenchProblem("degenerate-quartic", spec, np.array([-0.9, 0.0]),
                        known_solution=np.array([1.0, 0.0]),
                        data={"feasible": _quartic_feasible, "box": ((-1.5, 1.5), (-1.5, 1.5))})


def _quartic_feasible(x1, x2):
    g = _quartic(x1)
    return (x2 <= -g) & (x2 >= g)


def degenerate_cos(n: int = 2, seed: int = 0) -> BenchProblem:
    """``cos(x1)^2 + x2^2 <= 1`` with ``-2 <= x1 <= 2``; pinched at the origin."""

    def f(x):
        return -x[0] - 0.5 * x[1]

    def grad(x):
        return np.array([-1.0, -0.5])

    def d(x):
        return np.array([np.cos(x[0]) ** 2 + x[1] ** 2])

    def jac_d(x):
        return np.array([[-np.sin(2.0 * x[0]), 2.0 * x[1]]])

    spec = ProblemSpec(n=2, f=f, d=d, d_upper=np.array([1.0]), x_lower=np.array([-2.0, -np.inf]),
                       x_upper=np.array([2.0, np.inf]), grad=grad, jac_d=jac_d)
    return BenchProblem("degenerate-cos", spec, np.array([-1.5, 0.0]),
                        known_solution=np.array([2.0, np.sin(2.0)]),
                        data={"feasible": _cos_feasible, "box": ((-2.0, 2.0), (-1.5, 1.5))})


def _cos_feasible(x1, x2):
    return (np.cos(x1) ** 2 + x2**2 <= 1.0) & (np.abs(x1) <= 2.0)


REGISTRY: dict[str, Callable[..., BenchProblem]] = {
    "rayleigh-diag": rayleigh_diag,
    "rayleigh-sparse": rayleigh_sparse,
    "rayleigh-positive": rayleigh_positive,
    "sphere-linear": sphere_linear,
    "degenerate-quartic": degenerate_quartic,
    "degenerate-cos": degenerate_cos,
}


def get(name: str, **params) -> BenchProblem:
    try:
        builder = REGISTRY[name]
    except KeyError:
        valid = ", ".join(sorted(REGISTRY))
        raise KeyError(f"unknown problem {name!r}; valid problems: {valid}") from None
    return builder(**params)


# -- reference oracles ------------------------------------------------------


def min_eigenvalue(A) -> float:
    """Smallest eigenvalue by a dense symmetric eigensolver."""
    dense = A.toarray() if sp.issparse(A) else np.asarray(A, dtype=float)
    return float(np.linalg.eigvalsh(dense)[0])


def grid_search_max(objective, feasible, box, resolution: int = 2001, refinements: int = 60,
                    zoom: float = 0.7):
    """Maximize ``objective(x1, x2)`` over ``feasible(x1, x2)`` by grid search.

    Starts with a ``resolution x resolution`` grid over ``box``; each
    refinement re-grids a window ``zoom`` times as wide, centred on the
    incumbent and clipped to ``box``. The window never shrinks below twice
    the incumbent's last move, so it can follow a flat ridge.
    """
    (a1, b1), (a2, b2) = box
    half1, half2 = (b1 - a1) / 2.0, (b2 - a2) / 2.0
    best, best_val = None, -np.inf
    for _ in range(refinements + 1):
        g1 = np.linspace(a1, b1, resolution)
        g2 = np.linspace(a2, b2, resolution)
        X1, X2 = np.meshgrid(g1, g2, indexing="ij")
        vals = np.where(feasible(X1, X2), objective(X1, X2), -np.inf)
        k = np.unravel_index(np.argmax(vals), vals.shape)
        move = np.zeros(2)
        if vals[k] > best_val:
            cand = np.array([X1[k], X2[k]])
            if best is not None:
                move = np.abs(cand - best)
            best, best_val = cand, vals[k]
        half1 = max(zoom * half1, 2.0 * move[0])
        half2 = max(zoom * half2, 2.0 * move[1])
        a1, b1 = max(box[0][0], best[0] - half1), min(box[0][1], best[0] + half1)
        a2, b2 = max(box[1][0], best[1] - half2), min(box[1][1], best[1] + half2)
        resolution = min(resolution, 401)
    return best


def kkt_solve(H: np.ndarray, g: np.ndarray, A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Minimizer of ``1/2 x^T H x + g^T x`` subject to ``A x = b`` (dense KKT)."""
    n, m = H.shape[0], A.shape[0]
    K = np.block([[H, A.T], [A, np.zeros((m, m))]])
    sol = np.linalg.solve(K, np.concatenate([-g, b]))
    return sol[:n]
