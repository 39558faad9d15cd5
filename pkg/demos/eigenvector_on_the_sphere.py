"""Smallest eigenvector of a symmetric matrix as a sphere-constrained problem.

Minimizing x'Ax / 2 subject to x'x = 1 gives the eigenvector of the smallest
eigenvalue, and f* = lambda_min / 2.  Every iterate the solver produces lies
on the sphere, so the trace can be read as a sequence of unit vectors.
"""

import numpy as np

from feasopt import ProblemSpec, SolveOptions, solve

rng = np.random.default_rng(3)
n = 50
Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
A = Q @ np.diag(np.linspace(1.0, 10.0, n)) @ Q.T

spec = ProblemSpec(
    n=n,
    f=lambda x: 0.5 * x @ A @ x,
    grad=lambda x: A @ x,
    c=lambda x: np.array([x @ x - 1.0]),
    jac_c=lambda x: 2.0 * x[None, :],
    m=1,
)

x0 = rng.standard_normal(n)
x0 /= np.linalg.norm(x0)

# Newton directions come from projected CG on the reduced Hessian.
result = solve(spec, x0, SolveOptions(direction="newton", retraction="projection"))
print(result.status, "after", result.iterations, "iterations")

# Compare with a dense eigensolver.
lam_min = np.linalg.eigvalsh(A)[0]
print("2 f(x*) =", 2 * result.f_final, " lambda_min =", lam_min)

# The iterates never leave the sphere.
for rec in result.trace[:5]:
    print(f"iter {rec.iter:2d}  f = {rec.f:.10f}  |x'x - 1| = {rec.constraint_viol_inf:.1e}")

# With grad f + lam grad c = 0 and grad c = 2x, the multiplier is -lambda_min / 2.
print("multiplier:", result.lam_final[0], " expected:", -lam_min / 2)
