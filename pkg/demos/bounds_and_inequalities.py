"""Box bounds and a two-sided inequality handled by the slack reformulation.

Bounds and inequality functions are folded into smooth equations in an
augmented variable (x, y): each bounded quantity is paired with a slack y
whose admissible curve (a line, parabola or circle) encodes the bound.
The solver moves along that augmented manifold and reports the final point
in the original coordinates.
"""

import numpy as np

from feasopt import ProblemSpec, SolveOptions, solve

# Minimize distance to (2, 2) inside the unit disk, with x1 in [0, 0.5].
spec = ProblemSpec(
    n=2,
    f=lambda x: 0.5 * np.sum((x - 2.0) ** 2),
    grad=lambda x: x - 2.0,
    d=lambda x: np.array([x @ x]),
    jac_d=lambda x: 2.0 * x[None, :],
    d_lower=[0.0],
    d_upper=[1.0],
    x_lower=[0.0, -np.inf],
    x_upper=[0.5, np.inf],
)

result = solve(spec, np.array([0.1, 0.1]), SolveOptions(direction="newton"))
x = result.x_final
print(result.status, "x* =", x)

# Both the disk and the upper bound on x1 should be active.
print("x1 =", x[0], " |x|^2 =", x @ x)
print("expected: [0.5, %.8f]" % np.sqrt(0.75))

# Multipliers of the slack equations show which constraints bind.
print("lambda_h =", result.lam_h)
