"""Compare direction and retraction choices on the registered benchmarks.

The same numbers are available from the command line, for example

    feasopt solve --problem sphere-linear --n 1000 --retraction quasi-newton --trace t.csv

Here the library is driven directly and the traces summarized in a table.
"""

import numpy as np

from feasopt import SolveOptions, bench, solve

runs = [
    ("rayleigh-diag", {"n": 100}, "newton", "projection"),
    ("rayleigh-diag", {"n": 100}, "gradient", "projection"),
    ("sphere-linear", {"n": 1000}, "newton", "quasi_newton"),
    ("sphere-linear", {"n": 1000}, "newton", "projection"),
    ("degenerate-cos", {}, "newton", "projection"),
]

print(f"{'problem':16s} {'direction':9s} {'retraction':12s} {'status':16s} "
      f"{'iters':>5s} {'W-actions':>9s} {'f_final':>14s}")
for name, params, direction, retraction in runs:
    prob = bench.get(name, **params)
    opts = SolveOptions(direction=direction, retraction=retraction, max_iter=500)
    res = solve(prob.spec, prob.x0, opts)
    last = res.trace[-1]
    print(f"{name:16s} {direction:9s} {retraction:12s} {res.status:16s} "
          f"{res.iterations:5d} {last.cum_w_actions:9d} {res.f_final:14.8f}")

# Objective against cumulative gradient evaluations, the usual plotting axis.
prob = bench.get("rayleigh-diag", n=100)
res = solve(prob.spec, prob.x0)
series = np.array([(r.cum_grad_evals, r.f) for r in res.trace])
print(series[:8])
