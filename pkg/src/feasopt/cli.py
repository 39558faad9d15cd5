"""Command-line front end: run a benchmark problem and write its trace.

Usage::

    feasopt solve --problem rayleigh-diag --n 100 --trace out.csv

Exit codes: 0 on a ``converged_*`` status, 2 on ``max_iter``, 3 on
``line_search_failed`` and 1 on usage or infeasibility errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass, fields

import numpy as np

from . import bench
from .errors import FeasoptError
from .linesearch import LineSearchConfig
from .solver import LINE_SEARCH_FAILED, MAX_ITER, TRACE_FIELDS, SolveOptions, TraceRecord, solve

__all__ = ["RunConfig", "build_parser", "run", "main", "write_trace", "read_trace", "load_x0"]

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_MAX_ITER = 2
EXIT_LINE_SEARCH = 3

_INT_FIELDS = {f.name for f in fields(TraceRecord) if f.type in ("int", int)}
_STR_FIELDS = {f.name for f in fields(TraceRecord) if f.type in ("str", str)}


@dataclass(frozen=True)
class RunConfig:
    problem: str
    n: int | None = None
    seed: int = 0
    density: float | None = None
    direction: str = "newton"
    retraction: str = "projection"
    linesearch: str = "armijo"
    alpha0: float = 1.0
    eps_c: float = 1e-6
    eps_rank: float | None = None
    kappa: float = 0.5
    mu0: float = 0.01
    ftol: float = 1e-8
    gtol: float = 1e-6
    xtol: float = 1e-10
    max_iter: int = 1000
    trace_path: str | None = None
    trace_format: str = "csv"
    x0_path: str | None = None

    def __post_init__(self):
        if self.problem not in bench.REGISTRY:
            valid = ", ".join(sorted(bench.REGISTRY))
            raise ValueError(f"unknown problem {self.problem!r}; valid problems: {valid}")
        if self.trace_format not in ("csv", "json"):
            raise ValueError("trace_format must be 'csv' or 'json'")

    def solve_options(self) -> SolveOptions:
        ls = LineSearchConfig(method=self.linesearch, alpha0=self.alpha0)
        return SolveOptions(
            direction=self.direction, retraction=self.retraction.replace("-", "_"), linesearch=ls,
            eps_c=self.eps_c, eps_rank=self.eps_rank, kappa=self.kappa, mu0=self.mu0,
            ftol=self.ftol, gtol=self.gtol, xtol=self.xtol, max_iter=self.max_iter,
        )

    def build_problem(self) -> bench.BenchProblem:
        params = {"seed": self.seed}
        if self.n is not None:
            params["n"] = self.n
        if self.density is not None:
            params["density"] = self.density
        return bench.get(self.problem, **params)


# -- trace files -------------------------------------------------------------


def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def write_trace(records, path, format: str = "csv") -> None:
    """Write trace records as CSV (fixed header) or as a JSON array of objects."""
    rows = [[getattr(r, name) for name in TRACE_FIELDS] for r in records]
    if format == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(TRACE_FIELDS)
            for row in rows:
                writer.writerow([_fmt(v) for v in row])
    elif format == "json":
        with open(path, "w") as fh:
            json.dump([dict(zip(TRACE_FIELDS, row)) for row in rows], fh, indent=1)
            fh.write("\n")
    else:
        raise ValueError(f"unknown trace format {format!r}")


def _parse_value(name, text):
    if name in _INT_FIELDS:
        return int(text)
    if name in _STR_FIELDS:
        return text
    return float(text)


def read_trace(path, format: str = "csv") -> list[TraceRecord]:
    """Inverse of :func:`write_trace`."""
    if format == "csv":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if tuple(header) != TRACE_FIELDS:
                raise ValueError(f"unexpected trace header {header}")
            return [TraceRecord(*(_parse_value(k, v) for k, v in zip(header, row)))
                    for row in reader]
    if format == "json":
        with open(path) as fh:
            return [TraceRecord(**{k: _parse_value(k, str(obj[k])) if k in _STR_FIELDS
                                   else obj[k] for k in TRACE_FIELDS})
                    for obj in json.load(fh)]
    raise ValueError(f"unknown trace format {format!r}")


def load_x0(path, n: int) -> np.ndarray:
    """Read a whitespace-separated vector of length ``n``."""
    with open(path) as fh:
        x0 = np.array([float(tok) for tok in fh.read().split()])
    if x0.size != n:
        raise ValueError(f"{path}: expected {n} values, found {x0.size}")
    return x0


# -- command line ------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="feasopt", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("solve", help="solve a benchmark problem")
    p.add_argument("--problem", required=True,
                   help="benchmark name: " + ", ".join(sorted(bench.REGISTRY)))
    p.add_argument("--n", type=int, default=None, help="problem dimension")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--density", type=float, default=None)
    p.add_argument("--direction", choices=("newton", "gradient"), default="newton")
    p.add_argument("--retraction", choices=("projection", "quasi-newton"), default="projection")
    p.add_argument("--linesearch", choices=("armijo", "golden"), default="armijo")
    p.add_argument("--alpha0", type=float, default=1.0)
    p.add_argument("--eps-c", type=float, default=1e-6)
    p.add_argument("--eps-rank", type=float, default=None)
    p.add_argument("--kappa", type=float, default=0.5)
    p.add_argument("--mu0", type=float, default=0.01)
    p.add_argument("--ftol", type=float, default=1e-8)
    p.add_argument("--gtol", type=float, default=1e-6)
    p.add_argument("--xtol", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=1000)
    p.add_argument("--trace", dest="trace_path", default=None, help="trace output file")
    p.add_argument("--trace-format", choices=("csv", "json"), default="csv")
    p.add_argument("--x0", dest="x0_path", default=None,
                   help="file with a whitespace-separated starting point")
    return parser


def _config_from_args(args) -> RunConfig:
    names = {f.name for f in fields(RunConfig)}
    return RunConfig(**{k: v for k, v in vars(args).items() if k in names})


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_ERROR

    trace: list[TraceRecord] = []
    cfg = None
    try:
        cfg = _config_from_args(args)
        problem = cfg.build_problem()
        x0 = problem.x0 if cfg.x0_path is None else load_x0(cfg.x0_path, problem.spec.n)
        result = solve(problem.spec, x0, cfg.solve_options(), trace=trace)
    except (FeasoptError, ValueError, KeyError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"feasopt: error: {msg}", file=sys.stderr)
        if cfg is not None and cfg.trace_path and trace:
            write_trace(trace, cfg.trace_path, cfg.trace_format)
        return EXIT_ERROR

    if cfg.trace_path:
        write_trace(result.trace, cfg.trace_path, cfg.trace_format)
    feas = result.trace[-1].constraint_viol_inf if result.trace else float("nan")
    print(f"status={result.status} iterations={result.iterations} "
          f"f_final={result.f_final:.12g} proj_grad_norm={result.proj_grad_norm:.3e} "
          f"feasibility={feas:.3e}")
    if result.status == MAX_ITER:
        return EXIT_MAX_ITER
    if result.status == LINE_SEARCH_FAILED:
        return EXIT_LINE_SEARCH
    return EXIT_OK


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
