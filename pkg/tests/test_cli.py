import json

import numpy as np
import pytest

from feasopt.cli import load_x0, read_trace, run, write_trace
from feasopt.solver import TRACE_FIELDS, TraceRecord

HEADER = ("iter,f,proj_grad_norm,constraint_viol_inf,step_norm,alpha,direction_kind,cg_iters,"
          "retract_inner_iters,cum_f_evals,cum_grad_evals,cum_jac_evals,cum_w_actions")


def _record(i=0, f=0.1):
    return TraceRecord(i, f, 1 / 3, 2.0**-60, np.pi, 0.5, "newton", 3, 4, 5, 6, 7, 8)


def test_empty_trace_is_header_only(tmp_path):
    path = tmp_path / "t.csv"
    write_trace([], path)
    assert path.read_text() == HEADER + "\n"


def test_one_record_csv(tmp_path):
    path = tmp_path / "t.csv"
    write_trace([_record()], path)
    lines = path.read_text().splitlines()
    assert len(lines) == 2 and len(lines[1].split(",")) == 13


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_round_trip(tmp_path, fmt):
    rng = np.random.Generator(np.random.PCG64(0))
    records = [_record(i, float(rng.standard_normal()) * 10.0 ** rng.integers(-20, 20))
               for i in range(5)]
    path = tmp_path / f"t.{fmt}"
    write_trace(records, path, fmt)
    assert read_trace(path, fmt) == records


def test_json_keys(tmp_path):
    path = tmp_path / "t.json"
    write_trace([_record()], path, "json")
    data = json.loads(path.read_text())
    assert tuple(data[0]) == TRACE_FIELDS


def test_solve_rayleigh_diag_writes_trace(tmp_path, capsys):
    path = tmp_path / "out.csv"
    code = run(["solve", "--problem", "rayleigh-diag", "--n", "100", "--direction", "newton",
                "--retraction", "projection", "--trace", str(path)])
    out = capsys.readouterr().out
    assert code == 0
    assert "status=converged" in out and "feasibility=" in out
    assert len(read_trace(path)) <= 15


def test_solve_sphere_linear_quasi_newton(capsys):
    code = run(["solve", "--problem", "sphere-linear", "--n", "1000",
                "--retraction", "quasi-newton"])
    out = capsys.readouterr().out
    assert code == 0
    pg = float(out.split("proj_grad_norm=")[1].split()[0])
    assert pg <= 1e-6


def test_unknown_problem(capsys):
    assert run(["solve", "--problem", "foo"]) == 1
    err = capsys.readouterr().err
    assert "rayleigh-diag" in err and "sphere-linear" in err


def test_usage_error():
    assert run(["solve"]) == 1
    assert run([]) == 1


def test_max_iter_exit_code_and_trace(tmp_path):
    path = tmp_path / "t.csv"
    assert run(["solve", "--problem", "rayleigh-diag", "--n", "20", "--max-iter", "1",
                "--trace", str(path)]) == 2
    assert len(read_trace(path)) == 2


def test_identical_runs_identical_csv(tmp_path):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for p in paths:
        run(["solve", "--problem", "rayleigh-sparse", "--n", "60", "--density", "0.1",
             "--seed", "3", "--trace", str(p)])
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_x0_file(tmp_path, capsys):
    x0 = tmp_path / "x0.txt"
    x0.write_text("0 0\n0.6\n0.8\n")
    assert run(["solve", "--problem", "rayleigh-diag", "--n", "4", "--x0", str(x0)]) == 0
    assert load_x0(x0, 4).tolist() == [0, 0, 0.6, 0.8]
    with pytest.raises(ValueError):
        load_x0(x0, 3)
    bad = tmp_path / "bad.txt"
    bad.write_text("1 2 3")
    assert run(["solve", "--problem", "rayleigh-diag", "--n", "4", "--x0", str(bad)]) == 1


def test_infeasible_start_exit_code(tmp_path):
    x0 = tmp_path / "x0.txt"
    x0.write_text("3 0")
    assert run(["solve", "--problem", "degenerate-cos", "--x0", str(x0)]) == 1
