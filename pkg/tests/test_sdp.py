import json
import sys

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st

from sparsecop.instances import EXAMPLES
from sparsecop.relax import build_relaxation, build_sos_program
from sparsecop.sdp import (SQRT2, ConicProgram, ExternalProcessBackend, SolverOptions, Status,
                           smat, solve, svec, svec_len)


def lp_program():
    return ConicProgram(np.array([1.0]), sp.csr_matrix([[1.0]]), np.array([1.0]), n_nonneg=1)


def trace_program():
    # min trace X s.t. X11 = 1, X in S^2_+ ; svec = (X11, sqrt2 X12, X22)
    return ConicProgram(np.array([1.0, 0.0, 1.0]), sp.csr_matrix([[1.0, 0.0, 0.0]]),
                        np.array([1.0]), psd_sides=(2,))


def test_lp_sanity():
    sol = solve(lp_program())
    assert sol.status == Status.OPTIMAL
    assert sol.primal_objective == pytest.approx(1.0, abs=1e-7)


def test_psd_sanity():
    prog = trace_program()
    sol = solve(prog)
    assert sol.status == Status.OPTIMAL
    assert sol.primal_objective == pytest.approx(1.0, abs=1e-7)
    X = prog.psd_blocks(sol.x)[0]
    assert np.allclose(X, [[1, 0], [0, 0]], atol=1e-6)


def test_three_block_sos_program_value():
    relax = build_relaxation(EXAMPLES["three_block_quartic"](), 2)
    prog, _ = build_sos_program(relax)
    sol = solve(prog)
    assert sol.status == Status.OPTIMAL
    assert -sol.dual_objective == pytest.approx(4.0, abs=1e-5)


@pytest.mark.parametrize("build", [lp_program, trace_program])
def test_gap_within_tolerance(build):
    opts = SolverOptions()
    sol = solve(build(), opts)
    assert abs(sol.primal_objective - sol.dual_objective) <= \
        opts.gap_tol * (1 + abs(sol.primal_objective))


def test_repeat_solves_identical():
    relax = build_relaxation(EXAMPLES["three_block_rank_one"](), 2)
    prog, _ = build_sos_program(relax)
    a, b = solve(prog), solve(prog)
    assert a.iterations == b.iterations
    assert np.array_equal(a.x, b.x) and np.array_equal(a.y, b.y)


def test_primal_infeasible_certificate():
    prog = ConicProgram(np.array([1.0]), sp.csr_matrix([[1.0]]), np.array([-1.0]), n_nonneg=1)
    sol = solve(prog)
    assert sol.status == Status.PRIMAL_INFEASIBLE
    y = sol.certificate
    # Farkas: b.y > 0 while A^T y <= 0 on the nonnegative cone
    assert prog.b @ y > 0
    assert (prog.A.T @ y)[0] <= 1e-6 * abs(prog.b @ y)


def test_dual_infeasible_detected():
    prog = ConicProgram(np.array([-1.0, 0.0]), sp.csr_matrix([[1.0, -1.0]]), np.array([0.0]),
                        n_nonneg=2)
    assert solve(prog).status == Status.DUAL_INFEASIBLE


def test_shape_validation():
    with pytest.raises(ValueError):
        ConicProgram(np.ones(2), sp.csr_matrix(np.ones((1, 3))), np.ones(1), n_nonneg=2)


symmetric = st.integers(1, 6).flatmap(
    lambda s: st.lists(st.floats(-10, 10, allow_nan=False), min_size=s * s, max_size=s * s)
    .map(lambda v: np.array(v).reshape(s, s)).map(lambda M: M + M.T))


@given(symmetric, symmetric)
def test_svec_is_isometry(A, B):
    if A.shape != B.shape:
        B = A[::-1, ::-1].copy()
    assert svec(A) @ svec(B) == pytest.approx(np.sum(A * B), rel=1e-9, abs=1e-9)
    assert np.allclose(smat(svec(A)), A)
    assert svec(A).size == svec_len(A.shape[0])


def test_svec_scaling():
    assert np.allclose(svec(np.array([[1.0, 2.0], [2.0, 3.0]])), [1.0, 2 * SQRT2, 3.0])


def test_json_roundtrip():
    relax = build_relaxation(EXAMPLES["three_block_quartic"](), 2)
    prog, _ = build_sos_program(relax)
    back = ConicProgram.from_json(json.loads(json.dumps(prog.to_json())))
    assert (back.A != prog.A).nnz == 0
    assert np.array_equal(back.b, prog.b) and np.array_equal(back.c, prog.c)
    assert back.psd_sides == prog.psd_sides


ECHO_BACKEND = """
import json, sys
from sparsecop.sdp import ConicProgram, solve
prog = ConicProgram.from_json(json.load(open(sys.argv[1])))
sol = solve(prog)
json.dump({"status": sol.status.value, "x": sol.x.tolist(), "y": sol.y.tolist()}, open(sys.argv[2], "w"))
"""


def test_external_backend_roundtrip(tmp_path):
    script = tmp_path / "backend.py"
    script.write_text(ECHO_BACKEND)
    sol = solve(trace_program(), backend=ExternalProcessBackend([sys.executable, str(script)]))
    assert sol.status == Status.OPTIMAL
    assert sol.primal_objective == pytest.approx(1.0, abs=1e-7)
    assert sol.residuals["primal_feasibility"] < 1e-7


def test_env_tolerance_override(monkeypatch):
    monkeypatch.setenv("SPARSECOP_TOL", "1e-5")
    opts = SolverOptions.from_env()
    assert opts.feas_tol == opts.gap_tol == 1e-5
    assert SolverOptions.from_env(feas_tol=1e-9).feas_tol == 1e-9
