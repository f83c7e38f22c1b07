"""External SDP backend: solve a sparsecop conic program JSON with cvxpy.

Usage as a backend command::

    python3 scripts/cvxpy_bridge.py [--solver CLARABEL] problem.json solution.json

or from Python::

    from sparsecop.sdp import ExternalProcessBackend
    backend = ExternalProcessBackend(["python3", "scripts/cvxpy_bridge.py", "--solver", "SCS"])

The program is ``min c.x  s.t.  A x = b``, ``x`` in free x nonneg x PSD (svec,
upper triangle row-major, off-diagonals scaled by sqrt 2).
"""

import argparse
import json
import sys

import cvxpy as cp
import numpy as np
import scipy.sparse as sp

from sparsecop.sdp import SQRT2, ConicProgram, svec_len

STATUS = {
    cp.OPTIMAL: "Optimal",
    cp.OPTIMAL_INACCURATE: "NumericalFailure",
    cp.INFEASIBLE: "PrimalInfeasible",
    cp.INFEASIBLE_INACCURATE: "PrimalInfeasible",
    cp.UNBOUNDED: "DualInfeasible",
    cp.UNBOUNDED_INACCURATE: "DualInfeasible",
    cp.USER_LIMIT: "MaxIterations",
}


def _svec_to_vec(s: int) -> sp.csr_matrix:
    """Sparse map from svec to the column-major full matrix."""
    iu, ju = np.triu_indices(s)
    scale = np.where(iu == ju, 1.0, 1.0 / SQRT2)
    k = np.arange(iu.size)
    rows = np.concatenate([iu + s * ju, ju + s * iu])
    cols = np.concatenate([k, k])
    vals = np.concatenate([scale, scale])
    off = np.concatenate([np.ones(k.size, bool), iu != ju])
    return sp.csr_matrix((vals[off], (rows[off], cols[off])), shape=(s * s, svec_len(s)))


def solve_conic(prog: ConicProgram, solver: str | None = None, **kw) -> dict:
    x = cp.Variable(prog.dim)
    cons = [prog.A @ x == prog.b]
    lo = prog.n_free
    if prog.n_nonneg:
        cons.append(x[lo:lo + prog.n_nonneg] >= 0)
    for o, s in zip(prog.psd_offsets(), prog.psd_sides):
        X = cp.reshape(_svec_to_vec(s) @ x[o:o + svec_len(s)], (s, s), order="F")
        cons.append(0.5 * (X + X.T) >> 0)
    problem = cp.Problem(cp.Minimize(prog.c @ x), cons)
    try:
        problem.solve(solver=solver, **kw)
    except cp.SolverError as err:
        print(f"solver error: {err}", file=sys.stderr)
        return {"status": "NumericalFailure", "x": None, "y": None}
    status = STATUS.get(problem.status, "NumericalFailure")
    if x.value is None or cons[0].dual_value is None:
        return {"status": status, "x": None, "y": None}
    xv = np.asarray(x.value, dtype=float)
    y = np.asarray(cons[0].dual_value, dtype=float)
    # cvxpy's sign convention for equality duals varies by reduction; pick the one matching c.x
    if abs(prog.b @ -y - prog.c @ xv) < abs(prog.b @ y - prog.c @ xv):
        y = -y
    return {"status": status, "x": xv.tolist(), "y": y.tolist(),
            "iterations": int(problem.solver_stats.num_iters or 0)}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("problem")
    ap.add_argument("solution")
    ap.add_argument("--solver", default="CLARABEL")
    args = ap.parse_args(argv)
    with open(args.problem) as fh:
        prog = ConicProgram.from_json(json.load(fh))
    out = solve_conic(prog, args.solver)
    with open(args.solution, "w") as fh:
        json.dump(out, fh)


if __name__ == "__main__":
    main()
