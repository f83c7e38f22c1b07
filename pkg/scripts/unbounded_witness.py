"""Search for moment vectors with very negative objective in a sparse relaxation.

For each target ``T`` the script asks an external solver (cvxpy/Clarabel) for
any y with ``<f, y> <= -T`` satisfying the relaxation's constraints, then
re-checks the returned y with sparsecop's own moment and localizing matrices.
A verified witness shows that the relaxation value is at most ``-T``.

    python3 scripts/unbounded_witness.py two_cubic_blocks 2 --targets 1e2 1e3 1e4 1e5
"""

import argparse
import json

import cvxpy as cp
import numpy as np

from sparsecop.basis import MomentVector
from sparsecop.instances import EXAMPLES
from sparsecop.relax import build_moment_program, build_relaxation
from sparsecop.sdp import svec_len

from cvxpy_bridge import _svec_to_vec


def find_witness(prog, T):
    x = cp.Variable(prog.dim)
    cons = [prog.A @ x == prog.b, prog.c @ x <= -T]
    lo = prog.n_free
    if prog.n_nonneg:
        cons.append(x[lo:lo + prog.n_nonneg] >= 0)
    for o, s in zip(prog.psd_offsets(), prog.psd_sides):
        X = cp.reshape(_svec_to_vec(s) @ x[o:o + svec_len(s)], (s, s), order="F")
        cons.append(0.5 * (X + X.T) >> 0)
    problem = cp.Problem(cp.Minimize(0), cons)
    try:
        problem.solve(solver="CLARABEL")
    except cp.SolverError:
        return None, "solver error"
    return (None if x.value is None else np.asarray(x.value)), problem.status


def verify(relax, yvals, tol=1e-6):
    """Independent check of y against the relaxation's constraints."""
    inst = relax.instance
    y = MomentVector(relax.labelset, yvals)
    u = y.project_point()
    cons = inst.constraints
    eq = float(np.max(np.abs(cons.A @ u - cons.b))) if cons.m1 else 0.0
    ineq = float(np.max(np.maximum(cons.d - cons.C @ u, 0.0))) if cons.m2 else 0.0
    min_eig = min(float(np.linalg.eigvalsh(g.matrix.instantiate(y)).min()) for g in relax.psd)
    value = y.riesz(relax.objective)
    ok = abs(y.y0 - 1.0) <= tol and eq <= tol and ineq <= tol and min_eig >= -tol
    return {"value": value, "y0": y.y0, "eq_residual": eq, "ineq_violation": ineq,
            "min_eigenvalue": min_eig, "verified": ok}


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("instance", choices=sorted(EXAMPLES))
    ap.add_argument("order", type=int)
    ap.add_argument("--targets", type=float, nargs="+", default=[1e2, 1e3, 1e4, 1e5])
    ap.add_argument("--save", metavar="JSON", help="write the last verified witness y here")
    args = ap.parse_args()
    relax = build_relaxation(EXAMPLES[args.instance](), args.order)
    prog = build_moment_program(relax)
    nU = len(relax.labelset)
    saved = None
    for T in args.targets:
        xv, status = find_witness(prog, T)
        row = {"target": -T, "status": status}
        if xv is not None:
            row.update(verify(relax, xv[:nU]))
            if row["verified"]:
                saved = {"instance": args.instance, "order": args.order, **row,
                         "labels": [list(a) for a in relax.labelset.labels],
                         "y": xv[:nU].tolist()}
        print(json.dumps(row))
    if args.save and saved is not None:
        with open(args.save, "w") as fh:
            json.dump(saved, fh)


if __name__ == "__main__":
    main()
