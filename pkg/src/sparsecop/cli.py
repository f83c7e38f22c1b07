"""``sparsecop`` command line: solve, hierarchy, bench, copsos, tensor."""

from __future__ import annotations

import argparse
import json
import math
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import copsos as _copsos
from .instances import RandomInstanceSpec, random_qcqp
from .io import ProblemFileError, load_problem
from .pipeline import SCHEMA, _num, exit_code, monotone, run_hierarchy, solve_and_certify
from .poly import PolynomialSyntaxError, SparsityPattern, parse_polynomial
from .relax import relaxation_sizes
from .sdp import SolverOptions, Status
from .tensor import check_copositive, load_tensor

DENSE_CAP = 50_000


def _emit(data: dict, out: str | None) -> None:
    text = json.dumps(data, indent=1)
    if out is None or out == "-":
        print(text)
    else:
        Path(out).write_text(text + "\n")


def _fmt(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return f"{v:.6g}"


def cmd_solve(args) -> int:
    inst = load_problem(args.problem)
    rep = solve_and_certify(inst, args.order, dense=args.dense, options=SolverOptions.from_env())
    if args.json:
        _emit(rep.to_json(), args.json)
    v = rep.verdict
    print(f"{inst.name}: order {rep.order} {'dense' if args.dense else 'sparse'} "
          f"status {rep.status.value} f_smo {_fmt(rep.f_smo)} f_spa {_fmt(rep.f_spa)}")
    if v is not None:
        print(f"verdict {v.status.value} value {_fmt(v.value)}")
        for x in v.minimizers:
            print("  minimizer", np.array2string(np.asarray(x), precision=6))
    return exit_code(rep)


def cmd_hierarchy(args) -> int:
    inst = load_problem(args.problem)
    reps = run_hierarchy(inst, args.k_from, args.k_to, dense=args.dense,
                         options=SolverOptions.from_env(), certify_each=not args.no_certify)
    rows = []
    print(f"{'k':>3} {'status':>16} {'f_smo':>14} {'f_spa':>14} {'time':>8}  verdict")
    for r in reps:
        t = sum(r.timings.get(p, 0.0) for p in ("build", "solve", "certify"))
        vs = r.verdict.status.value if r.verdict is not None else "-"
        print(f"{r.order:>3} {r.status.value:>16} {_fmt(r.f_smo):>14} {_fmt(r.f_spa):>14} "
              f"{t:8.2f}  {vs}")
        rows.append(r.to_json())
    vals = [r.f_smo for r in reps if r.status == Status.OPTIMAL]
    mono = monotone(vals)
    if not mono:
        print("warning: lower bounds decrease along the hierarchy", file=sys.stderr)
    if args.json:
        _emit({"schema": SCHEMA, "instance": inst.name, "monotone": mono, "orders": rows},
              args.json)
    return 0 if all(r.status == Status.OPTIMAL for r in reps) and mono else 2


def _bench_one(spec: RandomInstanceSpec, sizes_only: bool, dense_cap: int) -> dict:
    inst = random_qcqp(spec)
    sizes = relaxation_sizes(inst, 2)
    row = {"seed": spec.seed, "sparse_dim": sizes["sparse_dim"], "dense_dim": sizes["dense_dim"]}
    if sizes_only:
        return row
    rep = solve_and_certify(inst, 2)
    row.update(status=rep.status.value, f_smo=_num(rep.f_smo),
               t_spa=rep.timings.get("build", 0.0) + rep.timings.get("solve", 0.0),
               verdict=None if rep.verdict is None else rep.verdict.status.value)
    if sizes["dense_dim"] > dense_cap:
        row["t_den"] = "oom"
    else:
        dr = solve_and_certify(inst, 2, dense=True, copsos=False)
        row.update(t_den=dr.timings.get("build", 0.0) + dr.timings.get("solve", 0.0),
                   f_den=_num(dr.f_smo))
    return row


def cmd_bench(args) -> int:
    specs = [RandomInstanceSpec(args.n, args.m, args.w, args.seed + i) for i in range(args.count)]
    try:
        sizes = relaxation_sizes(random_qcqp(specs[0]).pattern, 2) if specs else None
    except ValueError as err:
        raise ProblemFileError(str(err)) from err
    if args.jobs > 1 and not args.sizes_only:
        with ProcessPoolExecutor(args.jobs) as ex:
            rows = list(ex.map(_bench_one, specs, [False] * len(specs),
                               [args.dense_cap] * len(specs)))
    else:
        rows = [_bench_one(s, args.sizes_only, args.dense_cap) for s in specs]
    print(f"n={args.n} m={args.m} w={args.w}: dim(y_spa)={sizes['sparse_dim']} "
          f"dim(y_den)={sizes['dense_dim']}")
    summary = {"schema": SCHEMA, "n": args.n, "m": args.m, "w": args.w,
               "sparse_dim": sizes["sparse_dim"], "dense_dim": sizes["dense_dim"],
               "dense_cap": args.dense_cap, "instances": rows}
    if not args.sizes_only:
        t_spa = [r["t_spa"] for r in rows]
        t_den = [r["t_den"] for r in rows if r["t_den"] != "oom"]
        summary["t_spa_mean"] = float(np.mean(t_spa)) if t_spa else None
        summary["t_den_mean"] = float(np.mean(t_den)) if t_den else "oom"
        for r in rows:
            print(f"  seed {r['seed']}: {r['status']} f_smo {_fmt(r['f_smo'])} "
                  f"t_spa {r['t_spa']:.2f}s t_den {_fmt(r['t_den']) if r['t_den'] != 'oom' else 'oom'}"
                  f" {r['verdict']}")
        print(f"mean t_spa {_fmt(summary['t_spa_mean'])} t_den {_fmt(summary['t_den_mean']) if t_den else 'oom'}")
    if args.json:
        _emit(summary, args.json)
    return 0


def cmd_copsos(args) -> int:
    target = args.target
    if Path(target).is_file():
        inst = load_problem(target)
        pieces = list(zip(inst.pattern.blocks, inst.objectives))
    else:
        try:
            n = args.n or _guess_n(target)
            p = parse_polynomial(target, n)
        except PolynomialSyntaxError as err:
            raise ProblemFileError(f"not a file and not a polynomial: {err}") from err
        if p.degree <= 0:
            raise ProblemFileError("constant polynomial")
        pattern = SparsityPattern(n, (tuple(range(n)),))
        pieces = [(pattern.blocks[0], p)]
    results = []
    for i, (blk, f) in enumerate(pieces, 1):
        cert = _copsos.certify_block(f, blk)
        ok = cert is not None
        results.append({"block": i, "variables": [j + 1 for j in blk], "certified": ok,
                        "certificate": cert.to_json() if ok else None})
        print(f"block {i} {[j + 1 for j in blk]}: "
              f"{'certified (' + cert.method + ', residual ' + _fmt(cert.residual) + ')' if ok else 'not certified'}")
    if args.json:
        _emit({"schema": SCHEMA, "blocks": results}, args.json)
    return 0 if all(r["certified"] for r in results) else 2


def _guess_n(text: str) -> int:
    idx = [int(m) for m in re.findall(r"x(\d+)", text)]
    return max(idx) if idx else 1


def cmd_tensor(args) -> int:
    try:
        A, pattern = load_tensor(args.tensor)
    except (json.JSONDecodeError, KeyError) as err:
        raise ProblemFileError(f"{args.tensor}: {err}") from err
    res = check_copositive(A, pattern, args.order, options=SolverOptions.from_env())
    print(f"{res.verdict} value {_fmt(res.value)} lower bound {_fmt(res.lower_bound)}")
    if res.minimizer is not None:
        print("  minimizer", np.array2string(res.minimizer, precision=6))
    if args.json:
        _emit(res.to_json(), args.json)
    return 2 if res.verdict == "Unknown" else 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sparsecop",
                                 description="Sparse moment-SOS relaxations for copositive optimization.")
    sub = ap.add_subparsers(dest="command", required=True)

    def relax_flags(p):
        g = p.add_mutually_exclusive_group()
        g.add_argument("--dense", action="store_true", help="dense relaxation")
        g.add_argument("--sparse", dest="dense", action="store_false", help="sparse relaxation (default)")
        p.add_argument("--json", metavar="OUT", help="write the JSON report ('-' for stdout)")

    p = sub.add_parser("solve", help="solve one relaxation and certify it")
    p.add_argument("problem")
    p.add_argument("--order", "-k", type=int, default=None, help="relaxation order (default k0)")
    relax_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("hierarchy", help="solve a range of orders")
    p.add_argument("problem")
    p.add_argument("--from", dest="k_from", type=int, default=None)
    p.add_argument("--to", dest="k_to", type=int, default=None)
    p.add_argument("--no-certify", action="store_true", help="skip the tightness checks")
    relax_flags(p)
    p.set_defaults(func=cmd_hierarchy)

    p = sub.add_parser("bench", help="random sparse QCQP benchmark")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--w", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--sizes-only", action="store_true")
    p.add_argument("--dense-cap", type=int, default=DENSE_CAP,
                   help="skip the dense solve above this moment dimension")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--json", metavar="OUT")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("copsos", help="check cop-SOS convexity per block")
    p.add_argument("target", help="problem file or polynomial string")
    p.add_argument("--n", type=int, default=None, help="number of variables for a polynomial string")
    p.add_argument("--json", metavar="OUT")
    p.set_defaults(func=cmd_copsos)

    p = sub.add_parser("tensor", help="copositivity of a symmetric tensor")
    p.add_argument("tensor")
    p.add_argument("--order", "-k", type=int, default=None)
    p.add_argument("--json", metavar="OUT")
    p.set_defaults(func=cmd_tensor)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ProblemFileError, PolynomialSyntaxError, ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
