"""Hierarchy tables for the bilinear cycle and the two cubic blocks, and the size table.

    python3 scripts/reproduce_tables.py hierarchy               # both hierarchies
    python3 scripts/reproduce_tables.py sizes                   # sparse/dense moment dimensions
    python3 scripts/reproduce_tables.py sizes --solve --count 3 # plus sparse solve times
"""

import argparse
import time

import numpy as np

from sparsecop.instances import (RandomInstanceSpec, bilinear_cycle, random_qcqp,
                                 two_cubic_blocks, window_pattern)
from sparsecop.pipeline import solve_and_certify
from sparsecop.relax import relaxation_sizes, solve_relaxation

REFERENCE = {
    "bilinear_cycle": {1: -3.3721, 2: -3.8006, 3: -2.4143, 4: -0.0689, 5: -0.0040},
    "two_cubic_blocks": {2: -344.1471, 3: -0.6765, 4: -0.0033},
}
DENSE = {"bilinear_cycle": 1, "two_cubic_blocks": 2}
SIZE_ROWS = [
    (20, 20, 3), (20, 10, 5), (20, 10, 6), (30, 30, 4), (30, 15, 6), (30, 15, 8),
    (50, 50, 5), (50, 25, 6), (50, 25, 8), (80, 80, 3), (80, 40, 5), (80, 40, 6),
    (100, 50, 3), (100, 50, 4), (100, 50, 5),
]


def hierarchy():
    for inst in (bilinear_cycle(), two_cubic_blocks()):
        print(f"\n{inst.name}")
        print(f"{'k':>3} {'status':>16} {'f_smo':>14} {'reference':>12} {'time':>7}")
        for k, ref in REFERENCE[inst.name].items():
            if k < inst.k0:
                print(f"{k:>3} {'below k0':>16} {'-':>14} {ref:>12.4f}")
                continue
            t0 = time.perf_counter()
            r = solve_relaxation(inst, k)
            print(f"{k:>3} {r.status.value:>16} {r.f_smo:>14.6g} {ref:>12.4f} "
                  f"{time.perf_counter() - t0:>6.2f}s")
        kd = DENSE[inst.name]
        rep = solve_and_certify(inst, kd, dense=True, copsos=False)
        x = rep.verdict.minimizers[0] if rep.verdict and rep.verdict.minimizers else rep.point
        print(f"dense k={kd}: {rep.status.value} f_smo {rep.f_smo:.3e} point "
              f"{np.array2string(np.asarray(x), precision=4)}")


def sizes(solve, count):
    print(f"{'n':>4} {'m':>4} {'w':>3} {'dim(y_spa)':>11} {'dim(y_den)':>11}"
          + (f" {'t_spa':>8}  verdicts" if solve else ""))
    for n, m, w in SIZE_ROWS:
        s = relaxation_sizes(window_pattern(n, m, w), 2)
        line = f"{n:>4} {m:>4} {w:>3} {s['sparse_dim']:>11} {s['dense_dim']:>11}"
        if solve:
            times, verdicts = [], []
            for seed in range(count):
                rep = solve_and_certify(random_qcqp(RandomInstanceSpec(n, m, w, seed)), 2)
                times.append(rep.timings["build"] + rep.timings["solve"])
                verdicts.append(rep.verdict.status.value if rep.verdict else rep.status.value)
            line += f" {np.mean(times):>7.2f}s  {verdicts}"
        print(line, flush=True)


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("table", choices=["hierarchy", "sizes"])
    ap.add_argument("--solve", action="store_true", help="also solve random instances (sizes)")
    ap.add_argument("--count", type=int, default=1)
    args = ap.parse_args()
    if args.table == "hierarchy":
        hierarchy()
    else:
        sizes(args.solve, args.count)


if __name__ == "__main__":
    main()
