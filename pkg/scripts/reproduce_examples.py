"""Solve every worked example and print value, status, verdict and minimizers.

    python3 scripts/reproduce_examples.py            # all examples at their minimal order
    python3 scripts/reproduce_examples.py --dense    # also the dense baseline where it is small
    python3 scripts/reproduce_examples.py --json out.json
"""

import argparse
import json
import time
from pathlib import Path

import numpy as np

from sparsecop.copsos import certify_block
from sparsecop.instances import EXAMPLES
from sparsecop.pipeline import solve_and_certify
from sparsecop.relax import relaxation_sizes
from sparsecop.tensor import check_copositive, load_tensor

ORDERS = {"convex_chain": 3, "star_sextic": 3}
DENSE_LIMIT = 20_000
TENSOR = Path(__file__).resolve().parent.parent / "problems" / "tensor_chain4.json"


def run(name, dense):
    inst = EXAMPLES[name]()
    k = ORDERS.get(name, inst.k0)
    t0 = time.perf_counter()
    rep = solve_and_certify(inst, k, dense=dense)
    dt = time.perf_counter() - t0
    v = rep.verdict
    row = {"instance": name, "order": k, "relaxation": "dense" if dense else "sparse",
           "status": rep.status.value, "f_smo": rep.f_smo, "f_spa": rep.f_spa,
           "verdict": None if v is None else v.status.value,
           "minimizers": [] if v is None else [x.tolist() for x in v.minimizers],
           "seconds": dt}
    print(f"{name:22s} k={k} {row['relaxation']:6s} {row['status']:16s} "
          f"f_smo={rep.f_smo: .6g}  {row['verdict'] or '-':24s} {dt:6.2f}s")
    for x in row["minimizers"]:
        print(" " * 26, np.array2string(np.asarray(x), precision=5))
    return row


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--dense", action="store_true")
    ap.add_argument("--json")
    args = ap.parse_args()
    rows = []
    for name in EXAMPLES:
        rows.append(run(name, False))
        if args.dense:
            inst = EXAMPLES[name]()
            k = ORDERS.get(name, inst.k0)
            if relaxation_sizes(inst, k)["dense_dim"] <= DENSE_LIMIT:
                rows.append(run(name, True))

    inst = EXAMPLES["convex_chain"]()
    certs = [certify_block(f, b) for f, b in zip(inst.objectives, inst.pattern.blocks)]
    print("convex_chain blocks cop-SOS certified:",
          [c is not None for c in certs], [c.method for c in certs if c is not None])

    A, pattern = load_tensor(TENSOR)
    res = check_copositive(A, pattern)
    print(f"tensor_chain4: {res.verdict} value {res.value:.6f} minimizer "
          f"{np.array2string(res.minimizer, precision=4)}")
    rows.append({"instance": "tensor_chain4", **res.to_json()})
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=1, default=float)


if __name__ == "__main__":
    main()
