"""Acceptance criteria, one test per criterion.

Each test records its sub-checks; ``conftest.pytest_terminal_summary``
prints one PASS/FAIL line per criterion at the end of the run.
"""

import itertools
import math
import time
from pathlib import Path

import numpy as np
import pytest

from sparsecop.basis import union_label_set
from sparsecop.copsos import certify_block, jensen_gap
from sparsecop.extract import Verdict
from sparsecop.instances import (EXAMPLES, RandomInstanceSpec, bilinear_cycle,
                                 chain_two_minimizers, convex_chain, random_qcqp, star_sextic,
                                 three_block_quartic, three_block_rank_one, two_cubic_blocks,
                                 univariate_not_tight, window_pattern)
from sparsecop.moment import localizing_matrix, moment_matrix
from sparsecop.pipeline import solve_and_certify
from sparsecop.poly import (LinearConstraints, Polynomial, ProblemInstance, SparsityPattern)
from sparsecop.relax import relaxation_sizes, solve_relaxation
from sparsecop.sdp import Status
from sparsecop.tensor import check_copositive, load_tensor

PROBLEMS = Path(__file__).parent.parent / "problems"

RESULTS: dict[int, tuple[bool, str]] = {}


def record(n, checks):
    """``checks`` is a list of ``(label, ok, detail)``; fails the test if any check fails."""
    ok = all(c[1] for c in checks)
    detail = "; ".join(f"{lab}: {'ok' if good else 'FAIL'} ({info})" for lab, good, info in checks)
    RESULTS[n] = (ok, detail)
    assert ok, detail


def near(x, target, tol):
    return x is not None and math.isfinite(x) and abs(x - target) <= tol


def test_criterion_01_rank_one_example():
    t0 = time.perf_counter()
    rep = solve_and_certify(three_block_quartic(), 2)
    dt = time.perf_counter() - t0
    v = rep.verdict
    x = v.minimizers[0] if v and v.minimizers else None
    record(1, [
        ("value 4", near(rep.f_smo, 4.0, 1e-5), f"{rep.f_smo:.8f}"),
        ("ranks 1", v is not None and v.ranks == [1, 1, 1], f"{v.ranks if v else None}"),
        ("minimizer", x is not None and np.max(np.abs(x - 1)) <= 1e-4, f"{x}"),
        ("runtime < 5 s", dt < 5, f"{dt:.2f} s"),
    ])


def test_criterion_02_two_minimizers():
    t0 = time.perf_counter()
    rep = solve_and_certify(chain_two_minimizers(), 2)
    dt = time.perf_counter() - t0
    v = rep.verdict
    mins = sorted(tuple(float(c) for c in np.round(x, 6)) for x in v.minimizers)
    atoms_ok = weights_ok = len(v.measures) == 3
    for m in v.measures:
        pts = sorted(map(tuple, m.points))
        # atoms come from the trace-penalized re-solve; see the ledger for the 2e-2 tolerance
        atoms_ok &= len(pts) == 2 and np.allclose(pts, [(1, 2), (2, 1)], atol=2e-2)
        weights_ok &= np.allclose(m.weights, 0.5, atol=1e-3)
    record(2, [
        ("value -39", near(rep.f_smo, -39.0, 1e-4), f"{rep.f_smo:.8f}"),
        ("atoms {(1,2),(2,1)}", atoms_ok, f"{[m.points.round(4).tolist() for m in v.measures]}"),
        ("weights 1/2", weights_ok, f"{[m.weights.round(6).tolist() for m in v.measures]}"),
        ("both minimizers", mins == [(1, 2, 1, 2), (2, 1, 2, 1)], f"{mins}"),
        ("TightByMatching", v.status == Verdict.TIGHT_BY_MATCHING, v.status.value),
        ("runtime < 5 s", dt < 5, f"{dt:.2f} s"),
    ])


def test_criterion_03_not_tight_control():
    inst = univariate_not_tight()
    rep = solve_and_certify(inst, 2)
    v = rep.verdict
    zero = [c for c in v.candidates if c["feasible"] and abs(c["point"][0]) <= 1e-6]
    grid = np.linspace(0.0, 0.5, 500_001)
    f_grid = float(np.min(grid ** 4 - 3 * grid ** 2))
    record(3, [
        ("value -1", near(rep.f_smo, -1.0, 1e-5), f"{rep.f_smo:.8f}"),
        ("candidate 0 with f = 0", bool(zero) and abs(zero[0]["objective"]) <= 1e-9,
         f"{zero[0]['objective'] if zero else None}"),
        ("Inconclusive", v.status == Verdict.INCONCLUSIVE, v.status.value),
        ("grid min -11/16", abs(f_grid + 11 / 16) <= 1e-9, f"{f_grid:.10f}"),
    ])


def test_criterion_04_rank_one_with_inequalities():
    rep = solve_and_certify(three_block_rank_one(), 2)
    v = rep.verdict
    x = v.minimizers[0] if v.minimizers else None
    want = np.array([0.3567, 0.3567, 0.2867])
    record(4, [
        ("value 0.1201", near(rep.f_smo, 0.1201, 1e-3), f"{rep.f_smo:.6f}"),
        ("minimizer", x is not None and np.max(np.abs(x - want)) <= 2e-3, f"{x}"),
        ("TightRankOne", v.status == Verdict.TIGHT_RANK_ONE, v.status.value),
    ])


def test_criterion_05_convex_blocks():
    inst = convex_chain()
    certs = [certify_block(f, blk) for f, blk in zip(inst.objectives, inst.pattern.blocks)]
    rep = solve_and_certify(inst, 3)
    u = rep.point
    feas = u is not None and inst.constraints.is_feasible(u, 1e-6)
    fu = inst.evaluate(u) if u is not None else math.nan
    record(5, [
        ("four blocks certified", all(c is not None for c in certs),
         f"{[None if c is None else c.method for c in certs]}"),
        ("k=3 value 0.0008", near(rep.f_smo, 0.0008, 2e-3),
         f"{rep.f_smo:.6f} ({rep.status.value})"),
        ("point feasible", feas, f"{inst.constraints.violation(u)}"),
        ("objective near value", near(fu, rep.f_smo, 2e-3), f"f(x) = {fu:.6f}"),
    ])


def _table_check(label, got, want, tol):
    return (label, near(got, want, tol), f"{got:.6g} vs {want}")


def test_criterion_06_bilinear_cycle_table():
    inst = bilinear_cycle()
    checks = []
    for k, want in zip((2, 3, 4, 5), (-3.8006, -2.4143, -0.0689, -0.0040)):
        r = solve_relaxation(inst, k)
        checks.append(_table_check(f"sparse k={k} [{r.status.value}]", r.f_smo, want,
                                   max(1e-2, 0.01 * abs(want))))
    d = solve_and_certify(inst, 1, dense=True)
    x = d.verdict.minimizers[0] if d.verdict and d.verdict.minimizers else d.point
    checks.append(_table_check("dense k=1", d.f_smo, 0.0, 1e-5))
    checks.append(("dense minimizer", x is not None and np.max(np.abs(x - [3, 0, 0, 2, 0])) <= 1e-3,
                   f"{x}"))
    record(6, checks)


def test_criterion_07_two_cubic_blocks_table():
    inst = two_cubic_blocks()
    checks = []
    for k, want, tol in ((2, -344.15, 1.0), (3, -0.6765, 1e-2), (4, -0.0033, 2e-3)):
        r = solve_relaxation(inst, k)
        checks.append(_table_check(f"sparse k={k} [{r.status.value}]", r.f_smo, want, tol))
    d = solve_relaxation(inst, 2, dense=True)
    checks.append(_table_check("dense k=2", d.f_smo, 0.0, 1e-4))
    record(7, checks)


@pytest.mark.slow
def test_criterion_08_star_sparse_vs_dense():
    inst = star_sextic()
    s = solve_relaxation(inst, 3)
    d = solve_relaxation(inst, 3, dense=True)
    record(8, [
        ("sparse k=3 in [-1e-3, 1e-3]", -1e-3 <= s.f_smo <= 1e-3,
         f"{s.f_smo:.3e} ({s.status.value})"),
        ("sparse <= dense + 1e-6", s.f_smo <= d.f_smo + 1e-6, f"{s.f_smo:.3e} <= {d.f_smo:.3e}"),
        ("dense k=3 in [-1e-4, 1e-3]", -1e-4 <= d.f_smo <= 1e-3,
         f"{d.f_smo:.3e} ({d.status.value})"),
    ])


def test_criterion_09_tensor_copositivity():
    A, pattern = load_tensor(PROBLEMS / "tensor_chain4.json")
    res = check_copositive(A, pattern)
    x = res.minimizer
    want = np.array([0.2843, 0.2157, 0.2157, 0.2843])
    record(9, [
        ("value 0.0164", near(res.value, 0.0164, 1e-3), f"{res.value}"),
        ("Copositive", res.verdict == "Copositive", res.verdict),
        ("minimizer", x is not None and np.max(np.abs(x - want)) <= 2e-3, f"{x}"),
    ])


TABLE3 = [
    (20, 20, 3, 401), (20, 10, 5, 911), (20, 10, 6, 1401), (30, 30, 4, 1051),
    (30, 15, 6, 2101), (30, 15, 8, 4276), (50, 50, 5, 2801), (50, 25, 6, 3501),
    (50, 25, 8, 7126), (80, 80, 3, 801), (80, 40, 5, 3641), (80, 40, 6, 5601),
    (100, 50, 3, 1501), (100, 50, 4, 2751), (100, 50, 5, 4551),
]
DENSE_DIMS = {20: 10626, 30: 46376, 50: 316251, 80: 1929501, 100: 4598126}


def test_criterion_10_table_sizes():
    checks = []
    dense = {}
    for n, m, w, want in TABLE3:
        got = relaxation_sizes(window_pattern(n, m, w), 2)
        checks.append((f"({n},{m},{w})", got["sparse_dim"] == want,
                       f"{got['sparse_dim']} vs {want}"))
        dense.setdefault(n, set()).add(got["dense_dim"])
    for n, want in DENSE_DIMS.items():
        checks.append((f"dense n={n}", dense[n] == {want} and want == math.comb(n + 4, 4),
                       f"{sorted(dense[n])}"))
    record(10, checks)


def test_criterion_11_random_qcqp():
    checks = []
    for seed in range(10):
        inst = random_qcqp(RandomInstanceSpec(20, 10, 5, seed))
        t0 = time.perf_counter()
        rep = solve_and_certify(inst, 2)
        dt = time.perf_counter() - t0
        t_solve = rep.timings["build"] + rep.timings["solve"]
        if rep.status != Status.OPTIMAL:
            checks.append((f"seed {seed}", False, rep.status.value))
            continue
        u = rep.point
        viol = max(inst.constraints.violation(u).values())
        gap = inst.evaluate(u) - rep.f_smo
        jg = min(jensen_gap(f, rep.result.y) for f in inst.objectives)
        ok = (viol <= 1e-6 and gap <= 1e-5 * (1 + abs(rep.f_smo)) and jg >= -1e-7
              and t_solve < 30)
        checks.append((f"seed {seed}", ok,
                       f"viol {viol:.1e}, f(pi)-f {gap:.1e}, jensen {jg:.1e}, "
                       f"solve {t_solve:.1f} s (total {dt:.1f} s), {rep.verdict.status.value}"))
    record(11, checks)


# --------------------------------------------------------------------------
# grid oracle


def _eval_terms(p: Polynomial, X: np.ndarray) -> np.ndarray:
    """Independent evaluation of ``p`` at the rows of ``X``."""
    out = np.zeros(X.shape[0])
    for alpha, c in p.terms.items():
        out += c * np.prod(X ** np.array(alpha), axis=1)
    return out


def grid_minimum(p: Polynomial, n: int, hi: float = 1.0) -> float:
    axes = [np.linspace(0.0, hi, int(round(hi / 1e-2)) + 1)] * n
    X = np.array(list(itertools.product(*axes)))
    vals = _eval_terms(p, X)
    best = X[np.argsort(vals)[:5]]
    f_best = float(vals.min())
    for step, half in ((1e-3, 1e-2), (1e-4, 1e-3)):
        centers, best_next = best, []
        for c in centers:
            loc = [np.clip(np.arange(ci - half, ci + half + step / 2, step), 0.0, hi) for ci in c]
            Y = np.array(list(itertools.product(*loc)))
            v = _eval_terms(p, Y)
            i = int(np.argmin(v))
            f_best = min(f_best, float(v[i]))
            best_next.append(Y[i])
        best = np.array(best_next)
    return f_best


def _oracle_instance(seed):
    rng = np.random.default_rng(1000 + seed)
    n = [1, 2, 2, 3][seed % 4]
    blocks = {1: [[1]], 2: [[1, 2]], 3: [[1, 2], [2, 3]]}[n]
    if n == 2 and seed % 8 == 2:
        blocks = [[1], [2]]
    pattern = SparsityPattern.from_one_based(n, blocks)
    pieces = []
    for blk in pattern.blocks:
        terms = {}
        for j in blk:
            e = [0] * n
            e[j] = 4
            terms[tuple(e)] = rng.uniform(0.5, 2.0)
        for d in (1, 2, 3):
            for combo in itertools.combinations_with_replacement(blk, d):
                if rng.random() < 0.6:
                    e = [0] * n
                    for j in combo:
                        e[j] += 1
                    terms[tuple(e)] = terms.get(tuple(e), 0.0) + rng.uniform(-3, 3)
        pieces.append(Polynomial(n, terms))
    cons = LinearConstraints.build(n, C=-np.eye(n), d=-np.ones(n))
    return ProblemInstance(pattern, tuple(pieces), cons, f"oracle{seed}")


def test_criterion_12_grid_oracle():
    checks = []
    for seed in range(20):
        inst = _oracle_instance(seed)
        f_grid = grid_minimum(inst.objective, inst.n)
        parts = []
        ok = True
        for k in (2, 3):
            rep = solve_and_certify(inst, k)
            lower = rep.f_smo <= f_grid + 1e-4
            tight = rep.verdict is not None and rep.verdict.tight
            equal = (not tight) or abs(rep.f_smo - f_grid) <= 5e-3
            ok &= lower and equal
            parts.append(f"k={k} {rep.f_smo:.5f} "
                         f"{rep.verdict.status.value if rep.verdict else rep.status.value}")
        checks.append((f"#{seed} n={inst.n}", ok, f"grid {f_grid:.5f}, " + ", ".join(parts)))
    record(12, checks)


# --------------------------------------------------------------------------
# structure and weak duality


def _labels(M, ls):
    return [["".join(map(str, ls.labels[next(iter(M.entry(i, j)))])) for j in range(M.size)]
            for i in range(M.size)]


def test_criterion_13_layouts_and_weak_duality():
    pat = SparsityPattern.from_one_based(4, [[1, 2], [2, 3, 4]])
    ls2, ls4 = union_label_set(pat, 2), union_label_set(pat, 4)
    M = _labels(moment_matrix((0, 1), 1, ls2), ls2)
    L = _labels(localizing_matrix(Polynomial.variable(4, 1), (1, 2, 3), 2, ls4), ls4)
    checks = [
        ("M layout", M == [["0000", "1000", "0100"], ["1000", "2000", "1100"],
                           ["0100", "1100", "0200"]], f"{M}"),
        ("L layout", L == [["0100", "0200", "0110", "0101"], ["0200", "0300", "0210", "0201"],
                           ["0110", "0210", "0120", "0111"], ["0101", "0201", "0111", "0102"]],
         f"{L}"),
    ]
    solved = skipped = 0
    worst = -math.inf
    runs = [(f, k, False) for f in EXAMPLES.values() for k in (None, "next")]
    runs += [(bilinear_cycle, 1, True), (two_cubic_blocks, 2, True)]
    runs += [(lambda s=s: random_qcqp(RandomInstanceSpec(20, 10, 5, s)), 2, False)
             for s in range(3)]
    for factory, k, dense in runs:
        inst = factory()
        order = inst.k0 if k is None else inst.k0 + 1 if k == "next" else k
        r = solve_relaxation(inst, order, dense=dense)
        if r.status != Status.OPTIMAL:
            # no certified primal-dual pair to compare
            skipped += 1
            continue
        solved += 1
        worst = max(worst, (r.f_spa - r.f_smo) / (1 + abs(r.f_smo)))
    checks.append(("weak duality", worst <= 1e-6,
                   f"max (f_spa - f_smo)/(1+|f_smo|) = {worst:.2e} over {solved} optimal solves, "
                   f"{skipped} non-optimal skipped"))
    record(13, checks)
