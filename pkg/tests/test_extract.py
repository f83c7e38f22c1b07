import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sparsecop.basis import MomentVector, union_label_set
from sparsecop.extract import (ExtractionFailed, Verdict, extract_atoms,
                               flat_truncation_detect, match_support_points, numeric_rank,
                               reconstruction_residual, verify_decomposition_identity)
from sparsecop.extract import AtomicMeasure
from sparsecop.instances import (chain_two_minimizers, three_block_quartic,
                                 three_block_rank_one, univariate_not_tight)
from sparsecop.pipeline import solve_and_certify
from sparsecop.poly import LinearConstraints, SparsityPattern, parse_polynomial


@pytest.mark.parametrize("M,expected", [
    (np.zeros((3, 3)), 0),
    (np.eye(3), 3),
    (np.outer([1, 2, 3], [1, 2, 3]), 1),
    (np.diag([1.0, 1e-8, 0.0]), 1),
    (np.diag([1.0, 1e-5, 0.0]), 2),
])
def test_numeric_rank(M, expected):
    assert numeric_rank(M) == expected


DENSE2 = SparsityPattern.dense(2)


@pytest.mark.parametrize("pts,wts", [
    ([[1.0, 2.0]], [1.0]),
    ([[1.0, 2.0], [2.0, 1.0]], [0.5, 0.5]),
    ([[0.0, 0.0], [1.0, 3.0], [2.5, 0.5]], [0.2, 0.3, 0.5]),
])
def test_synthetic_atoms_recovered(pts, wts):
    ls = union_label_set(DENSE2, 4)
    y = MomentVector.from_atoms(ls, wts, pts)
    assert flat_truncation_detect(y, (0, 1), 1, 2) is not None
    mu = extract_atoms(y, (0, 1), 2)
    assert mu.rank == len(pts)
    order = np.lexsort(mu.points.T[::-1])
    got = mu.points[order]
    want = np.array(pts)[np.lexsort(np.array(pts).T[::-1])]
    np.testing.assert_allclose(got, want, atol=1e-8)
    np.testing.assert_allclose(np.sort(mu.weights), np.sort(wts), atol=1e-8)
    assert reconstruction_residual(y, mu) < 1e-8


@given(st.lists(st.tuples(st.floats(0, 3), st.floats(0, 3)), min_size=1, max_size=3, unique=True),
       st.integers(0, 10 ** 6))
def test_extracted_atoms_reproduce_moments(pts, seed):
    pts = np.array(pts)
    if len(pts) > 1 and min(np.linalg.norm(a - b) for i, a in enumerate(pts)
                            for b in pts[i + 1:]) < 0.2:
        return
    w = np.random.default_rng(seed).uniform(0.2, 1.0, len(pts))
    w /= w.sum()
    y = MomentVector.from_atoms(union_label_set(DENSE2, 4), w, pts)
    try:
        mu = extract_atoms(y, (0, 1), 2)
    except ExtractionFailed:
        # three collinear points need a degree-2 pivot; not flat at order 2
        assert len(pts) == 3
        return
    assert reconstruction_residual(y, mu) < 1e-6


def test_matching_joins_overlapping_blocks():
    pat = SparsityPattern.from_one_based(3, [[1, 2], [2, 3]])
    m1 = AtomicMeasure((0, 1), 2, np.array([0.5, 0.5]), np.array([[1.0, 2.0], [2.0, 1.0]]), 2)
    m2 = AtomicMeasure((1, 2), 2, np.array([0.5, 0.5]), np.array([[2.0, 5.0], [1.0, 7.0]]), 2)
    got = sorted(tuple(x) for x in match_support_points(pat, [m1, m2]))
    assert got == [(1.0, 2.0, 5.0), (2.0, 1.0, 7.0)]


def test_matching_respects_constraints():
    pat = SparsityPattern.from_one_based(3, [[1, 2], [2, 3]])
    m1 = AtomicMeasure((0, 1), 2, np.ones(2), np.array([[1.0, 2.0], [2.0, 1.0]]), 2)
    m2 = AtomicMeasure((1, 2), 2, np.ones(2), np.array([[2.0, 5.0], [1.0, 7.0]]), 2)
    cons = LinearConstraints.build(3, A=[[1, 1, 1]], b=[8])
    got = match_support_points(pat, [m1, m2], cons)
    assert len(got) == 1
    np.testing.assert_allclose(got[0], [1, 2, 5])


def test_rank_one_verdict():
    rep = solve_and_certify(three_block_quartic(), 2)
    v = rep.verdict
    assert v.status == Verdict.TIGHT_RANK_ONE
    assert v.ranks == [1, 1, 1]
    np.testing.assert_allclose(v.minimizers[0], [1, 1, 1], atol=1e-4)


def test_matching_verdict_two_minimizers():
    rep = solve_and_certify(chain_two_minimizers(), 2)
    v = rep.verdict
    assert v.status == Verdict.TIGHT_BY_MATCHING
    assert v.value == pytest.approx(-39, abs=1e-4)
    got = sorted(tuple(np.round(x, 6)) for x in v.minimizers)
    assert got == [(1, 2, 1, 2), (2, 1, 2, 1)]
    for m in v.measures:
        assert m.points.shape[0] == 2
        np.testing.assert_allclose(m.weights, [0.5, 0.5], atol=1e-3)


def test_not_tight_instance_is_inconclusive():
    rep = solve_and_certify(univariate_not_tight(), 2)
    assert rep.f_smo == pytest.approx(-1.0, abs=1e-5)
    v = rep.verdict
    assert v.status == Verdict.INCONCLUSIVE
    assert not v.minimizers
    atoms = sorted(float(p[0]) for m in v.measures for p in m.points)
    np.testing.assert_allclose(atoms, [0.0, 1.0], atol=1e-4)
    # the feasible atom x = 0 is offered as a candidate but misses the value test
    atom = [c for c in v.candidates if c["source"] == "matching"][0]
    assert atom["feasible"] and atom["point"] == pytest.approx([0.0], abs=1e-6)
    assert atom["objective"] == pytest.approx(0.0, abs=1e-6)


@pytest.mark.parametrize("factory", [three_block_quartic, chain_two_minimizers,
                                     three_block_rank_one, univariate_not_tight])
def test_minimizers_are_feasible(factory):
    inst = factory()
    rep = solve_and_certify(inst, inst.k0)
    v = rep.verdict
    for x in v.minimizers:
        assert inst.constraints.is_feasible(x, 1e-6, nonneg_tol=1e-8)
        assert inst.evaluate(x) - rep.f_smo <= 1e-5 * (1 + abs(rep.f_smo))
    if v.upper_bound is not None:
        assert v.upper_bound >= rep.f_smo - 1e-6


def _known_pieces():
    n = 3
    inst = three_block_quartic()
    sq = ["(x1^2 - x2)^2 + (x1*x2 - 1)^2", "(x2^2 - x3)^2 + (x2*x3 - 1)^2",
          "(x3^2 - x1)^2 + (x1*x3 - 1)^2"]
    pieces = [parse_polynomial(s, n) - f for s, f in zip(sq, inst.objectives)]
    return inst, pieces


def test_decomposition_identity_holds():
    inst, pieces = _known_pieces()
    out = verify_decomposition_identity(pieces, [5, -2], [], 4.0, inst)
    assert out["identity_residual"] < 1e-12
    assert all(m["member"] for m in out["memberships"])


def test_decomposition_identity_flags_perturbation():
    inst, pieces = _known_pieces()
    out = verify_decomposition_identity(pieces, [5.01, -2], [], 4.0, inst)
    assert out["identity_residual"] > 1e-3
