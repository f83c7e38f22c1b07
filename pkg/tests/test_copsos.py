import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparsecop.basis import MomentVector, union_label_set
from sparsecop.copsos import (KktResidualTooLarge, all_blocks_certified, certify_block,
                              construct_shifted_certificate, cubic_shortcut, hessian_residual,
                              is_cop_sos_convex, jensen_gap, kkt_multipliers, qmod_membership)
from sparsecop.instances import convex_chain, three_block_quartic
from sparsecop.poly import Polynomial, SparsityPattern, parse_polynomial


def P(text, n=2):
    return parse_polynomial(text, n)


def test_convex_chain_all_blocks():
    inst = convex_chain()
    for f, blk in zip(inst.objectives, inst.pattern.blocks):
        cert = certify_block(f, blk)
        assert cert is not None
        assert cert.residual <= 1e-7
        assert cert.min_eigenvalue() >= -1e-9
    assert all_blocks_certified(inst)


@pytest.mark.parametrize("text,ok", [
    ("x1^2*x2^2", False),
    ("x1^2 + x2^2", True),
    ("x1^4 + x2^4", True),
    ("(x1 + x2)^4", True),
    ("x1^4 - x1^2*x2^2 + x2^4", False),
    ("x1*x2", False),
    ("x1 + 3*x2 - 1", True),
])
def test_certification(text, ok):
    assert (certify_block(P(text), (0, 1)) is not None) == ok


def test_cubic_binomial_gram():
    cert = cubic_shortcut(P("(x1 + x2)^3"), (0, 1))
    assert cert is not None and cert.method == "cubic"
    np.testing.assert_allclose(cert.grams[0], 6 * np.ones((2, 2)))
    np.testing.assert_allclose(cert.grams[1], 6 * np.ones((2, 2)))
    np.testing.assert_allclose(cert.gram0, 0)


def test_cubic_indefinite_rejected():
    assert cubic_shortcut(P("x1^3 - 3*x1*x2^2"), (0, 1)) is None


def test_variables_outside_block():
    with pytest.raises(ValueError):
        is_cop_sos_convex(P("x1^4 + x2^4"), (0,))


@st.composite
def cubics(draw):
    coeffs = draw(st.lists(st.floats(-2, 2, allow_nan=False), min_size=10, max_size=10))
    exps = [(a, b) for d in range(4) for a in range(d + 1) for b in [d - a]]
    return Polynomial(2, {e: c for e, c in zip(exps, coeffs) if abs(c) > 1e-3})


@settings(max_examples=50)
@given(cubics())
def test_cubic_shortcut_agrees_with_sdp(p):
    if p.degree < 3:
        return
    a = cubic_shortcut(p, (0, 1)) is not None
    b = is_cop_sos_convex(p, (0, 1)) is not None
    assert a == b


def test_sdp_certificate_reconstructs_hessian():
    p = P("x1^5 + (x1 + x2)^3 + x2^2 + (x1 - x2)^4")
    cert = is_cop_sos_convex(p, (0, 1))
    assert cert is not None
    assert hessian_residual(p, cert) <= 1e-7
    H = cert.hessian_part(2)
    for x in ([0.3, 1.7], [2.0, 0.1]):
        M = np.array([[H[r][c].evaluate(x) for c in range(2)] for r in range(2)])
        assert np.linalg.eigvalsh(M)[0] >= -1e-7


LS = union_label_set(SparsityPattern.dense(2), 4)


@given(st.tuples(st.floats(0, 3), st.floats(0, 3)))
def test_jensen_gap_zero_at_point(u):
    y = MomentVector.from_point(LS, u)
    assert jensen_gap(P("x1^4 + (x1 + x2)^3 + x2^2"), y) == pytest.approx(0.0, abs=1e-8)


@given(st.tuples(st.floats(0, 3), st.floats(0, 3)), st.tuples(st.floats(0, 3), st.floats(0, 3)),
       st.floats(0.05, 0.95))
def test_jensen_gap_nonnegative_for_convex(u, v, w):
    y = MomentVector.from_atoms(LS, [w, 1 - w], [u, v])
    assert jensen_gap(P("x1^4 + (x1 + x2)^3 + x2^2"), y) >= -1e-8


def test_jensen_gap_positive_for_mixture():
    y = MomentVector.from_atoms(LS, [0.5, 0.5], [[0, 0], [2, 0]])
    assert jensen_gap(P("x1^2"), y) == pytest.approx(1.0)


def test_kkt_and_shifted_certificate():
    inst = three_block_quartic()
    u = np.ones(3)
    kkt = kkt_multipliers(inst, u)
    assert kkt.stationarity < 1e-10
    pieces, resid = construct_shifted_certificate(u, kkt, inst)
    assert resid < 1e-10
    assert len(pieces) == 3 and all(p.degree <= 1 for p in pieces)


def test_shifted_certificate_rejects_non_kkt_point():
    inst = three_block_quartic()
    u = np.array([0.5, 1.0, 1.5])
    with pytest.raises(KktResidualTooLarge):
        construct_shifted_certificate(u, kkt_multipliers(inst, u), inst)


@pytest.mark.parametrize("text,member", [
    ("x1^2 + x2", True),
    ("x1*x2^2 + x1^3", True),
    ("-x1", False),
    ("x1^2 - 2*x1 + 1", True),
])
def test_qmod_membership(text, member):
    assert qmod_membership(P(text), (0, 1))["member"] == member
