import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sparsecop.instances import EXAMPLES
from sparsecop.poly import (Polynomial, PolynomialSyntaxError, SparsityPattern, UncoveredTerm,
                            decompose_objective, detect_pattern, parse_polynomial)

from conftest import points, polynomials

F1 = "x1^4 + x1^2*x2^2 - 2*x1^2*x2 - 2*x1*x2 + x2^2 + x1"


def test_zero_polynomial():
    p = parse_polynomial("0", 2)
    assert p.is_zero() and len(p) == 0


def test_parse_block_objective():
    p = parse_polynomial(F1, 2)
    assert len(p) == 6 and p.degree == 4
    assert p.evaluate([1.0, 1.0]) == pytest.approx(0.0)


def test_binomial_expansion():
    p = parse_polynomial("(x1+x2)^3", 2)
    assert sorted(p.terms.values()) == [1, 1, 3, 3]


@pytest.mark.parametrize("text", ["x1 +", "x3", "x1^-1", "2**", "x1*(x2", "y1"])
def test_syntax_errors(text):
    with pytest.raises(PolynomialSyntaxError):
        parse_polynomial(text, 2)


def test_constant_evaluates_to_itself():
    p = Polynomial.constant(3, 2.5)
    assert p.evaluate(np.random.default_rng(0).normal(size=3)) == 2.5


def test_three_block_value_at_ones():
    inst = EXAMPLES["three_block_quartic"]()
    assert inst.evaluate(np.ones(3)) == pytest.approx(4.0)


def test_hessian_of_cube():
    h = parse_polynomial("x1^3", 1).hessian()
    assert h[0][0] == parse_polynomial("6*x1", 1)


def test_hessian_of_binomial_cube():
    h = parse_polynomial("(x1+x2)^3", 2).hessian()
    expected = parse_polynomial("6*x1 + 6*x2", 2)
    for i in range(2):
        for j in range(2):
            assert h[i][j] == expected


def test_decompose_disjoint():
    f = parse_polynomial("x1*x2 + x2*x3", 3)
    pat = SparsityPattern.from_one_based(3, [[1, 2], [2, 3]])
    a, b = decompose_objective(f, pat)
    assert str(a) == "x1*x2" and str(b) == "x2*x3"


def test_decompose_cycle():
    inst = EXAMPLES["bilinear_cycle"]()
    assert [len(p) for p in inst.objectives] == [1] * 5
    assert all(p.degree == 2 for p in inst.objectives)


def test_uncovered_term():
    f = parse_polynomial("x1*x3", 3)
    with pytest.raises(UncoveredTerm):
        decompose_objective(f, SparsityPattern.from_one_based(3, [[1, 2], [2, 3]]))


def test_shared_term_goes_to_lowest_block():
    f = parse_polynomial("x2^2", 3)
    pieces = decompose_objective(f, SparsityPattern.from_one_based(3, [[1, 2], [2, 3]]))
    assert len(pieces[0]) == 1 and pieces[1].is_zero()


@pytest.mark.parametrize("blocks", [[[1, 2]], [[1], [3]], [[1, 2], [2, 4]], [[]]])
def test_pattern_must_cover(blocks):
    with pytest.raises(ValueError):
        SparsityPattern.from_one_based(3, blocks)


def test_detect_pattern_components():
    pat = detect_pattern(parse_polynomial("x1*x2 + x3^2 + x4*x5", 5))
    assert pat.one_based() == [[1, 2], [3], [4, 5]]


def test_grlex_printing():
    assert str(parse_polynomial("x2 + x1 + x1^2 + 1", 2)) == "x1^2 + x1 + x2 + 1"


@given(polynomials(), polynomials(), points(3))
def test_ring_homomorphism(p, q, x):
    assert (p + q).evaluate(x) == pytest.approx(p.evaluate(x) + q.evaluate(x), abs=1e-9)
    assert (p * q).evaluate(x) == pytest.approx(p.evaluate(x) * q.evaluate(x), rel=1e-9, abs=1e-9)


@given(polynomials(n=4, max_deg=4), points(4))
def test_decomposition_sums_back(f, x):
    pat = SparsityPattern.dense(4)
    pieces = decompose_objective(f, pat)
    assert sum(p.evaluate(x) for p in pieces) == pytest.approx(f.evaluate(x), abs=1e-9)


@given(polynomials(n=3, max_deg=4), points(3, -1, 1))
def test_derivatives_match_finite_differences(p, x):
    h = 1e-5
    grad = p.gradient()
    hess = p.hessian()
    eye = np.eye(3)
    for j in range(3):
        fd = (p.evaluate(x + h * eye[j]) - p.evaluate(x - h * eye[j])) / (2 * h)
        g = grad[j].evaluate(x)
        assert abs(fd - g) <= 1e-6 * max(1.0, abs(g))
        for i in range(3):
            fd2 = (grad[i].evaluate(x + h * eye[j]) - grad[i].evaluate(x - h * eye[j])) / (2 * h)
            hv = hess[i][j].evaluate(x)
            assert abs(fd2 - hv) <= 1e-6 * max(1.0, abs(hv))


@given(polynomials())
def test_print_parse_roundtrip(p):
    assert parse_polynomial(str(p), 3).allclose(p, atol=1e-9)


def test_dust_coefficients_dropped():
    p = Polynomial(1, {(1,): 1.0}) - Polynomial(1, {(1,): 1.0 - 1e-15})
    assert p.is_zero()


@given(st.integers(1, 6))
def test_linear_constructor(n):
    p = Polynomial.linear(np.arange(1, n + 1), -1.0)
    assert p.evaluate(np.ones(n)) == pytest.approx(n * (n + 1) / 2 - 1)
