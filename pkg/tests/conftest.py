import sys

import numpy as np
from hypothesis import settings
from hypothesis import strategies as st

from sparsecop.poly import Polynomial

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


@st.composite
def polynomials(draw, n=3, max_deg=3, max_terms=6):
    k = draw(st.integers(0, max_terms))
    terms = {}
    for _ in range(k):
        alpha = tuple(draw(st.lists(st.integers(0, max_deg), min_size=n, max_size=n)))
        if sum(alpha) > max_deg:
            continue
        terms[alpha] = draw(st.floats(-5, 5, allow_nan=False).filter(lambda c: abs(c) > 1e-3))
    return Polynomial(n, terms)


def points(n, lo=-2.0, hi=2.0):
    return st.lists(st.floats(lo, hi, allow_nan=False), min_size=n, max_size=n).map(np.array)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        ok, detail = mod.RESULTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
