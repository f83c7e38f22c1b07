"""Worked example instances and the random sparse QCQP generator."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .poly import (LinearConstraints, Polynomial, ProblemInstance, SparsityPattern,
                   parse_polynomial)


def _instance(name, n, blocks, pieces, A=None, b=None, C=None, d=None, **meta):
    pattern = SparsityPattern.from_one_based(n, blocks)
    objs = tuple(parse_polynomial(p, n) for p in pieces)
    return ProblemInstance(pattern, objs, LinearConstraints.build(n, A, b, C, d), name, meta)


def three_block_quartic() -> ProblemInstance:
    """Three overlapping quartic blocks with two equality constraints; minimum 4 at (1,1,1)."""
    return _instance(
        "three_block_quartic", 3, [[1, 2], [2, 3], [1, 3]],
        ["x1^4 + x1^2*x2^2 - 2*x1^2*x2 - 2*x1*x2 + x2^2 + x1",
         "x2^4 + x2^2*x3^2 - 2*x2^2*x3 - 2*x2*x3 + x3^2 + 3*x2",
         "x3^4 + x1^2*x3^2 - 2*x1*x3^2 - 2*x1*x3 + x1^2 + 3*x3"],
        A=[[1, 1, 1], [2, 1, 1]], b=[3, 4])


def chain_two_minimizers() -> ProblemInstance:
    """Chain of three identical blocks; two global minimizers with value -39."""
    f = "{a}^2*{b}^2 + {a}^2 - 2*{a}*{b} + {b}^2 - 6*{a} - 6*{b}"
    pieces = [f.format(a=f"x{i}", b=f"x{i + 1}") for i in (1, 2, 3)]
    return _instance("chain_two_minimizers", 4, [[1, 2], [2, 3], [3, 4]], pieces,
                     A=[[1, 2, 2, 1]], b=[9], C=[[1, 0, 0, 1]], d=[3])


def univariate_not_tight() -> ProblemInstance:
    """``min x^4 - 3x^2`` on ``0 <= x <= 1/2``; relaxations stay at -1, true min -11/16."""
    return _instance("univariate_not_tight", 1, [[1]], ["x1^4 - 3*x1^2"], C=[[-1]], d=[-0.5])


def three_block_rank_one() -> ProblemInstance:
    return _instance(
        "three_block_rank_one", 3, [[1, 2], [2, 3], [1, 3]],
        ["x1^4 + x2^4 - 10*x1^2*x2^2", "6*x2^4 + x3^4 + 2*x2^2*x3^2",
         "6*x1^4 + x3^4 + 2*x1^2*x3^2"],
        A=[[1, 1, 1]], b=[1], C=[[3, -1, 2], [-1, -2, 0]], d=[0.5, -1.2])


def convex_chain() -> ProblemInstance:
    """Eight variables, four convex blocks of degree 5."""
    pieces = []
    for a, b, c in ((1, 2, 3), (3, 4, 5), (5, 6, 7)):
        pieces.append(f"(x{a} + x{b})^3 + x{a}^5 + x{b}^2 + (x{b} - x{c})^4")
    pieces.append("(x7 + x8)^3 + x7^5 + x8^2 + x8^3")
    return _instance("convex_chain", 8, [[1, 2, 3], [3, 4, 5], [5, 6, 7], [7, 8]], pieces,
                     A=[list(range(1, 9))], b=[1], C=[[1, -1, 1, -1, 1, -1, 1, -1]], d=[0])


def bilinear_cycle() -> ProblemInstance:
    """Five-cycle of bilinear terms; the dense order-1 relaxation is tight."""
    pieces = [f"x{i}*x{i % 5 + 1}" for i in range(1, 6)]
    return _instance("bilinear_cycle", 5, [[1, 2], [2, 3], [3, 4], [4, 5], [1, 5]], pieces,
                     A=[[1, -1, 1, -1, 1], [1, 1, 1, 1, 1]], b=[1, 5], C=[[2, 1, -1, 2, -1]], d=[3])


def two_cubic_blocks() -> ProblemInstance:
    f = "{a}^2*{b} + {a}*{b}^2 + {c}^3 - 3*{a}*{b}*{c}"
    pieces = [f.format(a="x1", b="x2", c="x3"), f.format(a="x4", b="x5", c="x6")]
    return _instance("two_cubic_blocks", 6, [[1, 2, 3], [4, 5, 6]], pieces,
                     A=[[1, 2, 3, 1, 2, 3], [1, 1, 1, 1, 1, 1]], b=[2, 1],
                     C=[[5, -2, -3, 4, -1, -3]], d=[0])


def star_sextic() -> ProblemInstance:
    """Star pattern around x1 with a Motzkin-type first block; minimum 0."""
    pieces = ["x1^4*x2^2 + x1^2*x2^4 - 3*x1^3*x2^3"]
    pieces += [f"x{i}^6 + x1^6" for i in range(3, 8)]
    blocks = [[1, 2]] + [[1, i] for i in range(3, 8)]
    return _instance("star_sextic", 7, blocks, pieces, A=[[2, 1, 1, 1, 1, 1, 1]], b=[3])


EXAMPLES = {
    "three_block_quartic": three_block_quartic,
    "chain_two_minimizers": chain_two_minimizers,
    "univariate_not_tight": univariate_not_tight,
    "three_block_rank_one": three_block_rank_one,
    "convex_chain": convex_chain,
    "bilinear_cycle": bilinear_cycle,
    "two_cubic_blocks": two_cubic_blocks,
    "star_sextic": star_sextic,
}


# --------------------------------------------------------------------------
# random sparse QCQPs


def window_pattern(n: int, m: int, w: int) -> SparsityPattern:
    """Cyclic windows of width ``w``: start ``i`` when ``m == n``, start ``2i`` when ``m == n/2``."""
    if m == n:
        step = 1
    elif 2 * m == n:
        step = 2
    else:
        raise ValueError("block rule needs m == n (cyclic) or m == n/2 (stride-2)")
    if not 1 <= w <= n:
        raise ValueError("window width must be in 1..n")
    blocks = tuple(tuple(sorted({(step * i + j) % n for j in range(w)})) for i in range(m))
    return SparsityPattern(n, blocks)


class GaussianStream:
    """Standard normals by Box-Muller on top of numpy's PCG64 uniform stream."""

    def __init__(self, seed: int):
        self._gen = np.random.Generator(np.random.PCG64(seed))

    def normal(self, size) -> np.ndarray:
        count = int(np.prod(size))
        half = (count + 1) // 2
        u1 = 1.0 - self._gen.random(half)  # in (0, 1]
        u2 = self._gen.random(half)
        r = np.sqrt(-2.0 * np.log(u1))
        z = np.concatenate([r * np.cos(2 * np.pi * u2), r * np.sin(2 * np.pi * u2)])
        return z[:count].reshape(size)

    def uniform(self, size) -> np.ndarray:
        return self._gen.random(size)


@dataclass(frozen=True)
class RandomInstanceSpec:
    n: int
    m: int
    w: int
    seed: int = 0
    m_eq: int = 2
    m_ineq: int = 2
    slack_scale: float = 0.1

    @property
    def block_rule(self) -> str:
        return "cyclic" if self.m == self.n else "stride-2"


def random_qcqp(spec: RandomInstanceSpec) -> ProblemInstance:
    """``sum_i x^T Q_i x + sum_j x_j x^T A_i^j x`` over windows, with a known feasible point.

    ``Q_i = R_i^T R_i`` and ``A_i^j = S^T S`` with Gaussian ``R_i, S``;
    ``b = A x0`` and ``d = C x0 - |s|`` for a uniform ``x0 >= 0``.
    """
    pattern = window_pattern(spec.n, spec.m, spec.w)
    g = GaussianStream(spec.seed)
    n = spec.n
    objs = []
    for blk in pattern.blocks:
        ni = len(blk)
        R = g.normal((ni, ni))
        Q = R.T @ R
        terms: dict = {}

        def add(alpha_idx, v):
            e = [0] * n
            for j in alpha_idx:
                e[j] += 1
            key = tuple(e)
            terms[key] = terms.get(key, 0.0) + v

        for a in range(ni):
            for b in range(ni):
                add((blk[a], blk[b]), Q[a, b])
        for j in blk:
            S = g.normal((ni, ni))
            Aj = S.T @ S
            for a in range(ni):
                for b in range(ni):
                    add((j, blk[a], blk[b]), Aj[a, b])
        objs.append(Polynomial(n, terms))
    A = g.normal((spec.m_eq, n))
    C = g.normal((spec.m_ineq, n))
    x0 = g.uniform(n)
    b = A @ x0
    d = C @ x0 - spec.slack_scale * np.abs(g.normal(spec.m_ineq))
    meta = {"spec": spec.__dict__.copy(), "x0": x0.tolist(), "generator": "PCG64+Box-Muller"}
    return ProblemInstance(pattern, tuple(objs), LinearConstraints.build(n, A, b, C, d),
                           f"qcqp_n{n}_m{spec.m}_w{spec.w}_s{spec.seed}", meta)
