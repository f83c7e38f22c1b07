"""Sparse and dense moment / SOS relaxations assembled as conic programs.

Both relaxations share one assembler. A relaxation is described by

* a label set (the monomials the moment vector is indexed by),
* PSD generators: label-indexed moment or localizing matrices,
* equality multipliers: polynomials ``h`` with ``<h, y> = 0`` (free multipliers on the SOS side),
* inequality multipliers: polynomials ``g`` with ``<g, y> >= 0`` (nonnegative multipliers).

The SOS form is the one normally solved: its equality multipliers are the
moments, so one solve yields both the lower bound and the moment vector.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from math import comb

import numpy as np
import scipy.sparse as sp

from .basis import (LabelSet, MomentVector, block_basis, monomials, sparse_label_count,
                    union_label_set)
from .moment import SymbolicMatrix, localizer_order, localizing_matrix, moment_matrix
from .poly import Polynomial, ProblemInstance, SparsityPattern, UncoveredTerm
from .sdp import SQRT2, ConicProgram, ConicSolution, SolverOptions, Status, smat, solve, svec_len


@dataclass
class HierarchyConfig:
    order: int | None = None
    max_order: int | None = None
    dense: bool = False
    form: str = "sos"
    solver: SolverOptions = field(default_factory=SolverOptions.from_env)

    def orders(self, instance: ProblemInstance) -> range:
        k0 = instance.k0
        start = k0 if self.order is None else self.order
        if start < k0:
            raise ValueError(f"order {start} is below the minimal order {k0}")
        stop = start if self.max_order is None else self.max_order
        return range(start, stop + 1)


@dataclass(frozen=True)
class PsdGenerator:
    block: int | None  # block index, None for the dense relaxation
    generator: str  # "1", "x3", "ineq2", ...
    matrix: SymbolicMatrix


@dataclass
class Relaxation:
    """Everything needed to assemble either conic form of one relaxation."""

    instance: ProblemInstance
    order: int
    dense: bool
    labelset: LabelSet
    psd: list[PsdGenerator]
    eq_polys: list[Polynomial]
    ineq_polys: list[Polynomial]
    objective: Polynomial

    @property
    def sizes(self) -> dict:
        return {
            "moment_variables": len(self.labelset),
            "psd_sides": [g.matrix.size for g in self.psd],
            "equality_multipliers": len(self.eq_polys),
            "inequality_multipliers": len(self.ineq_polys),
        }


def _check_covered(poly: Polynomial, labelset: LabelSet) -> None:
    for alpha in poly.terms:
        if alpha not in labelset:
            raise UncoveredTerm(alpha)


def sparse_relaxation(instance: ProblemInstance, k: int) -> Relaxation:
    """The order-``k`` sparse moment relaxation data for ``instance``."""
    if k < instance.k0:
        raise ValueError(f"order {k} is below the minimal order {instance.k0}")
    n = instance.n
    pattern = instance.pattern
    ls = union_label_set(pattern, 2 * k)
    psd = []
    for i, blk in enumerate(pattern.blocks):
        psd.append(PsdGenerator(i, "1", moment_matrix(blk, k, ls)))
        for j in blk:
            psd.append(PsdGenerator(i, f"x{j + 1}",
                                    localizing_matrix(Polynomial.variable(n, j), blk, k, ls)))
    c = instance.constraints
    eqs = [Polynomial.linear(c.A[r], -c.b[r]) for r in range(c.m1)]
    ineqs = [Polynomial.linear(c.C[r], -c.d[r]) for r in range(c.m2)]
    f = instance.objective
    _check_covered(f, ls)
    return Relaxation(instance, k, False, ls, psd, eqs, ineqs, f)


def dense_relaxation(instance: ProblemInstance, k: int, rounding: str = "up") -> Relaxation:
    """Dense relaxation: ideal of ``Ax - b`` and quadratic module of ``(Cx - d, x)``.

    The linear generators' localizing matrices use basis degree
    ``ceil(k - 1/2) = k`` by default (``rounding="up"``), so the moment
    vector runs up to degree ``2k + 1`` and the ideal multipliers up to
    degree ``2k``. ``rounding="down"`` keeps everything within degree ``2k``.
    """
    if k < 1 or 2 * k < instance.degree:
        raise ValueError(f"order {k} too small for degree {instance.degree}")
    n = instance.n
    full = tuple(range(n))
    c = instance.constraints
    lin_order = localizer_order(k, Polynomial.variable(n, 0), rounding)
    top = max(2 * k, 2 * lin_order + 1)
    ls = union_label_set(SparsityPattern.dense(n), top)
    psd = [PsdGenerator(None, "1", moment_matrix(full, k, ls))]
    for r in range(c.m2):
        g = Polynomial.linear(c.C[r], -c.d[r])
        psd.append(PsdGenerator(None, f"ineq{r + 1}",
                                localizing_matrix(g, full, k, ls, rounding)))
    for j in range(n):
        psd.append(PsdGenerator(None, f"x{j + 1}",
                                localizing_matrix(Polynomial.variable(n, j), full, k, ls, rounding)))
    eqs = []
    mult = monomials(full, top - 1, n)
    for r in range(c.m1):
        h = Polynomial.linear(c.A[r], -c.b[r])
        for beta in mult:
            eqs.append(h * Polynomial(n, {beta: 1.0}))
    f = instance.objective
    _check_covered(f, ls)
    return Relaxation(instance, k, True, ls, psd, eqs, [], f)


def build_relaxation(instance: ProblemInstance, k: int, dense: bool = False,
                     rounding: str = "up") -> Relaxation:
    return dense_relaxation(instance, k, rounding) if dense else sparse_relaxation(instance, k)


# --------------------------------------------------------------------------
# conic assembly


def _svec_index(r: np.ndarray, c: np.ndarray, s: int) -> np.ndarray:
    return r * s - r * (r - 1) // 2 + (c - r)


def _poly_triplets(poly: Polynomial, ls: LabelSet):
    slots, vals = [], []
    for alpha, v in poly.terms.items():
        if alpha not in ls:
            raise UncoveredTerm(alpha)
        slots.append(ls.slot(alpha))
        vals.append(v)
    return np.array(slots, dtype=int), np.array(vals, dtype=float)


@dataclass
class SosLayout:
    """Column layout of the SOS program."""

    n_eq: int
    n_ineq: int
    psd_offsets: list[int]
    psd_sides: list[int]

    @property
    def gamma(self) -> int:
        return 0


def build_sos_program(relax: Relaxation) -> tuple[ConicProgram, SosLayout]:
    """``max gamma`` s.t. ``f - sum lam h - sum mu g - gamma = sum <Gram, generator matrix>``.

    Rows are negated so that the equality multipliers of the program are the
    moments ``y`` (with ``y_0 = 1``); primal objective is ``-gamma``.
    """
    ls = relax.labelset
    nU = len(ls)
    n_eq, n_in = len(relax.eq_polys), len(relax.ineq_polys)
    rows, cols, vals = [[ls.zero_slot]], [[0]], [[-1.0]]
    col = 1
    for h in relax.eq_polys + relax.ineq_polys:
        s, v = _poly_triplets(h, ls)
        rows.append(s)
        cols.append(np.full(s.size, col))
        vals.append(-v)
        col += 1
    offsets, sides = [], []
    for g in relax.psd:
        S = g.matrix
        offsets.append(col)
        sides.append(S.size)
        idx = _svec_index(S.rows, S.cols, S.size)
        scale = np.where(S.rows == S.cols, 1.0, SQRT2)
        rows.append(S.slots)
        cols.append(col + idx)
        vals.append(-S.coefs * scale)
        col += svec_len(S.size)
    A = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(nU, col))
    b = np.zeros(nU)
    s, v = _poly_triplets(relax.objective, ls)
    np.add.at(b, s, -v)
    c = np.zeros(col)
    c[0] = -1.0
    prog = ConicProgram(c, A, b, n_free=1 + n_eq, n_nonneg=n_in, psd_sides=tuple(sides))
    return prog, SosLayout(n_eq, n_in, offsets, sides)


def build_moment_program(relax: Relaxation) -> ConicProgram:
    """Moment form: ``y`` free, slacks for ``<g, y> >= 0``, PSD blocks tied to ``L(y)``."""
    ls = relax.labelset
    nU = len(ls)
    n_eq, n_in = len(relax.eq_polys), len(relax.ineq_polys)
    rows, cols, vals = [[0]], [[ls.zero_slot]], [[1.0]]
    rhs = [1.0]
    r = 1
    for h in relax.eq_polys:
        s, v = _poly_triplets(h, ls)
        rows.append(np.full(s.size, r))
        cols.append(s)
        vals.append(v)
        rhs.append(0.0)
        r += 1
    for q, g in enumerate(relax.ineq_polys):
        s, v = _poly_triplets(g, ls)
        rows.append(np.full(s.size + 1, r))
        cols.append(np.append(s, nU + q))
        vals.append(np.append(v, -1.0))
        rhs.append(0.0)
        r += 1
    col = nU + n_in
    sides = []
    for gen in relax.psd:
        S = gen.matrix
        t = svec_len(S.size)
        sides.append(S.size)
        idx = _svec_index(S.rows, S.cols, S.size)
        rows.append(r + idx)
        cols.append(S.slots)
        vals.append(-S.coefs)
        iu, ju = np.triu_indices(S.size)
        rows.append(r + np.arange(t))
        cols.append(col + np.arange(t))
        vals.append(np.where(iu == ju, 1.0, 1.0 / SQRT2))
        rhs.extend([0.0] * t)
        r += t
        col += t
    A = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(r, col))
    c = np.zeros(col)
    s, v = _poly_triplets(relax.objective, ls)
    np.add.at(c, s, v)
    return ConicProgram(c, A, np.array(rhs), n_free=nU, n_nonneg=n_in, psd_sides=tuple(sides))


# --------------------------------------------------------------------------
# certificates and results


@dataclass
class MultiplierCertificate:
    gamma: float
    lam: np.ndarray
    mu: np.ndarray
    grams: list[tuple[PsdGenerator, np.ndarray]]

    def sos_part(self, relax: Relaxation) -> Polynomial:
        """``sum_generators g * (b^T Gram b)`` as a polynomial."""
        n = relax.instance.n
        terms: dict = {}
        for gen, X in self.grams:
            S = gen.matrix
            full = np.where(S.rows == S.cols, 1.0, 2.0)
            contrib = S.coefs * full * X[S.rows, S.cols]
            for slot, v in zip(S.slots, contrib):
                alpha = relax.labelset.labels[slot]
                terms[alpha] = terms.get(alpha, 0.0) + v
        return Polynomial(n, terms)

    def block_sos_parts(self, relax: Relaxation) -> list[Polynomial]:
        """Per-block ``sigma_{i,0} + sum_j x_j sigma_{i,j}`` (sparse relaxations)."""
        n = relax.instance.n
        parts = [dict() for _ in range(relax.instance.pattern.m)]
        for gen, X in self.grams:
            S = gen.matrix
            full = np.where(S.rows == S.cols, 1.0, 2.0)
            contrib = S.coefs * full * X[S.rows, S.cols]
            d = parts[gen.block or 0]
            for slot, v in zip(S.slots, contrib):
                alpha = relax.labelset.labels[slot]
                d[alpha] = d.get(alpha, 0.0) + v
        return [Polynomial(n, d) for d in parts]

    def residual(self, relax: Relaxation) -> float:
        """Max coefficient of ``sos + sum lam h + sum mu g + gamma - f``."""
        p = self.sos_part(relax) + self.gamma
        for lam, h in zip(self.lam, relax.eq_polys):
            p = p + h * float(lam)
        for mu, g in zip(self.mu, relax.ineq_polys):
            p = p + g * float(mu)
        return (p - relax.objective).max_abs_coefficient()

    def min_gram_eigenvalue(self) -> float:
        return min((float(np.linalg.eigvalsh(X)[0]) for _, X in self.grams), default=0.0)


@dataclass
class RelaxationResult:
    relax: Relaxation
    status: Status
    f_smo: float
    f_spa: float
    y: MomentVector | None
    certificate: MultiplierCertificate | None
    solution: ConicSolution
    timings: dict

    @property
    def order(self) -> int:
        return self.relax.order

    @property
    def dense(self) -> bool:
        return self.relax.dense

    def block_moment_matrix(self, i: int, t: int) -> np.ndarray:
        """Instantiated ``M_{D_i}^{(t)}[y]`` (the dense relaxation has one block)."""
        blk = tuple(range(self.relax.instance.n)) if self.relax.dense \
            else self.relax.instance.pattern.blocks[i]
        return moment_matrix(blk, t, self.relax.labelset).instantiate(self.y)

    def point(self) -> np.ndarray:
        return self.y.project_point()


def solve_relaxation(instance: ProblemInstance, k: int, dense: bool = False,
                     options: SolverOptions | None = None, form: str = "sos",
                     backend=None, rounding: str = "up") -> RelaxationResult:
    """Build and solve one relaxation; values are ``(f_smo, f_spa)``.

    ``form="sos"`` solves the SOS program and reads the moments off its
    multipliers; ``form="moment"`` solves the moment program directly.
    """
    t0 = time.perf_counter()
    relax = build_relaxation(instance, k, dense, rounding)
    if form == "sos":
        prog, layout = build_sos_program(relax)
    elif form == "moment":
        prog = build_moment_program(relax)
    else:
        raise ValueError(f"unknown form {form!r}")
    t1 = time.perf_counter()
    sol = solve(prog, options, backend=backend)
    t2 = time.perf_counter()
    timings = {"build": t1 - t0, "solve": t2 - t1}

    y = cert = None
    status = sol.status
    if form == "sos":
        # the SOS side is the primal: infeasible SOS <-> unbounded moment side
        if status == Status.PRIMAL_INFEASIBLE:
            f_smo = f_spa = -math.inf
        elif status == Status.DUAL_INFEASIBLE:
            f_smo = f_spa = math.inf
        else:
            f_smo, f_spa = -sol.dual_objective, -sol.primal_objective
            y = MomentVector(relax.labelset, sol.y)
            x = sol.x
            lam = x[1:1 + layout.n_eq]
            mu = x[1 + layout.n_eq:1 + layout.n_eq + layout.n_ineq]
            grams = [(g, smat(x[o:o + svec_len(s)], s))
                     for g, o, s in zip(relax.psd, layout.psd_offsets, layout.psd_sides)]
            cert = MultiplierCertificate(float(x[0]), lam, mu, grams)
    else:
        if status == Status.DUAL_INFEASIBLE:
            f_smo = f_spa = -math.inf
        elif status == Status.PRIMAL_INFEASIBLE:
            f_smo = f_spa = math.inf
        else:
            f_smo, f_spa = sol.primal_objective, sol.dual_objective
            y = MomentVector(relax.labelset, sol.x[:len(relax.labelset)])
    return RelaxationResult(relax, status, f_smo, f_spa, y, cert, sol, timings)


def trace_polynomial(relax: Relaxation) -> Polynomial:
    """Polynomial whose Riesz image is the summed trace of the order-``k`` block moment matrices."""
    n, k = relax.instance.n, relax.order
    blocks = [tuple(range(n))] if relax.dense else relax.instance.pattern.blocks
    terms: dict = {}
    for blk in blocks:
        for alpha in block_basis(blk, k, n).monomials:
            key = tuple(2 * a for a in alpha)
            terms[key] = terms.get(key, 0.0) + 1.0
    return Polynomial(n, terms)


def regularized_moments(result: RelaxationResult, eps: float | None = None,
                        options: SolverOptions | None = None, backend=None) -> MomentVector | None:
    """Low-rank moments from ``min <f + eps * R, y>`` with ``R`` the trace polynomial.

    Interior-point solutions sit in the relative interior of the optimal
    face, so finitely atomic optima are hidden behind extra rank. The small
    trace penalty selects a low-rank point close to that face; it is only
    used to locate candidate atoms, never to report a bound.
    """
    relax = result.relax
    if result.y is None or not math.isfinite(result.f_smo):
        return None
    R = trace_polynomial(relax)
    if eps is None:
        eps = 1e-3 * (1.0 + abs(result.f_smo)) / (1.0 + abs(result.y.riesz(R)))
    prog, _ = build_sos_program(replace(relax, objective=relax.objective + R * eps))
    sol = solve(prog, options, backend=backend)
    if sol.status != Status.OPTIMAL:
        return None
    return MomentVector(relax.labelset, sol.y)


def regularized_ladder(result: RelaxationResult, factors=(1.0, 3.0, 10.0), **kw):
    """Yield ``regularized_moments`` for increasing penalties (skipping failed solves)."""
    if result.y is None or not math.isfinite(result.f_smo):
        return
    base = 1e-3 * (1.0 + abs(result.f_smo)) / (1.0 + abs(result.y.riesz(trace_polynomial(result.relax))))
    for fct in factors:
        y = regularized_moments(result, base * fct, **kw)
        if y is not None:
            yield y


# --------------------------------------------------------------------------
# sizes


def relaxation_sizes(instance_or_pattern, k: int) -> dict:
    """Moment-vector dimensions and PSD block sides without building anything."""
    pattern = instance_or_pattern.pattern if isinstance(instance_or_pattern, ProblemInstance) \
        else instance_or_pattern
    n = pattern.n
    sides = []
    for blk in pattern.blocks:
        ni = len(blk)
        sides.append(comb(ni + k, k))
        sides.extend([comb(ni + k - 1, k - 1)] * ni)
    return {
        "n": n,
        "m": pattern.m,
        "order": k,
        "sparse_dim": sparse_label_count(pattern, 2 * k),
        "dense_dim": comb(n + 2 * k, 2 * k),
        "psd_sides": sides,
        "dense_moment_side": comb(n + k, k),
    }
