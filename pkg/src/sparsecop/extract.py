"""Rank tests, flat truncation, atom extraction, support matching and tightness verdicts."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Sequence

import numpy as np
import scipy.linalg as sla
from scipy.optimize import minimize

from .basis import BlockBasis, MomentVector, block_basis
from .moment import moment_matrix
from .poly import LinearConstraints, Polynomial, ProblemInstance, SparsityPattern

RANK_TOL = 1e-6
RANK_FLOOR = 1e-10
MERGE_TOL = 1e-4
EXTRACTION_TOL = 1e-4
AGREE_TOL = 1e-5
# looser settings for atoms from the regularized second phase
APPROX_AGREE_TOL = 1e-2
APPROX_RANK_TOL = 1e-4
APPROX_TRI_TOL = 1e-3
FEAS_TOL = 1e-6
MATCH_CAP = 10 ** 6


class ExtractionFailed(RuntimeError):
    pass


class Verdict(str, Enum):
    TIGHT_RANK_ONE = "TightRankOne"
    TIGHT_BY_MATCHING = "TightByMatching"
    TIGHT_BY_COPSOS = "TightByCopSosConvexity"
    INCONCLUSIVE = "Inconclusive"


def numeric_rank(M: np.ndarray, tol: float = RANK_TOL, floor: float = RANK_FLOOR) -> int:
    """Number of singular values above ``tol * sigma_1``; 0 when ``sigma_1 <= floor``."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] <= floor:
        return 0
    return int(np.sum(s > tol * s[0]))


@dataclass
class AtomicMeasure:
    """``sum_j theta_j [u_j]`` on one block; points are in block coordinates."""

    block: tuple[int, ...]
    order: int
    weights: np.ndarray
    points: np.ndarray  # (r, |block|)
    rank: int
    residual: float = 0.0

    def to_json(self) -> dict:
        return {"block": [j + 1 for j in self.block], "order": self.order, "rank": self.rank,
                "weights": self.weights.tolist(), "points": self.points.tolist(),
                "residual": self.residual}


# --------------------------------------------------------------------------
# rank tests


def block_moment_matrix(y: MomentVector, block, t: int) -> np.ndarray:
    return moment_matrix(tuple(block), t, y.labelset).instantiate(y)


def block_ranks(y: MomentVector, blocks, t: int, tol: float = RANK_TOL) -> list[int]:
    return [numeric_rank(block_moment_matrix(y, b, t), tol) for b in blocks]


def check_rank1_tightness(y: MomentVector, blocks, k0: int, objective: Polynomial | None = None,
                          tol: float = RANK_TOL):
    """``(pi(y), f(pi(y)))`` when every block moment matrix of order ``k0`` has rank 1."""
    if any(r != 1 for r in block_ranks(y, blocks, k0, tol)):
        return None
    x = y.project_point()
    return x, (None if objective is None else float(objective.evaluate(x)))


def flat_truncation_detect(y: MomentVector, block, k0: int, k: int,
                           tol: float = RANK_TOL) -> int | None:
    """Smallest ``t`` in ``[k0, k]`` with ``rank M^(t-1) = rank M^(t) > 0``."""
    ranks = {}

    def rank(t):
        if t not in ranks:
            ranks[t] = numeric_rank(block_moment_matrix(y, block, t), tol)
        return ranks[t]

    for t in range(max(k0, 1), k + 1):
        if rank(t) > 0 and rank(t - 1) == rank(t):
            return t
    return None


# --------------------------------------------------------------------------
# extraction


def _pivot_rows(V: np.ndarray, candidates: Sequence[int], r: int, tol: float) -> list[int]:
    """Greedy grlex-ordered rows of ``V`` spanning its row space."""
    chosen: list[int] = []
    Q = np.zeros((0, V.shape[1]))
    scale = max(np.linalg.norm(V, axis=1).max(), 1e-300)
    for i in candidates:
        v = V[i] - Q.T @ (Q @ V[i]) if Q.size else V[i].copy()
        nv = np.linalg.norm(v)
        if nv > tol * scale:
            chosen.append(i)
            Q = np.vstack([Q, v / nv])
            if len(chosen) == r:
                break
    return chosen


def extract_atoms(y: MomentVector, block, t: int, rank_tol: float = RANK_TOL,
                  seed: int = 0, retries: int = 5, tri_tol: float = 1e-6) -> AtomicMeasure:
    """Multiplication-matrix extraction from ``M_block^(t)[y]``.

    Requires the rank of ``M^(t)`` to be attained by monomials of degree
    ``<= t-1`` (flat truncation at ``t``).
    """
    block = tuple(block)
    M = block_moment_matrix(y, block, t)
    basis = block_basis(block, t, y.labelset.n)
    r = numeric_rank(M, rank_tol)
    if r == 0:
        raise ExtractionFailed("moment matrix is zero")
    w, U = np.linalg.eigh(0.5 * (M + M.T))
    order = np.argsort(w)[::-1][:r]
    V = U[:, order] * np.sqrt(np.maximum(w[order], 0.0))
    low = [i for i, a in enumerate(basis.monomials) if sum(a) <= t - 1]
    piv = _pivot_rows(V, low, r, 1e-6)
    if len(piv) < r:
        raise ExtractionFailed(f"rank {r} not reached by degree <= {t - 1} monomials")
    Ue = V @ np.linalg.inv(V[piv])
    B = [basis.monomials[i] for i in piv]
    Ns = []
    for j in block:
        rows = []
        for beta in B:
            e = list(beta)
            e[j] += 1
            rows.append(basis.index(tuple(e)))
        Ns.append(Ue[rows])
    scale = max(1.0, max(np.abs(N).max() for N in Ns))
    rng = np.random.default_rng(seed)
    points = None
    for _ in range(retries):
        c = rng.random(len(Ns))
        c /= c.sum()
        N = sum(ci * Ni for ci, Ni in zip(c, Ns))
        T, Q = sla.schur(N, output="real")
        tri = [Q.T @ Nj @ Q for Nj in Ns]
        if all(np.abs(np.tril(Tj, -1)).max(initial=0.0) <= tri_tol * scale for Tj in tri):
            points = np.array([[Tj[l, l] for Tj in tri] for l in range(r)])
            break
    if points is None:
        raise ExtractionFailed("multiplication matrices are not simultaneously triangularizable")
    points = _merge(points, MERGE_TOL)
    if np.any(points < -FEAS_TOL):
        keep = np.all(points >= -FEAS_TOL, axis=1)
        points = points[keep]
        if points.shape[0] == 0:
            raise ExtractionFailed("all atoms leave the nonnegative orthant")
    points = np.where(points < 0, 0.0, points)
    weights, resid = _fit_weights(y, block, t, points)
    if resid > EXTRACTION_TOL:
        raise ExtractionFailed(f"reconstruction residual {resid:.2e}")
    return AtomicMeasure(block, t, weights, points, r, resid)


def _merge(points: np.ndarray, tol: float) -> np.ndarray:
    groups: list[list[np.ndarray]] = []
    for p in points:
        for g in groups:
            if np.linalg.norm(g[0] - p) < tol:
                g.append(p)
                break
        else:
            groups.append([p])
    return np.array([np.mean(g, axis=0) for g in groups])


def _fit_weights(y: MomentVector, block, t: int, points: np.ndarray):
    ls = y.labelset
    labels = [a for a in _block_labels(ls.n, block, 2 * t) if a in ls]
    exps = np.array(labels, dtype=int)[:, list(block)]
    Vd = np.prod(points[None, :, :] ** exps[:, None, :], axis=2)
    target = np.array([y[a] for a in labels])
    theta, *_ = np.linalg.lstsq(Vd, target, rcond=None)
    resid = float(np.max(np.abs(Vd @ theta - target)))
    return theta, resid


def _block_labels(n, block, degree):
    return block_basis(tuple(block), degree, n).monomials


def reconstruction_residual(y: MomentVector, measure: AtomicMeasure) -> float:
    _, r = _fit_weights(y, measure.block, measure.order, measure.points)
    labels = [a for a in _block_labels(y.labelset.n, measure.block, 2 * measure.order)]
    exps = np.array(labels, dtype=int)[:, list(measure.block)]
    Vd = np.prod(measure.points[None, :, :] ** exps[:, None, :], axis=2)
    return float(np.max(np.abs(Vd @ measure.weights - np.array([y[a] for a in labels]))))


# --------------------------------------------------------------------------
# matching


def match_support_points(pattern: SparsityPattern, measures: Sequence[AtomicMeasure],
                         constraints: LinearConstraints | None = None, agree_tol: float = AGREE_TOL,
                         feas_tol: float = FEAS_TOL, cap: int = MATCH_CAP) -> list[np.ndarray]:
    """Points whose restriction to every block is an atom of that block.

    Depth-first over blocks; an atom is only tried when it agrees with the
    coordinates already fixed, so inconsistent branches are cut early.
    """
    n = pattern.n
    found: list[np.ndarray] = []
    nodes = 0
    sums = np.zeros(n)
    counts = np.zeros(n, dtype=int)
    fixed = np.full(n, np.nan)

    def rec(i):
        nonlocal nodes
        if nodes >= cap:
            return
        if i == len(measures):
            x = sums / np.maximum(counts, 1)
            if constraints is None or constraints.is_feasible(x, feas_tol, nonneg_tol=1e-8):
                if not any(np.max(np.abs(x - f)) <= feas_tol for f in found):
                    found.append(x)
            return
        blk = list(measures[i].block)
        for u in measures[i].points:
            nodes += 1
            prev = fixed[blk]
            known = ~np.isnan(prev)
            if np.any(np.abs(prev[known] - u[known]) > agree_tol):
                continue
            newly = [j for j, kn in zip(blk, known) if not kn]
            fixed[newly] = u[~known]
            sums[blk] += u
            counts[blk] += 1
            rec(i + 1)
            sums[blk] -= u
            counts[blk] -= 1
            fixed[newly] = np.nan

    rec(0)
    return found


# --------------------------------------------------------------------------
# certification


@dataclass
class TightnessVerdict:
    status: Verdict
    value: float | None
    minimizers: list[np.ndarray]
    relaxation_value: float
    ranks: list[int] = field(default_factory=list)
    flat_orders: list[int | None] = field(default_factory=list)
    measures: list[AtomicMeasure] = field(default_factory=list)
    candidates: list[dict] = field(default_factory=list)
    upper_bound: float | None = None
    hypotheses: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    @property
    def tight(self) -> bool:
        return self.status != Verdict.INCONCLUSIVE

    def to_json(self) -> dict:
        return {
            "status": self.status.value,
            "value": self.value,
            "relaxation_value": self.relaxation_value,
            "minimizers": [m.tolist() for m in self.minimizers],
            "ranks": self.ranks,
            "flat_orders": self.flat_orders,
            "atoms": [m.to_json() for m in self.measures],
            "candidates": [{**c, "point": list(c["point"])} for c in self.candidates],
            "upper_bound": self.upper_bound,
            "hypotheses": self.hypotheses,
            "notes": self.notes,
        }


def _value_tol(f_smo: float) -> float:
    return 1e-5 * (1.0 + abs(f_smo))


def polish_point(instance: ProblemInstance, x0, maxiter: int = 200) -> np.ndarray | None:
    """Local SLSQP refinement of a candidate from approximate atoms; ``None`` if it fails."""
    cons = instance.constraints
    f = instance.objective
    grad = f.gradient()
    constraints = []
    if cons.m1:
        constraints.append({"type": "eq", "fun": lambda x: cons.A @ x - cons.b,
                            "jac": lambda x: cons.A})
    if cons.m2:
        constraints.append({"type": "ineq", "fun": lambda x: cons.C @ x - cons.d,
                            "jac": lambda x: cons.C})
    res = minimize(lambda x: float(f.evaluate(x)), np.asarray(x0, dtype=float),
                   jac=lambda x: np.array([g.evaluate(x) for g in grad]), method="SLSQP",
                   bounds=[(0.0, None)] * instance.n, constraints=constraints,
                   options={"ftol": 1e-15, "maxiter": maxiter})
    x = np.maximum(res.x, 0.0)
    return x if np.all(np.isfinite(x)) else None


def _extract_blocks(y: MomentVector, blocks, k0: int, k: int, rank_tol: float, notes: list,
                    tri_tol: float = 1e-6):
    flat, measures = [], []
    for blk in blocks:
        t = flat_truncation_detect(y, blk, k0, k, rank_tol)
        flat.append(t)
        if t is None:
            continue
        try:
            measures.append(extract_atoms(y, blk, t, rank_tol, tri_tol=tri_tol))
        except ExtractionFailed as err:
            notes.append(f"block {[j + 1 for j in blk]}: {err}")
    return flat, measures


def certify(instance: ProblemInstance, k: int, y: MomentVector, f_smo: float,
            rank_tol: float = RANK_TOL, copsos_check: Callable | None = None,
            resolve: Callable[[int], float] | None = None, dense: bool = False,
            refine: Callable[[], Iterable[MomentVector]] | None = None) -> TightnessVerdict:
    """Tightness verdict for an optimal moment vector of the order-``k`` relaxation.

    ``copsos_check(instance)`` may return True when every objective piece is
    certified convex on the orthant; ``resolve(t)`` re-solves at order ``t``
    and returns its moment value (used to record the flat-truncation
    hypothesis). ``refine()`` may yield low-rank moment vectors (see
    ``relax.regularized_ladder``) when ``y`` itself is not flat; atoms found
    there are matched loosely and polished locally, and a polished point is
    only accepted through the value test against ``f_smo``.
    """
    blocks = [tuple(range(instance.n))] if dense else list(instance.pattern.blocks)
    pattern = SparsityPattern.dense(instance.n) if dense else instance.pattern
    cons = instance.constraints
    k0 = instance.k0
    tol = _value_tol(f_smo)
    ranks = block_ranks(y, blocks, k0, rank_tol)
    verdict_kw = dict(relaxation_value=f_smo, ranks=ranks)
    candidates = []

    def add_candidate(x, source):
        x = np.asarray(x, dtype=float)
        feas = cons.is_feasible(x, FEAS_TOL, nonneg_tol=1e-8)
        candidates.append({"point": x.tolist(), "source": source,
                           "objective": float(instance.evaluate(x)), "feasible": bool(feas),
                           "violation": cons.violation(x)})
        return feas

    pi = y.project_point()
    pi_feas = add_candidate(pi, "projection")
    f_pi = float(instance.evaluate(pi))
    if all(r == 1 for r in ranks):
        verdict = TightnessVerdict(Verdict.TIGHT_RANK_ONE, f_pi, [pi], candidates=candidates,
                                   upper_bound=f_pi if pi_feas else None, **verdict_kw)
        if not pi_feas or f_pi - f_smo > tol:
            verdict.notes.append("rank-one moment matrices but the projected point misses "
                                 "feasibility or the value tolerance")
        return verdict

    notes: list[str] = []
    flat, measures = _extract_blocks(y, blocks, k0, k, rank_tol, notes)
    matched = []
    if len(measures) == len(blocks):
        for x in match_support_points(pattern, measures, cons):
            if add_candidate(x, "matching") and abs(instance.evaluate(x) - f_smo) <= tol:
                matched.append(x)
    hyp = {"no_extra_inequalities": cons.m2 == 0}
    if flat and all(t is not None for t in flat):
        t_max = max(flat)
        hyp["flat_order"] = t_max
        if t_max < k and resolve is not None:
            f_t = resolve(t_max)
            hyp["value_at_flat_order"] = f_t
            hyp["values_agree"] = bool(abs(f_t - f_smo) <= tol)
        else:
            hyp["values_agree"] = True
    elif refine is not None:
        for y2 in refine():
            sub_notes: list[str] = []
            flat2, measures2 = _extract_blocks(y2, blocks, k0, k, max(rank_tol, APPROX_RANK_TOL),
                                               sub_notes, tri_tol=APPROX_TRI_TOL)
            if len(measures2) < len(blocks):
                continue
            notes.append("atoms taken from the regularized second phase")
            flat, measures = flat2, measures2
            hyp["second_phase"] = True
            for x in match_support_points(pattern, measures, cons,
                                          agree_tol=APPROX_AGREE_TOL, feas_tol=1e-3):
                xp = polish_point(instance, x)
                if xp is None:
                    continue
                if add_candidate(xp, "matching+polish") and \
                        abs(instance.evaluate(xp) - f_smo) <= tol and \
                        not any(np.max(np.abs(xp - m)) <= 1e-6 for m in matched):
                    matched.append(xp)
            break
    verdict_kw.update(flat_orders=flat, measures=measures, hypotheses=hyp, notes=notes)

    if matched:
        return TightnessVerdict(Verdict.TIGHT_BY_MATCHING, f_smo, matched, candidates=candidates,
                                upper_bound=min(instance.evaluate(x) for x in matched),
                                **verdict_kw)
    if copsos_check is not None and pi_feas and f_pi - f_smo <= tol and copsos_check(instance):
        return TightnessVerdict(Verdict.TIGHT_BY_COPSOS, f_pi, [pi], candidates=candidates,
                                upper_bound=f_pi, **verdict_kw)
    feas_vals = [c["objective"] for c in candidates if c["feasible"]]
    ub = min(feas_vals) if feas_vals else None
    return TightnessVerdict(Verdict.INCONCLUSIVE, None, [], candidates=candidates,
                            upper_bound=ub, **verdict_kw)


def verify_decomposition_identity(pieces: Sequence[Polynomial], lam, mu, gamma: float,
                                  instance: ProblemInstance) -> dict:
    """Residual of ``p_1 + ... + p_m + g(x; lam, mu) + gamma = 0`` and per-block checks.

    Membership of ``f_i + p_i`` in the block quadratic module is tested with a
    small feasibility SDP at the smallest order that fits its degree.
    """
    from .copsos import qmod_membership

    n = instance.n
    cons = instance.constraints
    total = Polynomial.constant(n, gamma)
    for p in pieces:
        total = total + p
    for l, r in zip(np.asarray(lam, dtype=float), range(cons.m1)):
        total = total + Polynomial.linear(cons.A[r], -cons.b[r]) * float(l)
    for m_, r in zip(np.asarray(mu, dtype=float), range(cons.m2)):
        total = total + Polynomial.linear(cons.C[r], -cons.d[r]) * float(m_)
    members = []
    for f, p, blk in zip(instance.objectives, pieces, instance.pattern.blocks):
        q = f + p
        members.append(qmod_membership(q, blk))
    return {"identity_residual": total.max_abs_coefficient(), "memberships": members,
            "mu_nonnegative": bool(np.all(np.asarray(mu) >= -1e-12))}
