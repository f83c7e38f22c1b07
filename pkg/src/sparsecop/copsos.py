"""Convexity on the nonnegative orthant certified through the Hessian.

A polynomial ``p`` is certified when its Hessian can be written as
``P_0 P_0^T + sum_j x_j P_j P_j^T``; with monomial bases this is an SDP in
Gram matrices ``G_0`` and ``G_j`` over ``[x]_d (x) I``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import lsq_linear

from .basis import MomentVector, monomials
from .poly import Monomial, Polynomial, ProblemInstance, SparsityPattern
from .sdp import SQRT2, ConicProgram, SolverOptions, Status, smat, solve, svec, svec_len


CERT_TOL = 1e-7  # coefficient-wise Hessian reconstruction
PSD_TOL = 1e-9


@dataclass
class CopSosCertificate:
    block: tuple[int, ...]
    degree: int
    gram0: np.ndarray
    basis0: list[Monomial]
    grams: dict[int, np.ndarray]  # variable index -> Gram matrix
    basis1: list[Monomial]
    residual: float = 0.0
    method: str = "sdp"

    def hessian_part(self, n: int) -> list[list[Polynomial]]:
        """Reconstructed ``P_0 P_0^T + sum_j x_j P_j P_j^T`` as a matrix of polynomials."""
        nb = len(self.block)
        out = [[Polynomial(n) for _ in range(nb)] for _ in range(nb)]
        parts = [(Polynomial.constant(n, 1.0), self.gram0, self.basis0)]
        parts += [(Polynomial.variable(n, j), G, self.basis1) for j, G in self.grams.items()]
        for mult, G, basis in parts:
            for r in range(nb):
                for c in range(nb):
                    terms: dict = {}
                    for a, ba in enumerate(basis):
                        for b, bb in enumerate(basis):
                            v = G[a * nb + r, b * nb + c]
                            if v:
                                key = tuple(i + j for i, j in zip(ba, bb))
                                terms[key] = terms.get(key, 0.0) + v
                    out[r][c] = out[r][c] + mult * Polynomial(n, terms)
        return out

    def min_eigenvalue(self) -> float:
        mats = [self.gram0] + list(self.grams.values())
        return min(float(np.linalg.eigvalsh(G)[0]) for G in mats if G.size)

    def to_json(self) -> dict:
        return {
            "block": [j + 1 for j in self.block], "degree": self.degree, "method": self.method,
            "basis0": [list(a) for a in self.basis0], "gram0": self.gram0.tolist(),
            "basis1": [list(a) for a in self.basis1],
            "grams": {f"x{j + 1}": G.tolist() for j, G in self.grams.items()},
            "residual": self.residual,
        }


def _hessian_coefficients(p: Polynomial, block) -> dict:
    """``{(r, c, gamma): coefficient}`` for ``r <= c`` over the block's Hessian."""
    H = p.hessian(block)
    out = {}
    for r in range(len(block)):
        for c in range(r, len(block)):
            for gamma, v in H[r][c].terms.items():
                out[(r, c, gamma)] = v
    return out


def hessian_residual(p: Polynomial, cert: CopSosCertificate) -> float:
    H = p.hessian(cert.block)
    R = cert.hessian_part(p.n)
    return max((H[r][c] - R[r][c]).max_abs_coefficient()
               for r in range(len(cert.block)) for c in range(len(cert.block)))


def is_cop_sos_convex(p: Polynomial, block, pad: int = 0,
                      options: SolverOptions | None = None) -> CopSosCertificate | None:
    """Hessian-membership SDP; ``None`` means not certifiable at this basis degree.

    Gram bases have degree ``ceil((deg-2)/2) + pad`` for the constant
    generator and ``ceil((deg-3)/2) + pad`` for each ``x_j`` (only when
    ``deg >= 3``).
    """
    block = tuple(block)
    if not p.support_variables() <= set(block):
        raise ValueError("polynomial uses variables outside the block")
    n, nb, deg = p.n, len(block), p.degree
    if deg < 2:
        # affine: zero Hessian
        return CopSosCertificate(block, deg, np.zeros((0, 0)), [], {}, [], 0.0, "trivial")
    d0 = math.ceil((deg - 2) / 2) + pad
    basis0 = monomials(block, d0, n)
    use_x = deg >= 3 or pad > 0
    d1 = max(math.ceil((deg - 3) / 2), 0) + pad if use_x else -1
    basis1 = monomials(block, d1, n) if use_x else []

    target = _hessian_coefficients(p, block)
    gens = [((0,) * n, basis0)] + ([(tuple(int(i == j) for i in range(n)), basis1)
                                    for j in block] if use_x else [])
    full = [len(basis) * nb for _, basis in gens]
    keep = _reduce_faces(gens, nb, target)
    sides = [len(k) for k in keep]
    rows: dict = {}
    A = _coefficient_map(gens, nb, rows, keep)
    if any(v and key not in rows for key, v in target.items()):
        return None  # a required coefficient has no Gram entry left to produce it
    b = np.zeros(len(rows))
    for key, v in target.items():
        if key in rows:
            b[rows[key]] = v
    offsets = list(np.cumsum([0] + [svec_len(s) for s in sides[:-1]]))
    c = np.concatenate([svec(np.eye(s)) for s in sides])
    if A.shape[0] == 0:
        return CopSosCertificate(block, deg, np.zeros((full[0],) * 2), basis0,
                                 {j: np.zeros((f, f)) for j, f in zip(block, full[1:])}
                                 if use_x else {}, basis1)
    prog = ConicProgram(c, A, b, 0, 0, tuple(s for s in sides if s))
    sol = solve(prog, options or SolverOptions(feas_tol=1e-10, gap_tol=1e-10))
    if sol.status not in _USABLE or sol.x is None:
        return None
    mats = []
    for o, s, k, f in zip(offsets, sides, keep, full):
        G = np.zeros((f, f))
        if s:
            G[np.ix_(k, k)] = _psd_part(smat(sol.x[o:o + svec_len(s)], s))
        mats.append(G)
    grams = {j: M for j, M in zip(block, mats[1:])} if use_x else {}
    cert = CopSosCertificate(block, deg, mats[0], basis0, grams, basis1)
    cert.residual = hessian_residual(p, cert)
    if cert.residual > CERT_TOL:
        return None
    return cert


_USABLE = (Status.OPTIMAL, Status.NUMERICAL_FAILURE, Status.MAX_ITERATIONS)


def _psd_part(G: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(G)
    return (V * np.clip(w, 0.0, None)) @ V.T


def _entries(gens, nb, keep):
    """Yield ``(g, t, ii, jj, key, coef)`` for every svec variable and orientation."""
    for g, ((shift, basis), k) in enumerate(zip(gens, keep)):
        iu, ju = np.triu_indices(len(k))
        for t, (u, v) in enumerate(zip(iu, ju)):
            i, j = k[u], k[v]
            pairs = [(i, j)] if u == v else [(i, j), (j, i)]
            coef = 1.0 if u == v else 1.0 / SQRT2
            for ii, jj in pairs:
                a, r = divmod(ii, nb)
                b, c = divmod(jj, nb)
                if r > c:
                    continue  # only the upper triangle of H is matched
                gamma = tuple(x + y + z for x, y, z in zip(basis[a], basis[b], shift))
                yield g, t, ii, jj, (r, c, gamma), coef


def _reduce_faces(gens, nb, target):
    """Drop Gram basis elements that any PSD solution must leave at zero.

    A Hessian coefficient with target 0 fed only by diagonal Gram entries
    forces all of them to vanish, hence their rows and columns too. Repeated
    to a fixed point; this restores a strict interior in common cases.
    """
    keep = [list(range(len(basis) * nb)) for _, basis in gens]
    while True:
        feeders: dict = {}
        for g, _, ii, jj, key, _ in _entries(gens, nb, keep):
            feeders.setdefault(key, []).append((g, ii, jj))
        drop = set()
        for key, fs in feeders.items():
            if abs(target.get(key, 0.0)) == 0.0 and all(ii == jj for _, ii, jj in fs):
                drop.update((g, ii) for g, ii, _ in fs)
        if not drop:
            return keep
        keep = [[i for i in k if (g, i) not in drop] for g, k in enumerate(keep)]


def _coefficient_map(gens, nb, rows, keep):
    """Sparse map from stacked svec Gram variables to Hessian coefficients.

    For a symmetric Gram ``G``, ``H[r][c]`` collects ``G[(a,r),(b,c)]`` over
    all ordered basis pairs; in svec coordinates an off-diagonal variable
    appears once in each orientation.
    """
    offs = np.cumsum([0] + [svec_len(len(k)) for k in keep])
    trip_r, trip_c, trip_v = [], [], []
    for g, t, _, _, key, coef in _entries(gens, nb, keep):
        if key not in rows:
            rows[key] = len(rows)
        trip_r.append(rows[key])
        trip_c.append(offs[g] + t)
        trip_v.append(coef)
    return sp.csr_matrix((trip_v, (trip_r, trip_c)), shape=(len(rows), int(offs[-1])))


def cubic_shortcut(p: Polynomial, block) -> CopSosCertificate | None:
    """For ``deg <= 3``: ``H = A_0 + sum_j x_j A_j``; certified iff every ``A`` is PSD."""
    block = tuple(block)
    if p.degree > 3:
        raise ValueError("cubic_shortcut needs degree <= 3")
    n, nb = p.n, len(block)
    H = p.hessian(block)
    zero = (0,) * n
    A0 = np.array([[H[r][c].coefficient(zero) for c in range(nb)] for r in range(nb)])
    grams = {}
    for j in block:
        e = tuple(int(i == j) for i in range(n))
        grams[j] = np.array([[H[r][c].coefficient(e) for c in range(nb)] for r in range(nb)])
    for M in [A0] + list(grams.values()):
        if np.linalg.eigvalsh(M)[0] < -PSD_TOL:
            return None
    cert = CopSosCertificate(block, p.degree, A0, [zero], grams, [zero], method="cubic")
    cert.residual = hessian_residual(p, cert)
    return cert


def certify_block(p: Polynomial, block, options: SolverOptions | None = None):
    """Cubic test when it applies, the SDP otherwise."""
    if p.degree <= 3:
        return cubic_shortcut(p, block)
    return is_cop_sos_convex(p, block, options=options)


def all_blocks_certified(instance: ProblemInstance, options: SolverOptions | None = None) -> bool:
    return all(certify_block(f, blk, options) is not None
               for f, blk in zip(instance.objectives, instance.pattern.blocks))


def jensen_gap(p: Polynomial, y: MomentVector) -> float:
    """``<p, y> - p(pi(y))``; nonnegative for certified ``p`` and feasible ``y``."""
    return float(y.riesz(p) - p.evaluate(y.project_point()))


# --------------------------------------------------------------------------
# KKT data and the shifted certificate


@dataclass
class KktCertificate:
    point: np.ndarray
    lam: np.ndarray
    mu: np.ndarray
    eta: np.ndarray
    eta_blocks: list[np.ndarray] = field(default_factory=list)
    stationarity: float = 0.0
    complementarity: float = 0.0


def kkt_multipliers(instance: ProblemInstance, u, active_tol: float = 1e-6) -> KktCertificate:
    """Least-squares multipliers with sign bounds on the active set.

    Solves ``grad f(u) = A^T lam + C^T mu + eta`` with ``mu >= 0`` on active
    rows of ``Cx >= d`` and ``eta >= 0`` on zero coordinates; inactive ones are 0.
    """
    u = np.asarray(u, dtype=float)
    n = instance.n
    cons = instance.constraints
    grad = np.array([g.evaluate(u) for g in instance.objective.gradient()])
    act_c = np.flatnonzero(np.abs(cons.C @ u - cons.d) <= active_tol) if cons.m2 else np.array([], int)
    act_x = np.flatnonzero(np.abs(u) <= active_tol)
    cols = [cons.A.T] if cons.m1 else []
    if act_c.size:
        cols.append(cons.C[act_c].T)
    if act_x.size:
        cols.append(np.eye(n)[:, act_x])
    if cols:
        M = np.hstack(cols)
        lb = np.concatenate([np.full(cons.m1, -np.inf), np.zeros(act_c.size + act_x.size)])
        ub = np.full(M.shape[1], np.inf)
        sol = lsq_linear(M, grad, bounds=(lb, ub), method="bvls", tol=1e-14)
        z = sol.x
    else:
        z = np.zeros(0)
    lam = z[:cons.m1]
    mu = np.zeros(cons.m2)
    mu[act_c] = z[cons.m1:cons.m1 + act_c.size]
    eta = np.zeros(n)
    eta[act_x] = z[cons.m1 + act_c.size:]
    stat = grad - (cons.A.T @ lam if cons.m1 else 0) - (cons.C.T @ mu if cons.m2 else 0) - eta
    comp = abs(float(mu @ (cons.C @ u - cons.d))) if cons.m2 else 0.0
    comp = max(comp, abs(float(eta @ u)))
    kkt = KktCertificate(u, lam, mu, eta, stationarity=float(np.linalg.norm(stat)),
                         complementarity=comp)
    kkt.eta_blocks = split_eta(eta, instance.pattern)
    return kkt


def split_eta(eta: np.ndarray, pattern: SparsityPattern) -> list[np.ndarray]:
    """Give each coordinate of ``eta`` entirely to the lowest-index block containing it."""
    parts = [np.zeros_like(eta) for _ in pattern.blocks]
    owner = {}
    for i, blk in enumerate(pattern.blocks):
        for j in blk:
            owner.setdefault(j, i)
    for j, i in owner.items():
        parts[i][j] = eta[j]
    return parts


class KktResidualTooLarge(ValueError):
    pass


def construct_shifted_certificate(u, kkt: KktCertificate, instance: ProblemInstance,
                                  tol: float = 1e-6):
    """Affine ``p_i = -(x-u)^T (grad f_i(u) - eta_i) - f_i(u)`` and the identity residual.

    The residual is the largest coefficient of
    ``p_1 + ... + p_m + lam^T(Ax-b) + mu^T(Cx-d) + f(u)``.
    """
    u = np.asarray(u, dtype=float)
    if kkt.stationarity > tol or kkt.complementarity > tol:
        raise KktResidualTooLarge(
            f"KKT residuals {kkt.stationarity:.2e}/{kkt.complementarity:.2e} exceed {tol:g}")
    n = instance.n
    cons = instance.constraints
    pieces = []
    for f, eta_i in zip(instance.objectives, kkt.eta_blocks):
        g = np.array([d.evaluate(u) for d in f.gradient()]) - eta_i
        fu = float(f.evaluate(u))
        # -(x-u).g - f(u) = -g.x + (g.u - f(u))
        pieces.append(Polynomial.linear(-g, float(g @ u) - fu))
    total = Polynomial.constant(n, float(instance.evaluate(u)))
    for p in pieces:
        total = total + p
    for r in range(cons.m1):
        total = total + Polynomial.linear(cons.A[r], -cons.b[r]) * float(kkt.lam[r])
    for r in range(cons.m2):
        total = total + Polynomial.linear(cons.C[r], -cons.d[r]) * float(kkt.mu[r])
    return pieces, total.max_abs_coefficient()


def qmod_membership(q: Polynomial, block, options: SolverOptions | None = None) -> dict:
    """Test ``q`` in ``Sigma[x_B] + sum_j x_j Sigma[x_B]`` at the smallest fitting order.

    Solves ``max gamma`` with ``q - gamma`` in the truncated module; ``q`` is
    a member (up to closure) when the optimal ``gamma`` is nonnegative.
    """
    from .poly import LinearConstraints
    from .relax import build_sos_program, sparse_relaxation

    block = tuple(block)
    n = q.n
    k = max(1, math.ceil(max(q.degree, 0) / 2))
    pattern = SparsityPattern(n, (block,) + tuple((j,) for j in range(n) if j not in block))
    pieces = (q,) + tuple(Polynomial(n) for _ in pattern.blocks[1:])
    inst = ProblemInstance(pattern, pieces, LinearConstraints.empty(n))
    relax = sparse_relaxation(inst, k)
    prog, _ = build_sos_program(relax)
    sol = solve(prog, options)
    gamma = -sol.primal_objective if sol.status == Status.OPTIMAL else -math.inf
    return {"status": sol.status.value, "gamma": gamma, "member": gamma >= -1e-6}
