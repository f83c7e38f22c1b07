"""Standard-form conic programs and a homogeneous self-dual interior-point solver.

A :class:`ConicProgram` is ``min c.x  s.t.  A x = b,  x in K`` where ``K`` is
``Free(nf) x Nonneg(nl) x PSD(s_1) x ... x PSD(s_p)``. PSD blocks are stored
as scaled upper triangles (row-major ``np.triu_indices`` order, off-diagonal
entries multiplied by sqrt(2)) so the Euclidean inner product of two vectors
equals the trace inner product of the matrices.

The dual is ``max b.y  s.t.  A^T y + z = c,  z in K*`` with ``z_free = 0``.
"""

from __future__ import annotations

import json
import logging
import os
import subprocess
import tempfile
import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

log = logging.getLogger(__name__)

SQRT2 = np.sqrt(2.0)


class Status(str, Enum):
    OPTIMAL = "Optimal"
    PRIMAL_INFEASIBLE = "PrimalInfeasible"
    DUAL_INFEASIBLE = "DualInfeasible"
    MAX_ITERATIONS = "MaxIterations"
    NUMERICAL_FAILURE = "NumericalFailure"


def svec_len(s: int) -> int:
    return s * (s + 1) // 2


def svec(M: np.ndarray) -> np.ndarray:
    s = M.shape[0]
    iu, ju = np.triu_indices(s)
    v = M[iu, ju].astype(float)
    v[iu != ju] *= SQRT2
    return v


def smat(v: np.ndarray, s: int | None = None) -> np.ndarray:
    if s is None:
        s = int(round((np.sqrt(8 * v.size + 1) - 1) / 2))
    iu, ju = np.triu_indices(s)
    vals = np.where(iu != ju, v / SQRT2, v)
    M = np.zeros((s, s))
    M[iu, ju] = vals
    M[ju, iu] = vals
    return M


@dataclass
class ConicProgram:
    c: np.ndarray
    A: sp.csr_matrix
    b: np.ndarray
    n_free: int = 0
    n_nonneg: int = 0
    psd_sides: tuple[int, ...] = ()

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).reshape(-1)
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        self.A = sp.csr_matrix(self.A, dtype=float)
        self.psd_sides = tuple(int(s) for s in self.psd_sides)
        if self.A.shape != (self.b.size, self.c.size):
            raise ValueError(f"A has shape {self.A.shape}, expected {(self.b.size, self.c.size)}")
        if self.dim != self.c.size:
            raise ValueError(f"cone dimension {self.dim} != number of variables {self.c.size}")

    @property
    def dim(self) -> int:
        return self.n_free + self.n_nonneg + sum(svec_len(s) for s in self.psd_sides)

    def psd_offsets(self) -> list[int]:
        offs, o = [], self.n_free + self.n_nonneg
        for s in self.psd_sides:
            offs.append(o)
            o += svec_len(s)
        return offs

    def psd_blocks(self, x: np.ndarray) -> list[np.ndarray]:
        return [smat(x[o:o + svec_len(s)], s) for o, s in zip(self.psd_offsets(), self.psd_sides)]

    def to_json(self) -> dict:
        A = self.A.tocoo()
        return {
            "schema": 1,
            "c": self.c.tolist(),
            "A": {"shape": list(A.shape), "rows": A.row.tolist(), "cols": A.col.tolist(),
                  "vals": A.data.tolist()},
            "b": self.b.tolist(),
            "cones": {"free": self.n_free, "nonneg": self.n_nonneg, "psd": list(self.psd_sides)},
            "vectorization": "svec-upper-rowmajor-sqrt2",
        }

    @classmethod
    def from_json(cls, data: dict) -> ConicProgram:
        a = data["A"]
        A = sp.coo_matrix((a["vals"], (a["rows"], a["cols"])), shape=tuple(a["shape"]))
        cones = data["cones"]
        return cls(np.array(data["c"]), A.tocsr(), np.array(data["b"]),
                   cones["free"], cones["nonneg"], tuple(cones["psd"]))


@dataclass
class SolverOptions:
    feas_tol: float = 1e-8
    gap_tol: float = 1e-8
    infeas_tol: float = 1e-8
    max_iter: int = 120
    step_fraction: float = 0.99
    scale_rows: bool = True
    verbose: bool = False

    @classmethod
    def from_env(cls, **overrides) -> SolverOptions:
        """Defaults, with ``SPARSECOP_TOL`` overriding both tolerances when set."""
        opts = cls(**overrides)
        tol = os.environ.get("SPARSECOP_TOL")
        if tol and "feas_tol" not in overrides and "gap_tol" not in overrides:
            opts.feas_tol = opts.gap_tol = float(tol)
        return opts


@dataclass
class ConicSolution:
    status: Status
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    primal_objective: float
    dual_objective: float
    residuals: dict = field(default_factory=dict)
    iterations: int = 0
    solve_time: float = 0.0
    certificate: np.ndarray | None = None

    @property
    def optimal(self) -> bool:
        return self.status == Status.OPTIMAL


# --------------------------------------------------------------------------
# cone helpers


class _PsdBlock:
    """Per-block Schur-complement data for one PSD cone."""

    def __init__(self, A_csc: sp.csc_matrix, offset: int, side: int):
        self.offset, self.side = offset, side
        t = svec_len(side)
        sub = A_csc[:, offset:offset + t].tocoo()
        self.rows = np.unique(sub.row)
        local = np.searchsorted(self.rows, sub.row)
        iu, ju = np.triu_indices(side)
        a, b = iu[sub.col], ju[sub.col]
        v = sub.data
        off = a != b
        # full symmetric coefficient matrices: <A_full, X> = a_svec . svec(X)
        r = np.concatenate([local, local[off]])
        aa = np.concatenate([a, b[off]])
        bb = np.concatenate([b, a[off]])
        vv = np.concatenate([np.where(off, v / SQRT2, v), v[off] / SQRT2])
        order = np.lexsort((bb, aa, r))
        self.e_row, self.e_a, self.e_b, self.e_v = r[order], aa[order], bb[order], vv[order]
        self.full = sp.csr_matrix((self.e_v, (self.e_row, self.e_a * side + self.e_b)),
                                  shape=(self.rows.size, side * side))
        self.starts = np.searchsorted(self.e_row, np.arange(self.rows.size + 1))
        counts = np.diff(self.starts)
        self.groups = [(int(q), np.flatnonzero(counts == q)) for q in np.unique(counts) if q]

    def schur(self, W: np.ndarray) -> np.ndarray:
        """``[<A_i, W A_j W>]`` over the rows this block touches."""
        s, nr = self.side, self.rows.size
        out = np.zeros((nr, nr))
        if nr == 0:
            return out
        # W A_i W = (W[:, a] * v) @ W[b, :], batched over rows with equal nonzero counts
        for q, rows in self.groups:
            chunk = max(1, int(2e6 // (s * s * max(1, q // 4))))
            for i0 in range(0, rows.size, chunk):
                rr = rows[i0:i0 + chunk]
                idx = self.starts[rr][:, None] + np.arange(q)[None, :]
                Wa = W[:, self.e_a[idx]].transpose(1, 0, 2) * self.e_v[idx][:, None, :]
                G = np.matmul(Wa, W[self.e_b[idx], :]).reshape(rr.size, s * s)
                out[:, rr] = self.full @ G.T
        return 0.5 * (out + out.T)


def _independent_columns(A_F: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    if A_F.shape[1] == 0:
        return np.zeros(0, dtype=int)
    _, R, piv = sla.qr(A_F, mode="economic", pivoting=True)
    d = np.abs(np.diag(R))
    rank = int(np.sum(d > tol * max(d[0], 1e-300))) if d.size else 0
    return np.sort(piv[:rank])


def _nt_scaling(X: np.ndarray, Z: np.ndarray):
    """Return ``G, Ginv_T, lam`` with ``G^-1 X G^-T = G^T Z G = diag(lam)``."""
    Lx = _safe_chol(X)
    Lz = _safe_chol(Z)
    U, lam, Vt = np.linalg.svd(Lz.T @ Lx)
    lam = np.maximum(lam, 1e-300)
    isq = 1.0 / np.sqrt(lam)
    G = (Lx @ Vt.T) * isq
    GinvT = (Lz @ U) * isq
    return G, GinvT, lam


def _safe_chol(M: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        w, V = np.linalg.eigh(0.5 * (M + M.T))
        w = np.maximum(w, 1e-300)
        # not triangular, but any square root works for the NT construction
        return V * np.sqrt(w)


def _max_step_psd(lam: np.ndarray, dS: np.ndarray) -> float:
    isq = 1.0 / np.sqrt(lam)
    T = dS * isq[:, None] * isq[None, :]
    mn = np.linalg.eigvalsh(0.5 * (T + T.T))[0]
    return np.inf if mn >= 0 else -1.0 / mn


def _max_step_vec(v: np.ndarray, dv: np.ndarray) -> float:
    neg = dv < 0
    if not np.any(neg):
        return np.inf
    return float(np.min(-v[neg] / dv[neg]))


# --------------------------------------------------------------------------
# solver


class InteriorPointSolver:
    """Mehrotra predictor-corrector on the homogeneous self-dual embedding.

    Nesterov-Todd scaling on PSD blocks, Schur complement on the conic part
    with the free variables eliminated through a small dense Schur system.
    """

    def __init__(self, options: SolverOptions | None = None):
        self.options = options or SolverOptions.from_env()

    def solve(self, prog: ConicProgram) -> ConicSolution:
        t_start = time.perf_counter()
        opts = self.options
        A, b, c = prog.A, prog.b.copy(), prog.c.copy()
        m, N = A.shape
        # row scaling to unit infinity norm
        if opts.scale_rows and m:
            rn = np.asarray(abs(A).max(axis=1).todense()).ravel()
            rn[rn == 0] = 1.0
            D = 1.0 / rn
        else:
            D = np.ones(m)
        A = sp.diags(D) @ A
        A = A.tocsr()
        b = D * b
        A_csc = A.tocsc()
        AT = A.T.tocsr()

        nf, nl = prog.n_free, prog.n_nonneg
        sides = prog.psd_sides
        offs = prog.psd_offsets()
        L = slice(nf, nf + nl)
        A_F = A_csc[:, :nf].toarray() if nf else np.zeros((m, 0))
        # dependent free columns make the free-variable Schur system singular; fix them at 0
        keep = _independent_columns(A_F)
        A_F = A_F[:, keep]
        c_F = c[:nf][keep]
        A_L = A_csc[:, L]
        blocks = [_PsdBlock(A_csc, o, s) for o, s in zip(offs, sides)]
        nu = nl + sum(sides)
        normb, normc = 1.0 + np.linalg.norm(b), 1.0 + np.linalg.norm(c)

        x = np.zeros(N)
        z = np.zeros(N)
        x[L] = 1.0
        z[L] = 1.0
        for o, s in zip(offs, sides):
            e = svec(np.eye(s))
            x[o:o + e.size] = e
            z[o:o + e.size] = e
        y = np.zeros(m)
        tau = kappa = 1.0

        status = Status.MAX_ITERATIONS
        cert = None
        it = 0
        best = None
        stall = 0
        for it in range(1, opts.max_iter + 1):
            # residuals
            r_p = A @ x - b * tau
            r_d = AT @ y + z - c * tau
            cx, by = float(c @ x), float(b @ y)
            r_g = cx - by + kappa
            mu = (float(x[nf:] @ z[nf:]) + tau * kappa) / (nu + 1)

            pres = np.linalg.norm(r_p) / tau / normb
            dres = np.linalg.norm(r_d) / tau / normc
            pobj, dobj = cx / tau, by / tau
            gap = abs(pobj - dobj) / (1.0 + abs(pobj))
            if opts.verbose:
                log.info("it %3d pres %.2e dres %.2e gap %.2e tau %.2e kappa %.2e mu %.2e",
                         it, pres, dres, gap, tau, kappa, mu)
            merit = max(pres, dres, gap)
            if best is None or merit < best[0]:
                best = (merit, x.copy(), y.copy(), z.copy(), tau)
            if pres <= opts.feas_tol and dres <= opts.feas_tol and gap <= opts.gap_tol:
                status = Status.OPTIMAL
                break
            # infeasibility certificates
            if by > 0:
                ry = np.linalg.norm(AT @ y + z) / max(1.0, np.linalg.norm(c))
                if ry <= opts.infeas_tol * by:
                    status, cert = Status.PRIMAL_INFEASIBLE, D * y / by
                    break
            if cx < 0:
                rx = np.linalg.norm(A @ x) / max(1.0, np.linalg.norm(b))
                if rx <= opts.infeas_tol * (-cx):
                    status, cert = Status.DUAL_INFEASIBLE, x / (-cx)
                    break

            # scaling
            try:
                scal = [_nt_scaling(smat(x[o:o + svec_len(s)], s), smat(z[o:o + svec_len(s)], s))
                        for o, s in zip(offs, sides)]
            except (np.linalg.LinAlgError, FloatingPointError):
                status = Status.NUMERICAL_FAILURE
                break
            Ws = [G @ G.T for G, _, _ in scal]
            hL = x[L] / z[L]

            def H(v):
                out = np.zeros_like(v)
                out[L] = hL * v[L]
                for (o, s), W in zip(zip(offs, sides), Ws):
                    out[o:o + svec_len(s)] = svec(W @ smat(v[o:o + svec_len(s)], s) @ W)
                return out

            # Schur complement on the conic part
            M = self._assemble(m, A_L, hL, blocks, Ws)
            try:
                kkt = _ReducedSystem(M, A_F)
            except np.linalg.LinAlgError:
                status = Status.NUMERICAL_FAILURE
                break

            c_C = c.copy()
            c_C[:nf] = 0.0
            rhs2_y = b + A @ H(c_C)
            rhs2_f = c_F
            dy2, dxf2 = kkt.solve(rhs2_y, rhs2_f)
            dx2 = H(AT @ dy2 - c_C)
            dx2[:nf] = 0.0
            dx2[keep] = dxf2
            cdx2_bdy2 = float(c @ dx2 - b @ dy2)

            def direction(eta, Rc, r_kappa):
                r_dC = r_d.copy()
                r_dC[:nf] = 0.0
                rhs1_y = -eta * r_p - A @ (Rc + eta * H(r_dC))
                rhs1_f = -eta * r_d[:nf][keep]
                dy1, dxf1 = kkt.solve(rhs1_y, rhs1_f)
                dx1 = Rc + H(eta * r_dC + AT @ dy1)
                dx1[:nf] = 0.0
                dx1[keep] = dxf1
                num = -eta * r_g - float(c @ dx1) + float(b @ dy1) - r_kappa / tau
                den = cdx2_bdy2 - kappa / tau
                dtau = num / den
                dxv = dx1 + dtau * dx2
                dyv = dy1 + dtau * dy2
                dzv = -eta * r_d - AT @ dyv + c * dtau
                dzv[:nf] = 0.0
                dkappa = (r_kappa - kappa * dtau) / tau
                return dxv, dyv, dzv, dtau, dkappa

            def comp_rhs(target, corr_x=None, corr_z=None, dta=0.0, dka=0.0):
                """Scaled complementarity right-hand side mapped back to x-space."""
                Rc = np.zeros(N)
                xl, zl = x[L], z[L]
                rl = target - xl * zl
                if corr_x is not None:
                    rl = rl - corr_x[L] * corr_z[L]
                Rc[L] = rl / zl
                for k, ((o, s), (G, GinvT, lam)) in enumerate(zip(zip(offs, sides), scal)):
                    R = np.diag(target - lam * lam)
                    if corr_x is not None:
                        dXs = GinvT.T @ smat(corr_x[o:o + svec_len(s)], s) @ GinvT
                        dZs = G.T @ smat(corr_z[o:o + svec_len(s)], s) @ G
                        P = dXs @ dZs
                        R = R - 0.5 * (P + P.T)
                    S = 2.0 * R / (lam[:, None] + lam[None, :])
                    Rc[o:o + svec_len(s)] = svec(G @ S @ G.T)
                rk = target - tau * kappa - dta * dka
                return Rc, rk

            def step_length(dxv, dzv, dtau, dkappa):
                amax = min(_max_step_vec(x[L], dxv[L]), _max_step_vec(z[L], dzv[L]),
                           _max_step_vec(np.array([tau, kappa]), np.array([dtau, dkappa])))
                for (o, s), (G, GinvT, lam) in zip(zip(offs, sides), scal):
                    dXs = GinvT.T @ smat(dxv[o:o + svec_len(s)], s) @ GinvT
                    dZs = G.T @ smat(dzv[o:o + svec_len(s)], s) @ G
                    amax = min(amax, _max_step_psd(lam, dXs), _max_step_psd(lam, dZs))
                return amax

            # predictor
            Rc_a, rk_a = comp_rhs(0.0)
            dxa, dya, dza, dta, dka = direction(1.0, Rc_a, rk_a)
            alpha_a = min(1.0, step_length(dxa, dza, dta, dka))
            sigma = (1.0 - alpha_a) ** 3
            eta = 1.0 - sigma
            # corrector
            Rc, rk = comp_rhs(sigma * mu, dxa, dza, dta, dka)
            dx, dy, dz, dtau, dkappa = direction(eta, Rc, rk)
            alpha = min(1.0, opts.step_fraction * step_length(dx, dz, dtau, dkappa))
            if not np.isfinite(alpha) or alpha < 1e-12 or not np.all(np.isfinite(dx)):
                stall += 1
                if stall >= 3:
                    status = Status.NUMERICAL_FAILURE
                    break
                continue
            x = x + alpha * dx
            y = y + alpha * dy
            z = z + alpha * dz
            tau = tau + alpha * dtau
            kappa = kappa + alpha * dkappa
            # renormalize the embedding to keep magnitudes bounded
            scale = max(tau, kappa)
            if scale > 1e6 or scale < 1e-6:
                x, y, z = x / scale, y / scale, z / scale
                tau, kappa = tau / scale, kappa / scale
            if alpha < 1e-8:
                stall += 1
                if stall >= 5:
                    status = Status.NUMERICAL_FAILURE
                    break
            else:
                stall = 0

        if status not in (Status.OPTIMAL, Status.PRIMAL_INFEASIBLE, Status.DUAL_INFEASIBLE) \
                and best is not None:
            _, x, y, z, tau = best
        if status in (Status.PRIMAL_INFEASIBLE, Status.DUAL_INFEASIBLE):
            xs, ys, zs = x, D * y, z
        else:
            xs, ys, zs = x / tau, D * y / tau, z / tau
        res = _residuals(prog, xs, ys, zs)
        return ConicSolution(status, xs, ys, zs, float(prog.c @ xs), float(prog.b @ ys),
                             res, it, time.perf_counter() - t_start, cert)

    @staticmethod
    def _assemble(m, A_L, hL, blocks, Ws):
        dense = m <= 4000
        if dense:
            M = np.zeros((m, m))
        else:
            rows, cols, vals = [], [], []
        if A_L.shape[1]:
            AL = A_L @ sp.diags(hL) @ A_L.T
            if dense:
                M += AL.toarray()
            else:
                AL = AL.tocoo()
                rows.append(AL.row)
                cols.append(AL.col)
                vals.append(AL.data)
        for blk, W in zip(blocks, Ws):
            Mb = blk.schur(W)
            if dense:
                M[np.ix_(blk.rows, blk.rows)] += Mb
            else:
                rr, cc = np.meshgrid(blk.rows, blk.rows, indexing="ij")
                rows.append(rr.ravel())
                cols.append(cc.ravel())
                vals.append(Mb.ravel())
        if dense:
            return M
        return sp.csc_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                             shape=(m, m))


class _ReducedSystem:
    """Solve ``[[M, A_F], [A_F^T, 0]] [u; v] = [r; s]``."""

    def __init__(self, M, A_F: np.ndarray):
        self.nf = A_F.shape[1]
        self.A_F = A_F
        self.sparse = sp.issparse(M)
        self.mode = None
        m = M.shape[0]
        diag = M.diagonal()
        reg = 1e-13 * max(1.0, float(np.max(np.abs(diag)))) if m else 0.0
        try:
            if self.sparse:
                Mr = (M + reg * sp.eye(m, format="csc")).tocsc()
                self.lu = spla.splu(Mr)
            else:
                self.chol = sla.cho_factor(M + reg * np.eye(m), lower=True, check_finite=False)
            if self.nf:
                MiA = self._Msolve(A_F)
                S = A_F.T @ MiA
                self.S_lu = sla.lu_factor(S, check_finite=False)
                self.MiA = MiA
                if not np.all(np.isfinite(self.S_lu[0])) or \
                        np.min(np.abs(np.diag(self.S_lu[0]))) < 1e-14 * max(1.0, np.max(np.abs(S))):
                    raise np.linalg.LinAlgError("singular free-variable Schur complement")
            self.mode = "schur"
            self.Mfull = M
        except (np.linalg.LinAlgError, ValueError, RuntimeError):
            # M singular (e.g. rows touching only free variables): factor the saddle system
            Md = M.toarray() if self.sparse else M
            K = np.block([[Md, A_F], [A_F.T, np.zeros((self.nf, self.nf))]])
            scale = max(1.0, float(np.max(np.abs(K))))
            K[m:, m:] -= 1e-14 * scale * np.eye(self.nf)
            K[:m, :m] += 1e-14 * scale * np.eye(m)
            self.K = K
            self.K_lu = sla.lu_factor(K, check_finite=False)
            self.mode = "saddle"

    def _Msolve(self, r):
        # a method, not a stored lambda: a self-referencing closure would keep the
        # factorization alive until the cyclic collector runs
        if self.sparse:
            return self.lu.solve(r)
        return sla.cho_solve(self.chol, r, check_finite=False)

    def _solve_once(self, r, s):
        if self.mode == "saddle":
            sol = sla.lu_solve(self.K_lu, np.concatenate([r, s]), check_finite=False)
            return sol[:r.size], sol[r.size:]
        u0 = self._Msolve(r)
        if not self.nf:
            return u0, np.zeros(0)
        v = sla.lu_solve(self.S_lu, self.A_F.T @ u0 - s, check_finite=False)
        u = u0 - self.MiA @ v
        return u, v

    def solve(self, r, s):
        u, v = self._solve_once(r, s)
        # one step of iterative refinement against the unregularized system
        M = self.Mfull if self.mode == "schur" else self.K[:r.size, :r.size]
        rr = r - (M @ u) - self.A_F @ v
        rs = s - self.A_F.T @ u
        du, dv = self._solve_once(np.asarray(rr).ravel(), rs)
        return u + du, v + dv


def _residuals(prog: ConicProgram, x, y, z) -> dict:
    pr = prog.A @ x - prog.b
    dr = prog.A.T @ y + z - prog.c
    p, d = float(prog.c @ x), float(prog.b @ y)
    mins = [float(np.linalg.eigvalsh(B)[0]) for B in prog.psd_blocks(x)] if prog.psd_sides else []
    return {
        "primal_feasibility": float(np.linalg.norm(pr) / (1.0 + np.linalg.norm(prog.b))),
        "dual_feasibility": float(np.linalg.norm(dr) / (1.0 + np.linalg.norm(prog.c))),
        "gap": float(abs(p - d) / (1.0 + abs(p))),
        "min_psd_eigenvalue": min(mins) if mins else None,
    }


def solve(prog: ConicProgram, options: SolverOptions | None = None,
          backend=None) -> ConicSolution:
    """Solve with the in-house solver, or with ``backend`` when given."""
    if backend is not None:
        return backend.solve(prog)
    return InteriorPointSolver(options).solve(prog)


class ExternalProcessBackend:
    """Run an external command on the JSON interchange form.

    The command receives ``<problem.json> <solution.json>`` and must write
    ``{"status", "x", "y", "z"}``; ``z`` may be omitted (recomputed as
    ``c - A^T y``).
    """

    def __init__(self, command: list[str], timeout: float | None = None):
        self.command = list(command)
        self.timeout = timeout

    def solve(self, prog: ConicProgram) -> ConicSolution:
        t0 = time.perf_counter()
        with tempfile.TemporaryDirectory() as tmp:
            pin = os.path.join(tmp, "problem.json")
            pout = os.path.join(tmp, "solution.json")
            with open(pin, "w") as fh:
                json.dump(prog.to_json(), fh)
            subprocess.run(self.command + [pin, pout], check=True, timeout=self.timeout,
                           capture_output=True)
            with open(pout) as fh:
                out = json.load(fh)
        x = np.asarray(out.get("x") or np.zeros(prog.dim), dtype=float)
        y = np.asarray(out.get("y") or np.zeros(prog.b.size), dtype=float)
        z = np.asarray(out["z"], dtype=float) if out.get("z") is not None else prog.c - prog.A.T @ y
        return ConicSolution(Status(out["status"]), x, y, z, float(prog.c @ x), float(prog.b @ y),
                             _residuals(prog, x, y, z), int(out.get("iterations", 0)),
                             time.perf_counter() - t0)
