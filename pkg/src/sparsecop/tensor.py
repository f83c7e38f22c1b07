"""Symmetric tensors, their forms, and copositivity on the simplex."""

from __future__ import annotations

import itertools
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .poly import (LinearConstraints, Polynomial, ProblemInstance, SparsityPattern,
                   decompose_objective)
from .sdp import SolverOptions

MARGIN = 1e-8


def orbit_size(rep) -> int:
    """Number of distinct index tuples that permute to ``rep``."""
    size = math.factorial(len(rep))
    for c in Counter(rep).values():
        size //= math.factorial(c)
    return size


class SymmetricTensor:
    """Order-``d`` symmetric tensor on ``R^n``, one stored value per index orbit.

    Orbits are keyed by sorted 0-based index tuples; absent orbits are zero.
    """

    def __init__(self, order: int, dim: int, values: dict | None = None):
        if order < 1 or dim < 1:
            raise ValueError("order and dimension must be positive")
        self.order = order
        self.dim = dim
        self._values: dict[tuple[int, ...], float] = {}
        for idx, v in (values or {}).items():
            rep = self._rep(idx)
            if v:
                self._values[rep] = float(v)

    def _rep(self, idx) -> tuple[int, ...]:
        idx = tuple(int(i) for i in idx)
        if len(idx) != self.order:
            raise ValueError(f"index {idx} has length {len(idx)}, expected {self.order}")
        if any(not 0 <= i < self.dim for i in idx):
            raise ValueError(f"index {idx} out of range for dimension {self.dim}")
        return tuple(sorted(idx))

    @classmethod
    def from_entries(cls, order: int, dim: int, entries, one_based: bool = True,
                     atol: float = 1e-12) -> SymmetricTensor:
        """Build from listed ``(index, value)`` pairs, filling each orbit.

        Listing several members of one orbit is allowed when they agree;
        conflicting values raise ``ValueError``.
        """
        shift = 1 if one_based else 0
        t = cls(order, dim)
        seen: dict[tuple[int, ...], float] = {}
        for idx, val in entries:
            rep = t._rep([i - shift for i in idx])
            val = float(val)
            if rep in seen and abs(seen[rep] - val) > atol:
                raise ValueError(f"conflicting values {seen[rep]} and {val} for orbit "
                                 f"{[i + shift for i in rep]}")
            seen[rep] = val
        t._values = {r: v for r, v in seen.items() if v}
        return t

    @classmethod
    def from_polynomial(cls, p: Polynomial) -> SymmetricTensor:
        """Inverse of ``to_polynomial`` for homogeneous ``p``."""
        degs = {sum(a) for a in p.terms}
        if len(degs) > 1:
            raise ValueError("polynomial is not homogeneous")
        d = degs.pop() if degs else 1
        t = cls(d, p.n)
        for alpha, c in p.terms.items():
            rep = tuple(j for j, e in enumerate(alpha) for _ in range(e))
            t._values[rep] = c / orbit_size(rep)
        return t

    @classmethod
    def from_matrix(cls, M) -> SymmetricTensor:
        M = np.asarray(M, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1] or not np.allclose(M, M.T):
            raise ValueError("matrix must be square and symmetric")
        n = M.shape[0]
        return cls(2, n, {(i, j): M[i, j] for i in range(n) for j in range(i, n)})

    @classmethod
    def rank_one(cls, v, order: int) -> SymmetricTensor:
        v = np.asarray(v, dtype=float)
        vals = {rep: float(np.prod(v[list(rep)]))
                for rep in itertools.combinations_with_replacement(range(v.size), order)}
        return cls(order, v.size, vals)

    def __getitem__(self, idx) -> float:
        return self._values.get(self._rep(idx), 0.0)

    def orbits(self) -> dict[tuple[int, ...], float]:
        return dict(self._values)

    def to_dense(self) -> np.ndarray:
        T = np.zeros((self.dim,) * self.order)
        for rep, v in self._values.items():
            for perm in set(itertools.permutations(rep)):
                T[perm] = v
        return T

    def to_polynomial(self) -> Polynomial:
        """``A(x) = sum A_{i1..id} x_i1 ... x_id``: orbit value times orbit size."""
        terms: dict = {}
        for rep, v in self._values.items():
            alpha = [0] * self.dim
            for i in rep:
                alpha[i] += 1
            terms[tuple(alpha)] = v * orbit_size(rep)
        return Polynomial(self.dim, terms)

    def evaluate_direct(self, x) -> float:
        """Full ``d``-fold index sum over the dense array (small sizes only)."""
        T = self.to_dense()
        x = np.asarray(x, dtype=float)
        for _ in range(self.order):
            T = T @ x
        return float(T)

    def __add__(self, other: SymmetricTensor) -> SymmetricTensor:
        if (self.order, self.dim) != (other.order, other.dim):
            raise ValueError("shape mismatch")
        vals = dict(self._values)
        for r, v in other._values.items():
            vals[r] = vals.get(r, 0.0) + v
        return SymmetricTensor(self.order, self.dim, vals)

    def __mul__(self, c: float) -> SymmetricTensor:
        return SymmetricTensor(self.order, self.dim, {r: c * v for r, v in self._values.items()})

    __rmul__ = __mul__

    def to_json(self) -> dict:
        return {"order": self.order, "dim": self.dim,
                "entries": [{"idx": [i + 1 for i in r], "val": v}
                            for r, v in sorted(self._values.items())]}

    @classmethod
    def from_json(cls, data: dict) -> SymmetricTensor:
        try:
            order, dim = int(data["order"]), int(data["dim"])
            entries = [(e["idx"], e["val"]) for e in data.get("entries", [])]
        except (KeyError, TypeError) as err:
            raise ValueError("tensor JSON needs order, dim and entries [{idx, val}]") from err
        return cls.from_entries(order, dim, entries)


def tensor_to_polynomial(A: SymmetricTensor) -> Polynomial:
    return A.to_polynomial()


def load_tensor(path) -> tuple[SymmetricTensor, SparsityPattern | None]:
    """Tensor file; an optional ``blocks`` field (1-based) gives the pattern."""
    data = json.loads(Path(path).read_text())
    A = SymmetricTensor.from_json(data)
    blocks = data.get("blocks")
    return A, SparsityPattern.from_one_based(A.dim, blocks) if blocks else None


def save_tensor(A: SymmetricTensor, path, pattern: SparsityPattern | None = None) -> None:
    data = A.to_json()
    if pattern is not None:
        data["blocks"] = pattern.one_based()
    Path(path).write_text(json.dumps(data, indent=1) + "\n")


def support_pattern(p: Polynomial) -> SparsityPattern:
    """Inclusion-maximal term supports as blocks; variables in no term get singletons."""
    sups = {frozenset(j for j, e in enumerate(a) if e) for a in p.terms}
    sups.discard(frozenset())
    maximal = [s for s in sups if not any(s < t for t in sups)]
    covered = set().union(*maximal) if maximal else set()
    maximal += [frozenset([j]) for j in range(p.n) if j not in covered]
    blocks = sorted(tuple(sorted(s)) for s in maximal)
    return SparsityPattern(p.n, tuple(blocks))


def simplex_instance(A: SymmetricTensor, pattern: SparsityPattern | None = None,
                     name: str = "tensor") -> ProblemInstance:
    """``min A(x)`` subject to ``sum x = 1`` and ``x >= 0``."""
    f = A.to_polynomial()
    pattern = pattern or support_pattern(f)
    if pattern.n != A.dim:
        raise ValueError("pattern dimension does not match the tensor")
    pieces = decompose_objective(f, pattern)
    cons = LinearConstraints.build(A.dim, np.ones((1, A.dim)), [1.0])
    return ProblemInstance(pattern, tuple(pieces), cons, name)


@dataclass
class CopositivityResult:
    verdict: str  # "Copositive", "NotCopositive" or "Unknown"
    value: float | None
    lower_bound: float
    minimizer: np.ndarray | None
    report: object = None
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"schema": 1, "verdict": self.verdict, "value": self.value,
                "lower_bound": self.lower_bound,
                "minimizer": None if self.minimizer is None else self.minimizer.tolist(),
                "notes": self.notes,
                "report": None if self.report is None else self.report.to_json()}


def simplex_witness(A: SymmetricTensor, starts=(), polish: int = 5,
                    max_pairs: int = 2000) -> tuple[float, np.ndarray]:
    """Smallest value of ``A(x)`` found over a few simplex points, locally polished.

    Tries vertices, edge midpoints (up to ``max_pairs``), the barycenter and
    any extra ``starts``; the ``polish`` best are refined with SLSQP.
    """
    from .extract import polish_point

    n = A.dim
    f = A.to_polynomial()
    eye = np.eye(n)
    pts = [eye[i] for i in range(n)] + [np.full(n, 1.0 / n)]
    pairs = itertools.islice(itertools.combinations(range(n), 2), max_pairs)
    pts += [(eye[i] + eye[j]) / 2 for i, j in pairs]
    for x in starts:
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        if x.sum() > 0:
            pts.append(x / x.sum())
    vals = [float(f.evaluate(x)) for x in pts]
    order = np.argsort(vals)
    best_v, best_x = vals[order[0]], pts[order[0]]
    inst = simplex_instance(A, SparsityPattern(n, (tuple(range(n)),)))
    for i in order[:polish]:
        x = polish_point(inst, pts[i])
        if x is None or abs(x.sum() - 1.0) > 1e-9:
            continue
        v = float(f.evaluate(x))
        if v < best_v:
            best_v, best_x = v, x
    return best_v, best_x


def check_copositive(A: SymmetricTensor, pattern: SparsityPattern | None = None,
                     k: int | None = None, options: SolverOptions | None = None,
                     margin: float = MARGIN) -> CopositivityResult:
    """Copositivity of ``A`` through the sparse relaxation of the simplex problem.

    Copositive when the certified minimum (or the lower bound itself) is at
    least ``-margin``; NotCopositive when a feasible point goes below
    ``-margin``, either a relaxation candidate or a point from
    ``simplex_witness`` (the relaxation is unbounded for indefinite forms,
    so it cannot refute copositivity on its own); otherwise Unknown.
    """
    from .pipeline import solve_and_certify

    inst = simplex_instance(A, pattern)
    rep = solve_and_certify(inst, k, options=options)
    lb = rep.f_smo
    verdict = rep.verdict
    if verdict is not None and verdict.tight:
        x = verdict.minimizers[0]
        val = float(verdict.value)
        return CopositivityResult("Copositive" if val >= -margin else "NotCopositive",
                                  val, lb, np.asarray(x), rep)
    best = None
    if verdict is not None:
        feas = [c for c in verdict.candidates if c["feasible"]]
        if feas:
            best = min(feas, key=lambda c: c["objective"])
    if best is not None and best["objective"] < -margin:
        return CopositivityResult("NotCopositive", best["objective"], lb,
                                  np.asarray(best["point"]), rep)
    if math.isfinite(lb) and lb >= -margin:
        return CopositivityResult("Copositive", None, lb, None, rep,
                                  ["lower bound is nonnegative; no minimizer certified"])
    starts = [] if rep.point is None else [rep.point]
    wv, wx = simplex_witness(A, starts)
    if wv < -margin:
        return CopositivityResult("NotCopositive", wv, lb, wx, rep,
                                  ["negative value found by simplex search"])
    return CopositivityResult("Unknown", None, lb,
                              None if best is None else np.asarray(best["point"]), rep)
