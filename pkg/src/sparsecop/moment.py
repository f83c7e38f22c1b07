"""Riesz functional and label-indexed moment / localizing matrices."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .basis import BlockBasis, LabelSet, MomentVector, block_basis
from .poly import Polynomial


@dataclass(frozen=True)
class SymbolicMatrix:
    """Symmetric matrix whose entries are linear in the label slots.

    Stored as upper-triangle triplets: entry ``(rows[t], cols[t])`` receives
    ``coefs[t] * y[slots[t]]``. ``basis`` is the row/column monomial basis.
    """

    size: int
    rows: np.ndarray
    cols: np.ndarray
    slots: np.ndarray
    coefs: np.ndarray
    basis: BlockBasis
    generator: Polynomial

    def instantiate(self, y) -> np.ndarray:
        vals = y.values if isinstance(y, MomentVector) else np.asarray(y, dtype=float)
        M = np.zeros((self.size, self.size))
        np.add.at(M, (self.rows, self.cols), self.coefs * vals[self.slots])
        off = self.rows != self.cols
        np.add.at(M, (self.cols[off], self.rows[off]), self.coefs[off] * vals[self.slots[off]])
        return M

    def entry(self, i: int, j: int) -> dict[int, float]:
        """Slot -> coefficient map of entry ``(i, j)``."""
        if i > j:
            i, j = j, i
        mask = (self.rows == i) & (self.cols == j)
        out: dict[int, float] = {}
        for s, c in zip(self.slots[mask], self.coefs[mask]):
            out[int(s)] = out.get(int(s), 0.0) + float(c)
        return out

    def slot_coefficients(self):
        """Group triplets by slot: ``{slot: (rows, cols, coefs)}`` (upper triangle)."""
        order = np.argsort(self.slots, kind="stable")
        s = self.slots[order]
        bounds = np.flatnonzero(np.diff(s)) + 1
        groups = {}
        for chunk in np.split(np.arange(s.size), bounds):
            if chunk.size:
                o = order[chunk]
                groups[int(s[chunk[0]])] = (self.rows[o], self.cols[o], self.coefs[o])
        return groups


def localizer_order(k: int, p: Polynomial, rounding: str = "down") -> int:
    """Basis degree of the order-``k`` localizing matrix of ``p``.

    ``"down"`` gives ``k - ceil(deg/2)``, keeping every entry inside degree
    ``2k``; ``"up"`` gives ``ceil(k - deg/2)``, which for odd-degree ``p``
    reaches moments of degree ``2k + 1``.
    """
    deg = max(p.degree, 0)
    if rounding == "down":
        return k - math.ceil(deg / 2)
    if rounding == "up":
        return math.ceil(k - deg / 2)
    raise ValueError(f"unknown rounding {rounding!r}")


def localizing_matrix(p: Polynomial, block, k: int, labelset: LabelSet,
                      rounding: str = "down") -> SymbolicMatrix:
    """``L_p^{block,k}``: entry ``(a, b)`` is ``sum_g p_g y_{a+b+g}`` over ``[x_block]_{k1}``."""
    block = tuple(block)
    if p.degree > 2 * k:
        raise ValueError(f"generator degree {p.degree} exceeds 2k = {2 * k}")
    if not p.support_variables() <= set(block):
        raise ValueError("generator uses variables outside the block")
    k1 = localizer_order(k, p, rounding)
    if 2 * k1 + max(p.degree, 0) > labelset.degree:
        raise ValueError(f"label set of degree {labelset.degree} too small for this localizer")
    basis = block_basis(block, k1, labelset.n)
    mons = np.array(basis.monomials, dtype=int).reshape(len(basis), labelset.n)
    s = len(basis)
    iu, ju = np.triu_indices(s)
    rows, cols, slots, coefs = [], [], [], []
    for gamma, c in p.terms.items():
        sums = mons[iu] + mons[ju] + np.array(gamma, dtype=int)
        slot = np.fromiter((labelset.slot(tuple(r)) for r in sums), dtype=int, count=len(iu))
        rows.append(iu)
        cols.append(ju)
        slots.append(slot)
        coefs.append(np.full(len(iu), c))
    cat = lambda xs, dt: np.concatenate(xs).astype(dt) if xs else np.zeros(0, dt)
    return SymbolicMatrix(s, cat(rows, int), cat(cols, int), cat(slots, int),
                          cat(coefs, float), basis, p)


def moment_matrix(block, k: int, labelset: LabelSet) -> SymbolicMatrix:
    """``M_block^{(k)}``: entry ``(a, b)`` is ``y_{a+b}`` over ``[x_block]_k``."""
    return localizing_matrix(Polynomial.constant(labelset.n, 1.0), block, k, labelset)


def riesz(p: Polynomial, y: MomentVector) -> float:
    """``<p, y>``; raises KeyError for labels outside ``y``'s label set."""
    return y.riesz(p)
