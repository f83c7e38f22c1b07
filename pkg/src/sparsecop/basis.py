"""Block monomial bases, the union label set and moment vectors over it."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations_with_replacement
from math import comb
from typing import Iterable, Sequence

import numpy as np

from .poly import Monomial, Polynomial, SparsityPattern, grlex_key


@lru_cache(maxsize=None)
def _local_exponents(n_vars: int, k: int) -> tuple[tuple[int, ...], ...]:
    out = []
    for deg in range(k + 1):
        for combo in combinations_with_replacement(range(n_vars), deg):
            e = [0] * n_vars
            for j in combo:
                e[j] += 1
            out.append(tuple(e))
    out.sort(key=grlex_key)
    return tuple(out)


def monomials(block: Sequence[int], k: int, n: int) -> list[Monomial]:
    """Exponents supported on ``block`` with total degree <= k, grlex ordered."""
    block = tuple(block)
    res = []
    for e in _local_exponents(len(block), k):
        alpha = [0] * n
        for j, a in zip(block, e):
            alpha[j] = a
        res.append(tuple(alpha))
    return res


@dataclass(frozen=True)
class BlockBasis:
    """``[x_block]_k`` as an ordered list of exponents in the ambient dimension."""

    n: int
    block: tuple[int, ...]
    degree: int
    monomials: tuple[Monomial, ...]

    def __len__(self) -> int:
        return len(self.monomials)

    def index(self, alpha: Monomial) -> int:
        return self._index[alpha]

    @property
    def _index(self) -> dict:
        idx = self.__dict__.get("_idx")
        if idx is None:
            idx = {a: i for i, a in enumerate(self.monomials)}
            object.__setattr__(self, "_idx", idx)
        return idx

    def evaluate(self, x) -> np.ndarray:
        """The monomial vector ``[x]_k`` at a point."""
        x = np.asarray(x, dtype=float)
        exps = np.array(self.monomials, dtype=int).reshape(len(self), self.n)
        return np.prod(x[None, :] ** exps, axis=1)


def block_basis(block: Iterable[int], k: int, n: int) -> BlockBasis:
    block = tuple(block)
    if not block:
        raise ValueError("block must be nonempty")
    if k < 0:
        raise ValueError("degree must be nonnegative")
    mons = tuple(monomials(block, k, n))
    assert len(mons) == comb(len(block) + k, k)
    return BlockBasis(n, block, k, mons)


@dataclass(frozen=True)
class LabelSet:
    """Deduplicated union of the block label sets ``N_{degree}^{D_i}``.

    ``block_index[i]`` maps the grlex-ordered labels of block ``i`` into
    slots of ``labels``; overlapping monomials share one slot.
    """

    n: int
    degree: int
    blocks: tuple[tuple[int, ...], ...]
    labels: tuple[Monomial, ...]
    block_index: tuple[np.ndarray, ...]
    _slots: dict = field(repr=False, compare=False, default_factory=dict)

    def __len__(self) -> int:
        return len(self.labels)

    def __contains__(self, alpha) -> bool:
        return tuple(alpha) in self._slots

    def slot(self, alpha: Monomial) -> int:
        try:
            return self._slots[tuple(alpha)]
        except KeyError:
            raise KeyError(f"label {tuple(alpha)} not in label set") from None

    def block_labels(self, i: int) -> list[Monomial]:
        return [self.labels[s] for s in self.block_index[i]]

    def unit(self, j: int) -> int:
        e = [0] * self.n
        e[j] = 1
        return self.slot(tuple(e))

    @property
    def zero_slot(self) -> int:
        return self.slot((0,) * self.n)


def union_label_set(pattern: SparsityPattern, degree: int) -> LabelSet:
    """Build ``U = N_degree^{D_1} u ... u N_degree^{D_m}`` in block order."""
    slots: dict[Monomial, int] = {}
    labels: list[Monomial] = []
    maps = []
    for blk in pattern.blocks:
        idx = []
        for alpha in monomials(blk, degree, pattern.n):
            s = slots.get(alpha)
            if s is None:
                s = slots[alpha] = len(labels)
                labels.append(alpha)
            idx.append(s)
        arr = np.array(idx, dtype=int)
        arr.setflags(write=False)
        maps.append(arr)
    return LabelSet(pattern.n, degree, pattern.blocks, tuple(labels), tuple(maps), slots)


def sparse_label_count(pattern: SparsityPattern, degree: int) -> int:
    """``|U|`` without materializing the label set (inclusion by hashing)."""
    seen = set()
    for blk in pattern.blocks:
        seen.update(monomials(blk, degree, pattern.n))
    return len(seen)


class MomentVector:
    """Values ``y_alpha`` for every label in a :class:`LabelSet`."""

    def __init__(self, labelset: LabelSet, values):
        values = np.array(values, dtype=float).reshape(-1)
        if values.size != len(labelset):
            raise ValueError(f"{values.size} values for {len(labelset)} labels")
        values.setflags(write=False)
        self.labelset = labelset
        self.values = values

    @classmethod
    def from_atoms(cls, labelset: LabelSet, weights, points) -> MomentVector:
        """``sum_j w_j [u_j]`` restricted to the label set."""
        exps = np.array(labelset.labels, dtype=int)
        vals = np.zeros(len(labelset))
        for w, u in zip(weights, points):
            u = np.asarray(u, dtype=float)
            vals += w * np.prod(u[None, :] ** exps, axis=1)
        return cls(labelset, vals)

    @classmethod
    def from_point(cls, labelset: LabelSet, u) -> MomentVector:
        return cls.from_atoms(labelset, [1.0], [u])

    def __getitem__(self, alpha) -> float:
        return float(self.values[self.labelset.slot(alpha)])

    def get(self, alpha, default=None):
        alpha = tuple(alpha)
        if alpha in self.labelset:
            return self[alpha]
        return default

    @property
    def y0(self) -> float:
        return self[(0,) * self.labelset.n]

    def block_values(self, i: int) -> np.ndarray:
        """``y_{D_i}`` in the grlex order of ``N^{D_i}``."""
        return self.values[self.labelset.block_index[i]]

    def riesz(self, p: Polynomial) -> float:
        """``<p, y> = sum_alpha p_alpha y_alpha``."""
        total = 0.0
        for alpha, c in p.terms.items():
            total += c * self[alpha]
        return total

    def truncate(self, degree: int) -> MomentVector:
        if degree < 0 or degree > self.labelset.degree:
            raise ValueError(f"truncation degree {degree} outside 0..{self.labelset.degree}")
        pattern = SparsityPattern(self.labelset.n, self.labelset.blocks)
        ls = union_label_set(pattern, degree)
        vals = np.array([self[a] for a in ls.labels])
        return MomentVector(ls, vals)

    def project_point(self) -> np.ndarray:
        return np.array([self.values[self.labelset.unit(j)] for j in range(self.labelset.n)])

    def as_dict(self) -> dict[Monomial, float]:
        return dict(zip(self.labelset.labels, self.values.tolist()))


def truncate(y: MomentVector, degree: int) -> MomentVector:
    return y.truncate(degree)


def project_point(y: MomentVector) -> np.ndarray:
    return y.project_point()
