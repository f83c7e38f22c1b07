"""Sparse multivariate polynomials, parsing, calculus and sparsity patterns.

Variables are written ``x1..xn`` externally and stored 0-based. A polynomial
is a map from exponent tuples to float coefficients; terms are printed in
graded lexicographic order (total degree first, then ``x1`` heaviest).
"""

from __future__ import annotations

import ast
import math
import re
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

Monomial = tuple[int, ...]

COEFF_EPS = 1e-14


def grlex_key(alpha: Monomial) -> tuple:
    """Sort key for graded lexicographic order with ``x1`` heaviest."""
    return (sum(alpha), tuple(-a for a in alpha))


class PolynomialSyntaxError(ValueError):
    """Raised when a polynomial string cannot be parsed."""

    def __init__(self, message: str, position: int | None = None):
        self.position = position
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


class UncoveredTerm(ValueError):
    """A term's support is not contained in any block of the pattern."""

    def __init__(self, alpha: Monomial):
        self.alpha = alpha
        names = "*".join(f"x{j + 1}^{a}" for j, a in enumerate(alpha) if a) or "1"
        super().__init__(f"term {names} is not covered by any block")


class Polynomial:
    """Immutable sparse polynomial in ``n`` variables."""

    __slots__ = ("n", "_terms")

    def __init__(self, n: int, terms: Mapping[Monomial, float] | None = None):
        if n < 0:
            raise ValueError("dimension must be nonnegative")
        clean: dict[Monomial, float] = {}
        for alpha, c in (terms or {}).items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != n:
                raise ValueError(f"exponent {alpha} has length {len(alpha)}, expected {n}")
            if any(a < 0 for a in alpha):
                raise ValueError(f"negative exponent in {alpha}")
            c = float(c)
            if abs(c) >= COEFF_EPS:
                clean[alpha] = clean.get(alpha, 0.0) + c
        self.n = n
        self._terms = MappingProxyType(
            {a: c for a, c in clean.items() if abs(c) >= COEFF_EPS}
        )

    # construction helpers

    @classmethod
    def constant(cls, n: int, c: float) -> Polynomial:
        return cls(n, {(0,) * n: c})

    @classmethod
    def variable(cls, n: int, j: int) -> Polynomial:
        """The coordinate polynomial ``x_{j+1}`` (``j`` is 0-based)."""
        alpha = [0] * n
        alpha[j] = 1
        return cls(n, {tuple(alpha): 1.0})

    @classmethod
    def linear(cls, coeffs: Sequence[float], const: float = 0.0) -> Polynomial:
        """``coeffs . x + const``."""
        n = len(coeffs)
        terms = {(0,) * n: const}
        for j, a in enumerate(coeffs):
            e = [0] * n
            e[j] = 1
            terms[tuple(e)] = a
        return cls(n, terms)

    # basic properties

    @property
    def terms(self) -> Mapping[Monomial, float]:
        return self._terms

    def items(self) -> list[tuple[Monomial, float]]:
        """Terms in graded lexicographic order."""
        return sorted(self._terms.items(), key=lambda t: grlex_key(t[0]))

    def __len__(self) -> int:
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    @property
    def degree(self) -> int:
        """Total degree; the zero polynomial reports -1 (standing in for -inf)."""
        return max((sum(a) for a in self._terms), default=-1)

    def support_variables(self) -> frozenset[int]:
        return frozenset(j for a in self._terms for j, e in enumerate(a) if e)

    def coefficient(self, alpha: Monomial) -> float:
        return self._terms.get(tuple(alpha), 0.0)

    def constant_term(self) -> float:
        return self.coefficient((0,) * self.n)

    # evaluation

    def evaluate(self, x) -> float | np.ndarray:
        """Evaluate at a point (shape ``(n,)``) or a batch of points (``(N, n)``)."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n:
            raise ValueError(f"expected {self.n} coordinates, got {x.shape[-1]}")
        if not self._terms:
            return 0.0 if x.ndim == 1 else np.zeros(x.shape[0])
        exps = np.array(list(self._terms.keys()), dtype=int)
        coefs = np.fromiter(self._terms.values(), dtype=float, count=len(self._terms))
        if x.ndim == 1:
            return float(np.prod(x[None, :] ** exps, axis=1) @ coefs)
        vals = np.prod(x[:, None, :] ** exps[None, :, :], axis=2)
        return vals @ coefs

    __call__ = evaluate

    # arithmetic

    def _check(self, other: Polynomial) -> None:
        if other.n != self.n:
            raise ValueError(f"dimension mismatch: {self.n} vs {other.n}")

    def _coerce(self, other) -> Polynomial:
        if isinstance(other, Polynomial):
            self._check(other)
            return other
        if isinstance(other, (int, float, np.floating, np.integer)):
            return Polynomial.constant(self.n, float(other))
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms = dict(self._terms)
        for a, c in other._terms.items():
            terms[a] = terms.get(a, 0.0) + c
        return Polynomial(self.n, terms)

    __radd__ = __add__

    def __neg__(self) -> Polynomial:
        return Polynomial(self.n, {a: -c for a, c in self._terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return Polynomial(self.n, {a: c * float(other) for a, c in self._terms.items()})
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms: dict[Monomial, float] = {}
        for a, c in self._terms.items():
            for b, e in other._terms.items():
                ab = tuple(i + j for i, j in zip(a, b))
                terms[ab] = terms.get(ab, 0.0) + c * e
        return Polynomial(self.n, terms)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return self * (1.0 / float(other))
        return NotImplemented

    def __pow__(self, k: int) -> Polynomial:
        if not isinstance(k, int) or k < 0:
            raise ValueError("only nonnegative integer powers are supported")
        result = Polynomial.constant(self.n, 1.0)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other) -> bool:
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.n == other.n and dict(self._terms) == dict(other._terms)

    def __hash__(self) -> int:
        return hash((self.n, frozenset(self._terms.items())))

    def allclose(self, other: Polynomial, atol: float = 1e-9) -> bool:
        return (self - other).max_abs_coefficient() <= atol

    def max_abs_coefficient(self) -> float:
        return max((abs(c) for c in self._terms.values()), default=0.0)

    # calculus

    def diff(self, j: int) -> Polynomial:
        """Partial derivative with respect to ``x_{j+1}``."""
        terms = {}
        for a, c in self._terms.items():
            if a[j]:
                b = list(a)
                b[j] -= 1
                terms[tuple(b)] = c * a[j]
        return Polynomial(self.n, terms)

    def gradient(self) -> list[Polynomial]:
        return [self.diff(j) for j in range(self.n)]

    def hessian(self, variables: Sequence[int] | None = None) -> list[list[Polynomial]]:
        """Hessian restricted to ``variables`` (all by default); symmetric by construction."""
        idx = list(range(self.n)) if variables is None else list(variables)
        first = {j: self.diff(j) for j in idx}
        H = [[None] * len(idx) for _ in idx]
        for r, i in enumerate(idx):
            for c in range(r, len(idx)):
                H[r][c] = H[c][r] = first[i].diff(idx[c])
        return H

    # printing

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for alpha, c in sorted(self._terms.items(), key=lambda t: (-sum(t[0]), grlex_key(t[0])[1])):
            mono = "*".join(
                f"x{j + 1}" if e == 1 else f"x{j + 1}^{e}" for j, e in enumerate(alpha) if e
            )
            mag = abs(c)
            num = repr(int(mag)) if mag.is_integer() and mag < 1e15 else repr(mag)
            if mono:
                body = mono if mag == 1.0 else f"{num}*{mono}"
            else:
                body = num
            sign = "-" if c < 0 else "+"
            if not parts:
                parts.append(body if sign == "+" else "-" + body)
            else:
                parts.append(f" {sign} {body}")
        return "".join(parts)

    def __repr__(self) -> str:
        return f"Polynomial({self.n}, {str(self)!r})"


def evaluate(p: Polynomial, x) -> float | np.ndarray:
    return p.evaluate(x)


def gradient(p: Polynomial) -> list[Polynomial]:
    return p.gradient()


def hessian(p: Polynomial) -> list[list[Polynomial]]:
    return p.hessian()


# --------------------------------------------------------------------------
# parsing

_VAR = re.compile(r"x(\d+)$")


def parse_polynomial(text: str, n: int) -> Polynomial:
    """Parse an expression in ``x1..xn`` with ``+ - * ^ /``, numbers and parentheses.

    Division is only allowed by numeric constants.
    """
    if not text or not text.strip():
        raise PolynomialSyntaxError("empty polynomial expression", 0)
    # '^' -> '**' shifts offsets; keep a map back to the caller's positions
    src, origin = [], []
    for i, ch in enumerate(text):
        if ch == "^":
            src.append("**")
            origin.extend([i, i])
        else:
            src.append(ch)
            origin.append(i)
    source = "".join(src)

    def where(offset: int | None) -> int | None:
        if offset is None:
            return None
        offset = max(0, min(offset, len(origin) - 1))
        return origin[offset]

    try:
        tree = ast.parse(source.strip() and source, mode="eval")
    except SyntaxError as err:
        col = (err.offset or 1) - 1
        raise PolynomialSyntaxError(f"invalid syntax: {err.msg}", where(col)) from None

    def build(node) -> Polynomial:
        pos = where(getattr(node, "col_offset", None))
        if isinstance(node, ast.Expression):
            return build(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
                and not isinstance(node.value, bool):
            return Polynomial.constant(n, float(node.value))
        if isinstance(node, ast.Name):
            m = _VAR.match(node.id)
            if not m:
                raise PolynomialSyntaxError(f"unknown symbol {node.id!r}", pos)
            j = int(m.group(1))
            if not 1 <= j <= n:
                raise PolynomialSyntaxError(f"variable x{j} out of range 1..{n}", pos)
            return Polynomial.variable(n, j - 1)
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            p = build(node.operand)
            return -p if isinstance(node.op, ast.USub) else p
        if isinstance(node, ast.BinOp):
            if isinstance(node.op, ast.Pow):
                base = build(node.left)
                k = _integer_exponent(node.right)
                if k is None:
                    raise PolynomialSyntaxError("exponent must be a nonnegative integer",
                                                where(node.right.col_offset))
                return base ** k
            left, right = build(node.left), build(node.right)
            if isinstance(node.op, ast.Add):
                return left + right
            if isinstance(node.op, ast.Sub):
                return left - right
            if isinstance(node.op, ast.Mult):
                return left * right
            if isinstance(node.op, ast.Div):
                if right.degree > 0 or right.is_zero():
                    raise PolynomialSyntaxError("division only by nonzero constants",
                                                where(node.right.col_offset))
                return left / right.constant_term()
        raise PolynomialSyntaxError(f"unsupported expression {type(node).__name__}", pos)

    return build(tree)


def _integer_exponent(node) -> int | None:
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.UAdd):
        node = node.operand
    if isinstance(node, ast.Constant) and not isinstance(node.value, bool):
        v = node.value
        if isinstance(v, int) and v >= 0:
            return v
        if isinstance(v, float) and v.is_integer() and v >= 0:
            return int(v)
    return None


# --------------------------------------------------------------------------
# sparsity data


@dataclass(frozen=True)
class SparsityPattern:
    """Ordered index blocks (0-based, strictly increasing) covering ``range(n)``."""

    n: int
    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        blocks = tuple(tuple(int(j) for j in b) for b in self.blocks)
        object.__setattr__(self, "blocks", blocks)
        if not blocks:
            raise ValueError("a sparsity pattern needs at least one block")
        for b in blocks:
            if not b:
                raise ValueError("blocks must be nonempty")
            if any(b[i] >= b[i + 1] for i in range(len(b) - 1)):
                raise ValueError(f"block {b} is not strictly increasing")
            if b[0] < 0 or b[-1] >= self.n:
                raise ValueError(f"block {b} has indices outside 0..{self.n - 1}")
        missing = set(range(self.n)) - set(j for b in blocks for j in b)
        if missing:
            raise ValueError(f"blocks do not cover indices {sorted(j + 1 for j in missing)}")

    @classmethod
    def from_one_based(cls, n: int, blocks: Iterable[Iterable[int]]) -> SparsityPattern:
        return cls(n, tuple(tuple(sorted(j - 1 for j in b)) for b in blocks))

    @classmethod
    def dense(cls, n: int) -> SparsityPattern:
        return cls(n, (tuple(range(n)),))

    @property
    def m(self) -> int:
        return len(self.blocks)

    def one_based(self) -> list[list[int]]:
        return [[j + 1 for j in b] for b in self.blocks]

    def covering_block(self, support: Iterable[int]) -> int | None:
        s = set(support)
        for i, b in enumerate(self.blocks):
            if s <= set(b):
                return i
        return None


@dataclass(frozen=True)
class LinearConstraints:
    """``K = {x : A x = b, C x >= d, x >= 0}``."""

    A: np.ndarray
    b: np.ndarray
    C: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        C = np.atleast_2d(np.asarray(self.C, dtype=float))
        b = np.asarray(self.b, dtype=float).reshape(-1)
        d = np.asarray(self.d, dtype=float).reshape(-1)
        if A.shape[0] != b.size or C.shape[0] != d.size:
            raise ValueError("constraint matrix rows and right-hand sides disagree")
        if A.shape[0] and C.shape[0] and A.shape[1] != C.shape[1]:
            raise ValueError("A and C have different column counts")
        for name, v in (("A", A), ("b", b), ("C", C), ("d", d)):
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    @classmethod
    def empty(cls, n: int) -> LinearConstraints:
        return cls(np.zeros((0, n)), np.zeros(0), np.zeros((0, n)), np.zeros(0))

    @classmethod
    def build(cls, n: int, A=None, b=None, C=None, d=None) -> LinearConstraints:
        A = np.zeros((0, n)) if A is None or len(A) == 0 else A
        C = np.zeros((0, n)) if C is None or len(C) == 0 else C
        b = np.zeros(0) if b is None else b
        d = np.zeros(0) if d is None else d
        return cls(A, b, C, d)

    @property
    def m1(self) -> int:
        return self.A.shape[0]

    @property
    def m2(self) -> int:
        return self.C.shape[0]

    def violation(self, x) -> dict[str, float]:
        """Max equality residual, max inequality shortfall and most negative coordinate."""
        x = np.asarray(x, dtype=float)
        eq = float(np.max(np.abs(self.A @ x - self.b))) if self.m1 else 0.0
        ineq = float(max(0.0, np.max(self.d - self.C @ x))) if self.m2 else 0.0
        neg = float(max(0.0, -np.min(x))) if x.size else 0.0
        return {"equality": eq, "inequality": ineq, "nonnegativity": neg}

    def is_feasible(self, x, tol: float = 1e-6, nonneg_tol: float | None = None) -> bool:
        v = self.violation(x)
        nt = tol if nonneg_tol is None else nonneg_tol
        return v["equality"] <= tol and v["inequality"] <= tol and v["nonnegativity"] <= nt


@dataclass(frozen=True)
class ProblemInstance:
    """``min sum_i f_i(x_{D_i})  s.t.  A x = b, C x >= d, x >= 0``."""

    pattern: SparsityPattern
    objectives: tuple[Polynomial, ...]
    constraints: LinearConstraints
    name: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        objs = tuple(self.objectives)
        object.__setattr__(self, "objectives", objs)
        if len(objs) != self.pattern.m:
            raise ValueError(f"{len(objs)} objective pieces for {self.pattern.m} blocks")
        for i, (f, blk) in enumerate(zip(objs, self.pattern.blocks)):
            if f.n != self.pattern.n:
                raise ValueError(f"objective piece {i + 1} has dimension {f.n}")
            if not f.support_variables() <= set(blk):
                raise ValueError(f"objective piece {i + 1} uses variables outside its block")
        c = self.constraints
        for mat in (c.A, c.C):
            if mat.shape[0] and mat.shape[1] != self.pattern.n:
                raise ValueError("constraint matrices do not match the dimension")

    @property
    def n(self) -> int:
        return self.pattern.n

    @property
    def objective(self) -> Polynomial:
        total = Polynomial(self.n)
        for f in self.objectives:
            total = total + f
        return total

    @property
    def degree(self) -> int:
        return max(f.degree for f in self.objectives)

    @property
    def k0(self) -> int:
        # at least 1 so the first-order labels e_j exist
        return max(1, math.ceil(max(self.degree, 0) / 2))

    def evaluate(self, x) -> float:
        return float(sum(f.evaluate(x) for f in self.objectives))

    def with_pattern(self, pattern: SparsityPattern) -> ProblemInstance:
        """Re-split the objective over another pattern."""
        return ProblemInstance(pattern, tuple(decompose_objective(self.objective, pattern)),
                               self.constraints, self.name, dict(self.meta))


def decompose_objective(f: Polynomial, pattern: SparsityPattern) -> list[Polynomial]:
    """Split ``f`` into per-block pieces; each term goes to the lowest covering block."""
    if f.n != pattern.n:
        raise ValueError("dimension mismatch between polynomial and pattern")
    pieces: list[dict] = [{} for _ in pattern.blocks]
    for alpha, c in f.items():
        i = pattern.covering_block(j for j, e in enumerate(alpha) if e)
        if i is None:
            raise UncoveredTerm(alpha)
        pieces[i][alpha] = c
    return [Polynomial(f.n, t) for t in pieces]


def detect_pattern(f: Polynomial) -> SparsityPattern:
    """Blocks from connected components of the term-support hypergraph.

    A convenience only: it yields the coarsest pattern that separates
    independent groups of variables.
    """
    parent = list(range(f.n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for alpha in f.terms:
        sup = [j for j, e in enumerate(alpha) if e]
        for j in sup[1:]:
            parent[find(j)] = find(sup[0])
    groups: dict[int, list[int]] = {}
    for j in range(f.n):
        groups.setdefault(find(j), []).append(j)
    return SparsityPattern(f.n, tuple(tuple(g) for g in sorted(groups.values())))
