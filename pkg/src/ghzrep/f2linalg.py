"""Bit-packed linear algebra over F2.

A vector of length ``n`` is a Python ``int`` whose bit ``j`` holds coordinate
``j + 1`` (little-endian: the first coordinate is the least significant bit).
Addition is XOR. Matrices are tuples of such row integers.

Subspaces are stored by a basis in reduced row-echelon form, where the pivot
of a row is its lowest set bit. Because RREF is canonical, two ``Subspace``
values compare equal exactly when they span the same space, and the canonical
representative of a coset ``x + V`` is the unique element that vanishes on all
pivot positions of ``V``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import BudgetExceeded, NoZeroSubset, NotSubspaceOf

DEFAULT_ENUM_BUDGET = 1 << 24


def vec(bits: Sequence[int]) -> int:
    """Pack a 0/1 sequence (first entry = coordinate 1) into an int."""
    v = 0
    for j, b in enumerate(bits):
        if b & 1:
            v |= 1 << j
    return v


def to_bits(v: int, n: int) -> tuple[int, ...]:
    return tuple((v >> j) & 1 for j in range(n))


def weight(v: int) -> int:
    return bin(v).count("1")


def dot(u: int, v: int) -> int:
    return weight(u & v) & 1


def lex_key(v: int, n: int) -> tuple[int, ...]:
    return to_bits(v, n)


@dataclass(frozen=True)
class F2Matrix:
    rows: tuple[int, ...]
    ncols: int

    def __post_init__(self):
        rows = tuple(int(r) for r in self.rows)
        object.__setattr__(self, "rows", rows)
        mask = ~((1 << self.ncols) - 1)
        for r in rows:
            if r < 0 or r & mask:
                raise ValueError(f"row {r:#x} does not fit in {self.ncols} columns")

    @classmethod
    def from_lists(cls, rows: Sequence[Sequence[int]], ncols: int | None = None) -> "F2Matrix":
        if ncols is None:
            ncols = len(rows[0]) if rows else 0
        return cls(tuple(vec(r) for r in rows), ncols)

    @property
    def nrows(self) -> int:
        return len(self.rows)

    def to_lists(self) -> list[list[int]]:
        return [list(to_bits(r, self.ncols)) for r in self.rows]

    def column(self, c: int) -> int:
        out = 0
        for i, r in enumerate(self.rows):
            if (r >> c) & 1:
                out |= 1 << i
        return out

    def transpose(self) -> "F2Matrix":
        return F2Matrix(tuple(self.column(c) for c in range(self.ncols)), self.nrows)

    def left_mul(self, x: int) -> int:
        """Row vector times matrix: XOR of the rows selected by ``x``."""
        out = 0
        i = 0
        while x:
            if x & 1:
                out ^= self.rows[i]
            x >>= 1
            i += 1
        return out

    def restrict_rows(self, count: int) -> "F2Matrix":
        return F2Matrix(self.rows[:count], self.ncols)


def _rref_rows(rows: list[int], ncols: int) -> tuple[list[int], list[int]]:
    rows = list(rows)
    pivots = []
    r = 0
    for c in range(ncols):
        bit = 1 << c
        for i in range(r, len(rows)):
            if rows[i] & bit:
                break
        else:
            continue
        rows[r], rows[i] = rows[i], rows[r]
        pr = rows[r]
        for i2 in range(len(rows)):
            if i2 != r and rows[i2] & bit:
                rows[i2] ^= pr
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    return rows[:r], pivots


def rref(M: F2Matrix) -> tuple[F2Matrix, list[int], int]:
    """Reduced row-echelon form; returns ``(R, pivots, rank)``."""
    rows, pivots = _rref_rows(list(M.rows), M.ncols)
    return F2Matrix(tuple(rows), M.ncols), pivots, len(pivots)


def rank(M: F2Matrix) -> int:
    return rref(M)[2]


@dataclass(frozen=True)
class Subspace:
    """Linear subspace of F2^n with a canonical RREF basis."""

    ambient_dim: int
    basis: tuple[int, ...]
    pivots: tuple[int, ...] = field(compare=False, repr=False)

    @classmethod
    def span(cls, ambient_dim: int, generators: Iterable[int] = ()) -> "Subspace":
        rows, pivots = _rref_rows([int(g) for g in generators if g], ambient_dim)
        return cls(ambient_dim, tuple(rows), tuple(pivots))

    @classmethod
    def full(cls, n: int) -> "Subspace":
        return cls(n, tuple(1 << j for j in range(n)), tuple(range(n)))

    @classmethod
    def zero(cls, n: int) -> "Subspace":
        return cls(n, (), ())

    @classmethod
    def from_constraints(cls, A: F2Matrix) -> "Subspace":
        """``{x : x . A = 0}`` for ``A`` of shape n x m."""
        return left_kernel_basis(A)

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def codim(self) -> int:
        return self.ambient_dim - len(self.basis)

    @property
    def pivot_mask(self) -> int:
        m = 0
        for p in self.pivots:
            m |= 1 << p
        return m

    def reduce(self, x: int) -> int:
        """Canonical representative of ``x + V``."""
        for p, b in zip(self.pivots, self.basis):
            if (x >> p) & 1:
                x ^= b
        return x

    def reduce_array(self, xs: np.ndarray) -> np.ndarray:
        xs = np.array(xs, dtype=np.uint64)
        for p, b in zip(self.pivots, self.basis):
            xs ^= ((xs >> np.uint64(p)) & np.uint64(1)) * np.uint64(b)
        return xs

    def __contains__(self, x: int) -> bool:
        return self.reduce(int(x)) == 0

    def contains_subspace(self, U: "Subspace") -> bool:
        return U.ambient_dim == self.ambient_dim and all(b in self for b in U.basis)

    def coords(self, x: int) -> int:
        """Coordinates of ``x`` (an element of V, or of a canonical coset) in the basis."""
        c = 0
        for k, p in enumerate(self.pivots):
            if (x >> p) & 1:
                c |= 1 << k
        return c

    def from_coords(self, c: int) -> int:
        x = 0
        k = 0
        while c:
            if c & 1:
                x ^= self.basis[k]
            c >>= 1
            k += 1
        return x

    def functional(self, gamma: int) -> int:
        """Vector ``a`` in F2^n with ``a . v == gamma . coords(v)`` on V."""
        a = 0
        for k, p in enumerate(self.pivots):
            if (gamma >> k) & 1:
                a |= 1 << p
        return a

    def elements(self, budget: int = DEFAULT_ENUM_BUDGET) -> np.ndarray:
        """All elements, index ``c`` holding ``from_coords(c)``."""
        return span_array(self.basis, budget)

    def coords_array(self, xs: np.ndarray) -> np.ndarray:
        return pext_array(xs, self.pivots)

    def intersect_hyperplane(self, a: int) -> "Subspace":
        """``{v in V : a . v = 0}``."""
        rows = list(self.basis)
        hit = [i for i, b in enumerate(rows) if dot(a, b)]
        if not hit:
            return self
        first = rows[hit[0]]
        new = [b ^ first if dot(a, b) else b for i, b in enumerate(rows) if i != hit[0]]
        return Subspace.span(self.ambient_dim, new)

    def kernel_of(self, functionals: Sequence[int]) -> "Subspace":
        U = self
        for a in functionals:
            U = U.intersect_hyperplane(a)
        return U

    def annihilator(self) -> "Subspace":
        """``{a : a . v = 0 for all v in V}``."""
        M = F2Matrix(self.basis, self.ambient_dim).transpose()
        return left_kernel_basis(M)

    def constraint_matrix(self) -> F2Matrix:
        """``A`` (n x m, m = codim) with ``V = {x : x . A = 0}``."""
        ann = self.annihilator()
        return F2Matrix(ann.basis, self.ambient_dim).transpose()

    def sum(self, other: "Subspace") -> "Subspace":
        return Subspace.span(self.ambient_dim, self.basis + other.basis)

    def __repr__(self) -> str:
        rows = ["".join(map(str, to_bits(b, self.ambient_dim))) for b in self.basis]
        return f"Subspace(n={self.ambient_dim}, basis={rows})"


def span_array(basis: Sequence[int], budget: int = DEFAULT_ENUM_BUDGET) -> np.ndarray:
    if (1 << len(basis)) > budget:
        raise BudgetExceeded(1 << len(basis), budget, "subspace elements")
    out = np.zeros(1, dtype=np.uint64)
    for b in basis:
        out = np.concatenate([out, out ^ np.uint64(b)])
    return out


def pext_array(xs: np.ndarray, positions: Sequence[int]) -> np.ndarray:
    """Gather the bits of ``xs`` at ``positions`` into consecutive low bits."""
    xs = np.asarray(xs, dtype=np.uint64)
    out = np.zeros(xs.shape, dtype=np.int64)
    for k, p in enumerate(positions):
        out |= ((xs >> np.uint64(p)) & np.uint64(1)).astype(np.int64) << k
    return out


def popcount_parity(xs: np.ndarray) -> np.ndarray:
    """Parity of the popcount of each entry of an integer array."""
    x = np.asarray(xs).astype(np.uint64)
    for s in (32, 16, 8, 4, 2, 1):
        x = x ^ (x >> np.uint64(s))
    return (x & np.uint64(1)).astype(np.int64)


def left_kernel_basis(A: F2Matrix) -> Subspace:
    """``{x in F2^{1 x n} : x . A = 0}`` for ``A`` with n rows and m columns."""
    n, m = A.nrows, A.ncols
    # eliminate on A's columns while tracking row combinations in the high bits
    work = [A.rows[j] | (1 << (m + j)) for j in range(n)]
    r = 0
    for c in range(m):
        bit = 1 << c
        for i in range(r, n):
            if work[i] & bit:
                break
        else:
            continue
        work[r], work[i] = work[i], work[r]
        for i2 in range(n):
            if i2 != r and work[i2] & bit:
                work[i2] ^= work[r]
        r += 1
    low = (1 << m) - 1
    kernel = [row >> m for row in work[r:] if row & low == 0]
    return Subspace.span(n, kernel)


def subset_sum_zero(A: F2Matrix, limit: int) -> frozenset[int]:
    """Nonempty 1-based index set ``S`` within the first ``limit`` rows whose rows XOR to zero.

    Uses the lexicographically smallest vector of the canonical kernel basis.
    """
    sub = A.restrict_rows(limit)
    ker = left_kernel_basis(sub)
    if ker.dim == 0:
        raise NoZeroSubset(f"rows 1..{limit} of a {A.nrows}x{A.ncols} matrix are independent")
    best = min(ker.basis, key=lambda v: lex_key(v, sub.nrows))
    return frozenset(j + 1 for j in range(sub.nrows) if (best >> j) & 1)


def coset_reps(V: Subspace, U: Subspace) -> list[int]:
    """Canonical representatives of V / U, sorted."""
    if not V.contains_subspace(U):
        raise NotSubspaceOf(f"{U!r} is not contained in {V!r}")
    comp = Subspace.span(V.ambient_dim, [U.reduce(b) for b in V.basis])
    reps = sorted({U.reduce(int(x)) for x in span_array(comp.basis)})
    return reps


@dataclass(frozen=True)
class AffinePowerCoset:
    """The set ``w + V^3`` inside F2^{3 x n}; the shift is kept canonical."""

    shift: tuple[int, int, int]
    space: Subspace

    def __post_init__(self):
        shift = tuple(self.space.reduce(int(w)) for w in self.shift)
        if len(shift) != 3:
            raise ValueError("shift must have three rows")
        object.__setattr__(self, "shift", shift)

    @classmethod
    def full(cls, n: int) -> "AffinePowerCoset":
        return cls((0, 0, 0), Subspace.full(n))

    @property
    def n(self) -> int:
        return self.space.ambient_dim

    @property
    def codim(self) -> int:
        return 3 * self.space.codim

    def size(self) -> int:
        return 1 << (3 * self.space.dim)

    def __contains__(self, x) -> bool:
        return all(self.space.reduce(int(xi) ^ wi) == 0 for xi, wi in zip(x, self.shift))

    def meets_ghz(self) -> bool:
        """Whether some ``x`` in the coset has ``x1 + x2 + x3 = 0``."""
        w1, w2, w3 = self.shift
        return self.space.reduce(w1 ^ w2 ^ w3) == 0

    def enumerate(self, budget: int = DEFAULT_ENUM_BUDGET) -> Iterator[tuple[int, int, int]]:
        need = self.size()
        if need > budget:
            raise BudgetExceeded(need, budget, "coset elements")
        els = [int(v) for v in self.space.elements()]
        w1, w2, w3 = self.shift
        for a in els:
            for b in els:
                for c in els:
                    yield (w1 ^ a, w2 ^ b, w3 ^ c)

    def ghz_points(self, budget: int = DEFAULT_ENUM_BUDGET) -> np.ndarray:
        """Points of the coset with ``x1 + x2 + x3 = 0`` as an ``(N, 3)`` uint64 array.

        Row order: ``x1`` major over ``x2``, both in coordinate order of V.
        """
        if not self.meets_ghz():
            return np.zeros((0, 3), dtype=np.uint64)
        need = 1 << (2 * self.space.dim)
        if need > budget:
            raise BudgetExceeded(need, budget, "support points")
        els = self.space.elements()
        w1, w2, _ = self.shift
        x1 = np.repeat(els ^ np.uint64(w1), len(els))
        x2 = np.tile(els ^ np.uint64(w2), len(els))
        return np.stack([x1, x2, x1 ^ x2], axis=1)

    def rep_of(self, x) -> tuple[int, int, int]:
        return tuple(self.space.reduce(int(xi)) for xi in x)


def enumerate_coset(W: AffinePowerCoset, budget: int = DEFAULT_ENUM_BUDGET) -> Iterator[tuple[int, int, int]]:
    return W.enumerate(budget)


def ghz_full_points(n: int) -> np.ndarray:
    """Support of the n-fold GHZ query distribution, ``(4**n, 3)``."""
    return AffinePowerCoset.full(n).ghz_points()
