"""Local embeddings of the GHZ query distribution into one coordinate of ``Q^n | W``.

Here ``W = w + V^3`` meets the GHZ support and ``P~ = Q^n | W`` is uniform on
the intersection. For an index set ``S`` whose indicator lies in ``V`` and a
coordinate ``j`` in ``S``, player ``i`` maps its query bit ``x`` and a shared
sample ``r <- P~`` to ``r_i + (x + r_i^j) 1_S``: coordinate ``j`` becomes
``x``, the other coordinates of ``S`` move by the same amount, and the rest
are copied from ``r``.
"""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetExceeded, EmptyIntersection, NoZeroSubset, NotEmbeddable, VerificationFailed
from .f2linalg import DEFAULT_ENUM_BUDGET, AffinePowerCoset, F2Matrix, lex_key, subset_sum_zero
from .games import GHZ_QUERIES
from .probdist import FiniteDist


def _mask(S) -> int:
    m = 0
    for j in S:
        m |= 1 << (j - 1)
    return m


def _bit(x: int, j: int) -> int:
    return (int(x) >> (j - 1)) & 1


def support(W: AffinePowerCoset, budget: int = DEFAULT_ENUM_BUDGET) -> np.ndarray:
    pts = W.ghz_points(budget)
    if len(pts) == 0:
        raise EmptyIntersection("Q^n puts no mass on this coset")
    return pts


def conditioned_dist(W: AffinePowerCoset, budget: int = DEFAULT_ENUM_BUDGET) -> FiniteDist:
    """``Q^n | W`` as a distribution over query triples."""
    return FiniteDist.uniform(tuple(int(v) for v in row) for row in support(W, budget))


def zero_subsets(W: AffinePowerCoset) -> list[frozenset[int]]:
    """Disjoint index sets ``S`` with ``1_S`` in ``V``, found window by window.

    Each window is the first ``m + 1`` coordinates not yet covered (fewer
    once less remain), so at most ``m`` coordinates are left over.
    """
    if not W.meets_ghz():
        raise EmptyIntersection("Q^n puts no mass on this coset")
    A = W.space.constraint_matrix()
    m = A.ncols
    left = list(range(1, W.n + 1))
    found = []
    while left:
        window = left[: m + 1]
        sub = F2Matrix(tuple(A.rows[j - 1] for j in window), m)
        try:
            local = subset_sum_zero(sub, len(window))
        except NoZeroSubset:
            break
        S = frozenset(window[t - 1] for t in local)
        found.append(S)
        left = [j for j in left if j not in S]
    return found


def embeddable_coordinates(W: AffinePowerCoset) -> list[int]:
    return sorted(j for S in zero_subsets(W) for j in S)


def _subset_for(W: AffinePowerCoset, j: int) -> frozenset[int]:
    for S in zero_subsets(W):
        if j in S:
            return S
    # outside the scan, any element of V with coordinate j set will do
    cands = [b for b in W.space.basis if _bit(b, j)]
    if not cands:
        raise NotEmbeddable(f"every vector of V vanishes at coordinate {j}")
    best = min(cands, key=lambda v: lex_key(v, W.n))
    return frozenset(t + 1 for t in range(W.n) if (best >> t) & 1)


@dataclass
class LocalEmbedding:
    """Explicit maps ``e_i(x, r)`` tabulated over ``x in {0,1}`` and the support of ``P~``."""

    j: int
    S: frozenset
    points: np.ndarray  # shared samples r, rows of P~'s support
    tables: list = field(repr=False)  # tables[i][x, r_index] -> row vector

    def __call__(self, q, r_index: int) -> tuple[int, int, int]:
        return tuple(int(self.tables[i][q[i], r_index]) for i in range(3))


def build_embedding(W: AffinePowerCoset, j: int, S=None, budget: int = DEFAULT_ENUM_BUDGET) -> LocalEmbedding:
    if not 1 <= j <= W.n:
        raise ValueError(f"coordinate {j} outside 1..{W.n}")
    pts = support(W, budget)
    if S is None:
        S = _subset_for(W, j)
    S = frozenset(S)
    if j not in S:
        raise NotEmbeddable(f"{j} is not in S = {sorted(S)}")
    mS = np.uint64(_mask(S))
    tables = []
    for i in range(3):
        r = pts[:, i]
        rj = (r >> np.uint64(j - 1)) & np.uint64(1)
        t = np.empty((2, len(pts)), dtype=np.uint64)
        for x in (0, 1):
            move = (rj ^ np.uint64(x)) * mS
            t[x] = r ^ move
        tables.append(t)
    return LocalEmbedding(j, S, pts, tables)


@dataclass
class EmbeddingCertificate:
    S: tuple
    j: int
    marginal_ok: bool
    independence_ok: bool
    law_ok: bool
    support_size: int

    @property
    def ok(self) -> bool:
        return self.marginal_ok and self.independence_ok and self.law_ok

    def to_dict(self) -> dict:
        return {
            "format": "ghzrep.embedding_certificate",
            "version": 1,
            "S": list(self.S),
            "j": self.j,
            "flags": {"marginal": self.marginal_ok, "independence": self.independence_ok, "law": self.law_ok},
            "support_size": self.support_size,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def verify_embedding(emb: LocalEmbedding, W: AffinePowerCoset, budget: int = DEFAULT_ENUM_BUDGET) -> EmbeddingCertificate:
    """Exact check that the assembled triple has law ``P~`` with coordinate ``j`` equal to the query."""
    pts = support(W, budget)
    N = len(pts)
    if 4 * N > budget:
        raise BudgetExceeded(4 * N, budget, "embedding evaluations")
    supp = {tuple(int(v) for v in row) for row in pts}
    j, S = emb.j, emb.S

    # (a) coordinate j reproduces the query, hence its law is uniform on the GHZ queries
    images = Counter()
    for q in GHZ_QUERIES:
        for r in range(len(emb.points)):
            x = emb(q, r)
            got = tuple(_bit(xi, j) for xi in x)
            if got != q:
                raise VerificationFailed(f"coordinate {j} of the output is {got}, query was {q}", (q, r, x))
            images[x] += 1

    # (b) under P~, X^j is independent of the differences inside S and of the coordinates outside S
    rest_mask = ((1 << W.n) - 1) & ~_mask(S)
    others = sorted(S - {j})
    joint, left, right = Counter(), Counter(), Counter()
    for x in supp:
        a = tuple(_bit(xi, j) for xi in x)
        b = tuple(_bit(xi, t) ^ a[i] for t in others for i, xi in enumerate(x)) + tuple(xi & rest_mask for xi in x)
        joint[a, b] += 1
        left[a] += 1
        right[b] += 1
    for a in left:
        for b in right:
            if joint[a, b] * N != left[a] * right[b]:
                raise VerificationFailed(f"X^{j} is not independent of the rest at {a}, {b}", (a, b))

    # (c) every support point is hit by exactly 4 of the 4N (query, sample) pairs
    for x, c in images.items():
        if x not in supp:
            raise VerificationFailed("embedding leaves the support", x)
        if c != 4:
            raise VerificationFailed(f"point hit {c} times instead of 4", x)
    if len(images) != N:
        missing = next(x for x in supp if x not in images)
        raise VerificationFailed("support point never produced", missing)
    return EmbeddingCertificate(tuple(sorted(S)), j, True, True, True, N)


def shift_bijection(W: AffinePowerCoset, S, q, q_prime, j=None, budget: int = DEFAULT_ENUM_BUDGET) -> dict:
    """``x -> x + (q' - q) 1_S`` row by row, checked to permute the support of ``P~``.

    When ``j`` (an element of ``S``) is given, also check that it carries
    ``{x^j = q}`` onto ``{x^j = q'}``.
    """
    mS = _mask(S)
    supp = [tuple(int(v) for v in row) for row in support(W, budget)]
    table = {x: tuple(xi ^ (mS if (a ^ b) else 0) for xi, a, b in zip(x, q, q_prime)) for x in supp}
    if set(table.values()) != set(supp):
        raise VerificationFailed("shift does not permute the support", next(iter(set(table.values()) - set(supp)), None))
    if j is not None:
        src = {x for x in supp if tuple(_bit(xi, j) for xi in x) == tuple(q)}
        dst = {x for x in supp if tuple(_bit(xi, j) for xi in x) == tuple(q_prime)}
        if {table[x] for x in src} != dst:
            raise VerificationFailed(f"shift does not map x^{j} = q onto x^{j} = q'", (q, q_prime))
    return table


def embedded_coordinate_value(W: AffinePowerCoset, j: int, budget: int = 1 << 30):
    """``v^j(G_GHZ^n | P~)``; equals 3/4 whenever coordinate ``j`` is embeddable."""
    from .games import coordinate_value, ghz_game

    return coordinate_value(ghz_game().repeat(W.n), j, conditioned_dist(W), budget=budget)
