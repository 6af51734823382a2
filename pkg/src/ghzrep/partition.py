"""Affine partitions of F2^{3 x n}, the ``d_m`` closeness measure and the two refinement procedures.

``d_m(X~ || X)`` is the largest KL divergence between ``phi^3(X~)`` and
``phi^3(X)`` over linear ``phi : F2^n -> F2^m``. On a coset of ``V^3`` only
``ker(phi) & V`` matters, so the search runs over subspaces of V's coordinate
space (``m``-dimensional sets of functionals ``gamma``). Divergences and
entropies are in nats.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from typing import Callable, Iterable, Sequence

import numpy as np

from . import kernels
from .errors import (
    BudgetExceeded,
    ExactSearchInfeasible,
    NonProductEvent,
    RankDeficient,
    UniverseMismatch,
    VerificationFailed,
    ZeroMassEvent,
)
from .f2linalg import (
    DEFAULT_ENUM_BUDGET,
    AffinePowerCoset,
    Subspace,
    coset_reps,
    dot,
    pext_array,
    popcount_parity,
)
from .probdist import FiniteDist

LN2 = math.log(2)
DEFAULT_SEARCH_BUDGET = 1 << 27


# --------------------------------------------------------------------------
# product events


@dataclass(frozen=True)
class ProductEvent:
    """``E = E1 x E2 x E3`` with each ``E_i`` a subset of F2^n (as ints)."""

    n: int
    sets: tuple

    def __post_init__(self):
        sets = tuple(frozenset(int(v) for v in s) for s in self.sets)
        if len(sets) != 3:
            raise ValueError("a product event has three factors")
        limit = 1 << self.n
        if any(not 0 <= v < limit for s in sets for v in s):
            raise ValueError("event member outside F2^n")
        object.__setattr__(self, "sets", sets)

    @classmethod
    def full(cls, n: int) -> "ProductEvent":
        every = range(1 << n)
        return cls(n, (every, every, every))

    @classmethod
    def from_predicates(cls, n: int, preds: Sequence[Callable[[int], bool]]) -> "ProductEvent":
        return cls(n, tuple([v for v in range(1 << n) if p(v)] for p in preds))

    @classmethod
    def from_triples(cls, n: int, triples: Iterable) -> "ProductEvent":
        """Accept an explicit set of triples only if it is a full product of its projections."""
        triples = {tuple(int(v) for v in t) for t in triples}
        sets = tuple({t[i] for t in triples} for i in range(3))
        if len(triples) != math.prod(len(s) for s in sets):
            raise NonProductEvent("the triple set is not a product of its projections")
        return cls(n, sets)

    def masks(self) -> list[np.ndarray]:
        out = []
        for s in self.sets:
            m = np.zeros(1 << self.n, dtype=bool)
            m[list(s)] = True
            out.append(m)
        return out

    def contains_array(self, pts: np.ndarray) -> np.ndarray:
        masks = self.masks()
        pts = np.asarray(pts).astype(np.int64)
        return masks[0][pts[:, 0]] & masks[1][pts[:, 1]] & masks[2][pts[:, 2]]

    def __contains__(self, x) -> bool:
        return all(int(xi) in s for xi, s in zip(x, self.sets))

    def ghz_prob(self) -> Fraction:
        """``Q^n(E)`` for the n-fold GHZ query distribution."""
        pts = AffinePowerCoset.full(self.n).ghz_points()
        return Fraction(int(self.contains_array(pts).sum()), len(pts))


# --------------------------------------------------------------------------
# d_m closeness


@dataclass
class ClosenessReport:
    m: int
    value: float
    witness: tuple  # functionals on F2^n (one per output bit)
    witness_coords: tuple = ()  # the same functionals in V's coordinates
    exact: bool = True


def gaussian_binomial(d: int, r: int) -> int:
    if r < 0 or r > d:
        return 0
    num = den = 1
    for i in range(r):
        num *= (1 << (d - i)) - 1
        den *= (1 << (i + 1)) - 1
    return num // den


def subspace_bases(d: int, r: int) -> Iterable[np.ndarray]:
    """Every r-dimensional subspace of F2^d once, as ``(batch, r)`` arrays of RREF bases."""
    if r == 0:
        yield np.zeros((1, 0), dtype=np.int64)
        return
    for piv in itertools.combinations(range(d), r):
        pset = set(piv)
        free = [[q for q in range(p + 1, d) if q not in pset] for p in piv]
        nfree = sum(len(f) for f in free)
        t = np.arange(1 << nfree, dtype=np.int64)
        out = np.zeros((len(t), r), dtype=np.int64)
        shift = 0
        for k, p in enumerate(piv):
            row = np.full(len(t), 1 << p, dtype=np.int64)
            for q in free[k]:
                row |= ((t >> shift) & 1) << q
                shift += 1
            out[:, k] = row
        yield out


def _kl_counts(ct: np.ndarray, cp: np.ndarray, tt, tp) -> np.ndarray:
    """KL between histograms along the last axis (``ct``, ``cp`` unnormalized)."""
    ct = np.asarray(ct, dtype=np.float64)
    cp = np.asarray(cp, dtype=np.float64)
    pt = ct / tt
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(ct > 0, pt * np.log((ct * tp) / (cp * tt)), 0.0)
    out = terms.sum(axis=-1)
    bad = np.any((ct > 0) & (cp == 0), axis=-1)
    out = np.where(bad, np.inf, out)
    return np.maximum(out, 0.0)


def _full_kl(coords, wt, wp) -> float:
    keys, inv = np.unique(coords, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    ct = np.bincount(inv, weights=wt, minlength=len(keys))
    cp = np.bincount(inv, weights=wp, minlength=len(keys))
    return float(_kl_counts(ct, cp, wt.sum(), wp.sum()))


def _best_single(coords, wt, wp, d, budget):
    """KL of ``(gc1, gc2, gc3)`` for every functional ``g`` at once.

    For each ``s`` in F2^3 the histogram of ``s1 c1 + s2 c2 + s3 c3`` has
    Walsh transform ``sum_x w(x) (-1)^{s . b_g(x)}`` where ``b_g(x)`` is the
    compressed triple; a second transform over ``s`` recovers the counts of
    each ``b``.
    """
    size = 1 << d
    if 16 * size > budget:
        raise BudgetExceeded(16 * size, budget, "transform entries")
    res = []
    for w in (wt, wp):
        H = np.zeros((size, 8), dtype=np.int64)
        for s in range(8):
            u = np.zeros(len(coords), dtype=np.int64)
            for i in range(3):
                if (s >> (2 - i)) & 1:
                    u ^= coords[:, i]
            H[:, s] = np.bincount(u, weights=w, minlength=size).astype(np.int64)
        H = kernels.fwht(H.T).T  # over u: for each s, transform indexed by g
        counts = kernels.fwht(H) // 8  # over s: counts indexed by b (c1 is the high bit)
        res.append(counts)
    kl = _kl_counts(res[0], res[1], wt.sum(), wp.sum())
    kl[0] = 0.0
    return kl


def _dm_coords(coords, wt, wp, d, m, budget=DEFAULT_SEARCH_BUDGET, heuristic=False):
    """``(value, gammas, exact)`` for points given by V-coordinates."""
    coords = np.asarray(coords, dtype=np.int64).reshape(-1, 3)
    wt = np.asarray(wt, dtype=np.int64)
    wp = np.asarray(wp, dtype=np.int64)
    r = min(m, d)
    if r == 0:
        return 0.0, (), True
    if r == d:
        return _full_kl(coords, wt, wp), tuple(1 << k for k in range(d)), True
    if r == 1:
        kl = _best_single(coords, wt, wp, d, budget)
        g = int(np.argmax(kl))
        return float(kl[g]), (g,) if g else (1,), True
    count = gaussian_binomial(d, r)
    if count * max(len(coords), 1) > budget:
        if not heuristic:
            raise ExactSearchInfeasible(f"{count} subspaces of dimension {r} in F2^{d} over {len(coords)} points")
        return (*_greedy_dm(coords, wt, wp, d, r, budget), False)
    best, arg = -1.0, None
    for batch in subspace_bases(d, r):
        kl = kernels.compressed_kl(coords, wt, wp, batch)
        g = int(np.argmax(kl))
        if kl[g] > best:
            best, arg = float(kl[g]), tuple(int(v) for v in batch[g])
    return best, arg, True


def _greedy_dm(coords, wt, wp, d, r, budget):
    """Lower bound for large searches: grow the functional set one element at a time."""
    val, gam, _ = _dm_coords(coords, wt, wp, d, 1, budget)
    chosen = list(gam)
    for _ in range(r - 1):
        span = Subspace.span(d, chosen)
        cands = np.array([[*chosen, g] for g in range(1, 1 << d) if g not in span], dtype=np.int64)
        kl = kernels.compressed_kl(coords, wt, wp, cands)
        g = int(np.argmax(kl))
        val = float(kl[g])
        chosen = [int(v) for v in cands[g]]
    return val, tuple(chosen)


def _integer_weights(dists: Sequence[FiniteDist], keys) -> list[np.ndarray]:
    out = []
    for D in dists:
        den = 1
        for k in keys:
            den = lcm(den, D[k].denominator)
        out.append(np.array([int(D[k] * den) for k in keys], dtype=np.int64))
    return out


def d_m_closeness(Xt: FiniteDist, X: FiniteDist, m: int, W: AffinePowerCoset | None = None, n: int | None = None, budget: int = DEFAULT_SEARCH_BUDGET, heuristic: bool = False) -> ClosenessReport:
    """``max_phi d_KL(phi^3(Xt) || phi^3(X))`` over linear ``phi`` into F2^m."""
    if W is None:
        if n is None:
            raise ValueError("give the coset W or the dimension n")
        W = AffinePowerCoset.full(n)
    keys = list(dict.fromkeys(Xt.support + X.support))
    for k in keys:
        if k not in W:
            raise UniverseMismatch(f"outcome {k!r} lies outside the coset")
    wt, wp = _integer_weights((Xt, X), keys)
    V = W.space
    coords = np.array([[V.coords(int(xi) ^ wi) for xi, wi in zip(k, W.shift)] for k in keys], dtype=np.int64)
    value, gammas, exact = _dm_coords(coords, wt, wp, V.dim, m, budget, heuristic)
    return ClosenessReport(m, value, tuple(V.functional(g) for g in gammas), tuple(gammas), exact)


# --------------------------------------------------------------------------
# partitions


def default_map(V: Subspace, m: int) -> tuple[int, ...]:
    """Deterministic full-rank map on V: its first ``min(m, dim V)`` basis coordinates."""
    return tuple(V.functional(1 << k) for k in range(min(m, V.dim)))


@dataclass
class LinearRefiner:
    """Per-part linear maps; parts not listed use :func:`default_map`."""

    m: int
    maps: dict = field(default_factory=dict)

    def map_for(self, part: AffinePowerCoset) -> tuple[int, ...]:
        got = self.maps.get(part)
        return default_map(part.space, self.m) if got is None else got


def _restricted_rank(V: Subspace, functionals) -> int:
    rows = []
    for a in functionals:
        r = 0
        for k, b in enumerate(V.basis):
            if dot(a, b):
                r |= 1 << k
        rows.append(r)
    return Subspace.span(max(V.dim, 1), rows).dim


class AffinePartition:
    """Partition of F2^{3 x n} into cosets ``w + V^3`` of a common dimension.

    The partition is stored as its refinement history; ``part_of`` replays it.
    ``explicit`` optionally lists the parts that carry mass of interest.
    """

    def __init__(self, n: int, history: Sequence[LinearRefiner] = (), explicit: Sequence[AffinePowerCoset] | None = None):
        self.n = n
        self.history = tuple(history)
        dim = n
        for R in self.history:
            dim -= min(R.m, dim)
        self.dim = dim
        self.explicit = None if explicit is None else list(explicit)

    @classmethod
    def trivial(cls, n: int) -> "AffinePartition":
        return cls(n, (), [AffinePowerCoset.full(n)])

    @property
    def codim(self) -> int:
        return self.n - self.dim

    def num_parts(self) -> int:
        return 1 << (3 * self.codim)

    def part_of(self, x) -> AffinePowerCoset:
        part = AffinePowerCoset.full(self.n)
        for R in self.history:
            V = part.space.kernel_of(R.map_for(part))
            part = AffinePowerCoset(tuple(int(v) for v in x), V)
        return part

    def iter_parts(self, budget: int = DEFAULT_ENUM_BUDGET):
        if self.num_parts() > budget:
            raise BudgetExceeded(self.num_parts(), budget, "parts")
        parts = [AffinePowerCoset.full(self.n)]
        for R in self.history:
            nxt = []
            for part in parts:
                V2 = part.space.kernel_of(R.map_for(part))
                reps = coset_reps(part.space, V2)
                for a, b, c in itertools.product(reps, repeat=3):
                    w = part.shift
                    nxt.append(AffinePowerCoset((w[0] ^ a, w[1] ^ b, w[2] ^ c), V2))
            parts = nxt
        return parts

    def __repr__(self):
        return f"AffinePartition(n={self.n}, dim={self.dim}, rounds={len(self.history)})"


def refine(Pi: AffinePartition, R: LinearRefiner) -> AffinePartition:
    """Intersect every part with the level sets of its map."""
    for part, a in R.maps.items():
        if Pi.part_of(part.shift) != part:
            raise ValueError(f"{part!r} is not a part of the partition")
        want = min(R.m, part.space.dim)
        if len(a) != want or _restricted_rank(part.space, a) != want:
            raise RankDeficient(f"map of rank below {want} on a part of dimension {part.space.dim}")
    explicit = None
    if Pi.explicit is not None:
        explicit = []
        for part in Pi.explicit:
            V2 = part.space.kernel_of(R.map_for(part))
            for a, b, c in itertools.product(coset_reps(part.space, V2), repeat=3):
                explicit.append(AffinePowerCoset((part.shift[0] ^ a, part.shift[1] ^ b, part.shift[2] ^ c), V2))
    return AffinePartition(Pi.n, Pi.history + (R,), explicit)


def _groups(Pi: AffinePartition, keys) -> dict:
    groups: dict = {}
    for idx, k in enumerate(keys):
        groups.setdefault(Pi.part_of(k), []).append(idx)
    return groups


def expected_closeness(Pi: AffinePartition, Pt: FiniteDist, P: FiniteDist, m: int, budget=DEFAULT_SEARCH_BUDGET, heuristic=False):
    """``E_{pi <- Pt}[d_m(Pt|pi || P|pi)]`` and the per-part reports."""
    keys = list(dict.fromkeys(Pt.support + P.support))
    total = 0.0
    reports = {}
    for part, idx in _groups(Pi, keys).items():
        sub = [keys[i] for i in idx]
        mass = sum((Pt[k] for k in sub), Fraction(0))
        if mass == 0:
            continue
        pmass = sum((P[k] for k in sub), Fraction(0))
        if pmass == 0:
            reports[part] = ClosenessReport(m, math.inf, default_map(part.space, m))
            return math.inf, reports
        Ptc = FiniteDist({k: Pt[k] / mass for k in sub})
        Pc = FiniteDist({k: P[k] / pmass for k in sub})
        rep = d_m_closeness(Ptc, Pc, m, part, budget=budget, heuristic=heuristic)
        reports[part] = rep
        if not math.isfinite(rep.value):
            return math.inf, reports
        total += float(mass) * rep.value
    return total, reports


def find_distinguisher(Pi: AffinePartition, Pt: FiniteDist, P: FiniteDist, m: int, delta: float, budget=DEFAULT_SEARCH_BUDGET, heuristic=False) -> LinearRefiner | None:
    """Per-part maximizing maps if the expected closeness exceeds ``delta``, else ``None``."""
    if math.isinf(delta) and delta > 0:
        return None
    value, reports = expected_closeness(Pi, Pt, P, m, budget, heuristic)
    if value <= delta:
        return None
    return LinearRefiner(m, {part: rep.witness for part, rep in reports.items()})


def potential(Pi: AffinePartition, Pt: FiniteDist, P: FiniteDist) -> float:
    """``d_KL(Pt_{X | Pi(X)} || P_{X | Pi(X)})``."""
    keys = list(dict.fromkeys(Pt.support + P.support))
    total = 0.0
    for _, idx in _groups(Pi, keys).items():
        sub = [keys[i] for i in idx]
        mass = sum((Pt[k] for k in sub), Fraction(0))
        if mass == 0:
            continue
        pmass = sum((P[k] for k in sub), Fraction(0))
        if pmass == 0:
            return math.inf
        for k in sub:
            if Pt[k]:
                if P[k] == 0:
                    return math.inf
                total += float(Pt[k]) * math.log((Pt[k] / mass) / (P[k] / pmass))
    return max(total, 0.0)


# --------------------------------------------------------------------------
# pseudorandom partition for P = Q^n and Pt = P | E


@dataclass
class PartitionTrace:
    delta_potential: float  # -ln P(E)
    delta: float
    m: int
    rounds: list = field(default_factory=list)
    steps_ok: bool = True
    codim_ok: bool = True
    decrease_ok: bool = True

    def to_dict(self) -> dict:
        return {
            "format": "ghzrep.partition_trace",
            "version": 1,
            "Delta": self.delta_potential,
            "delta": self.delta,
            "m": self.m,
            "rounds": self.rounds,
            "checks": {"steps": self.steps_ok, "codim": self.codim_ok, "decrease": self.decrease_ok},
        }


@dataclass
class PartState:
    """GHZ^n support points lying in parts with positive conditional mass."""

    parts: list
    pts: np.ndarray
    in_event: np.ndarray
    pid: np.ndarray

    def members(self, p):
        return np.nonzero(self.pid == p)[0]

    def part_weights(self):
        t = np.bincount(self.pid, weights=self.in_event, minlength=len(self.parts))
        c = np.bincount(self.pid, minlength=len(self.parts))
        return t.astype(np.int64), c.astype(np.int64)


def _split(state: PartState, maps: dict) -> PartState:
    new_parts, new_pid, keep = [], np.full(len(state.pts), -1, dtype=np.int64), []
    for p, part in enumerate(state.parts):
        idx = state.members(p)
        V2 = part.space.kernel_of(maps[p])
        shifts = np.stack([V2.reduce_array(state.pts[idx, i]) for i in range(3)], axis=1)
        uniq, inv = np.unique(shifts, axis=0, return_inverse=True)
        inv = inv.reshape(-1)
        for u in range(len(uniq)):
            sel = idx[inv == u]
            if state.in_event[sel].any():
                new_pid[sel] = len(new_parts)
                new_parts.append(AffinePowerCoset(tuple(int(v) for v in uniq[u]), V2))
    keep = new_pid >= 0
    return PartState(new_parts, state.pts[keep], state.in_event[keep], new_pid[keep])


def initial_state(E: ProductEvent) -> PartState:
    pts = AffinePowerCoset.full(E.n).ghz_points()
    inE = E.contains_array(pts)
    if not inE.any():
        raise ZeroMassEvent("Q^n(E) = 0")
    return PartState([AffinePowerCoset.full(E.n)], pts, inE, np.zeros(len(pts), dtype=np.int64))


def part_closeness(state: PartState, p: int, m: int, budget=DEFAULT_SEARCH_BUDGET, heuristic=False):
    """``(value, functionals)`` of ``d_m(Pt|pi || P|pi)`` for part ``p``."""
    part = state.parts[p]
    idx = state.members(p)
    V = part.space
    coords = np.stack([V.coords_array(state.pts[idx, i]) for i in range(3)], axis=1)
    value, gammas, _ = _dm_coords(coords, state.in_event[idx].astype(np.int64), np.ones(len(idx), dtype=np.int64), V.dim, m, budget, heuristic)
    return value, tuple(V.functional(g) for g in gammas)


def state_potential(state: PartState) -> float:
    t, c = state.part_weights()
    T = t.sum()
    pos = t > 0
    return float(np.sum(t[pos] / T * np.log(c[pos] / t[pos])))


def pseudorandom_partition(E: ProductEvent, delta: float, m: int, budget=DEFAULT_SEARCH_BUDGET, heuristic=False):
    """Refine until ``E_pi[d_m(Pt|pi || P|pi)] <= delta`` for ``P = Q^n`` and ``Pt = P | E``.

    Returns the partition and a trace. The partition lists its parts of
    positive conditional mass in ``explicit`` and keeps the support bookkeeping
    in ``state``.
    """
    if not isinstance(E, ProductEvent):
        raise NonProductEvent("expected a ProductEvent")
    if not delta > 0:
        raise ValueError("delta must be positive")
    state = initial_state(E)
    Delta = state_potential(state)
    trace = PartitionTrace(Delta, delta, m)
    Pi = AffinePartition(E.n)
    while True:
        t, _ = state.part_weights()
        T = t.sum()
        results = [part_closeness(state, p, m, budget, heuristic) for p in range(len(state.parts))]
        expected = float(sum(t[p] / T * results[p][0] for p in range(len(state.parts))))
        trace.rounds.append(
            {
                "round": len(trace.rounds),
                "phi": state_potential(state),
                "codim": Pi.codim,
                "parts": len(state.parts),
                "expected_dm": expected,
            }
        )
        if expected <= delta or Pi.dim == 0:
            break
        maps = {p: results[p][1] for p in range(len(state.parts))}
        R = LinearRefiner(m, {state.parts[p]: maps[p] for p in maps})
        state = _split(state, maps)
        Pi = AffinePartition(E.n, Pi.history + (R,))
    Pi.explicit = list(state.parts)
    Pi.state = state
    steps = len(trace.rounds) - 1
    phis = [r["phi"] for r in trace.rounds]
    # the decrease equals the expected closeness that triggered the step; allow float noise
    trace.decrease_ok = all(phis[i] - phis[i + 1] > delta - 1e-12 for i in range(steps))
    trace.steps_ok = steps <= math.ceil(Delta / delta - 1e-12) if math.isfinite(delta) else steps == 0
    trace.codim_ok = Pi.codim <= m * Delta / delta + 1e-9
    if not (trace.decrease_ok and trace.steps_ok and trace.codim_ok):
        raise VerificationFailed("pseudorandom partition guarantees violated", trace.to_dict())
    return Pi, trace


# --------------------------------------------------------------------------
# strategy-dependent refinement


def _binary_entropy(p):
    p = np.clip(p, 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -(np.where(p > 0, p * np.log(p), 0.0) + np.where(p < 1, (1 - p) * np.log1p(-p), 0.0))
    return h


def _cells(cols):
    """Dense ids of the distinct rows of ``cols`` (packed into one word when they fit)."""
    cols = [np.asarray(c, dtype=np.uint64) for c in cols]
    widths = [int(c.max(initial=0)).bit_length() for c in cols]
    if sum(widths) <= 63:
        key = np.zeros(len(cols[0]), dtype=np.uint64)
        for c, w in zip(cols, widths):
            key = (key << np.uint64(w)) | c
        _, inv = np.unique(key, return_inverse=True)
    else:
        _, inv = np.unique(np.stack(cols, axis=1), axis=0, return_inverse=True)
    return inv.reshape(-1)


def _hist(cell, u, w, d, budget):
    ncell = int(cell.max()) + 1
    size = ncell << d
    if size > budget:
        raise BudgetExceeded(size, budget, "character histogram entries")
    h = np.bincount(cell * (1 << d) + u, weights=w, minlength=size)
    return h.reshape(ncell, 1 << d)


def character_biases(U: Subspace, pts, y, w, budget=DEFAULT_SEARCH_BUDGET) -> np.ndarray:
    """``b(gamma) = E[d_KL(law of gamma(X1) given X in x + U^3 and Y1 = y || uniform bit)]`` for all gamma."""
    d = U.dim
    cell = _cells([U.reduce_array(pts[:, 0]), U.reduce_array(pts[:, 1]), U.reduce_array(pts[:, 2]), y.astype(np.uint64)])
    u = pext_array(pts[:, 0], U.pivots)
    h = _hist(cell, u, w.astype(np.float64), d, budget)
    cnt = h.sum(axis=1)
    hat = kernels.fwht(h)
    p1 = (cnt[:, None] - hat) / (2 * cnt[:, None])
    b = ((cnt / cnt.sum())[:, None] * (LN2 - _binary_entropy(p1))).sum(axis=0)
    b[0] = 0.0
    return np.maximum(b, 0.0)


def z_potential(U: Subspace, pts, y, w, budget=DEFAULT_SEARCH_BUDGET) -> float:
    """``dim(U) ln 2 - E[H(X1 | X1 in x1 + U, Y1 = y1)]``."""
    d = U.dim
    cell = _cells([U.reduce_array(pts[:, 0]), y.astype(np.uint64)])
    u = pext_array(pts[:, 0], U.pivots)
    h = _hist(cell, u, w.astype(np.float64), d, budget)
    cnt = h.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        q = h / cnt[:, None]
        ent = -np.where(q > 0, q * np.log(q), 0.0).sum(axis=1)
    return float(d * LN2 - (cnt / cnt.sum() * ent).sum())


@dataclass
class StrategyRefinement:
    U: Subspace
    V: Subspace
    j: int
    cuts: list  # gamma (in the coordinates of the space being cut) per round
    biases: list  # b_i of each cut, then the final maximum
    z: list
    z_decrease_ok: bool
    z1_ok: bool

    @property
    def codim(self) -> int:
        return self.V.dim - self.U.dim

    def to_dict(self) -> dict:
        return {
            "format": "ghzrep.strategy_refinement",
            "version": 1,
            "j": self.j,
            "codim": self.codim,
            "cuts": self.cuts,
            "biases": self.biases,
            "z": self.z,
            "checks": {"z_decrease": self.z_decrease_ok, "z1": self.z1_ok},
        }


def strategy_refinement(W: AffinePowerCoset, f1, delta: float, j: int, pts=None, weights=None, budget=DEFAULT_SEARCH_BUDGET, tol=1e-9) -> StrategyRefinement:
    """Shrink ``V`` to ``U`` (pinning coordinate ``j``) until no character of ``X1`` is biased by more than ``delta``.

    ``f1`` is player 1's answer table over F2^n (or a callable). By default
    ``X`` is uniform on the GHZ points of ``W``.
    """
    if pts is None:
        pts = W.ghz_points()
    pts = np.asarray(pts, dtype=np.uint64)
    w = np.ones(len(pts)) if weights is None else np.asarray(weights, dtype=np.float64)
    x1 = pts[:, 0].astype(np.int64)
    if callable(f1):
        y = np.array([int(f1(int(v))) for v in x1], dtype=np.int64)
    else:
        y = np.asarray(f1, dtype=np.int64)[x1]
    binary = set(np.unique(y).tolist()) <= {0, 1}
    V = W.space
    U = V.intersect_hyperplane(1 << (j - 1))
    cuts, biases, zs = [], [], [z_potential(U, pts, y, w, budget)]
    ok = True
    while U.dim > 0:
        b = character_biases(U, pts, y, w, budget)
        g = int(np.argmax(b))
        biases.append(float(b[g]))
        if b[g] <= delta:
            break
        U = U.intersect_hyperplane(U.functional(g))
        cuts.append(g)
        zs.append(z_potential(U, pts, y, w, budget))
        if zs[-1] > zs[-2] - biases[-1] + tol:
            ok = False
    if len(biases) == len(cuts):
        biases.append(0.0)  # U is trivial, so no character is left to be biased
    z1_ok = zs[0] <= 1 + tol if binary else True
    res = StrategyRefinement(U, V, j, cuts, biases, zs, ok, z1_ok)
    if not (ok and z1_ok):
        raise VerificationFailed("potential did not decrease as required", res.to_dict())
    return res
