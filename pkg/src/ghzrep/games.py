"""Multi-player games, parallel repetition and exact value computation.

Query and answer symbols are integers. In the n-fold repetition a player's
query vector ``(x^1, ..., x^n)`` is encoded as ``sum_j x^j * |X_i|**(j-1)``,
so for binary alphabets the encoding coincides with the F2 bit-packing of
:mod:`ghzrep.f2linalg`. Strategies are flat integer tables indexed by that
encoding.
"""
from __future__ import annotations

import itertools
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from math import lcm, prod
from typing import Sequence

import numpy as np

from . import kernels
from .errors import BudgetExceeded, ShapeMismatch, UnsupportedDistribution
from .probdist import FiniteDist

DEFAULT_STRATEGY_BUDGET = 1 << 30
GHZ_QUERIES = ((0, 0, 0), (0, 1, 1), (1, 0, 1), (1, 1, 0))


@dataclass(frozen=True)
class ProductStrategy:
    tables: tuple[np.ndarray, ...]

    def __post_init__(self):
        object.__setattr__(self, "tables", tuple(np.asarray(t, dtype=np.int64) for t in self.tables))

    def __call__(self, x: Sequence[int]) -> tuple[int, ...]:
        return tuple(int(t[xi]) for t, xi in zip(self.tables, x))

    def __eq__(self, other):
        return isinstance(other, ProductStrategy) and all(
            np.array_equal(a, b) for a, b in zip(self.tables, other.tables)
        )

    def to_lists(self) -> list[list[int]]:
        return [t.tolist() for t in self.tables]


class Game:
    """A k-player game ``(X, Y, Q, W)`` with a dense win table."""

    def __init__(self, query_sizes, answer_sizes, query_dist: FiniteDist, win_table):
        self.query_sizes = tuple(int(s) for s in query_sizes)
        self.answer_sizes = tuple(int(s) for s in answer_sizes)
        if len(self.query_sizes) != len(self.answer_sizes):
            raise ShapeMismatch("query and answer alphabets disagree on k")
        self.query_dist = query_dist
        win = np.asarray(win_table).astype(bool)
        if win.shape != self.query_sizes + self.answer_sizes:
            raise ShapeMismatch(f"win table shape {win.shape}, expected {self.query_sizes + self.answer_sizes}")
        self.win_table = win
        for q in query_dist.support:
            if len(q) != self.k or any(not 0 <= qi < s for qi, s in zip(q, self.query_sizes)):
                raise UnsupportedDistribution(f"query {q!r} outside the query alphabet")

    @property
    def k(self) -> int:
        return len(self.query_sizes)

    def win(self, x, y) -> bool:
        return bool(self.win_table[tuple(x) + tuple(y)])

    def player_query_sizes(self):
        return self.query_sizes

    def player_answer_sizes(self):
        return self.answer_sizes

    def win_rows(self, queries: np.ndarray) -> np.ndarray:
        """``(S, A)`` 0/1 rows for the given query tuples; answers flattened with the last player fastest."""
        queries = np.asarray(queries, dtype=np.int64)
        rows = self.win_table[tuple(queries[:, i] for i in range(self.k))]
        return rows.reshape(len(queries), -1).astype(np.uint8)

    def coordinate_rows(self, queries, j):
        raise TypeError("coordinate values are defined for repeated games")

    def repeat(self, n: int) -> "RepeatedGame":
        return RepeatedGame(self, n)

    def __eq__(self, other):
        return (
            isinstance(other, Game)
            and not isinstance(other, RepeatedGame)
            and self.query_sizes == other.query_sizes
            and self.answer_sizes == other.answer_sizes
            and self.query_dist == other.query_dist
            and np.array_equal(self.win_table, other.win_table)
        )

    def __repr__(self):
        return f"Game(k={self.k}, X={self.query_sizes}, Y={self.answer_sizes})"


class RepeatedGame(Game):
    """``G^n``: product queries, win iff every coordinate is won."""

    def __init__(self, base: Game, n: int):
        if n < 1:
            raise ValueError("n must be positive")
        self.base = base
        self.n = int(n)
        self.query_sizes = tuple(s ** n for s in base.query_sizes)
        self.answer_sizes = tuple(s ** n for s in base.answer_sizes)
        self._dist = None

    @property
    def query_dist(self) -> FiniteDist:
        if self._dist is None:
            qs, w, den = self.support_arrays()
            self._dist = FiniteDist({tuple(int(v) for v in q): Fraction(int(wi), den) for q, wi in zip(qs, w)})
        return self._dist

    @property
    def win_table(self):
        raise AttributeError("repeated games evaluate the win predicate per query; use win_rows")

    def support_arrays(self):
        """Support of ``Q^n`` as ``(queries (S, k), integer weights, denominator)``."""
        base_q, base_w, den = dist_arrays(self.base.query_dist)
        k = self.base.k
        qs = np.zeros((1, k), dtype=np.int64)
        ws = np.ones(1, dtype=np.int64)
        for j in range(self.n):
            scale = np.array([s ** j for s in self.base.query_sizes], dtype=np.int64)
            qs = (qs[:, None, :] + base_q[None, :, :] * scale).reshape(-1, k)
            ws = (ws[:, None] * base_w[None, :]).reshape(-1)
        return qs, ws, den ** self.n

    def digits(self, values, i, kind="query"):
        base = (self.base.query_sizes if kind == "query" else self.base.answer_sizes)[i]
        values = np.asarray(values, dtype=np.int64)
        return np.stack([(values // base ** j) % base for j in range(self.n)], axis=-1)

    def win(self, x, y) -> bool:
        xd = [self.digits(np.array([xi]), i)[0] for i, xi in enumerate(x)]
        yd = [self.digits(np.array([yi]), i, "answer")[0] for i, yi in enumerate(y)]
        bt = self.base.win_table
        return all(bt[tuple(int(xd[i][j]) for i in range(self.base.k)) + tuple(int(yd[i][j]) for i in range(self.base.k))] for j in range(self.n))

    def _answer_grid(self, sizes):
        grids = np.meshgrid(*[np.arange(s) for s in sizes], indexing="ij")
        return [g.ravel() for g in grids]

    def win_rows(self, queries) -> np.ndarray:
        queries = np.asarray(queries, dtype=np.int64)
        k = self.base.k
        ys = self._answer_grid(self.answer_sizes)
        xd = [self.digits(queries[:, i], i) for i in range(k)]  # (S, n)
        yd = [self.digits(ys[i], i, "answer") for i in range(k)]  # (A, n)
        bt = self.base.win_table
        out = np.ones((len(queries), len(ys[0])), dtype=bool)
        for j in range(self.n):
            idx = tuple(xd[i][:, j][:, None] for i in range(k)) + tuple(yd[i][:, j][None, :] for i in range(k))
            out &= bt[idx]
        return out.astype(np.uint8)

    def coordinate_rows(self, queries, j) -> np.ndarray:
        """Win rows of the relaxed game that only scores coordinate ``j`` (1-based)."""
        if not 1 <= j <= self.n:
            raise ValueError(f"coordinate {j} outside 1..{self.n}")
        queries = np.asarray(queries, dtype=np.int64)
        k = self.base.k
        ys = self._answer_grid(self.base.answer_sizes)
        xj = [self.digits(queries[:, i], i)[:, j - 1] for i in range(k)]
        bt = self.base.win_table
        idx = tuple(xj[i][:, None] for i in range(k)) + tuple(ys[i][None, :] for i in range(k))
        return bt[idx].astype(np.uint8)

    def __eq__(self, other):
        return isinstance(other, RepeatedGame) and self.n == other.n and self.base == other.base

    def __repr__(self):
        return f"RepeatedGame({self.base!r}, n={self.n})"


def dist_arrays(P: FiniteDist):
    """Support of a distribution over query tuples as ``(queries, integer weights, denominator)``."""
    supp = P.support
    den = 1
    for q in supp:
        den = lcm(den, P[q].denominator)
    qs = np.array([list(q) for q in supp], dtype=np.int64).reshape(len(supp), -1)
    ws = np.array([P[q].numerator * (den // P[q].denominator) for q in supp], dtype=np.int64)
    return qs, ws, den


def ghz_game() -> Game:
    """Queries uniform on even-parity triples; win iff ``y1^y2^y3 == x1|x2|x3``."""
    Q = FiniteDist.uniform(GHZ_QUERIES)
    win = np.zeros((2,) * 6, dtype=bool)
    for x in itertools.product((0, 1), repeat=3):
        for y in itertools.product((0, 1), repeat=3):
            win[x + y] = (y[0] ^ y[1] ^ y[2]) == (x[0] | x[1] | x[2])
    return Game((2, 2, 2), (2, 2, 2), Q, win)


def trivial_game(always_win: bool, query_sizes=(2, 2, 2), answer_sizes=(2, 2, 2)) -> Game:
    Q = FiniteDist.uniform(itertools.product(*[range(s) for s in query_sizes]))
    win = np.full(tuple(query_sizes) + tuple(answer_sizes), always_win, dtype=bool)
    return Game(query_sizes, answer_sizes, Q, win)


# --------------------------------------------------------------------------
# search instances


@dataclass
class _Instance:
    qidx: np.ndarray
    weight: np.ndarray
    den: int
    win: np.ndarray
    values: list  # per player: full query value of each compressed index
    nq: np.ndarray
    na: np.ndarray
    full_sizes: tuple

    @property
    def space(self) -> int:
        return prod(int(a) ** int(q) for q, a in zip(self.nq, self.na))

    def expand(self, tables) -> ProductStrategy:
        full = []
        for i, t in enumerate(tables):
            ft = np.zeros(self.full_sizes[i], dtype=np.int64)
            ft[self.values[i]] = t
            full.append(ft)
        return ProductStrategy(tuple(full))

    def compress(self, f: ProductStrategy):
        return [np.asarray(f.tables[i])[self.values[i]] for i in range(len(self.values))]

    def score(self, tables) -> int:
        stride, _ = kernels._layout(self.nq, self.na)
        a = np.zeros(len(self.qidx), dtype=np.int64)
        for i, t in enumerate(tables):
            a += np.asarray(t)[self.qidx[:, i]] * stride[i]
        return int((self.weight * self.win[np.arange(len(a)), a]).sum())


def _make_instance(queries, weights, den, win_rows, answer_sizes, full_sizes) -> _Instance:
    queries = np.asarray(queries, dtype=np.int64)
    values, qidx = [], np.zeros_like(queries)
    for i in range(queries.shape[1]):
        vals, inv = np.unique(queries[:, i], return_inverse=True)
        values.append(vals)
        qidx[:, i] = inv.reshape(-1)
    return _Instance(
        qidx=qidx,
        weight=np.asarray(weights, dtype=np.int64),
        den=int(den),
        win=np.asarray(win_rows, dtype=np.uint8),
        values=values,
        nq=np.array([len(v) for v in values], dtype=np.int64),
        na=np.array(answer_sizes, dtype=np.int64),
        full_sizes=tuple(full_sizes),
    )


def _game_instance(G: Game, P: FiniteDist | None = None) -> _Instance:
    if P is None:
        if isinstance(G, RepeatedGame):
            qs, ws, den = G.support_arrays()
        else:
            qs, ws, den = dist_arrays(G.query_dist)
    else:
        qs, ws, den = dist_arrays(P)
        _check_support(G, qs)
    return _make_instance(qs, ws, den, G.win_rows(qs), G.answer_sizes, G.query_sizes)


def _check_support(G: Game, qs):
    if qs.size and (np.any(qs < 0) or np.any(qs >= np.array(G.query_sizes))):
        raise UnsupportedDistribution("modified distribution has queries outside the alphabet")


def _search(inst: _Instance, budget: int, threads: int = 1):
    if inst.space > budget:
        raise BudgetExceeded(inst.space, budget, "strategy tuples")
    total = kernels.outer_count(inst.nq, inst.na)
    threads = max(1, min(int(threads), total))
    if threads == 1:
        return kernels.pruned_search(inst.qidx, inst.weight, inst.win, inst.nq, inst.na)
    bounds = np.linspace(0, total, threads + 1).astype(np.int64)
    with ThreadPoolExecutor(threads) as ex:
        parts = list(
            ex.map(
                lambda lh: kernels.pruned_search(inst.qidx, inst.weight, inst.win, inst.nq, inst.na, lo=int(lh[0]), hi=int(lh[1])),
                zip(bounds[:-1], bounds[1:]),
            )
        )
    # earliest chunk wins ties, matching the single-threaded order
    best = max(range(len(parts)), key=lambda c: (parts[c][0], -c))
    return parts[best]


def strategy_value(G: Game, f: ProductStrategy, P: FiniteDist | None = None) -> Fraction:
    """Exact ``Pr_{x <- Q}[W(x, f(x)) = 1]``."""
    if len(f.tables) != G.k or any(len(t) != s for t, s in zip(f.tables, G.query_sizes)):
        raise ShapeMismatch("strategy tables do not match the game's query alphabets")
    if any(int(t.max(initial=0)) >= a or int(t.min(initial=0)) < 0 for t, a in zip(f.tables, G.answer_sizes)):
        raise ShapeMismatch("strategy answers outside the answer alphabet")
    inst = _game_instance(G, P)
    return Fraction(inst.score(inst.compress(f)), inst.den)


def exact_value(G: Game, budget: int = DEFAULT_STRATEGY_BUDGET, threads: int = 1, P: FiniteDist | None = None):
    """Exact value and lexicographically smallest optimal strategy."""
    inst = _game_instance(G, P)
    score, tables = _search(inst, budget, threads)
    return Fraction(score, inst.den), inst.expand(tables)


def brute_force_value(G: Game, budget: int = DEFAULT_STRATEGY_BUDGET, P: FiniteDist | None = None):
    """Unpruned enumeration of every strategy tuple; used as an oracle for :func:`exact_value`."""
    inst = _game_instance(G, P)
    if inst.space > budget:
        raise BudgetExceeded(inst.space, budget, "strategy tuples")
    score, tables = kernels.brute_search(inst.qidx, inst.weight, inst.win, inst.nq, inst.na)
    return Fraction(score, inst.den), inst.expand(tables)


def _coordinate_instance(Gn: RepeatedGame, j: int, P: FiniteDist | None) -> _Instance:
    if not isinstance(Gn, RepeatedGame):
        if j != 1:
            raise ValueError("a base game only has coordinate 1")
        Gn = RepeatedGame(Gn, 1)
    if P is None:
        qs, ws, den = Gn.support_arrays()
    else:
        qs, ws, den = dist_arrays(P)
        _check_support(Gn, qs)
    return _make_instance(qs, ws, den, Gn.coordinate_rows(qs, j), Gn.base.answer_sizes, Gn.query_sizes)


def coordinate_value(Gn: RepeatedGame, j: int, P_mod: FiniteDist | None = None, budget: int = DEFAULT_STRATEGY_BUDGET, threads: int = 1, with_witness: bool = False):
    """``v^j(G^n | P_mod)``: the best probability of winning coordinate ``j`` alone.

    Only the ``j``-th answer of each player matters, so the search runs over
    tables ``X_i^n -> Y_i`` (restricted to queries in the support).
    """
    inst = _coordinate_instance(Gn, j, P_mod)
    score, tables = _search(inst, budget, threads)
    val = Fraction(score, inst.den)
    if with_witness:
        return val, inst.expand(tables)
    return val


def coordinate_win_prob(Gn: RepeatedGame, j: int, f: ProductStrategy, P: FiniteDist | None = None) -> Fraction:
    """Success of a full strategy on coordinate ``j`` alone."""
    G1 = Gn if isinstance(Gn, RepeatedGame) else RepeatedGame(Gn, 1)
    qs, ws, den = G1.support_arrays() if P is None else dist_arrays(P)
    k = G1.base.k
    total = 0
    for q, w in zip(qs, ws):
        y = f(tuple(int(v) for v in q))
        xj = tuple(int(G1.digits(np.array([q[i]]), i)[0, j - 1]) for i in range(k))
        yj = tuple(int(G1.digits(np.array([y[i]]), i, "answer")[0, j - 1]) for i in range(k))
        if G1.base.win_table[xj + yj]:
            total += int(w)
    return Fraction(total, den)


def randomized_vs_deterministic_check(G: Game, seeds: int = 2, budget: int = 1 << 22):
    """Best uniform mixture over ``seeds`` deterministic strategies versus the deterministic value."""
    inst = _game_instance(G)
    per_player = [kernels._all_tables(int(q), int(a)) for q, a in zip(inst.nq, inst.na)]
    count = prod(len(t) for t in per_player)
    if count ** seeds > budget:
        raise BudgetExceeded(count ** seeds, budget, "seeded strategy tuples")
    values = np.array(
        [inst.score(list(combo)) for combo in itertools.product(*per_player)], dtype=np.int64
    )
    best_mix = Fraction(-1)
    for idx in itertools.product(range(len(values)), repeat=seeds):
        v = Fraction(int(values[list(idx)].sum()), seeds * inst.den)
        if v > best_mix:
            best_mix = v
    det, _ = exact_value(G)
    return best_mix == det, best_mix, det


def heuristic_value_lower_bound(G: Game, budget: int = 20000, seed: int = 0, P: FiniteDist | None = None, restarts: int | None = None):
    """Steepest-ascent single-entry search with random restarts; returns a certified lower bound."""
    inst = _game_instance(G, P)
    rng = np.random.default_rng(seed)
    evals = 0
    best_score, best_tables = -1, None
    while evals < budget and (restarts is None or restarts > 0):
        if restarts is not None:
            restarts -= 1
        tables = [rng.integers(0, int(a), size=int(q)) for q, a in zip(inst.nq, inst.na)]
        cur = inst.score(tables)
        evals += 1
        while evals < budget:
            move, move_score = None, cur
            for i, t in enumerate(tables):
                for e in range(len(t)):
                    old = t[e]
                    for v in range(int(inst.na[i])):
                        if v == old:
                            continue
                        t[e] = v
                        s = inst.score(tables)
                        evals += 1
                        if s > move_score:
                            move, move_score = (i, e, v), s
                    t[e] = old
            if move is None:
                break
            i, e, v = move
            tables[i][e] = v
            cur = move_score
        if cur > best_score:
            best_score, best_tables = cur, [t.copy() for t in tables]
        if best_score == inst.weight.sum():
            break
    return Fraction(best_score, inst.den), inst.expand(best_tables)


# --------------------------------------------------------------------------
# serialization


def game_to_dict(G: Game) -> dict:
    if isinstance(G, RepeatedGame):
        return {"format": "ghzrep.repeated_game", "version": 1, "n": G.n, "base": game_to_dict(G.base)}
    return {
        "format": "ghzrep.game",
        "version": 1,
        "k": G.k,
        "query_sizes": list(G.query_sizes),
        "answer_sizes": list(G.answer_sizes),
        "query_dist": [[list(q), f"{p.numerator}/{p.denominator}"] for q, p in G.query_dist.items()],
        "win": [int(b) for b in G.win_table.ravel()],
    }


def game_from_dict(d: dict) -> Game:
    if d.get("format") == "ghzrep.repeated_game":
        return RepeatedGame(game_from_dict(d["base"]), d["n"])
    if d.get("format") != "ghzrep.game":
        raise ValueError(f"unknown document format {d.get('format')!r}")
    Q = FiniteDist({tuple(q): Fraction(p) for q, p in d["query_dist"]})
    shape = tuple(d["query_sizes"]) + tuple(d["answer_sizes"])
    win = np.array(d["win"], dtype=bool).reshape(shape)
    if len(d["query_sizes"]) != d["k"]:
        raise ShapeMismatch("k does not match the alphabets")
    return Game(d["query_sizes"], d["answer_sizes"], Q, win)


def dumps(G: Game) -> str:
    return json.dumps(game_to_dict(G), sort_keys=True)


def loads(text: str) -> Game:
    return game_from_dict(json.loads(text))
