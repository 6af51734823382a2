"""End-to-end certification runs that chain the lower-level modules.

Each run returns a plain dataclass report with a ``to_dict`` method. Measured
quantities are reported next to the bound they are compared against. An
inequality is *asserted* (and a failure raised) only when it holds
unconditionally or when the hypotheses it depends on were verified on the
instance; otherwise it is reported and labelled as unasserted.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from . import embedding
from .errors import ExactSearchInfeasible, VerificationFailed
from .f2linalg import AffinePowerCoset
from .fourier import product_function_independence_check
from .games import (
    ProductStrategy,
    RepeatedGame,
    coordinate_value,
    coordinate_win_prob,
    exact_value,
    ghz_game,
    strategy_value,
)
from .partition import (
    ProductEvent,
    _dm_coords,
    part_closeness,
    pseudorandom_partition,
    strategy_refinement,
)
from .probdist import FiniteDist, optimum_tau

DEFAULT_VALUE_BUDGET = 1 << 30


def _frac_str(x) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


# --------------------------------------------------------------------------
# constraint systems


def delta_constraints(delta: float, Delta: float, epsilon: float) -> dict:
    """The three upper bounds on ``delta`` required for pseudorandom parts to stay hard."""
    return {
        "exp": delta <= Delta ** 2 / 32 * math.exp(-4 * Delta / epsilon),
        "square": delta <= Delta ** 2 / (32 * math.e ** 2),
        "epsilon": delta <= 2 * epsilon ** 2,
    }


def theorem_constraints(n: float, delta: float, Delta: float, epsilon: float, m: float) -> dict:
    """Constraints of the main argument: the tripled-``delta`` bounds and ``delta >= 2 m Delta / n``."""
    flags = {f"3delta_{k}": v for k, v in delta_constraints(3 * delta, 3 * Delta, epsilon).items()}
    flags["coverage"] = delta >= 2 * m * Delta / n
    flags["epsilon_small"] = epsilon <= 1 / 32
    return flags


def _asymptotic_logs(L: float) -> dict:
    """Log of each side of the constraints for the asymptotic constants at ``n = e^L``.

    ``epsilon = 1/32``, ``Delta = 0.0005 L``, ``delta = e^{-0.4 L}``, ``m = e^{0.4 L}``.
    Returns ``lhs - rhs`` in log space for each constraint (satisfied iff <= 0).
    """
    eps = 1 / 32
    Delta = 0.0005 * L
    log_delta = -0.4 * L
    log_m = 0.4 * L
    out = {}
    log3d = math.log(3) + log_delta
    log9D2 = math.log(9 / 32) + 2 * math.log(Delta) if Delta > 0 else -math.inf
    out["3delta_exp"] = log3d - (log9D2 - 12 * Delta / eps)
    out["3delta_square"] = log3d - (log9D2 - 2)
    out["3delta_epsilon"] = log3d - math.log(2 * eps ** 2)
    out["coverage"] = (math.log(2) + log_m + math.log(Delta) - L) - log_delta if Delta > 0 else -math.inf
    return out


def asymptotic_constraints(n: int | None = None, log_n: float | None = None) -> dict:
    L = math.log(n) if log_n is None else log_n
    return {k: v <= 0 for k, v in _asymptotic_logs(L).items()}


def smallest_satisfying_log_n(lo: float = 1.0, hi: float = 1e4) -> float:
    """Smallest ``ln n`` at which the asymptotic constants satisfy every constraint.

    A grid scan brackets the first satisfying point (the constraints are
    eventually monotone); bisection refines it.
    """
    ok = lambda L: all(v <= 0 for v in _asymptotic_logs(L).values())
    grid = np.linspace(lo, hi, 200001)
    first = next((i for i, L in enumerate(grid) if ok(float(L))), None)
    if first is None:
        return math.inf
    if first == 0:
        return float(grid[0])
    a, b = float(grid[first - 1]), float(grid[first])
    for _ in range(200):
        mid = (a + b) / 2
        if ok(mid):
            b = mid
        else:
            a = mid
    return b


# --------------------------------------------------------------------------
# pseudorandom parts stay hard


def _uniform_dist(rows) -> FiniteDist:
    return FiniteDist.uniform(tuple(int(v) for v in r) for r in rows)


@dataclass
class PseudoHardnessReport:
    n: int
    j: int
    Delta: float
    delta: float
    epsilon: float
    m: int
    d_m: float
    d_m_exact: bool
    constraint_flags: dict
    closeness_ok: bool
    lhs: Fraction
    rhs_base: Fraction
    holds: bool
    intermediates: dict = field(default_factory=dict)

    @property
    def rhs(self) -> float:
        return float(self.rhs_base) + 2 * self.epsilon

    @property
    def hypothesis_ok(self) -> bool:
        return self.closeness_ok and all(self.constraint_flags.values())

    @property
    def violation(self) -> bool:
        return self.hypothesis_ok and not self.holds

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(
            format="ghzrep.pseudo_hardness",
            version=1,
            lhs=_frac_str(self.lhs),
            rhs_base=_frac_str(self.rhs_base),
            rhs=self.rhs,
            hypothesis_ok=self.hypothesis_ok,
            asserted=self.hypothesis_ok,
            violation=self.violation,
        )
        return d


def pseudo_hardness_check(W: AffinePowerCoset, E: ProductEvent, j: int, delta: float, epsilon: float, budget: int = DEFAULT_VALUE_BUDGET, intermediates: bool = True, threads: int = 1) -> PseudoHardnessReport:
    """Compare ``v^j(G^n | P~)`` with ``v^j(G^n | P) + 2 epsilon`` for ``P`` uniform on the GHZ points of W."""
    pts = embedding.support(W)
    n = W.n
    inE = E.contains_array(pts)
    T, N = int(inE.sum()), len(pts)
    if T == 0:
        raise embedding.EmptyIntersection("E has no mass on the GHZ points of W")
    Delta = math.log(N / T)
    m = math.ceil(1 / delta)
    V = W.space
    coords = np.stack([V.coords_array(pts[:, i]) for i in range(3)], axis=1)
    try:
        dm, _, exact = _dm_coords(coords, inE.astype(np.int64), np.ones(N, dtype=np.int64), V.dim, m)
    except ExactSearchInfeasible:
        dm, _, exact = _dm_coords(coords, inE.astype(np.int64), np.ones(N, dtype=np.int64), V.dim, m, heuristic=True)
    flags = delta_constraints(delta, Delta, epsilon)
    closeness_ok = exact and dm <= delta

    Gn = ghz_game().repeat(n)
    P = _uniform_dist(pts)
    Pt = _uniform_dist(pts[inE])
    lhs, f_t = coordinate_value(Gn, j, Pt, budget=budget, threads=threads, with_witness=True)
    rhs_base = coordinate_value(Gn, j, P, budget=budget, threads=threads)
    holds = lhs <= rhs_base + 2 * Fraction(epsilon)
    rep = PseudoHardnessReport(n, j, Delta, delta, epsilon, m, dm, exact, flags, closeness_ok, lhs, rhs_base, bool(holds))
    if intermediates:
        rep.intermediates = _pseudo_hardness_intermediates(W, pts, inE, f_t, j, delta, Delta, epsilon)
    if rep.violation:
        raise VerificationFailed("hardness bound violated although every hypothesis holds", rep.to_dict())
    return rep


def _pseudo_hardness_intermediates(W, pts, inE, f_t: ProductStrategy, j, delta, Delta, epsilon) -> dict:
    out = {}
    V = W.space
    f1 = f_t.tables[0]
    ref = strategy_refinement(W, f1, delta, j)
    U = ref.U
    out["refinement_codim"] = ref.codim
    out["refinement_codim_bound"] = math.ceil(1 / delta) + 1
    out["refinement_max_bias"] = ref.biases[-1] if ref.biases else 0.0

    # coset-conditioned independence of the three answers under P
    w1, w2, _ = W.shift
    elems = V.elements()
    Y = [np.asarray(f_t.tables[i], dtype=np.int64)[(elems ^ np.uint64(w)).astype(np.int64)] for i, w in enumerate((w1, w2, w1 ^ w2))]
    prod_rep = product_function_independence_check(V, U, Y, alphabet_sizes=(2, 2, 2))
    out["product_conclusion"] = float(prod_rep.conclusion)
    out["product_bound"] = math.sqrt(2 * delta)
    out["product_ok"] = float(prod_rep.conclusion) <= math.sqrt(2 * delta) + 1e-12
    if not out["product_ok"]:
        raise VerificationFailed("answers far from independent after refinement", out)

    # log-expectation and Markov bound for P(E | x + U^3)
    keys = np.stack([U.reduce_array(pts[:, i]) for i in range(3)], axis=1)
    _, cell = np.unique(keys, axis=0, return_inverse=True)
    cell = cell.reshape(-1)
    tot = np.bincount(cell)
    hit = np.bincount(cell, weights=inE)
    pe = hit / tot  # P(E | cell)
    wt = inE / inE.sum()
    log_exp = float(np.sum(wt * -np.log(np.where(inE, pe[cell], 1.0))))
    out["log_expectation"] = log_exp
    out["log_expectation_ok"] = log_exp <= Delta + 1e-12
    B = 4 * math.sqrt(2 * delta)
    tau = None
    if Delta > 0 and Delta >= math.e * B:
        tau, val, bound = optimum_tau(Delta, B)
        out["tv_chain_value"] = val
        out["tv_chain_bound"] = bound
        out["tv_chain_le_epsilon"] = bound <= epsilon
    else:
        out["tv_chain_bound"] = None
        out["tv_chain_le_epsilon"] = False
    tau = tau if tau is not None else math.exp(-1)
    frac_low = float(np.sum(wt[pe[cell] <= tau]))
    out["markov_tau"] = tau
    out["markov_lhs"] = frac_low
    out["markov_rhs"] = Delta / math.log(1 / tau)
    out["markov_ok"] = frac_low <= out["markov_rhs"] + 1e-12
    if not (out["log_expectation_ok"] and out["markov_ok"]):
        raise VerificationFailed("conditional KL or Markov step failed", out)
    return out


# --------------------------------------------------------------------------
# adaptive win process


@dataclass
class CriterionTrace:
    rho: Fraction
    epsilon: float
    J1: int
    rounds: list = field(default_factory=list)
    product_events_ok: bool = True
    final_value: Fraction | None = None

    def to_dict(self) -> dict:
        rows = []
        for r in self.rounds:
            r = dict(r)
            for k in ("w", "eps_round", "max_hard_value"):
                if isinstance(r.get(k), Fraction):
                    r[k] = _frac_str(r[k])
            rows.append(r)
        return {
            "format": "ghzrep.criterion_trace",
            "version": 1,
            "rho": _frac_str(self.rho),
            "epsilon": self.epsilon,
            "J1": self.J1,
            "rounds": rows,
            "product_events_ok": self.product_events_ok,
            "final_value": None if self.final_value is None else _frac_str(self.final_value),
        }

    def csv_rows(self):
        header = ["i", "J", "w", "mass_flag", "heavy_histories", "eps_round", "decay_ok"]
        rows = [header]
        for r in self.rounds:
            eps_r = r.get("eps_round")
            rows.append(
                [
                    r["i"],
                    ";".join(str(j) for j in r["J"]),
                    _frac_str(r["w"]),
                    int(r["mass_flag"]),
                    r["heavy_histories"],
                    "" if eps_r is None else _frac_str(eps_r),
                    "" if r["decay_ok"] is None else int(r["decay_ok"]),
                ]
            )
        return rows


def _history_event(Gn: RepeatedGame, f: ProductStrategy, hist) -> ProductEvent | list:
    """Per-player sets ``E_i = {x_i : x_i^{J_k} = a_{k,i}, f_i(x_i)^{J_k} = b_{k,i}}``."""
    sets = []
    for i in range(Gn.base.k):
        xs = np.arange(Gn.query_sizes[i])
        xd = Gn.digits(xs, i)
        yd = Gn.digits(f.tables[i][xs], i, "answer")
        ok = np.ones(len(xs), dtype=bool)
        for J, a, b in hist:
            ok &= (xd[:, J - 1] == a[i]) & (yd[:, J - 1] == b[i])
        sets.append(set(np.nonzero(ok)[0].tolist()))
    return sets


def criterion_simulate(G, n: int, f: ProductStrategy, rho, epsilon: float, J1: int = 1, budget: int = DEFAULT_VALUE_BUDGET, certify: bool = True) -> CriterionTrace:
    """Exact history tree of the adaptive process ``J_1, Z_1, J_2, Z_2, ...`` for strategy ``f``.

    Only winning histories are expanded (losing ones cannot contribute to
    ``w_i``). For every winning history of mass at least ``rho`` the next
    round's conditional win probability is compared with the certified hard
    value ``min_j v^j(G^n | P | E_z)`` of its product event.
    """
    rho = Fraction(rho)
    Gn = G.repeat(n) if not isinstance(G, RepeatedGame) else G
    base = Gn.base
    k = base.k
    qs, ws, den = Gn.support_arrays()
    xd = np.stack([Gn.digits(qs[:, i], i) for i in range(k)], axis=1)  # (S, k, n)
    ys = np.stack([f.tables[i][qs[:, i]] for i in range(k)], axis=1)
    yd = np.stack([Gn.digits(ys[:, i], i, "answer") for i in range(k)], axis=1)
    bt = base.win_table
    wins = np.stack(
        [bt[tuple(xd[:, i, j] for i in range(k)) + tuple(yd[:, i, j] for i in range(k))] for j in range(n)],
        axis=1,
    )  # (S, n)
    nx = math.prod(base.query_sizes)
    ny = math.prod(base.answer_sizes)
    trace = CriterionTrace(rho, epsilon, J1)
    nodes = [((), np.arange(len(qs)))]  # (history, support indices)

    def cond_wins(idx):
        tot = int(ws[idx].sum())
        return [Fraction(int(ws[idx][wins[idx, j]].sum()), tot) for j in range(n)]

    w_prev = Fraction(1)
    for i in range(1, n + 1):
        new_nodes, Js = [], []
        for hist, idx in nodes:
            if not hist:
                J = J1
            else:
                cw = cond_wins(idx)
                J = min(range(n), key=lambda j: (cw[j], j)) + 1
            Js.append(J)
            key = np.concatenate([xd[idx, :, J - 1], yd[idx, :, J - 1]], axis=1)
            uniq, inv = np.unique(key, axis=0, return_inverse=True)
            inv = inv.reshape(-1)
            for u in range(len(uniq)):
                a, b = tuple(int(v) for v in uniq[u][:k]), tuple(int(v) for v in uniq[u][k:])
                if not bt[a + b]:
                    continue
                new_nodes.append((hist + ((J, a, b),), idx[inv == u]))
        nodes = new_nodes
        w = Fraction(int(sum(int(ws[idx].sum()) for _, idx in nodes)), den)
        if w > w_prev:
            raise VerificationFailed("win probability increased", (i, w, w_prev))
        rec = {"i": i, "J": sorted(set(Js)), "w": w, "histories": len(nodes)}
        if i >= 2:
            prev = trace.rounds[-1]
            if prev["mass_flag"] and prev["eps_round"] is not None:
                prev["decay_ok"] = w <= prev["w"] * (1 - prev["eps_round"] / 2)
                if not prev["decay_ok"]:
                    raise VerificationFailed("decay inequality failed", prev)
                if prev["premise_user_eps"]:
                    prev["decay_user_ok"] = float(w) <= float(prev["w"]) * (1 - epsilon / 2) + 1e-15
                    if not prev["decay_user_ok"]:
                        raise VerificationFailed("decay inequality failed for the supplied epsilon", prev)
        # product-event structure and certified hardness for the next round
        heavy, max_h = 0, Fraction(0)
        for hist, idx in nodes:
            sets = _history_event(Gn, f, hist)
            inside = np.ones(len(qs), dtype=bool)
            for p in range(k):
                inside &= np.isin(qs[:, p], list(sets[p]))
            if not np.array_equal(np.nonzero(inside)[0], np.sort(idx)):
                trace.product_events_ok = False
                raise VerificationFailed("history event is not the product of its projections", hist)
            mass = Fraction(int(ws[idx].sum()), den)
            if certify and mass >= rho and i < n:
                heavy += 1
                Pz = FiniteDist({tuple(int(v) for v in qs[s]): Fraction(int(ws[s]), int(ws[idx].sum())) for s in idx})
                h = min(coordinate_value(Gn, j, Pz, budget=budget) for j in range(1, n + 1))
                nxt = min(cond_wins(idx))
                if nxt > h:
                    raise VerificationFailed("strategy beats the certified coordinate value", (hist, nxt, h))
                max_h = max(max_h, h)
        mass_flag = w >= 2 * nx ** i * ny ** i * rho
        rec.update(
            mass_flag=bool(mass_flag),
            heavy_histories=heavy,
            max_hard_value=max_h if heavy else None,
            eps_round=(1 - max_h) if heavy else None,
            premise_user_eps=bool(heavy) and (1 - max_h) >= Fraction(epsilon),
            decay_ok=None,
        )
        trace.rounds.append(rec)
        w_prev = w
    trace.final_value = w_prev
    direct = strategy_value(Gn, f)
    if direct != trace.final_value:
        raise VerificationFailed("final win probability differs from the strategy's value", (direct, trace.final_value))
    first = coordinate_win_prob(Gn, J1, f)
    if trace.rounds and first != trace.rounds[0]["w"]:
        raise VerificationFailed("first-round win probability differs from direct enumeration", (first, trace.rounds[0]["w"]))
    return trace


# --------------------------------------------------------------------------
# the whole pipeline on one product event


@dataclass
class DemoReport:
    n: int
    delta: float
    m: int
    epsilon: float
    Delta: float
    stages: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"format": "ghzrep.demo", "version": 1, "n": self.n, "delta": self.delta, "m": self.m, "epsilon": self.epsilon, "Delta": self.Delta, "stages": _jsonable(self.stages)}


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, Fraction):
        return _frac_str(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def main_theorem_demo(n: int, E: ProductEvent, delta: float, m: int, epsilon: float = 1 / 32, budget: int = DEFAULT_VALUE_BUDGET, value_max_n: int = 2) -> DemoReport:
    """Run partition, classification, embedding and (for small n) value stages on one event."""
    Pi, trace = pseudorandom_partition(E, delta, m)
    state = Pi.state
    Delta = trace.delta_potential
    rep = DemoReport(n, delta, m, epsilon, Delta)
    rep.stages["partition"] = {
        "rounds": len(trace.rounds) - 1,
        "codim": Pi.codim,
        "codim_bound": m * Delta / delta,
        "phi_trace": [r["phi"] for r in trace.rounds],
        "final_expected_dm": trace.rounds[-1]["expected_dm"],
        "checks": {"steps": trace.steps_ok, "codim": trace.codim_ok, "decrease": trace.decrease_ok},
    }

    t, c = state.part_weights()
    T = int(t.sum())
    parts = []
    for p, part in enumerate(state.parts):
        dm, _ = part_closeness(state, p, m)
        dinf = math.log(c[p] / t[p])
        parts.append(
            {
                "index": p,
                "mass": Fraction(int(t[p]), T),
                "d_m": dm,
                "d_inf": dinf,
                "pseudorandom": dm <= 3 * delta + 1e-12 and dinf <= 3 * Delta + 1e-12,
                "embeddable": embedding.embeddable_coordinates(part),
            }
        )
    pr_mass = sum((q["mass"] for q in parts if q["pseudorandom"]), Fraction(0))
    rep.stages["classification"] = {"pseudorandom_mass": pr_mass, "pseudorandom_mass_ok": pr_mass >= Fraction(1, 3), "parts": len(parts)}
    if pr_mass < Fraction(1, 3):
        raise VerificationFailed("pseudorandom parts carry less than 1/3 of the mass", float(pr_mass))
    rep.stages["embedding"] = {
        "min_embeddable": min(len(q["embeddable"]) for q in parts),
        "bound": n - Pi.codim,
        "ok": all(len(q["embeddable"]) >= n - Pi.codim for q in parts),
    }

    diag = theorem_constraints(n, delta, Delta, epsilon, m)
    active = all(diag.values())
    rep.stages["constraints"] = {
        "flags_at_run_parameters": diag,
        "all_satisfied": active,
        "asymptotic_constants_at_n": asymptotic_constraints(n),
        "smallest_log_n_for_asymptotic_constants": smallest_satisfying_log_n(),
    }
    label = "active" if active else "vacuous at this n"

    if n > value_max_n:
        rep.stages["values"] = {"skipped": f"value stages run only for n <= {value_max_n}"}
        rep.stages["parts"] = [{k: v for k, v in q.items() if k != "index"} for q in parts]
        return rep

    Gn = ghz_game().repeat(n)
    vt = {}
    vp = {}
    for p, part in enumerate(state.parts):
        idx = state.members(p)
        Pp = _uniform_dist(state.pts[idx])
        Ptp = _uniform_dist(state.pts[idx][state.in_event[idx]])
        vp[p] = [coordinate_value(Gn, j, Pp, budget=budget) for j in range(1, n + 1)]
        vt[p] = [coordinate_value(Gn, j, Ptp, budget=budget) for j in range(1, n + 1)]
        for j in parts[p]["embeddable"]:
            if vp[p][j - 1] != Fraction(3, 4):
                raise VerificationFailed("embeddable coordinate without value 3/4", (p, j, vp[p][j - 1]))
        parts[p]["v_P"] = vp[p]
        parts[p]["v_Pt"] = vt[p]
    R = [q for q in parts if q["pseudorandom"]]
    rmass = sum((q["mass"] for q in R), Fraction(0))
    avg = [sum((q["mass"] * q["v_P"][j] for q in R), Fraction(0)) / rmass for j in range(n)]
    jstar = min(range(n), key=lambda j: (avg[j], j)) + 1
    Pt_all = _uniform_dist(state.pts[state.in_event])
    v_whole = coordinate_value(Gn, jstar, Pt_all, budget=budget)
    mixture = sum((q["mass"] * q["v_Pt"][jstar - 1] for q in parts), Fraction(0))
    frac_bad = m * Delta / (n * delta)
    chain = {
        "j_star": jstar,
        "v_jstar_Pt": v_whole,
        "mixture_over_parts": mixture,
        "mixture_ok": v_whole <= mixture,
        "avg_v_P_on_pseudorandom": avg[jstar - 1],
        "averaging_bound": frac_bad + (1 - frac_bad) * 0.75,
        "averaging_bound_le_7_8": frac_bad + (1 - frac_bad) * 0.75 <= 7 / 8,
        "per_part_hardness": [
            {"part": q["index"], "lhs": q["v_Pt"][jstar - 1], "rhs": float(q["v_P"][jstar - 1]) + 2 * epsilon, "holds": float(q["v_Pt"][jstar - 1]) <= float(q["v_P"][jstar - 1]) + 2 * epsilon}
            for q in R
        ],
        "final_bound": 2 / 3 + (7 / 8 + 2 * epsilon) / 3,
        "final_bound_le_47_48": 2 / 3 + (7 / 8 + 2 * epsilon) / 3 <= 47 / 48 + 1e-15,
        "final_slack": 2 / 3 + (7 / 8 + 2 * epsilon) / 3 - float(v_whole),
        "label": label,
    }
    if not chain["mixture_ok"]:
        raise VerificationFailed("value under P~ exceeds the mixture of part values", chain)
    rep.stages["values"] = chain
    rep.stages["parts"] = [{k: v for k, v in q.items() if k != "index"} for q in parts]
    return rep


# --------------------------------------------------------------------------
# built-in randomized self test


def selftest(seed: int = 0, trials: int = 20) -> list[tuple[str, bool, str]]:
    """Seeded spot checks across modules; each entry is ``(name, ok, detail)``."""
    from . import fourier, probdist
    from .f2linalg import Subspace

    rng = np.random.default_rng(seed)
    results = []

    def record(name, fn):
        try:
            ok, detail = fn()
        except Exception as exc:  # report, never crash the suite
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append((name, bool(ok), detail))

    def ghz_value():
        v, _ = exact_value(ghz_game())
        return v == Fraction(3, 4), str(v)

    def fourier_formula():
        for _ in range(trials):
            d = int(rng.integers(1, 5))
            E = [rng.integers(0, 2, 1 << d).astype(bool) for _ in range(3)]
            r = fourier.ghz_product_event_prob(d, *E)
            if not r.agree:
                return False, f"d={d}"
        return True, f"{trials} instances"

    def pinsker():
        for _ in range(trials):
            k = int(rng.integers(2, 6))
            a = rng.integers(1, 20, k)
            b = rng.integers(1, 20, k)
            P = FiniteDist.from_weights(dict(enumerate(a.tolist())))
            Q = FiniteDist.from_weights(dict(enumerate(b.tolist())))
            if not probdist.pinsker_check(P, Q)[2]:
                return False, str((a, b))
        return True, f"{trials} instances"

    def embed():
        for _ in range(trials):
            n = int(rng.integers(1, 5))
            gens = [int(g) for g in rng.integers(0, 1 << n, int(rng.integers(0, n + 1)))]
            V = Subspace.span(n, gens)
            w1, w2 = (int(v) for v in rng.integers(0, 1 << n, 2))
            W = AffinePowerCoset((w1, w2, w1 ^ w2), V)
            coords = embedding.embeddable_coordinates(W)
            if len(coords) < n - V.codim:
                return False, repr(W)
            for j in coords:
                embedding.verify_embedding(embedding.build_embedding(W, j), W)
        return True, f"{trials} cosets"

    def partition_run():
        n = 3
        E = ProductEvent(n, tuple(set(rng.choice(8, int(rng.integers(4, 9)), replace=False).tolist()) for _ in range(3)))
        if E.ghz_prob() == 0:
            return True, "empty event skipped"
        _, tr = pseudorandom_partition(E, 0.05, 1)
        return tr.steps_ok and tr.codim_ok and tr.decrease_ok, f"{len(tr.rounds) - 1} rounds"

    def criterion():
        G = ghz_game()
        _, f = exact_value(G.repeat(2))
        tr = criterion_simulate(G, 2, f, Fraction(1, 1 << 14), 1 / 48)
        return tr.final_value == Fraction(5, 8), _frac_str(tr.final_value)

    def constraints():
        bad = [n for n in (10, 10 ** 3, 10 ** 6) if all(asymptotic_constraints(n).values())]
        return not bad, f"smallest ln n = {smallest_satisfying_log_n():.3f}"

    for name, fn in [
        ("ghz-value", ghz_value),
        ("fourier-formula", fourier_formula),
        ("pinsker", pinsker),
        ("embedding", embed),
        ("partition", partition_run),
        ("criterion", criterion),
        ("constraints", constraints),
    ]:
        record(name, fn)
    return results
