"""Acceptance gate: each criterion runs at its stated size and tolerance.

Every test records one PASS/FAIL line that is printed in the pytest summary.
"""
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from ghzrep import cli, embedding, fourier, games, harness, probdist
from ghzrep.f2linalg import AffinePowerCoset, Subspace
from ghzrep.partition import ProductEvent, pseudorandom_partition, strategy_refinement, character_biases
from ghzrep.probdist import FiniteDist

SEED = 20240611


def random_subspace(rng, n, dim):
    while True:
        V = Subspace.span(n, [int(v) for v in rng.integers(0, 1 << n, dim)])
        if V.dim == dim:
            return V


def random_dist(rng, k, zeros=True):
    lo = 0 if zeros else 1
    w = rng.integers(lo, 10, k)
    if w.sum() == 0:
        w[0] = 1
    return FiniteDist.from_weights(dict(enumerate(w.tolist())))


# 1 -----------------------------------------------------------------------


def test_c1_ghz_value(capsys, criterion):
    t = time.perf_counter()
    code = cli.main(["value", "--game", "ghz"])
    out = capsys.readouterr().out
    dt = time.perf_counter() - t
    import json

    value = Fraction(json.loads(out)["value"])
    ok = code == 0 and value == Fraction(3, 4) and dt < 1
    criterion(1, ok, f"value={value} in {dt:.2f}s")
    assert ok


# 2 -----------------------------------------------------------------------


@pytest.mark.slow
def test_c2_ghz_squared_against_oracle(criterion):
    G2 = games.ghz_game().repeat(2)
    t = time.perf_counter()
    v, f = games.exact_value(G2, threads=1)
    dt = time.perf_counter() - t
    t = time.perf_counter()
    ov, _ = games.brute_force_value(G2)
    dto = time.perf_counter() - t
    ok = v == ov == Fraction(5, 8) and games.strategy_value(G2, f) == v and dt < 60 and dto < 1800
    criterion(2, ok, f"pruned={v} ({dt:.2f}s), oracle={ov} over 256^3 tuples ({dto:.1f}s)")
    assert ok


# 3 -----------------------------------------------------------------------


def test_c3_fourier_formula(criterion):
    rng = np.random.default_rng(SEED)
    t = time.perf_counter()
    bad = 0
    for _ in range(1000):
        dim = int(rng.integers(0, 9))
        n = dim + int(rng.integers(0, 3))
        V = random_subspace(rng, n, dim)
        density = rng.random(3)
        masks = [rng.random(1 << dim) < p for p in density]
        r = fourier.ghz_product_event_prob(V, *masks)
        vals = [r.lhs, r.rhs_char_sum] + ([] if r.rhs_density_form is None else [r.rhs_density_form])
        bad += any(v - vals[0] != 0 for v in vals)
    dt = time.perf_counter() - t
    ok = bad == 0 and dt < 120
    criterion(3, ok, f"1000 instances, {bad} with nonzero error, {dt:.1f}s")
    assert ok


# 4 -----------------------------------------------------------------------

N_INEQ = 10_000
EQ_KEYS = [(z, x, y) for z in range(2) for x in range(2) for y in range(2)]


def low_mass(P, ev, delta):
    """``Pr_z[P(E | Z = z) < delta]`` with Z the first component."""
    return sum(
        (pz for z, pz in probdist.pushforward(P, lambda o: o[0]).items()
         if pz and probdist.condition(P, lambda o, z=z: o[0] == z).prob(ev.__contains__) < delta),
        Fraction(0),
    )


def quotient_instance(rng):
    w = rng.integers(0, 6, 8)
    w[0] += 1
    P = FiniteDist.from_weights(dict(zip(EQ_KEYS, w.tolist())))
    ev = set(k for k in EQ_KEYS if rng.random() < 0.7) | {P.support[0]}
    delta = Fraction(int(rng.integers(1, 10)), 10)
    # the smallest tau meeting the precondition, plus random slack
    tau = min(low_mass(P, ev, delta) + Fraction(int(rng.integers(0, 3)), 10), Fraction(1))
    return P, ev, delta, tau


def test_c4_inequalities(criterion):
    rng = np.random.default_rng(SEED)
    t = time.perf_counter()
    fails = {"prob_diff": 0, "pinsker": 0, "conditioned_tv": 0, "paired_quotient": 0, "optimum_tau": 0}

    for _ in range(N_INEQ):
        d = int(rng.integers(1, 5))
        masks = [rng.random(1 << d) < p for p in rng.random(3)]
        fails["prob_diff"] += not fourier.prob_diff_bound_check(d, *masks)[2]

    for _ in range(N_INEQ):
        k = int(rng.integers(2, 7))
        fails["pinsker"] += not probdist.pinsker_check(random_dist(rng, k), random_dist(rng, k))[2]

    for _ in range(N_INEQ):
        k = int(rng.integers(2, 7))
        P, Q = random_dist(rng, k), random_dist(rng, k)
        ev = set(np.nonzero(rng.random(k) < 0.6)[0].tolist())
        ev.add(P.support[0])
        fails["conditioned_tv"] += not probdist.conditioned_tv_bound_check(P, Q, ev.__contains__)[2]

    for _ in range(N_INEQ):
        P, ev, delta, tau = quotient_instance(rng)
        Q = FiniteDist.from_weights(dict(zip(EQ_KEYS, rng.integers(1, 6, 8).tolist())))
        fails["paired_quotient"] += not probdist.paired_quotient_bound_check(P, Q, ev.__contains__, lambda o: o[0], delta, tau)[2]

    grid = np.geomspace(1e-300, 1 - 1e-12, 20001)
    for _ in range(N_INEQ):
        B = float(10 ** rng.uniform(-6, 2))
        A = B * math.e * float(10 ** rng.uniform(0, 8))
        _, value, bound = probdist.optimum_tau(A, B)
        true_min = float(np.min(A / np.log(1 / grid) + B / grid))
        fails["optimum_tau"] += not (true_min <= bound * (1 + 1e-12) and value <= 2 * true_min * (1 + 1e-9))

    dt = time.perf_counter() - t
    ok = not any(fails.values()) and dt < 120
    criterion(4, ok, f"{N_INEQ} instances each, violations {fails}, {dt:.1f}s")
    assert ok


@pytest.mark.xfail(strict=True, reason="the two-variable quotient bound is false in general; see README")
def test_c4_expectation_quotient_literal(criterion):
    rng = np.random.default_rng(SEED)
    t = time.perf_counter()
    bad = 0
    for _ in range(N_INEQ):
        P, ev, delta, tau = quotient_instance(rng)
        bad += not probdist.expectation_quotient_bound_check(
            P, ev.__contains__, lambda o: o[1], lambda o: o[2], lambda o: o[0], delta, tau
        )[2]
    dt = time.perf_counter() - t
    criterion(4, bad == 0, f"two-variable quotient form: {bad} of {N_INEQ} instances violate it, {dt:.1f}s")
    assert bad == 0


# 5 -----------------------------------------------------------------------


def test_c5_linear_case(criterion):
    rng = np.random.default_rng(SEED)
    t = time.perf_counter()
    short, flags_bad = 0, 0
    done = 0
    while done < 500:
        n = int(rng.integers(1, 6))
        m = int(rng.integers(0, n))
        V = random_subspace(rng, n, n - m)
        w1, w2 = (int(v) for v in rng.integers(0, 1 << n, 2))
        W = AffinePowerCoset((w1, w2, w1 ^ w2), V)
        coords = embedding.embeddable_coordinates(W)
        short += len(coords) < n - m
        for j in coords:
            c = embedding.verify_embedding(embedding.build_embedding(W, j), W)
            flags_bad += not (c.marginal_ok and c.independence_ok and c.law_ok)
        done += 1
    dt = time.perf_counter() - t
    ok = short == 0 and flags_bad == 0 and dt < 300
    criterion(5, ok, f"500 cosets, {short} short of n-m coordinates, {flags_bad} failed flags, {dt:.1f}s")
    assert ok


# 6 -----------------------------------------------------------------------


def random_event(rng, n, floor):
    while True:
        dens = rng.uniform(0.3, 1.0, 3)
        E = ProductEvent(n, tuple(set(np.nonzero(rng.random(1 << n) < p)[0].tolist()) for p in dens))
        if E.ghz_prob() >= floor:
            return E


def test_c6_pseudorandom_partition(criterion):
    rng = np.random.default_rng(SEED)
    t = time.perf_counter()
    bad = []
    for trial in range(100):
        n = int(rng.integers(1, 7))
        E = random_event(rng, n, Fraction(1, 64))
        delta = float(rng.choice([0.01, 0.05, 0.1, 0.25]))
        Pi, tr = pseudorandom_partition(E, delta, 1)
        Delta = tr.delta_potential
        phis = [r["phi"] for r in tr.rounds]
        steps = len(phis) - 1
        good = (
            steps <= math.ceil(Delta / delta)
            and Pi.codim <= Delta / delta + 1e-12
            and all(a - b > delta - 1e-12 for a, b in zip(phis, phis[1:]))
            and tr.rounds[-1]["expected_dm"] <= delta + 1e-9
        )
        if not good:
            bad.append(trial)
    dt = time.perf_counter() - t
    ok = not bad and dt < 600
    criterion(6, ok, f"100 events, m=1, failures {bad}, {dt:.1f}s")
    assert ok


# 7 -----------------------------------------------------------------------


def structured_strategy(rng, n):
    x = np.arange(1 << n)
    kind = int(rng.integers(0, 4))
    if kind == 0:
        return rng.integers(0, 2, 1 << n)
    mask = int(rng.integers(1, 1 << n))
    if kind == 1:  # a character
        return np.array([bin(v & mask).count("1") & 1 for v in x])
    if kind == 2:  # AND of a few bits
        return ((x & mask) == mask).astype(np.int64)
    bits = np.array([bin(v & mask).count("1") for v in x])  # threshold
    return (2 * bits >= bin(mask).count("1")).astype(np.int64)


def test_c7_strategy_refinement(criterion):
    rng = np.random.default_rng(SEED)
    t = time.perf_counter()
    bad = 0
    for _ in range(200):
        dim = int(rng.integers(1, 11))
        n = dim + int(rng.integers(0, 2)) if dim < 10 else dim
        V = random_subspace(rng, n, dim)
        w1, w2 = (int(v) for v in rng.integers(0, 1 << n, 2))
        W = AffinePowerCoset((w1, w2, w1 ^ w2), V)
        f1 = structured_strategy(rng, n)
        j = int(rng.integers(1, n + 1))
        delta = float(rng.choice([0.02, 0.05, 0.1]))
        r = strategy_refinement(W, f1, delta, j)  # raises if a Z-decrease fails
        pts = W.ghz_points()
        final = character_biases(r.U, pts, f1[pts[:, 0].astype(np.int64)], np.ones(len(pts))).max(initial=0.0)
        bad += not (final <= delta and r.z_decrease_ok and r.z1_ok and r.codim <= math.ceil(1 / delta) + 1)
    dt = time.perf_counter() - t
    ok = bad == 0 and dt < 300
    criterion(7, ok, f"200 instances, {bad} failures, {dt:.1f}s")
    assert ok


# 8 -----------------------------------------------------------------------


def test_c8_product_function(criterion):
    rng = np.random.default_rng(SEED)
    t = time.perf_counter()
    bad = 0
    for _ in range(200):
        dim = int(rng.integers(1, 7))
        n = dim + int(rng.integers(0, 2))
        V = random_subspace(rng, n, dim)
        sub = int(rng.integers(0, dim + 1))
        W = Subspace.span(n, [V.from_coords(int(c)) for c in rng.integers(0, 1 << dim, sub)])
        Y = [structured_strategy(rng, dim) for _ in range(3)]
        r = fourier.product_function_independence_check(V, W, Y, alphabet_sizes=(2, 2, 2))
        bad += not (float(r.conclusion) <= float(r.eps_meas) * math.sqrt(4) + 1e-15)
    dt = time.perf_counter() - t
    ok = bad == 0 and dt < 300
    criterion(8, ok, f"200 instances, {bad} violations, {dt:.1f}s")
    assert ok


# 9 -----------------------------------------------------------------------


def literal_hypotheses(E, epsilons=(1 / 32, 0.1, 0.5, 1.0, 4.0)):
    """Largest delta allowed by the flags for some epsilon, and whether closeness then holds."""
    W = AffinePowerCoset.full(E.n)
    pts = W.ghz_points()
    inE = E.contains_array(pts)
    Delta = math.log(len(pts) / inE.sum())
    for eps in epsilons:
        delta = min(Delta**2 / 32 * math.exp(-4 * Delta / eps), Delta**2 / (32 * math.e**2), 2 * eps**2)
        if delta <= 0:
            continue
        rep = harness.pseudo_hardness_check(W, E, 1, delta, eps, intermediates=False)
        if rep.hypothesis_ok:
            return rep
    return None


@pytest.mark.xfail(strict=True, reason="no n = 2 product event meets every hypothesis flag; see README")
def test_c9_pseudo_hardness_literal(criterion):
    rng = np.random.default_rng(SEED)
    t = time.perf_counter()
    qualifying, scanned = [], 0
    while len(qualifying) < 50 and scanned < 2000:
        E = random_event(rng, 2, Fraction(1, 16))
        scanned += 1
        rep = literal_hypotheses(E)
        if rep is not None:
            qualifying.append(rep)
    violations = sum(r.violation for r in qualifying)
    dt = time.perf_counter() - t
    ok = len(qualifying) >= 50 and violations == 0
    criterion(9, ok, f"{len(qualifying)} of {scanned} scanned events meet the hypotheses, {violations} violations, {dt:.1f}s")
    assert ok


def test_c9_pseudo_hardness_closeness_only(criterion):
    rng = np.random.default_rng(SEED)
    t = time.perf_counter()
    W = AffinePowerCoset.full(2)
    bad = 0
    for _ in range(50):
        E = random_event(rng, 2, Fraction(1, 16))
        pts = W.ghz_points()
        Delta = math.log(len(pts) / E.contains_array(pts).sum())
        delta = max(Delta, 1e-3)
        eps = math.sqrt(delta / 2)
        for j in (1, 2):
            rep = harness.pseudo_hardness_check(W, E, j, delta, eps)
            bad += not (rep.closeness_ok and rep.holds)
    dt = time.perf_counter() - t
    ok = bad == 0 and dt < 1800
    criterion(9, ok, f"closeness-only variant: 50 events x 2 coordinates, {bad} violations, {dt:.1f}s")
    assert ok


# 10 ----------------------------------------------------------------------


def test_c10_criterion_decay(criterion):
    t = time.perf_counter()
    G = games.ghz_game()
    G2 = G.repeat(2)
    v, f = games.exact_value(G2)
    tr = harness.criterion_simulate(G, 2, f, Fraction(1, 1 << 14), 1 / 48)
    w1, w2 = tr.rounds[0]["w"], tr.rounds[1]["w"]
    qualifying = [r for r in tr.rounds if r["mass_flag"] and r["eps_round"] is not None]
    ok = (
        w1 == games.coordinate_win_prob(G2, 1, f)
        and w2 == games.strategy_value(G2, f) == v
        and all(r["decay_ok"] for r in qualifying)
        and time.perf_counter() - t < 60
    )
    dt = time.perf_counter() - t
    criterion(10, ok, f"w1={w1}, w2={w2}, {len(qualifying)} qualifying rounds, {dt:.2f}s")
    assert ok


# 11 ----------------------------------------------------------------------


def test_c11_constraints_unsatisfied(criterion):
    t = time.perf_counter()
    eps = 1 / 32
    n = np.arange(2, 10**6 + 1, dtype=np.float64)
    L = np.log(n)
    Delta = 0.0005 * L
    delta = n**-0.4
    m = n**0.4
    three_d = 3 * delta
    sat = (
        (three_d <= 9 * Delta**2 / 32 * np.exp(-12 * Delta / eps))
        & (three_d <= 9 * Delta**2 / (32 * math.e**2))
        & (three_d <= 2 * eps**2)
        & (delta >= 2 * m * Delta / n)
    )
    spot = [all(harness.theorem_constraints(k, k**-0.4, 0.0005 * math.log(k), eps, k**0.4).values()) for k in (2, 10, 10**3, 10**6)]
    demo = cli.main(["demo", "--n", "2", "--out", "/dev/null"]) == 0
    rep = harness.main_theorem_demo(2, ProductEvent(2, ({0, 1, 2}, {0, 1, 3}, {0, 2, 3})), 0.1, 1)
    diag = rep.stages["constraints"]
    ok = (
        not sat.any()
        and not any(spot)
        and demo
        and not all(diag["asymptotic_constants_at_n"].values())
        and diag["smallest_log_n_for_asymptotic_constants"] > math.log(10**6)
    )
    dt = time.perf_counter() - t
    criterion(11, ok, f"satisfied at {int(sat.sum())} of {len(n)} values of n <= 10^6; first satisfied at ln n = {diag['smallest_log_n_for_asymptotic_constants']:.2f}; {dt:.1f}s")
    assert ok
