import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from ghzrep.errors import DomainError, PartialFunction, UniverseMismatch, ZeroMassEvent
from ghzrep.probdist import (
    FiniteDist,
    condition,
    conditional_entropy,
    conditional_kl,
    conditioned_tv_bound_check,
    entropy,
    expectation_quotient_bound_check,
    kl_divergence,
    lambert_w,
    lambert_w_upper,
    optimum_tau,
    paired_quotient_bound_check,
    pinsker_check,
    pushforward,
    tv_distance,
    tv_distance_max_event,
)

weights = st.lists(st.integers(0, 9), min_size=2, max_size=6).filter(lambda w: sum(w) > 0)


def dist(ws, keys=None):
    keys = keys or range(len(ws))
    return FiniteDist.from_weights(dict(zip(keys, ws)))


@st.composite
def pairs(draw, full_support=False):
    k = draw(st.integers(2, 6))
    lo = 1 if full_support else 0
    a = draw(st.lists(st.integers(lo, 9), min_size=k, max_size=k).filter(sum))
    b = draw(st.lists(st.integers(lo, 9), min_size=k, max_size=k).filter(sum))
    return dist(a), dist(b)


def test_constructor_validates():
    with pytest.raises(ValueError):
        FiniteDist({0: Fraction(1, 2)})
    with pytest.raises(ValueError):
        FiniteDist({0: 2, 1: -1})


def test_condition_and_pushforward():
    P = FiniteDist.uniform(range(6))
    C = condition(P, lambda x: x % 2 == 0)
    assert C[0] == Fraction(1, 3) and C[1] == 0
    assert pushforward(P, lambda x: x % 3) == FiniteDist.uniform(range(3))
    with pytest.raises(ZeroMassEvent):
        condition(P, lambda x: x > 9)
    with pytest.raises(PartialFunction):
        pushforward(P, {0: 0})


def test_with_universe():
    P = FiniteDist.point("a", ["a", "b"])
    assert P.with_universe(["a", "b", "c"])["c"] == 0
    with pytest.raises(UniverseMismatch):
        P.with_universe(["b"])
    with pytest.raises(UniverseMismatch):
        tv_distance(P, FiniteDist.point("c"), strict=True)


@given(pairs())
def test_tv_equals_best_event(pq):
    P, Q = pq
    assert tv_distance(P, Q) == tv_distance_max_event(P, Q)


@given(pairs())
def test_kl_oracle(pq):
    P, Q = pq
    ref = 0.0
    for k, p in P.items():
        if p:
            if Q[k] == 0:
                ref = math.inf
                break
            ref += float(p) * math.log(float(p) / float(Q[k]))
    got = kl_divergence(P, Q)
    if math.isinf(ref):
        assert math.isinf(got)
    else:
        assert got == pytest.approx(max(ref, 0.0), abs=1e-12)


@given(pairs())
def test_pinsker(pq):
    assert pinsker_check(*pq)[2]


@given(weights)
def test_entropy_bounds(ws):
    P = dist(ws)
    assert 0 <= entropy(P) <= math.log(len(P.support)) + 1e-12


def test_entropy_uniform_nats():
    assert entropy(FiniteDist.uniform(range(8))) == pytest.approx(math.log(8))


@given(st.lists(st.integers(1, 9), min_size=4, max_size=4), st.lists(st.integers(1, 9), min_size=4, max_size=4))
def test_kl_chain_rule(a, b):
    # outcomes (x, y) in {0,1}^2
    keys = [(0, 0), (0, 1), (1, 0), (1, 1)]
    P, Q = dist(a, keys), dist(b, keys)
    first = lambda o: o[0]
    second = lambda o: o[1]
    whole = kl_divergence(P, Q)
    parts = kl_divergence(pushforward(P, first), pushforward(Q, first)) + conditional_kl(P, Q, second, first, second, first)
    assert whole == pytest.approx(parts, abs=1e-12)


@given(st.lists(st.integers(0, 9), min_size=4, max_size=4).filter(sum))
def test_entropy_chain_rule(a):
    keys = [(0, 0), (0, 1), (1, 0), (1, 1)]
    P = dist(a, keys)
    H = entropy(P)
    HX = entropy(pushforward(P, lambda o: o[0]))
    assert H == pytest.approx(HX + conditional_entropy(P, lambda o: o[1], lambda o: o[0]), abs=1e-12)


@given(pairs(), st.data())
def test_conditioned_tv(pq, data):
    P, Q = pq
    ev = set(data.draw(st.lists(st.sampled_from(P.outcomes), min_size=1)))
    assume(P.prob(lambda o: o in ev) > 0)
    assert conditioned_tv_bound_check(P, Q, lambda o: o in ev)[2]


def test_expectation_quotient_example():
    # Z uniform on {0,1}; X, Y two coordinates; E keeps most of the mass
    keys = [(z, x, y) for z in (0, 1) for x in (0, 1) for y in (0, 1)]
    P = FiniteDist.from_weights({k: 1 + k[1] + 2 * k[2] for k in keys})
    lhs, rhs, ok = expectation_quotient_bound_check(
        P, lambda o: o != (1, 1, 1), lambda o: o[1], lambda o: o[2], lambda o: o[0], Fraction(1, 2), Fraction(0)
    )
    assert ok and lhs <= rhs


def test_lambert_w_identity():
    for y in (0.1, 1.0, math.e, 10.0, 1e6):
        w = lambert_w(y)
        assert w * math.exp(w) == pytest.approx(y, rel=1e-10)
    assert lambert_w(0) == 0
    with pytest.raises(DomainError):
        lambert_w(-1)


@given(st.floats(math.e, 1e12))
def test_lambert_upper(y):
    assert lambert_w(y) <= lambert_w_upper(y) + 1e-12


@given(st.floats(1e-6, 10), st.floats(math.e, 1e8))
def test_optimum_tau(B, ratio):
    A = B * ratio
    tau, value, bound = optimum_tau(A, B)
    f = lambda t: A / math.log(1 / t) + B / t
    assert value == pytest.approx(f(tau), rel=1e-9)
    assert value <= bound * (1 + 1e-12)
    # both terms are equal at the balance point, so it is within a factor 2 of the minimum
    assert A / math.log(1 / tau) == pytest.approx(B / tau, rel=1e-9)
    grid = np.geomspace(1e-12, 0.999, 4000)
    best = min(f(t) for t in grid)
    assert best <= bound * (1 + 1e-12)
    assert value <= 2 * best * (1 + 1e-9)


def test_optimum_tau_domain():
    with pytest.raises(DomainError):
        optimum_tau(1.0, 1.0)


def test_expectation_quotient_counterexample():
    # equal laws for X and Y = 1 - X, but conditioning on X = 0 separates them
    P = FiniteDist.uniform([(0, 0, 1), (0, 1, 0)])
    lhs, rhs, ok = expectation_quotient_bound_check(
        P, lambda o: o[1] == 0, lambda o: o[1], lambda o: o[2], lambda o: o[0], Fraction(1, 2), Fraction(0)
    )
    assert (lhs, rhs, ok) == (1.0, 0.0, False)


@st.composite
def paired_instances(draw):
    keys = [(z, x) for z in range(2) for x in range(3)]
    a = draw(st.lists(st.integers(0, 6), min_size=6, max_size=6).filter(sum))
    b = draw(st.lists(st.integers(1, 6), min_size=6, max_size=6))
    ev = draw(st.sets(st.sampled_from(keys), min_size=1))
    delta = Fraction(draw(st.integers(1, 10)), 10)
    return dist(a, keys), dist(b, keys), ev, delta


@given(paired_instances())
def test_paired_quotient_bound(inst):
    P, Q, ev, delta = inst
    low = Fraction(0)
    for z in (0, 1):
        pz = P.prob(lambda o: o[0] == z)
        if pz and condition(P, lambda o: o[0] == z).prob(ev.__contains__) < delta:
            low += pz
    assert paired_quotient_bound_check(P, Q, ev.__contains__, lambda o: o[0], delta, low)[2]
