import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ghzrep.f2linalg import AffinePowerCoset
from ghzrep.games import coordinate_win_prob, exact_value, ghz_game, strategy_value
from ghzrep.harness import (
    asymptotic_constraints,
    criterion_simulate,
    delta_constraints,
    main_theorem_demo,
    pseudo_hardness_check,
    selftest,
    smallest_satisfying_log_n,
    theorem_constraints,
)
from ghzrep.partition import ProductEvent

GHZ = ghz_game()


def test_delta_constraints_examples():
    assert delta_constraints(1e-9, 0.5, 0.5) == {"exp": True, "square": True, "epsilon": True}
    assert not delta_constraints(0.5, 0.1, 0.5)["square"]
    assert not delta_constraints(0.1, 10, 0.1)["epsilon"]


@pytest.mark.parametrize("L", [1.0, 5.0, 13.8, 30.0, 47.0, 47.5, 60.0, 200.0])
def test_log_space_matches_direct_evaluation(L):
    n = math.exp(L)
    direct = theorem_constraints(n, n ** -0.4, 0.0005 * L, 1 / 32, n ** 0.4)
    logs = asymptotic_constraints(log_n=L)
    assert all(logs[k] == direct[k] for k in logs)


def test_constants_inactive_up_to_a_million():
    for n in [2, 10, 100, 10**3, 10**4, 10**5, 10**6]:
        assert not all(asymptotic_constraints(n).values())


def test_smallest_log_n():
    L = smallest_satisfying_log_n()
    assert 47 < L < 48
    assert all(asymptotic_constraints(log_n=L + 1e-6).values())
    assert not all(asymptotic_constraints(log_n=L - 1e-3).values())


@settings(max_examples=10)
@given(st.data())
def test_pseudo_hardness_never_violated(data):
    n = 2
    sets = [data.draw(st.sets(st.integers(0, 3), min_size=2)) for _ in range(3)]
    E = ProductEvent(n, sets)
    if E.ghz_prob() == 0:
        return
    rep = pseudo_hardness_check(AffinePowerCoset.full(n), E, 1, 0.5, 0.5)
    assert not rep.violation
    assert rep.rhs_base == Fraction(3, 4)
    assert rep.intermediates["product_ok"] and rep.intermediates["markov_ok"]


def test_pseudo_hardness_full_event():
    rep = pseudo_hardness_check(AffinePowerCoset.full(2), ProductEvent.full(2), 2, 0.1, 0.1)
    assert rep.d_m == 0 and rep.Delta == 0
    assert rep.lhs == rep.rhs_base == Fraction(3, 4)
    assert rep.holds


def test_criterion_on_ghz_squared():
    v, f = exact_value(GHZ.repeat(2))
    tr = criterion_simulate(GHZ, 2, f, Fraction(1, 1 << 14), 1 / 48)
    assert [r["w"] for r in tr.rounds] == [coordinate_win_prob(GHZ.repeat(2), 1, f), v]
    assert tr.final_value == strategy_value(GHZ.repeat(2), f) == Fraction(5, 8)
    assert tr.product_events_ok
    assert tr.rounds[0]["decay_ok"] is True
    rows = tr.csv_rows()
    assert rows[0][0] == "i" and len(rows) == 3


def test_criterion_other_start_coordinate():
    _, f = exact_value(GHZ.repeat(2))
    tr = criterion_simulate(GHZ, 2, f, Fraction(1, 64), 1 / 48, J1=2)
    assert tr.rounds[0]["w"] == coordinate_win_prob(GHZ.repeat(2), 2, f)


def test_demo_runs_every_stage():
    E = ProductEvent(2, ({0, 1, 2}, {0, 1, 3}, {0, 2, 3}))
    rep = main_theorem_demo(2, E, 0.1, 1)
    st_ = rep.stages
    assert st_["classification"]["pseudorandom_mass_ok"]
    assert st_["embedding"]["ok"]
    assert st_["constraints"]["all_satisfied"] is False
    assert st_["values"]["label"] == "vacuous at this n"
    assert st_["values"]["mixture_ok"]
    d = rep.to_dict()
    assert d["format"] == "ghzrep.demo"


def test_selftest_passes():
    res = selftest(seed=0, trials=5)
    assert all(ok for _, ok, _ in res), res
