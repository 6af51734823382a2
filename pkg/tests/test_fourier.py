from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import subspaces
from ghzrep.errors import BudgetExceeded
from ghzrep.f2linalg import Subspace, dot
from ghzrep.fourier import (
    character,
    ghz_density_transform,
    ghz_product_event_prob,
    inner,
    inner_hat,
    inverse_transform,
    parseval_check,
    prob_diff_bound_check,
    product_function_independence_check,
    transform,
)

fractions = st.fractions(min_value=-5, max_value=5, max_denominator=7)


@st.composite
def functions(draw, max_d=5):
    d = draw(st.integers(0, max_d))
    return draw(st.lists(fractions, min_size=1 << d, max_size=1 << d))


@st.composite
def event_masks(draw, max_d=4):
    d = draw(st.integers(1, max_d))
    N = 1 << d
    return d, [np.array(draw(st.lists(st.booleans(), min_size=N, max_size=N))) for _ in range(3)]


def direct_transform(f):
    N = len(f)
    return [sum((Fraction(f[c]) * (-1) ** dot(g, c) for c in range(N)), Fraction(0)) / N for g in range(N)]


def test_character_values():
    assert list(character(0b11, 2)) == [1, -1, -1, 1]


@given(functions())
def test_transform_matches_direct_sum(f):
    assert transform(f).as_fractions() == direct_transform(f)


@given(functions())
def test_inverse_roundtrip(f):
    assert inverse_transform(transform(f)) == [Fraction(v) for v in f]


@given(functions())
def test_parseval(f):
    assert parseval_check(f)[2]


@given(st.integers(0, 4), st.data())
def test_plancherel(d, data):
    N = 1 << d
    f = data.draw(st.lists(fractions, min_size=N, max_size=N))
    g = data.draw(st.lists(fractions, min_size=N, max_size=N))
    assert inner(f, g) == inner_hat(transform(f), transform(g))


def test_transform_rejects_bad_length():
    with pytest.raises(ValueError):
        transform([1, 2, 3])
    with pytest.raises(BudgetExceeded):
        transform([0] * 8, budget=2)


def test_big_values_stay_exact():
    f = [Fraction(1, 3) * 10**30, Fraction(-2, 7), 5, 10**25]
    assert transform(f).as_fractions() == direct_transform(f)


def triple_loop_prob(d, masks):
    N = 1 << d
    hits = sum(1 for a in range(N) for b in range(N) if masks[0][a] and masks[1][b] and masks[2][a ^ b])
    return Fraction(hits, N * N)


@given(event_masks())
def test_product_event_formula(dm):
    d, masks = dm
    r = ghz_product_event_prob(d, *masks)
    assert r.agree
    assert r.lhs == triple_loop_prob(d, masks)


@given(subspaces(max_n=4), st.data())
def test_product_event_formula_on_subspace(V, data):
    N = 1 << V.dim
    masks = [np.array(data.draw(st.lists(st.booleans(), min_size=N, max_size=N))) for _ in range(3)]
    assert ghz_product_event_prob(V, *masks).agree


def test_empty_event_skips_density_form():
    r = ghz_product_event_prob(2, [0, 0, 0, 0], [1, 1, 1, 1], [1, 0, 0, 0])
    assert r.density_skipped and r.lhs == 0 and r.agree


@given(event_masks())
def test_prob_diff_bound(dm):
    d, masks = dm
    diff, bound, ok = prob_diff_bound_check(d, *masks)
    assert ok and diff <= bound


@pytest.mark.parametrize("d", range(1, 9))
def test_ghz_density_transform(d):
    N = 1 << d
    w = ghz_density_transform(d)
    g = np.arange(N**3)
    g1, g2, g3 = g & (N - 1), (g >> d) & (N - 1), g >> (2 * d)
    assert np.array_equal(w, ((g1 == g2) & (g2 == g3)).astype(np.int64))


@st.composite
def product_function_instances(draw):
    V = draw(subspaces(max_n=4))
    sub = draw(st.lists(st.sampled_from(list(V.basis) or [0]), max_size=V.dim))
    W = Subspace.span(V.ambient_dim, sub)
    N = 1 << V.dim
    Y = [np.array(draw(st.lists(st.integers(0, 1), min_size=N, max_size=N))) for _ in range(3)]
    return V, W, Y


@given(product_function_instances())
def test_product_function_bound(inst):
    V, W, Y = inst
    r = product_function_independence_check(V, W, Y, alphabet_sizes=[2, 2, 2])
    assert r.holds
    assert 0 <= r.conclusion <= 1


def test_product_function_trivial_subspace():
    # conditioning on a point of each coset fixes all answers
    V = Subspace.full(3)
    r = product_function_independence_check(V, Subspace.zero(3), [np.arange(8) % 2] * 3, alphabet_sizes=[2, 2, 2])
    assert r.conclusion == 0 and r.eps_meas == 0


def test_product_function_needs_subspace():
    with pytest.raises(ValueError):
        product_function_independence_check(Subspace.span(3, [1]), Subspace.span(3, [2]), [[0, 0]] * 3)
