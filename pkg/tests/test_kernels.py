"""The numba and numpy paths of every kernel agree, and both agree with plain Python."""
import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ghzrep import _accel, kernels

needs_numba = pytest.mark.skipif(_accel.numba is None, reason="numba not installed")


@st.composite
def instances(draw, k=3):
    nq = [draw(st.integers(1, 2)) for _ in range(k)]
    na = [draw(st.integers(1, 2)) for _ in range(k)]
    S = draw(st.integers(1, 6))
    qidx = np.array([[draw(st.integers(0, nq[i] - 1)) for i in range(k)] for _ in range(S)])
    weight = np.array([draw(st.integers(1, 5)) for _ in range(S)])
    A = int(np.prod(na))
    win = np.array([[draw(st.integers(0, 1)) for _ in range(A)] for _ in range(S)], dtype=np.uint8)
    return qidx, weight, win, nq, na


def score(inst, tables):
    qidx, weight, win, nq, na = inst
    stride, _ = kernels._layout(np.array(nq), np.array(na))
    tot = 0
    for s in range(len(qidx)):
        a = sum(int(tables[i][qidx[s, i]]) * int(stride[i]) for i in range(len(nq)))
        tot += int(weight[s]) * int(win[s, a])
    return tot


def python_max(inst):
    qidx, weight, win, nq, na = inst
    per_player = [list(itertools.product(range(na[i]), repeat=nq[i])) for i in range(len(nq))]
    return max(score(inst, t) for t in itertools.product(*per_player))


@given(instances())
@pytest.mark.parametrize("use_numba", [False, pytest.param(True, marks=needs_numba)])
def test_pruned_matches_python(use_numba, inst):
    best, tables = kernels.pruned_search(*inst, use_numba=use_numba)
    assert best == python_max(inst) == score(inst, tables)


@given(instances())
@pytest.mark.parametrize("use_numba", [False, pytest.param(True, marks=needs_numba)])
def test_brute_matches_python(use_numba, inst):
    best, tables = kernels.brute_search(*inst, use_numba=use_numba)
    assert best == python_max(inst) == score(inst, tables)


@needs_numba
@given(instances())
def test_backends_pick_same_witness(inst):
    a = kernels.pruned_search(*inst, use_numba=True)
    b = kernels.pruned_search(*inst, use_numba=False)
    assert a[0] == b[0]
    assert all(np.array_equal(x, y) for x, y in zip(a[1], b[1]))


@given(instances(), st.data())
def test_split_ranges_cover(inst, data):
    qidx, weight, win, nq, na = inst
    total = kernels.outer_count(nq, na)
    cut = data.draw(st.integers(0, total))
    parts = [kernels.pruned_search(*inst, lo=lo, hi=hi)[0] for lo, hi in ((0, cut), (cut, total)) if hi > lo]
    assert max(parts) == kernels.pruned_search(*inst)[0]


@needs_numba
@given(st.integers(0, 5), st.data())
def test_fwht_backends(d, data):
    N = 1 << d
    a = np.array(data.draw(st.lists(st.integers(-50, 50), min_size=2 * N, max_size=2 * N))).reshape(2, N)
    assert np.array_equal(kernels.fwht(a, use_numba=True), kernels.fwht(a, use_numba=False))


def test_fwht_object_dtype_is_exact():
    a = np.array([10**30, 1, 2, 3], dtype=object)
    assert list(kernels.fwht(a)) == [10**30 + 6, 10**30 - 2, 10**30 - 4, 10**30]


@needs_numba
@given(st.integers(1, 3), st.integers(1, 2), st.data())
def test_compressed_kl_backends(d, m, data):
    N = data.draw(st.integers(1, 12))
    coords = np.array([[data.draw(st.integers(0, (1 << d) - 1)) for _ in range(3)] for _ in range(N)])
    wt = np.array([data.draw(st.integers(0, 4)) for _ in range(N)])
    wt[0] += 1
    wp = wt + np.array([data.draw(st.integers(0, 4)) for _ in range(N)])
    gammas = np.array([[data.draw(st.integers(0, (1 << d) - 1)) for _ in range(m)] for _ in range(3)])
    a = kernels.compressed_kl(coords, wt, wp, gammas, use_numba=True)
    b = kernels.compressed_kl(coords, wt, wp, gammas, use_numba=False)
    assert np.allclose(a, b, atol=1e-12)


@pytest.mark.parametrize("flag, expect", [("1", "numpy"), ("0", None)])
def test_pure_flag_selects_backend(flag, expect):
    import os
    import subprocess
    import sys

    env = dict(os.environ, GHZREP_PURE=flag)
    code = "import ghzrep; from ghzrep.games import ghz_game, exact_value; print(ghzrep.backend(), exact_value(ghz_game())[0])"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True).stdout.split()
    assert out[1] == "3/4"
    assert out[0] == (expect or ("numba" if _accel.numba is not None else "numpy"))
