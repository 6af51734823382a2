"""Inner loops.

Every kernel has two implementations with identical results: a loop version
compiled by numba and a vectorized numpy version. The public wrappers pick
one according to :data:`ghzrep._accel.USE_NUMBA`; the ``*_numba`` and
``*_numpy`` names stay importable so tests and the benchmark can compare them.
"""
import itertools

import numpy as np

from . import _accel
from ._accel import njit

# --------------------------------------------------------------------------
# Walsh-Hadamard transform (unnormalized) over the last axis


@njit(cache=True)
def _fwht_rows_numba(a):
    rows, n = a.shape
    for r in range(rows):
        h = 1
        while h < n:
            for i in range(0, n, 2 * h):
                for j in range(i, i + h):
                    x = a[r, j]
                    y = a[r, j + h]
                    a[r, j] = x + y
                    a[r, j + h] = x - y
            h *= 2
    return a


def _fwht_rows_numpy(a):
    rows, n = a.shape
    h = 1
    while h < n:
        v = a.reshape(rows, n // (2 * h), 2, h)
        x = v[:, :, 0, :].copy()
        y = v[:, :, 1, :]
        v[:, :, 0, :] = x + y
        v[:, :, 1, :] = x - y
        h *= 2
    return a


def fwht(a, use_numba=None):
    """Unnormalized Walsh-Hadamard transform along the last axis (returns a new array).

    ``out[g] = sum_c a[c] * (-1)^{popcount(g & c)}``. Object arrays (exact big
    integers or fractions) always take the numpy path.
    """
    a = np.array(a, copy=True)
    n = a.shape[-1]
    if n & (n - 1):
        raise ValueError("length must be a power of two")
    shape = a.shape
    flat = a.reshape(-1, n)
    if use_numba is None:
        use_numba = _accel.USE_NUMBA
    if use_numba and flat.dtype in (np.int64, np.float64):
        flat = _fwht_rows_numba(flat)
    else:
        flat = _fwht_rows_numpy(flat)
    return flat.reshape(shape)


# --------------------------------------------------------------------------
# exhaustive strategy search
#
# A game instance is flattened to:
#   qidx[s, i]  compressed query index of player i at support point s
#   weight[s]   integer weight of support point s
#   win[s, a]   0/1 predicate; a = sum_i y_i * stride[i], player k-1 fastest
#   nq[i], na[i]  compressed query / answer alphabet sizes
# Tables are concatenated: player i's table occupies offs[i]:offs[i]+nq[i].


def _layout(nq, na):
    k = len(nq)
    stride = np.ones(k, dtype=np.int64)
    for i in range(k - 2, -1, -1):
        stride[i] = stride[i + 1] * na[i + 1]
    offs = np.zeros(k + 1, dtype=np.int64)
    offs[1:] = np.cumsum(nq)
    return stride, offs


@njit(cache=True, nogil=True)
def _pruned_search_numba(qidx, weight, win, nq, na, stride, offs, lo, hi):
    S, k = qidx.shape
    last = k - 1
    n_outer = offs[last]
    digits = np.zeros(n_outer, dtype=np.int64)
    base = np.zeros(n_outer, dtype=np.int64)
    for i in range(last):
        for e in range(offs[i], offs[i + 1]):
            base[e] = na[i]
    # decode lo into digits; the final table entry is least significant
    g = lo
    for e in range(n_outer - 1, -1, -1):
        digits[e] = g % base[e]
        g //= base[e]
    nql = nq[last]
    nal = na[last]
    score = np.zeros((nql, nal), dtype=np.int64)
    best = -1
    best_digits = digits.copy()
    best_last = np.zeros(nql, dtype=np.int64)
    for g in range(lo, hi):
        score[:, :] = 0
        for s in range(S):
            part = 0
            for i in range(last):
                part += digits[offs[i] + qidx[s, i]] * stride[i]
            x = qidx[s, last]
            w = weight[s]
            for y in range(nal):
                if win[s, part + y]:
                    score[x, y] += w
        total = 0
        for x in range(nql):
            m = score[x, 0]
            for y in range(1, nal):
                if score[x, y] > m:
                    m = score[x, y]
            total += m
        if total > best:
            best = total
            best_digits[:] = digits
            for x in range(nql):
                arg = 0
                m = score[x, 0]
                for y in range(1, nal):
                    if score[x, y] > m:
                        m = score[x, y]
                        arg = y
                best_last[x] = arg
        # increment mixed-radix counter
        e = n_outer - 1
        while e >= 0:
            digits[e] += 1
            if digits[e] < base[e]:
                break
            digits[e] = 0
            e -= 1
    return best, best_digits, best_last


def _all_tables(nq_i, na_i):
    """Every table for one player, rows in lexicographic order (entry 0 most significant)."""
    if nq_i == 0:
        return np.zeros((1, 0), dtype=np.int64)
    return np.array(list(itertools.product(range(na_i), repeat=nq_i)), dtype=np.int64)


def _pruned_search_numpy(qidx, weight, win, nq, na, stride, offs, lo, hi):
    S, k = qidx.shape
    last = k - 1
    nql, nal = int(nq[last]), int(na[last])
    onehot = np.zeros((S, nql), dtype=np.int64)
    onehot[np.arange(S), qidx[:, last]] = 1
    wwin = win.astype(np.int64) * weight[:, None]
    yr = np.arange(nal)
    if k == 1:
        score = onehot.T @ wwin[:, :nal]
        return int(score.max(axis=1).sum()), np.zeros(0, dtype=np.int64), score.argmax(axis=1)
    # outer python loop over players 0..k-3, vectorized over player k-2
    pen = k - 2
    pen_tables = _all_tables(int(nq[pen]), int(na[pen]))
    T = len(pen_tables)
    outer_lists = [_all_tables(int(nq[i]), int(na[i])) for i in range(pen)]
    best, best_digits, best_last = -1, None, None
    g = 0
    for outer in itertools.product(*[range(len(t)) for t in outer_lists]):
        if g + T <= lo or g >= hi:
            g += T
            continue
        part = np.zeros(S, dtype=np.int64)
        for i, ti in enumerate(outer):
            part += outer_lists[i][ti][qidx[:, i]] * stride[i]
        sel_lo = max(lo - g, 0)
        sel_hi = min(hi - g, T)
        tabs = pen_tables[sel_lo:sel_hi]
        allpart = part[None, :] + tabs[:, qidx[:, pen]] * stride[pen]  # (t, S)
        gathered = np.take_along_axis(
            np.broadcast_to(wwin, (len(tabs),) + wwin.shape), allpart[:, :, None] + yr[None, None, :], axis=2
        )  # (t, S, nal)
        score = np.einsum("tsy,sx->txy", gathered, onehot)
        totals = score.max(axis=2).sum(axis=1)
        t = int(np.argmax(totals))
        if totals[t] > best:
            best = int(totals[t])
            digits = [outer_lists[i][ti] for i, ti in enumerate(outer)] + [tabs[t]]
            best_digits = np.concatenate(digits) if digits else np.zeros(0, dtype=np.int64)
            best_last = score[t].argmax(axis=1)
        g += T
    return best, best_digits, best_last


def outer_count(nq, na):
    c = 1
    for i in range(len(nq) - 1):
        c *= int(na[i]) ** int(nq[i])
    return c


def pruned_search(qidx, weight, win, nq, na, lo=0, hi=None, use_numba=None):
    """Exact maximum of the weighted win count over product strategies.

    Players ``0..k-2`` are enumerated; the last player's table is chosen per
    query by exact conditional maximization. Returns ``(score, tables)`` where
    ``tables`` is a list of int64 arrays, one per player. ``lo``/``hi`` bound
    the outer enumeration index so callers can split the work.
    """
    nq = np.asarray(nq, dtype=np.int64)
    na = np.asarray(na, dtype=np.int64)
    stride, offs = _layout(nq, na)
    if hi is None:
        hi = outer_count(nq, na)
    if use_numba is None:
        use_numba = _accel.USE_NUMBA
    args = (
        np.ascontiguousarray(qidx, dtype=np.int64),
        np.ascontiguousarray(weight, dtype=np.int64),
        np.ascontiguousarray(win, dtype=np.uint8),
        nq,
        na,
        stride,
        offs,
    )
    if use_numba:
        best, digits, last = _pruned_search_numba(*args, np.int64(lo), np.int64(hi))
    else:
        best, digits, last = _pruned_search_numpy(*args, lo, hi)
    if best < 0:
        return -1, None
    k = len(nq)
    tables = [np.array(digits[offs[i] : offs[i + 1]], dtype=np.int64) for i in range(k - 1)]
    tables.append(np.array(last, dtype=np.int64))
    return int(best), tables


@njit(cache=True, nogil=True)
def _brute_search_numba(qidx, weight, win, nq, na, stride, offs):
    S, k = qidx.shape
    n_all = offs[k]
    digits = np.zeros(n_all, dtype=np.int64)
    base = np.zeros(n_all, dtype=np.int64)
    for i in range(k):
        for e in range(offs[i], offs[i + 1]):
            base[e] = na[i]
    total_count = 1
    for e in range(n_all):
        total_count *= base[e]
    best = -1
    best_digits = digits.copy()
    for g in range(total_count):
        total = 0
        for s in range(S):
            a = 0
            for i in range(k):
                a += digits[offs[i] + qidx[s, i]] * stride[i]
            if win[s, a]:
                total += weight[s]
        if total > best:
            best = total
            best_digits[:] = digits
        e = n_all - 1
        while e >= 0:
            digits[e] += 1
            if digits[e] < base[e]:
                break
            digits[e] = 0
            e -= 1
    return best, best_digits


def _brute_search_numpy(qidx, weight, win, nq, na, stride, offs):
    S, k = qidx.shape
    tables = [_all_tables(int(nq[i]), int(na[i])) for i in range(k)]
    wwin = win.astype(np.int64) * weight[:, None]
    rows = np.arange(S)
    best, best_digits = -1, None
    # python loop over all players but the last two, vectorize the last two
    head = k - 2 if k >= 2 else 0
    tail = list(range(head, k))
    tail_tabs = [tables[i] for i in tail]
    grid = np.meshgrid(*[np.arange(len(t)) for t in tail_tabs], indexing="ij")
    grid = [g.ravel() for g in grid]
    for outer in itertools.product(*[range(len(tables[i])) for i in range(head)]):
        a = np.zeros((len(grid[0]), S), dtype=np.int64)
        for i, ti in enumerate(outer):
            a += tables[i][ti][qidx[:, i]] * stride[i]
        for pos, i in enumerate(tail):
            a += tail_tabs[pos][grid[pos]][:, qidx[:, i]] * stride[i]
        totals = wwin[rows[None, :], a].sum(axis=1)
        t = int(np.argmax(totals))
        if totals[t] > best:
            best = int(totals[t])
            parts = [tables[i][ti] for i, ti in enumerate(outer)]
            parts += [tail_tabs[pos][grid[pos][t]] for pos in range(len(tail))]
            best_digits = np.concatenate(parts)
    return best, best_digits


def brute_search(qidx, weight, win, nq, na, use_numba=None):
    """Unpruned exhaustive maximum over all product strategies (independent oracle)."""
    nq = np.asarray(nq, dtype=np.int64)
    na = np.asarray(na, dtype=np.int64)
    stride, offs = _layout(nq, na)
    if use_numba is None:
        use_numba = _accel.USE_NUMBA
    args = (
        np.ascontiguousarray(qidx, dtype=np.int64),
        np.ascontiguousarray(weight, dtype=np.int64),
        np.ascontiguousarray(win, dtype=np.uint8),
        nq,
        na,
        stride,
        offs,
    )
    if use_numba:
        best, digits = _brute_search_numba(*args)
    else:
        best, digits = _brute_search_numpy(*args)
    tables = [np.array(digits[offs[i] : offs[i + 1]], dtype=np.int64) for i in range(len(nq))]
    return int(best), tables


# --------------------------------------------------------------------------
# KL divergence of rowwise linear compressions


@njit(cache=True)
def _compressed_kl_numba(coords, wt, wp, gammas):
    N = coords.shape[0]
    G, m = gammas.shape
    nb = 1 << (3 * m)
    out = np.zeros(G, dtype=np.float64)
    tt = 0
    tp = 0
    for s in range(N):
        tt += wt[s]
        tp += wp[s]
    ht = np.zeros(nb, dtype=np.int64)
    hp = np.zeros(nb, dtype=np.int64)
    for g in range(G):
        ht[:] = 0
        hp[:] = 0
        for s in range(N):
            b = 0
            for i in range(3):
                c = coords[s, i]
                for r in range(m):
                    v = gammas[g, r] & c
                    par = 0
                    while v:
                        par ^= 1
                        v &= v - 1
                    b = (b << 1) | par
            ht[b] += wt[s]
            hp[b] += wp[s]
        kl = 0.0
        for b in range(nb):
            if ht[b] > 0:
                if hp[b] == 0:
                    kl = np.inf
                    break
                pt = ht[b] / tt
                kl += pt * np.log(pt / (hp[b] / tp))
        out[g] = kl
    return out


def _parity(x):
    x = x.astype(np.uint64)
    for s in (32, 16, 8, 4, 2, 1):
        x = x ^ (x >> np.uint64(s))
    return (x & np.uint64(1)).astype(np.int64)


def _compressed_kl_numpy(coords, wt, wp, gammas):
    G, m = gammas.shape
    nb = 1 << (3 * m)
    tt, tp = wt.sum(), wp.sum()
    out = np.zeros(G)
    for g in range(G):
        b = np.zeros(len(coords), dtype=np.int64)
        for i in range(3):
            for r in range(m):
                b = (b << 1) | _parity(coords[:, i] & gammas[g, r])
        ht = np.bincount(b, weights=wt, minlength=nb)
        hp = np.bincount(b, weights=wp, minlength=nb)
        pos = ht > 0
        if np.any(hp[pos] == 0):
            out[g] = np.inf
            continue
        pt = ht[pos] / tt
        out[g] = float(np.sum(pt * np.log(pt / (hp[pos] / tp))))
    return out


def compressed_kl(coords, wt, wp, gammas, use_numba=None):
    """KL of ``(Gc1, Gc2, Gc3)`` under weights ``wt`` from the same under ``wp``, for each G.

    ``coords`` is ``(N, 3)`` int64 (coordinates in a d-dim space); ``gammas``
    is ``(G, m)``, each row of a G being a d-bit functional.
    """
    if use_numba is None:
        use_numba = _accel.USE_NUMBA
    args = (
        np.ascontiguousarray(coords, dtype=np.int64),
        np.ascontiguousarray(wt, dtype=np.int64),
        np.ascontiguousarray(wp, dtype=np.int64),
        np.ascontiguousarray(gammas, dtype=np.int64),
    )
    if use_numba:
        return _compressed_kl_numba(*args)
    return _compressed_kl_numpy(*args)
