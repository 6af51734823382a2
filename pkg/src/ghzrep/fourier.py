"""Fourier analysis over F2 vector spaces and the GHZ-specific formulas.

A function on a d-dimensional space V (or on a coset of it) is an array of
length ``2**d`` indexed by coordinates in V's canonical basis. The character
``chi_gamma`` is indexed the same way: ``chi_gamma(c) = (-1)^{popcount(gamma & c)}``.
Coefficients stay exact: values are scaled to integers over a common
denominator, transformed with the integer butterfly, and divided once.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Sequence

import numpy as np

from .errors import BudgetExceeded
from .f2linalg import Subspace, popcount_parity
from .kernels import fwht

DEFAULT_DIM_BUDGET = 24
_INT64_SAFE = 1 << 62


def character(gamma: int, d: int) -> np.ndarray:
    c = np.arange(1 << d, dtype=np.int64)
    return 1 - 2 * popcount_parity(c & gamma)


def _to_scaled_ints(values) -> tuple[np.ndarray, int]:
    fr = [v if isinstance(v, Fraction) else Fraction(v) for v in values]
    den = 1
    for v in fr:
        den = lcm(den, v.denominator)
    ints = [v.numerator * (den // v.denominator) for v in fr]
    big = max((abs(i) for i in ints), default=0) * max(len(ints), 1)
    arr = np.array(ints, dtype=np.int64 if big < _INT64_SAFE else object)
    return arr, den


@dataclass(frozen=True)
class FourierTable:
    """Exact coefficients ``numer[gamma] / denom``."""

    numer: np.ndarray
    denom: int

    @property
    def dim(self) -> int:
        return int(self.numer.shape[0]).bit_length() - 1

    def __getitem__(self, gamma: int) -> Fraction:
        return Fraction(int(self.numer[gamma]), self.denom)

    def __len__(self) -> int:
        return len(self.numer)

    def as_fractions(self) -> list[Fraction]:
        return [Fraction(int(v), self.denom) for v in self.numer]

    def trivial(self) -> Fraction:
        return self[0]


def transform(values: Sequence, budget: int = DEFAULT_DIM_BUDGET) -> FourierTable:
    """``f^(gamma) = E_c f(c) chi_gamma(c)`` for ``f`` given on ``2**d`` points."""
    N = len(values)
    d = N.bit_length() - 1
    if N != 1 << d:
        raise ValueError("length must be a power of two")
    if d > budget:
        raise BudgetExceeded(d, budget, "transform dimension")
    ints, den = _to_scaled_ints(values)
    out = fwht(ints)
    return FourierTable(out, den * N)


def inverse_transform(table: FourierTable) -> list[Fraction]:
    """``f(c) = sum_gamma f^(gamma) chi_gamma(c)``."""
    out = fwht(table.numer)
    return [Fraction(int(v), table.denom) for v in out]


def inner(f: Sequence, g: Sequence) -> Fraction:
    """``<f, g> = E_x f(x) g(x)``."""
    return sum((Fraction(a) * Fraction(b) for a, b in zip(f, g)), Fraction(0)) / len(f)


def inner_hat(F: FourierTable, G: FourierTable) -> Fraction:
    """``sum_chi F(chi) G(chi)``."""
    s = sum(int(a) * int(b) for a, b in zip(F.numer, G.numer))
    return Fraction(s, F.denom * G.denom)


def parseval_check(values: Sequence) -> tuple[Fraction, Fraction, bool]:
    lhs = inner(values, values)
    T = transform(values)
    rhs = inner_hat(T, T)
    return lhs, rhs, lhs == rhs


def density(carrier_size: int, mask) -> list[Fraction]:
    """Density (in the carrier) of the uniform distribution on the set ``mask``."""
    mask = np.asarray(mask, dtype=bool)
    k = int(mask.sum())
    if k == 0:
        raise ValueError("density of an empty set is undefined")
    val = Fraction(carrier_size, k)
    return [val if m else Fraction(0) for m in mask]


def _indicator_wht(mask) -> np.ndarray:
    """``sum_{c in E} chi_gamma(c)`` for every gamma (integer)."""
    return fwht(np.asarray(mask, dtype=np.int64))


@dataclass
class ProductEventFormula:
    lhs: Fraction
    rhs_char_sum: Fraction
    rhs_density_form: Fraction | None
    density_skipped: bool

    @property
    def agree(self) -> bool:
        vals = [self.lhs, self.rhs_char_sum]
        if self.rhs_density_form is not None:
            vals.append(self.rhs_density_form)
        return all(v == vals[0] for v in vals)


def ghz_event_prob_direct(E1, E2, E3) -> Fraction:
    """``P(E)`` for P uniform on ``{x in V^3 : x1+x2+x3=0}`` by enumerating all pairs."""
    E1, E2, E3 = (np.asarray(e, dtype=bool) for e in (E1, E2, E3))
    N = len(E1)
    c = np.arange(N, dtype=np.int64)
    a = np.repeat(c, N)
    b = np.tile(c, N)
    hits = int(np.count_nonzero(E1[a] & E2[b] & E3[a ^ b]))
    return Fraction(hits, N * N)


def ghz_product_event_prob(V: Subspace | int, E1, E2, E3) -> ProductEventFormula:
    """Three independent evaluations of ``P(E1 x E2 x E3)`` under the GHZ distribution on ``V^3``.

    ``E_i`` are boolean masks over the coordinates of ``V`` (length ``2**dim V``).
    """
    d = V.dim if isinstance(V, Subspace) else int(V)
    N = 1 << d
    masks = [np.asarray(e, dtype=bool) for e in (E1, E2, E3)]
    if any(len(m) != N for m in masks):
        raise ValueError(f"event masks must have length {N}")
    lhs = ghz_event_prob_direct(*masks)
    # sum_chi prod_i 1^_{E_i}(chi), each 1^ = wht / N
    tabs = [transform([int(x) for x in m]) for m in masks]
    char_sum = sum(
        (tabs[0][g] * tabs[1][g] * tabs[2][g] for g in range(N)),
        Fraction(0),
    )
    sizes = [int(m.sum()) for m in masks]
    if min(sizes) == 0:
        return ProductEventFormula(lhs, char_sum, None, True)
    u = Fraction(sizes[0] * sizes[1] * sizes[2], N**3)
    dens = [transform(density(N, m)) for m in masks]
    dens_sum = sum((dens[0][g] * dens[1][g] * dens[2][g] for g in range(N)), Fraction(0))
    return ProductEventFormula(lhs, char_sum, u * dens_sum, False)


def prob_diff_bound_check(V: Subspace | int, E1, E2, E3) -> tuple[Fraction, Fraction, bool]:
    """``|P(E) - U(E)| <= sum_{chi != 1} prod_i |1^_{E_i}(chi)|``."""
    d = V.dim if isinstance(V, Subspace) else int(V)
    N = 1 << d
    masks = [np.asarray(e, dtype=bool) for e in (E1, E2, E3)]
    pe = ghz_event_prob_direct(*masks)
    ue = Fraction(int(masks[0].sum()) * int(masks[1].sum()) * int(masks[2].sum()), N**3)
    w = [_indicator_wht(m) for m in masks]
    bound_num = sum(abs(int(w[0][g]) * int(w[1][g]) * int(w[2][g])) for g in range(1, N))
    bound = Fraction(bound_num, N**3)
    diff = abs(pe - ue)
    return diff, bound, diff <= bound


def ghz_density_transform(d: int, budget: int = 24) -> np.ndarray:
    """Fourier transform of the density of the GHZ distribution on ``(F2^d)^3``, by direct computation.

    Returned as an integer array over the joint character index
    ``g1 | g2 << d | g3 << 2d``; each coefficient is exact because the
    density takes values in ``{0, 2**d}``.
    """
    if 3 * d > budget:
        raise BudgetExceeded(3 * d, budget, "joint transform dimension")
    N = 1 << d
    c = np.arange(N ** 3, dtype=np.int64)
    x1, x2, x3 = c & (N - 1), (c >> d) & (N - 1), c >> (2 * d)
    dens = np.where((x1 ^ x2 ^ x3) == 0, N, 0).astype(np.int64)
    # phi^(chi) = E_x phi(x) chi(x) = wht / N^3
    w = fwht(dens)
    assert np.all(w % (N ** 3) == 0)
    return w // (N ** 3)


# --------------------------------------------------------------------------
# independence of per-player functions under coset conditioning


@dataclass
class ProductFunctionReport:
    eps_meas: Fraction
    eps_witness: int
    conclusion: Fraction
    bound: float
    holds: bool
    eps_per_char: list[Fraction]


def product_function_independence_check(
    V: Subspace,
    W: Subspace,
    Y: Sequence,
    alphabet_sizes: Sequence[int] | None = None,
    budget: int = 1 << 20,
    epsilon: float | None = None,
) -> ProductFunctionReport:
    """Measure both sides of the coset-independence bound for ``Y_i = Y[i](X_i)``.

    ``V`` is the ambient space, ``W <= V`` the conditioning subspace; ``Y[i]``
    is an integer array over coordinates of ``V`` with values in ``range(|Y_i|)``.
    The hypothesis value is the worst character of ``W``; if ``epsilon`` is
    given it replaces the measured value in the bound.
    """
    if not V.contains_subspace(W):
        raise ValueError("W must be a subspace of V")
    d, dw = V.dim, W.dim
    N = 1 << d
    if N * N > budget:
        raise BudgetExceeded(N * N, budget, "support points")
    Y = [np.asarray(y, dtype=np.int64) for y in Y]
    if alphabet_sizes is None:
        alphabet_sizes = [int(y.max()) + 1 for y in Y]
    sizes = [int(z) for z in alphabet_sizes]
    elems = V.elements()
    # coset of W for every element of V, and the coordinates inside that coset
    reps = np.array([W.reduce(int(x)) for x in elems], dtype=np.uint64)
    inner_c = W.coords_array(elems ^ reps)
    rep_ids, coset_id = np.unique(reps, return_inverse=True)
    ncos = len(rep_ids)

    # hypothesis: E_{(x,y)} d_TV(chi(X1) | coset, Y1=y1 ; uniform) per character
    M = 1 << dw
    table = np.zeros((ncos * sizes[0], M), dtype=np.int64)
    np.add.at(table, (coset_id * sizes[0] + Y[0], inner_c), 1)
    sums = fwht(table)  # sum over S_{c,y} of chi
    # TV of a +-1 variable with bias b from uniform is |b|/2 (trivial char: 0)
    abs_tot = np.abs(sums).sum(axis=0)
    eps_chars = [Fraction(0)] + [Fraction(int(abs_tot[g]), 2 * N) for g in range(1, M)]
    g_star = max(range(M), key=lambda g: (eps_chars[g], -g))
    eps_meas = eps_chars[g_star]

    # conclusion: E_{x <- P_X} d_TV(P_{Y | coset triple}, product of coset marginals)
    c = np.arange(N, dtype=np.int64)
    a = np.repeat(c, N)
    b = np.tile(c, N)
    s = a ^ b
    c1, c2, c3 = coset_id[a], coset_id[b], coset_id[s]
    y1, y2, y3 = Y[0][a], Y[1][b], Y[2][s]
    ny = sizes[0] * sizes[1] * sizes[2]
    key = (c1 * ncos + c2) * ny + (y1 * sizes[1] + y2) * sizes[2] + y3
    joint = np.bincount(key, minlength=ncos * ncos * ny).reshape(ncos, ncos, sizes[0], sizes[1], sizes[2])
    marg = [np.zeros((ncos, sz), dtype=np.int64) for sz in sizes]
    for i in range(3):
        np.add.at(marg[i], (coset_id, Y[i]), 1)
    conclusion = Fraction(0)
    for i1 in range(ncos):
        for i2 in range(ncos):
            blk = joint[i1, i2]
            tot = int(blk.sum())
            if tot == 0:
                continue
            i3 = int(np.searchsorted(rep_ids, W.reduce(int(rep_ids[i1]) ^ int(rep_ids[i2]))))
            prod = np.einsum("a,b,c->abc", marg[0][i1], marg[1][i2], marg[2][i3])
            # P-part: blk / M^2; product part: prod / M^3
            diff = np.abs(blk.astype(object) * M - prod.astype(object)).sum()
            tv = Fraction(int(diff), 2 * M ** 3)
            conclusion += Fraction(tot, N * N) * tv
    eps_used = eps_meas if epsilon is None else Fraction(epsilon)
    k = sizes[1] * sizes[2]
    holds = conclusion * conclusion <= eps_used * eps_used * k
    return ProductFunctionReport(
        eps_meas=eps_meas,
        eps_witness=g_star,
        conclusion=conclusion,
        bound=float(eps_used) * math.sqrt(k),
        holds=bool(holds),
        eps_per_char=eps_chars,
    )

