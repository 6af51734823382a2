"""Exact finite probability distributions.

Masses are :class:`fractions.Fraction`; anything involving a logarithm
(entropy, KL) is returned as a float computed from the exact masses. KL may be
``math.inf``.
"""
from __future__ import annotations

import math
from fractions import Fraction
from itertools import combinations
from typing import Callable, Hashable, Iterable, Mapping

from .errors import DomainError, PartialFunction, PreconditionFailed, UniverseMismatch, ZeroMassEvent

Outcome = Hashable


def _frac(p) -> Fraction:
    return p if isinstance(p, Fraction) else Fraction(p)


class FiniteDist:
    """Probability distribution on an explicit finite outcome list.

    Outcomes with zero mass may be listed; they are part of the universe but
    not of the support.
    """

    __slots__ = ("_mass",)

    def __init__(self, mass: Mapping[Outcome, object]):
        m = {k: _frac(v) for k, v in mass.items()}
        if any(v < 0 for v in m.values()):
            raise ValueError("negative mass")
        if sum(m.values(), Fraction(0)) != 1:
            raise ValueError(f"masses sum to {sum(m.values(), Fraction(0))}, not 1")
        self._mass = m

    @classmethod
    def uniform(cls, outcomes: Iterable[Outcome]) -> "FiniteDist":
        outs = list(dict.fromkeys(outcomes))
        if not outs:
            raise ValueError("empty outcome set")
        p = Fraction(1, len(outs))
        return cls({o: p for o in outs})

    @classmethod
    def point(cls, outcome: Outcome, universe: Iterable[Outcome] = ()) -> "FiniteDist":
        m = {o: Fraction(0) for o in universe}
        m[outcome] = Fraction(1)
        return cls(m)

    @classmethod
    def from_weights(cls, weights: Mapping[Outcome, int]) -> "FiniteDist":
        total = sum(weights.values())
        if total <= 0:
            raise ValueError("total weight must be positive")
        return cls({k: Fraction(int(w), total) for k, w in weights.items()})

    @property
    def outcomes(self) -> list:
        return list(self._mass)

    @property
    def support(self) -> list:
        return [k for k, v in self._mass.items() if v > 0]

    def __getitem__(self, outcome) -> Fraction:
        return self._mass.get(outcome, Fraction(0))

    def items(self):
        return self._mass.items()

    def __len__(self) -> int:
        return len(self._mass)

    def __eq__(self, other) -> bool:
        if not isinstance(other, FiniteDist):
            return NotImplemented
        keys = set(self._mass) | set(other._mass)
        return all(self[k] == other[k] for k in keys)

    def __repr__(self) -> str:
        body = ", ".join(f"{k!r}: {v}" for k, v in self._mass.items() if v)
        return f"FiniteDist({{{body}}})"

    def prob(self, event: Callable[[Outcome], bool]) -> Fraction:
        return sum((v for k, v in self._mass.items() if event(k)), Fraction(0))

    def expect(self, fn: Callable[[Outcome], object]) -> Fraction:
        return sum((v * _frac(fn(k)) for k, v in self._mass.items() if v), Fraction(0))

    def with_universe(self, universe: Iterable[Outcome]) -> "FiniteDist":
        m = {o: Fraction(0) for o in universe}
        for k, v in self._mass.items():
            if v and k not in m:
                raise UniverseMismatch(f"support point {k!r} outside the new universe")
            if k in m:
                m[k] = v
        return FiniteDist(m)


def condition(P: FiniteDist, event: Callable[[Outcome], bool]) -> FiniteDist:
    pe = P.prob(event)
    if pe == 0:
        raise ZeroMassEvent("conditioning on a null event")
    return FiniteDist({k: (v / pe if event(k) else Fraction(0)) for k, v in P.items()})


def pushforward(P: FiniteDist, X: Callable[[Outcome], Outcome] | Mapping) -> FiniteDist:
    lookup = X.__getitem__ if isinstance(X, Mapping) else X
    out: dict = {}
    for k, v in P.items():
        try:
            val = lookup(k)
        except (KeyError, IndexError) as exc:
            if v:
                raise PartialFunction(f"random variable undefined at {k!r}") from exc
            continue
        out[val] = out.get(val, Fraction(0)) + v
    return FiniteDist(out)


def _common_keys(P: FiniteDist, Q: FiniteDist, strict: bool) -> list:
    if strict and set(P.outcomes) != set(Q.outcomes):
        raise UniverseMismatch("distributions have different outcome lists")
    return list(dict.fromkeys(P.outcomes + Q.outcomes))


def tv_distance(P: FiniteDist, Q: FiniteDist, strict: bool = False) -> Fraction:
    keys = _common_keys(P, Q, strict)
    return sum((abs(P[k] - Q[k]) for k in keys), Fraction(0)) / 2


def tv_distance_max_event(P: FiniteDist, Q: FiniteDist, max_outcomes: int = 16) -> Fraction:
    """``max_E |P(E) - Q(E)|`` by exhausting all events."""
    keys = _common_keys(P, Q, False)
    if len(keys) > max_outcomes:
        raise PreconditionFailed(f"{len(keys)} outcomes; event enumeration capped at {max_outcomes}")
    best = Fraction(0)
    for r in range(len(keys) + 1):
        for ev in combinations(keys, r):
            best = max(best, abs(sum((P[k] - Q[k] for k in ev), Fraction(0))))
    return best


def kl_divergence(P: FiniteDist, Q: FiniteDist) -> float:
    total = 0.0
    for k, p in P.items():
        if p == 0:
            continue
        q = Q[k]
        if q == 0:
            return math.inf
        total += float(p) * (math.log(p.numerator * q.denominator) - math.log(p.denominator * q.numerator))
    # rounding can push a true zero slightly negative
    return max(total, 0.0)


def entropy(P: FiniteDist) -> float:
    h = 0.0
    for _, p in P.items():
        if p:
            h -= float(p) * (math.log(p.numerator) - math.log(p.denominator))
    return max(h, 0.0)


def conditional_entropy(P: FiniteDist, X, Y) -> float:
    """``H(P_{X|Y}) = E_{y <- P_Y} H(P_{X | Y=y})``."""
    xl = X.__getitem__ if isinstance(X, Mapping) else X
    yl = Y.__getitem__ if isinstance(Y, Mapping) else Y
    PY = pushforward(P, yl)
    h = 0.0
    for y, py in PY.items():
        if py:
            cond = condition(P, lambda o, y=y: yl(o) == y)
            h += float(py) * entropy(pushforward(cond, xl))
    return h


def conditional_kl(P: FiniteDist, Q: FiniteDist, W, X, Y, Z) -> float:
    """``E_{x <- P_X} d_KL(P_{W|X=x} || Q_{Y|Z=x})``."""
    look = lambda f: f.__getitem__ if isinstance(f, Mapping) else f
    W, X, Y, Z = map(look, (W, X, Y, Z))
    PX = pushforward(P, X)
    QZ = pushforward(Q, Z)
    total = 0.0
    for x, px in PX.items():
        if not px:
            continue
        if QZ[x] == 0:
            return math.inf
        p_cond = pushforward(condition(P, lambda o, x=x: X(o) == x), W)
        q_cond = pushforward(condition(Q, lambda o, x=x: Z(o) == x), Y)
        d = kl_divergence(p_cond, q_cond)
        if math.isinf(d):
            return math.inf
        total += float(px) * d
    return total


def conditioned_tv_bound_check(P: FiniteDist, Q: FiniteDist, event) -> tuple[float, float, bool]:
    """``d_TV(P|E, Q|E) <= 2 d_TV(P, Q) / P(E)``, evaluated exactly."""
    pe = P.prob(event)
    if pe == 0:
        raise ZeroMassEvent("P(E) = 0")
    if Q.prob(event) == 0:
        # Q|E undefined; the bound is then at least 2 * P(E) / P(E) >= 1 >= any TV
        lhs = Fraction(1)
    else:
        lhs = tv_distance(condition(P, event), condition(Q, event))
    rhs = 2 * tv_distance(P, Q) / pe
    return float(lhs), float(rhs), lhs <= rhs


def pinsker_check(P: FiniteDist, Q: FiniteDist) -> tuple[float, float, bool]:
    tv = tv_distance(P, Q)
    kl = kl_divergence(P, Q)
    bound = math.inf if math.isinf(kl) else math.sqrt(kl / 2)
    # exact side is rational; allow float rounding of the log only
    return float(tv), bound, float(tv) <= bound * (1 + 1e-12) + 1e-15


def expectation_quotient_bound_check(P: FiniteDist, event, X, Y, Z, delta, tau) -> tuple[float, float, bool]:
    """Compare ``E_z d_TV(P~_{X|Z=z}, P~_{Y|Z=z})`` with ``tau + 2 E_z d_TV(P_{X|Z=z}, P_{Y|Z=z}) / delta``, ``P~ = P|E``.

    This is not an unconditional inequality: with ``X`` a uniform bit,
    ``Y = 1 - X`` and ``E = {X = 0}`` the right side is 0 and the left side 1.
    :func:`paired_quotient_bound_check` is the form that always holds.
    """
    look = lambda f: f.__getitem__ if isinstance(f, Mapping) else f
    X, Y, Z = map(look, (X, Y, Z))
    delta = _frac(delta)
    tau = _frac(tau)
    PZ = pushforward(P, Z)
    low = Fraction(0)
    for z, pz in PZ.items():
        if pz and condition(P, lambda o, z=z: Z(o) == z).prob(event) < delta:
            low += pz
    if low > tau:
        raise PreconditionFailed(f"Pr[P(E|Z) < delta] = {low} exceeds tau = {tau}")
    Pt = condition(P, event)
    lhs = Fraction(0)
    base = Fraction(0)
    for z, pz in PZ.items():
        if not pz:
            continue
        Pz = condition(P, lambda o, z=z: Z(o) == z)
        base += pz * tv_distance(pushforward(Pz, X), pushforward(Pz, Y))
        if Pt.prob(lambda o, z=z: Z(o) == z) > 0:
            Ptz = condition(Pt, lambda o, z=z: Z(o) == z)
            lhs += pz * tv_distance(pushforward(Ptz, X), pushforward(Ptz, Y))
        # z with P~(Z=z) = 0: the conditional is undefined; it contributes the
        # worst case TV of 1 only if it lies in the low-probability set.
        elif Pz.prob(event) < delta:
            lhs += pz
    rhs = tau + 2 * base / delta
    return float(lhs), float(rhs), lhs <= rhs


def paired_quotient_bound_check(P: FiniteDist, Q: FiniteDist, event, Z, delta, tau) -> tuple[float, float, bool]:
    """``E_z d_TV((P|E)_{.|Z=z}, (Q|E)_{.|Z=z}) <= tau + 2 E_z d_TV(P_{.|Z=z}, Q_{.|Z=z}) / delta``, z drawn from P_Z.

    Both laws live on the same outcome space and are conditioned on the same
    event, which is the setting where the conditioned-TV fact applies per z.
    The variant that compares the laws of two different variables under one
    distribution (:func:`expectation_quotient_bound_check`) can fail.
    """
    Z = Z.__getitem__ if isinstance(Z, Mapping) else Z
    delta = _frac(delta)
    tau = _frac(tau)
    PZ = pushforward(P, Z)
    lhs = base = low = Fraction(0)
    for z, pz in PZ.items():
        if not pz:
            continue
        at_z = lambda o, z=z: Z(o) == z
        if Q.prob(at_z) == 0:
            raise PreconditionFailed(f"Q gives no mass to Z = {z!r}")
        Pz, Qz = condition(P, at_z), condition(Q, at_z)
        base += pz * tv_distance(Pz, Qz)
        pe = Pz.prob(event)
        if pe < delta:
            low += pz
        if pe == 0 or Qz.prob(event) == 0:
            lhs += pz  # conditional undefined on one side; count the worst case
        else:
            lhs += pz * tv_distance(condition(Pz, event), condition(Qz, event))
    if low > tau:
        raise PreconditionFailed(f"Pr[P(E|Z) < delta] = {low} exceeds tau = {tau}")
    rhs = tau + 2 * base / delta
    return float(lhs), float(rhs), lhs <= rhs


def lambert_w(y: float, rtol: float = 1e-12) -> float:
    """Principal branch of Lambert W for ``y >= 0`` by Newton iteration."""
    if y < 0:
        raise DomainError("only y >= 0 supported")
    if y == 0:
        return 0.0
    w = math.log(y) - math.log(math.log(y)) if y > math.e else y / (1 + y)
    w = max(w, 1e-300)
    for _ in range(100):
        ew = math.exp(w)
        f = w * ew - y
        step = f / (ew * (w + 1))
        w_new = w - step
        if w_new <= 0:
            w_new = w / 2
        if abs(w_new - w) <= rtol * abs(w_new):
            return w_new
        w = w_new
    return w


def optimum_tau(A: float, B: float) -> tuple[float, float, float]:
    """Balance point of ``A / ln(1/tau) + B / tau`` (within a factor 2 of the minimum), its value, and ``4A / ln(A/B)``."""
    if not (B > 0 and A >= math.e * B):
        raise DomainError(f"need A >= e*B > 0, got A={A}, B={B}")
    ratio = A / B
    w = lambert_w(ratio)
    tau = math.exp(-w)
    value = A / w + B / tau
    bound = 4 * A / math.log(ratio)
    return tau, value, bound


def lambert_w_upper(y: float) -> float:
    """``ln y - ln ln y + ln(1 + 1/e)``, valid for ``y >= e``."""
    return math.log(y) - math.log(math.log(y)) + math.log(1 + 1 / math.e)
