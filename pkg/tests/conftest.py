import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from ghzrep.f2linalg import AffinePowerCoset, Subspace

settings.register_profile("ci", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ci")


def naive_span(n, gens):
    out = {0}
    for g in gens:
        out |= {x ^ g for x in out}
    return out


@st.composite
def subspaces(draw, max_n=6, min_n=1):
    n = draw(st.integers(min_n, max_n))
    gens = draw(st.lists(st.integers(0, (1 << n) - 1), max_size=n + 1))
    return Subspace.span(n, gens)


@st.composite
def ghz_cosets(draw, max_n=4):
    """``w + V^3`` that meets the GHZ support."""
    V = draw(subspaces(max_n=max_n))
    top = (1 << V.ambient_dim) - 1
    w1 = draw(st.integers(0, top))
    w2 = draw(st.integers(0, top))
    return AffinePowerCoset((w1, w2, w1 ^ w2), V)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = []


@pytest.fixture
def criterion():
    """``criterion(k, ok, detail)`` records the result line for acceptance criterion ``k``."""

    def record(k, ok, detail=""):
        ACCEPTANCE_LINES.append((k, "PASS" if ok else "FAIL", detail))
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k, verdict, detail in sorted(ACCEPTANCE_LINES, key=lambda r: (r[0], r[1] == "PASS")):
        terminalreporter.write_line(f"criterion {k:>2}: {verdict}  {detail}")
