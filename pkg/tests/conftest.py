import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from harmonic_otto.state import GaussianParams, StateVector, expectations_from_params

settings.register_profile(
    "default", max_examples=60, deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

omegas = st.floats(0.05, 5.0)


@st.composite
def product_params(draw, omega=None):
    """(params, omega) with normalizable product form, kept off the boundary."""
    w = draw(omegas) if omega is None else omega
    bw = draw(st.floats(0.02, 6.0))
    frac = draw(st.floats(0.0, 0.9))
    phase = draw(st.floats(0.0, 2 * np.pi))
    mag = frac * 0.5 * np.expm1(bw)
    return GaussianParams(bw / w, mag * np.exp(1j * phase)), w


@st.composite
def domain_states(draw):
    """Physical states that have a product-form representation."""
    p, w = draw(product_params())
    return expectations_from_params(p, w)


@st.composite
def physical_states(draw):
    """Any physical Gaussian state: X/omega = nu >= 1/2, arbitrary squeezing."""
    w = draw(omegas)
    nu = 0.5 + draw(st.floats(0.0, 20.0))
    r = draw(st.floats(0.0, 3.0))
    th = draw(st.floats(0.0, 2 * np.pi))
    X = nu * w
    H = X * np.cosh(r)
    rad = X * np.sinh(r)
    return StateVector(H, rad * np.cos(th), 2.0 / w * rad * np.sin(th), w)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance verdicts, echoed in the terminal summary so they show without -s
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
