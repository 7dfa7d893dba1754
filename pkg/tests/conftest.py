import math

import numpy as np
import pytest
from hypothesis import HealthCheck, assume, settings
from hypothesis import strategies as st

from subrad_sync import SystemParams, decompose

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow], derandomize=True
)
settings.load_profile("default")

FIG3 = SystemParams(gamma1=1.1, gamma2=0.9, gamma12=0.95, s12=0.6, delta=1.0, omega0=10.0)
FIG6 = SystemParams(gamma1=1.0, gamma2=1.0, gamma12=1.0, s12=0.6, delta=1.0, omega0=10.0)


@pytest.fixture
def fig3():
    return FIG3


@pytest.fixture
def fig6():
    return FIG6


def well_separated(params: SystemParams, gap: float = 1e-3) -> bool:
    """No two eigenvalues of one sector closer than ``gap`` (keeps away from exceptional points)."""
    decomp = decompose(params)
    for sector in "abcde":
        modes = decomp.sector(sector)
        values = [m.eigenvalue for m in modes]
        for i in range(len(values)):
            for j in range(i + 1, len(values)):
                if abs(values[i] - values[j]) < gap:
                    return False
    return True


@st.composite
def system_params(draw, unit_gamma0: bool = False, dephasing: bool = False, omega0=None):
    if unit_gamma0:
        u = draw(st.floats(-0.8, 0.8))
        g1, g2 = 1 + u, 1 - u
    else:
        g1 = draw(st.floats(0.1, 2.0))
        g2 = draw(st.floats(0.1, 2.0))
    r = draw(st.floats(-0.97, 0.97))
    s12 = draw(st.floats(-1.0, 1.0))
    assume(abs(r) > 0.02 or abs(s12) > 0.02)
    kwargs = dict(
        gamma1=g1,
        gamma2=g2,
        gamma12=r * math.sqrt(g1 * g2),
        s12=s12,
        delta=draw(st.floats(-2.0, 2.0)),
        omega0=omega0 if omega0 is not None else draw(st.floats(2.0, 20.0)),
    )
    if dephasing:
        d11 = draw(st.floats(0.0, 0.5))
        d22 = draw(st.floats(0.0, 0.5))
        kwargs.update(dep11=d11, dep22=d22, dep12=draw(st.floats(-1, 1)) * math.sqrt(d11 * d22))
    params = SystemParams(**kwargs)
    assume(well_separated(params))
    return params


def random_params(rng: np.random.Generator, unit_gamma0: bool = True, omega0: float = 10.0,
                  dephasing: bool = False) -> SystemParams:
    """Seeded counterpart of :func:`system_params` for the acceptance suite."""
    while True:
        u = rng.uniform(-0.8, 0.8)
        g1, g2 = (1 + u, 1 - u) if unit_gamma0 else rng.uniform(0.1, 2.0, size=2)
        kwargs = dict(gamma1=g1, gamma2=g2, gamma12=rng.uniform(-0.97, 0.97) * math.sqrt(g1 * g2),
                      s12=rng.uniform(-1, 1), delta=rng.uniform(-2, 2), omega0=omega0)
        if dephasing:
            d11, d22 = rng.uniform(0, 0.5, size=2)
            kwargs.update(dep11=d11, dep22=d22, dep12=rng.uniform(-1, 1) * math.sqrt(d11 * d22))
        params = SystemParams(**kwargs)
        if well_separated(params):
            return params


def random_pure_state(rng: np.random.Generator) -> np.ndarray:
    psi = rng.normal(size=4) + 1j * rng.normal(size=4)
    psi /= np.linalg.norm(psi)
    return np.outer(psi, psi.conj())
