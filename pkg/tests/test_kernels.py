"""The numba kernels and the pure-numpy fallbacks must agree bitwise-ish."""

import numpy as np
import pytest

from relwave import FourVector, Grid, decompose, evolve, integrate_trajectory
from relwave import generators as gen
from relwave.kernels import NUMBA_AVAILABLE, numba_enabled


def test_env_flag_controls_backend(monkeypatch):
    monkeypatch.setenv("RELWAVE_DISABLE_NUMBA", "1")
    assert not numba_enabled()
    monkeypatch.delenv("RELWAVE_DISABLE_NUMBA")
    assert numba_enabled() == NUMBA_AVAILABLE
    assert numba_enabled(use_numba=False) is False


@pytest.mark.skipif(not NUMBA_AVAILABLE, reason="numba not importable")
def test_leapfrog_backends_agree():
    grid = Grid.spatial(128, 0.1, -6.4)
    psi0, psidot0 = gen.gaussian_packet_initial(grid, 0.0, 1.5, 0.7, 1.0)
    fast = evolve(psi0, psidot0, steps=120, dt=0.04, m=1.0, use_numba=True)
    slow = evolve(psi0, psidot0, steps=120, dt=0.04, m=1.0, use_numba=False)
    assert np.max(np.abs(fast.values - slow.values)) < 1e-13

    dirich_fast = evolve(psi0, psidot0, steps=60, dt=0.04, m=1.0,
                         boundary="dirichlet", use_numba=True)
    dirich_slow = evolve(psi0, psidot0, steps=60, dt=0.04, m=1.0,
                         boundary="dirichlet", use_numba=False)
    assert np.max(np.abs(dirich_fast.values - dirich_slow.values)) < 1e-13


@pytest.mark.skipif(not NUMBA_AVAILABLE, reason="numba not importable")
def test_trajectory_backends_agree():
    grid = Grid.spacetime_1p1(101, 0.02, 201, 0.05, -5.0)
    mp = decompose(gen.plane_wave_field(grid, 0.5, 1.0))
    seed = FourVector.build(1.6, 0.3)
    fast = integrate_trajectory(seed, mp, m=1.0, tau_span=0.8, dtau=0.004,
                                use_numba=True)
    slow = integrate_trajectory(seed, mp, m=1.0, tau_span=0.8, dtau=0.004,
                                use_numba=False)
    assert np.array_equal(fast.position, slow.position)
    assert np.array_equal(fast.momentum, slow.momentum)
