import numpy as np
import pytest

from relwave import (BranchMismatchWarning, ComplexField, DegenerateFieldError,
                     DomainError, FourVector, Grid, MadelungPair,
                     PotentialConfig, continuity_residual, decompose,
                     expansion_check, four_current, hamilton_jacobi_residual,
                     integrate_trajectory, mean_four_momentum_amplitude,
                     probability_density, quantum_potential, recompose,
                     stationary_field, stationary_solve, total_probability)
from relwave import generators as gen
from relwave.madelung import (amplitude_density_provider, amplitude_norm,
                              detect_branch, normalize_to_unit_probability,
                              phase_gradient)

M = 1.0


def _plane_wave(k=0.5, nt=64, dt=0.05, nx=128):
    grid = Grid.spacetime_1p1(nt, dt, nx, 4.0 * np.pi / nx, -2.0 * np.pi)
    return gen.plane_wave_field(grid, k, M)


# -- decomposition ------------------------------------------------------------


def test_decompose_plane_wave_phase():
    grid = Grid.spatial(128, 0.1, -6.4)
    k = 0.7
    psi = ComplexField(grid, np.exp(1j * k * grid.coord("x")))
    mp = decompose(psi)
    assert np.max(np.abs(mp.amplitude - 1.0)) < 1e-14
    x = grid.coord("x")
    # unwrapped up to one global 2 pi n offset
    offset = mp.action - k * x
    assert np.max(np.abs(offset - offset[0])) < 1e-12
    assert abs(offset[0] % (2 * np.pi)) < 1e-9 or abs(offset[0] % (2 * np.pi) - 2 * np.pi) < 1e-9


def test_decompose_real_gaussian():
    grid = Grid.spatial(64, 0.1, -3.2)
    values = np.exp(-grid.coord("x") ** 2)
    mp = decompose(ComplexField(grid, values.astype(complex)))
    assert np.max(np.abs(mp.amplitude - values)) == 0.0
    assert np.max(np.abs(mp.action)) == 0.0


def test_decompose_constant_phase():
    grid = Grid.spatial(16, 0.1, 0.0)
    mp = decompose(ComplexField(grid, np.full(16, (1 + 1j) / np.sqrt(2))))
    assert np.max(np.abs(mp.amplitude - 1.0)) < 1e-14
    assert np.max(np.abs(mp.action - np.pi / 4)) < 1e-14


def test_decompose_degenerate_field():
    grid = Grid.spatial(16, 0.1, 0.0)
    with pytest.raises(DegenerateFieldError):
        decompose(ComplexField(grid, np.zeros(16, dtype=complex)))


def test_decompose_marks_and_interpolates_nodes():
    grid = Grid.spatial(64, 0.1, -3.2)
    x = grid.coord("x")
    psi = (x + 0.05j * 1e-12) * np.exp(0.3j)  # near-node at x = 0
    mp = decompose(ComplexField(grid, psi), eps_node=1e-6)
    assert mp.node_mask.any()
    jumps = np.abs(np.diff(mp.action))[~mp.node_mask[:-1]]
    assert np.max(jumps) < np.pi


def test_roundtrip_identity():
    grid = Grid.spatial(64, 0.1, -3.2)
    x = grid.coord("x")
    cases = (_plane_wave(),
             ComplexField(grid, np.exp(-x**2).astype(complex)),
             ComplexField(grid, np.full(64, (1 + 1j) / np.sqrt(2))))
    for field in cases:
        mp = decompose(field)
        back = recompose(mp)
        ok = ~mp.node_mask
        assert np.max(np.abs(back.values[ok] - field.values[ok])) <= 1e-12


def test_unwrap_rest_state_long_time():
    grid = Grid.spacetime_1p1(256, 0.05, 16, 0.1, 0.0)
    t = grid.coord("t")[:, None]
    psi = ComplexField(grid, np.broadcast_to(np.exp(-1j * M * t), grid.shape).copy())
    mp = decompose(psi)
    expect = -M * grid.coord("t")[:, None]
    offset = mp.action - expect
    assert np.max(np.abs(offset - offset[0, 0])) < 1e-10


# -- quantum potential ---------------------------------------------------------


def test_quantum_potential_constant_amplitude():
    grid = Grid.spatial(32, 0.1, -1.6)
    mp = MadelungPair.from_arrays(grid, 1.0, 0.7 * grid.coord("x"))
    assert np.max(np.abs(quantum_potential(mp, m=M))) == 0.0


def test_quantum_potential_gaussian_closed_form():
    sigma = 1.3
    grid = Grid.spatial(512, 0.02, -5.12)
    x = grid.coord("x")
    mp = MadelungPair.from_arrays(grid, np.exp(-x**2 / (4 * sigma**2)), 0.0)
    # box R = -d_x^2 R on a static grid: V_Q = (x^2/4s^4 - 1/2s^2)/(2m)
    expect = (x**2 / (4 * sigma**4) - 1.0 / (2 * sigma**2)) / (2 * M)
    got = quantum_potential(mp, m=M)
    assert np.max(np.abs(got - expect)[2:-2]) < 5e-4


def test_quantum_potential_cosine_plateau():
    k = 0.9
    grid = Grid.spatial(256, 0.01, -1.2)
    x = grid.coord("x")
    mp = MadelungPair.from_arrays(grid, np.cos(k * x), 0.0)
    got = quantum_potential(mp, m=M)
    assert np.nanmax(np.abs(got + k**2 / (2 * M))[2:-2]) < 1e-4


def test_quantum_potential_masks_nodes():
    grid = Grid.spatial(64, 0.1, -3.2)
    x = grid.coord("x")
    psi = ComplexField(grid, (x.astype(complex)) + 1e-13)
    mp = decompose(psi, eps_node=1e-4)
    vq = quantum_potential(mp, m=M)
    assert np.isnan(vq[mp.node_mask]).all()
    assert np.isfinite(vq[~mp.node_mask]).all()


# -- residuals ------------------------------------------------------------------


def test_continuity_plane_wave_exact():
    # constant flux: zero up to roundoff amplified by the 1/h stencils
    mp = decompose(_plane_wave())
    assert np.max(np.abs(continuity_residual(mp, m=M))) < 1e-11


def test_continuity_ground_state_exact():
    length, nx = 20.0, 200
    grid = Grid.spatial(nx, length / nx, -10.0)
    state = stationary_solve(PotentialConfig.free(grid), (0.9, 1.2), m=M,
                             boundary="periodic")[0]
    hist = stationary_field(state, 32, 0.05)
    mp = decompose(hist)
    assert np.max(np.abs(continuity_residual(mp, m=M))) < 1e-10


def test_hamilton_jacobi_plane_wave_and_rest():
    k = 0.5
    energy = np.hypot(M, k)
    grid = Grid.spacetime_1p1(64, 0.05, 128, 0.1, -6.4)
    mesh = grid.mesh()
    plane = MadelungPair.from_arrays(grid, 1.0, k * mesh["x"] - energy * mesh["t"])
    assert np.max(np.abs(hamilton_jacobi_residual(plane, m=M)[2:-2, 2:-2])) < 1e-10
    rest = MadelungPair.from_arrays(grid, 1.0, -M * mesh["t"])
    assert np.max(np.abs(hamilton_jacobi_residual(rest, m=M)[2:-2, 2:-2])) < 1e-12


# -- four-current and probability density ---------------------------------------


def test_four_current_plane_wave():
    k = 0.5
    energy = np.hypot(M, k)
    current = four_current(_plane_wave(k), m=M)
    assert np.max(np.abs(current.components[2:-2, 2:-2, 0] - energy / M)) < 1e-3
    assert np.max(np.abs(current.components[2:-2, 2:-2, 1] - k / M)) < 1e-3
    assert np.max(np.abs(current.divergence[2:-2, 2:-2])) < 1e-12


def test_current_equivalence_and_divergence_order():
    # j^a = -R^2 d^a S / m to discretization error, and d_a j^a decays at
    # second order for solver-produced fields
    from relwave import evolve
    equivs, divs, hs = [], [], []
    for nx in (128, 256):
        dx = 40.0 / nx
        dt = 0.4 * dx
        grid = Grid.spatial(nx, dx, -20.0)
        psi0, psidot0 = gen.gaussian_packet_initial(grid, -5.0, 2.0, 0.6, M)
        hist = evolve(psi0, psidot0, steps=int(round(4.0 / dt)), dt=dt, m=M)
        mp = decompose(hist)
        current = four_current(hist, m=M)
        flux = phase_gradient(mp) * (mp.amplitude**2 / M)[..., None]
        core = np.abs(hist.values) > 0.05 * np.abs(hist.values).max()
        equivs.append(max(
            np.max(np.abs((current.components[..., s] + flux[..., s])[core]))
            for s in (0, 1)))
        divs.append(np.max(np.abs(current.divergence[2:-2, 2:-2][core[2:-2, 2:-2]])))
        hs.append(dx)
    assert equivs[0] <= 2.0 * hs[0] ** 2
    assert 3.0 <= equivs[0] / equivs[1] <= 5.5
    assert 3.0 <= divs[0] / divs[1] <= 5.5


def test_four_current_real_field_and_antisymmetry():
    grid = Grid.spacetime_1p1(16, 0.1, 32, 0.1, -1.6)
    mesh = grid.mesh()
    real_field = ComplexField(grid, np.exp(-mesh["x"]**2).astype(complex))
    assert np.max(np.abs(four_current(real_field, m=M).components)) == 0.0
    wave = _plane_wave()
    j = four_current(wave, m=M).components
    j_conj = four_current(wave.conjugate(), m=M).components
    assert np.array_equal(j_conj, -j)


def test_probability_density_positive_wave():
    k = 0.5
    energy = np.hypot(M, k)
    wave = _plane_wave(k)
    p_dens = probability_density(wave, m=M, branch="particle")
    expect = energy / M**2  # (E / m c^2) |psi|^2 in natural units
    assert np.max(np.abs(p_dens[2:-2, 2:-2] - expect)) < 1e-3
    assert detect_branch(wave, M) == 1


def test_probability_density_antiparticle_branch():
    grid = Grid.spacetime_1p1(9, 0.001, 256, 4 * np.pi / 256, -2 * np.pi)
    wave = gen.plane_wave_field(grid, 0.5, M, branch=-1)
    p_dens = probability_density(wave, m=M, branch="antiparticle")
    assert p_dens.min() > 0.0
    normed = normalize_to_unit_probability(wave, m=M, branch="auto", periodic=True)
    totals = total_probability(normed, m=M, branch="auto", periodic=True)
    assert np.max(np.abs(totals[1:-1] - 1.0)) <= 1e-6


def test_probability_density_matched_branch_floor():
    # single-branch states stay above -1e-10 pointwise
    wave = _plane_wave()
    assert probability_density(wave, m=M).min() >= -1e-10


def test_probability_density_mixed_branch_warns():
    # rest-frame positive branch against a moving negative branch: the
    # interference makes j^0 genuinely sign-indefinite
    grid = Grid.spacetime_1p1(64, 0.05, 128, 4 * np.pi / 128, -2 * np.pi)
    mesh = grid.mesh()
    wavenumber = np.sqrt(3.0)  # negative-branch energy 2 m
    mixed = ComplexField(grid, np.exp(-1j * M * mesh["t"])
                         + 0.7 * np.exp(1j * (wavenumber * mesh["x"]
                                              + 2.0 * M * mesh["t"])))
    with pytest.warns(BranchMismatchWarning):
        probability_density(mixed, m=M)


def test_nonrelativistic_probability_limit():
    grid = Grid.spatial(2000, 0.2, -200.0)
    psi0, psidot0 = gen.gaussian_packet_initial(grid, 0.0, 30.0, 0.01, M)
    from relwave import evolve
    hist = evolve(psi0, psidot0, steps=40, dt=0.02, m=M)
    p_dens = probability_density(hist, m=M)
    mid = 20
    dev = np.max(np.abs(p_dens[mid] - np.abs(hist.values[mid]) ** 2))
    assert dev / np.max(np.abs(hist.values[mid]) ** 2) <= 1e-3


# -- expansion check -------------------------------------------------------------


def _expansion_pair():
    grid = Grid.spacetime_1p1(33, 0.01, 1601, 0.01, -8.0)
    mesh = grid.mesh()
    return MadelungPair.from_arrays(grid, np.exp(-mesh["x"]**2 / 18.0),
                                    0.4 * np.sin(mesh["x"]))


def test_expansion_zero_separation():
    assert expansion_check(_expansion_pair(), (16, 800), FourVector.zero()) == 0.0


def test_expansion_plane_wave_near_exact():
    grid = Grid.spacetime_1p1(16, 0.1, 64, 0.1, -3.2)
    mesh = grid.mesh()
    mp = MadelungPair.from_arrays(grid, 1.0, 0.5 * mesh["x"])
    err = expansion_check(mp, (8, 32), FourVector.build(0.0, 0.8))
    assert err < 1e-12


def test_expansion_cubic_order():
    mp = _expansion_pair()
    seps = [2 * s * 0.01 for s in (8, 12, 16, 24, 32, 48)]
    errs = [expansion_check(mp, (16, 800), FourVector.build(0.0, s)) for s in seps]
    slope = np.polyfit(np.log(seps), np.log(errs), 1)[0]
    assert 2.7 <= slope <= 3.3


def test_expansion_guards():
    mp = _expansion_pair()
    with pytest.raises(DomainError):
        expansion_check(mp, (16, 800), FourVector.build(0.1, 0.1))
    with pytest.raises(DomainError):
        expansion_check(mp, (16, 800), FourVector.build(0.0, 0.0123))
    with pytest.raises(DomainError):
        expansion_check(mp, (16, 2), FourVector.build(0.0, 0.2))


# -- mean four-momentum -----------------------------------------------------------


def test_mean_momentum_plane_wave_and_identity():
    k = 0.5
    energy = np.hypot(M, k)
    wave = _plane_wave(k)
    pbar = mean_four_momentum_amplitude(wave)
    norm = amplitude_norm(wave)
    assert pbar[0] / norm == pytest.approx(energy, rel=1e-3)
    assert pbar[1] / norm == pytest.approx(k, rel=1e-3)
    current = four_current(wave, m=M)
    mcj = np.array([M * wave.grid.integrate(current.components[..., s])
                    for s in range(4)])
    assert np.max(np.abs(pbar.components - mcj)) <= 1e-10


def test_mean_momentum_real_field_spatially_zero():
    grid = Grid.spacetime_1p1(16, 0.1, 64, 0.1, -3.2)
    mesh = grid.mesh()
    psi = ComplexField(grid, np.exp(-mesh["x"]**2).astype(complex))
    pbar = mean_four_momentum_amplitude(psi)
    assert pbar[1] == 0.0


def test_mean_momentum_standing_wave_parity():
    grid = Grid.spacetime_1p1(16, 0.1, 128, 4 * np.pi / 128, -2 * np.pi)
    k = 0.5
    energy = np.hypot(M, k)
    mesh = grid.mesh()
    standing = ComplexField(grid, (np.exp(1j * k * mesh["x"])
                                   + np.exp(-1j * k * mesh["x"]))
                            * np.exp(-1j * energy * mesh["t"]))
    pbar = mean_four_momentum_amplitude(standing)
    assert abs(pbar[1]) < 1e-10


def test_amplitude_provider_matches_carrier_extraction():
    from relwave import PhaseSpaceDistribution, mean_momentum_from_density
    k = 0.5
    energy = np.hypot(M, k)
    dt, nx = 0.05, 128
    dx = 4 * np.pi / nx
    wave = _plane_wave(k, dt=dt, nx=nx)
    pm = mean_momentum_from_density(amplitude_density_provider(wave),
                                    slots=(0, 1), h_delta={0: 4 * dt, 1: 4 * dx})
    carrier = PhaseSpaceDistribution.gaussian([0, 0], [energy, k], [2, 2],
                                              [0.05, 0.05])
    pf = mean_momentum_from_density(carrier)
    assert np.max(np.abs(pm.components - pf.components)) < 1e-4


# -- trajectories ------------------------------------------------------------------


def test_trajectory_plane_wave_straight_line():
    k = 0.5
    energy = np.hypot(M, k)
    grid = Grid.spacetime_1p1(101, 0.02, 201, 0.05, -5.0)
    mp = decompose(gen.plane_wave_field(grid, k, M))
    path = integrate_trajectory(FourVector.build(1.6, 0.0), mp, m=M,
                                tau_span=0.8, dtau=0.004)
    assert np.max(np.abs(path.position[:, 0] - (1.6 - energy * path.tau))) <= 1e-9
    assert np.max(np.abs(path.position[:, 1] + k * path.tau)) <= 1e-9
    assert not path.exited_grid and not path.crossed_node


def test_trajectory_rest_state_static_position():
    grid = Grid.spacetime_1p1(101, 0.02, 64, 0.1, -3.2)
    t = grid.coord("t")[:, None]
    psi = ComplexField(grid, np.broadcast_to(np.exp(-1j * M * t), grid.shape).copy())
    mp = decompose(psi)
    path = integrate_trajectory(FourVector.build(1.5, 0.4), mp, m=M,
                                tau_span=1.0, dtau=0.005)
    assert np.max(np.abs(path.position[:, 1] - 0.4)) < 1e-10
    assert np.max(np.abs(path.momentum[:, 0] + M)) < 1e-9


def test_trajectory_bohmian_consistency_stationary_state():
    length, nx = 20.0, 400
    dx = length / (nx - 1)
    grid = Grid.spatial(nx, dx, 0.0)
    state = stationary_solve(PotentialConfig.free(grid), (0.9, 1.2), m=M,
                             boundary="dirichlet")[0]
    hist = stationary_field(state, 64, 0.02)
    mp = decompose(hist)
    dtau = 0.002
    path = integrate_trajectory(FourVector.build(0.64, 7.0), mp, m=M,
                                tau_span=0.5, dtau=dtau)
    grad = phase_gradient(mp)
    from relwave.madelung import _interp_linear_2d
    worst = 0.0
    for i in range(0, path.tau.size, 10):
        t, x = path.position[i, 0], path.position[i, 1]
        worst = max(worst,
                    abs(path.momentum[i, 0] - _interp_linear_2d(grad[..., 0], mp.grid, t, x)),
                    abs(path.momentum[i, 1] - _interp_linear_2d(grad[..., 1], mp.grid, t, x)))
    assert worst <= dtau**4 + dx**2


def test_trajectory_exit_and_node_flags():
    grid = Grid.spacetime_1p1(101, 0.02, 64, 0.1, -3.2)
    t = grid.coord("t")[:, None]
    psi = ComplexField(grid, np.broadcast_to(np.exp(-1j * M * t), grid.shape).copy())
    mp = decompose(psi)
    path = integrate_trajectory(FourVector.build(1.0, 0.0), mp, m=M,
                                tau_span=5.0, dtau=0.01)
    assert path.exited_grid
    assert path.tau.size < 501

    # hand-built pair with an amplitude dip; the external potential cancels
    # the statistical-potential wall (trajectories otherwise reflect off it
    # and avoid the node), so the path crosses the flagged region
    mesh = mp.grid.mesh()
    dip = 1.0 - 0.95 * np.exp(-((mesh["t"] - 1.0) / 0.1) ** 2) * np.exp(
        -(mesh["x"] / 0.2) ** 2)
    pair = MadelungPair(mp.grid, dip, -M * mesh["t"],
                        np.zeros(mp.grid.shape, dtype=bool), 0.5)
    cancel = -quantum_potential(pair, m=M)
    path2 = integrate_trajectory(FourVector.build(1.9, 0.0), pair, v=cancel,
                                 m=M, tau_span=1.2, dtau=0.005)
    assert path2.crossed_node

    with pytest.raises(DomainError):
        integrate_trajectory(FourVector.build(1.0, 0.0), pair, m=M,
                             tau_span=0.1, dtau=0.01)
