import numpy as np
import pytest

from relwave import (AccuracyError, DomainError, FourVector, Grid,
                     InconsistentDensityError, IntegrationError,
                     PhaseSpaceDistribution, UnsupportedCarrierError,
                     direct_momentum_moment, gauge_factor, liouville_residual,
                     mean_momentum_from_density, wigner_moyal_transform)
from relwave.phasespace import DensitySample, EMPotential, GaussianComponent

ZERO = FourVector.zero()


def _free_streaming_carrier(n):
    grid = Grid(("t", "x", "p0", "p1"), (n, n, n, n),
                (4.0 / (n - 1), 6.0 / (n - 1), 0.8 / (n - 1), 1.2 / (n - 1)),
                (0.0, -3.0, 0.9, -0.6))
    mesh = grid.mesh()
    xi = mesh["x"] - mesh["p1"] * mesh["t"] / mesh["p0"]
    values = (np.exp(-xi**2 / 2.0)
              * np.exp(-((mesh["p0"] - 1.3) / 0.25) ** 2 / 2.0)
              * np.exp(-(mesh["p1"] / 0.35) ** 2 / 2.0))
    return PhaseSpaceDistribution.from_samples(grid, values)


def test_liouville_momentum_only_exact_zero():
    grid = Grid(("x", "p1"), (32, 32), (0.2, 0.1), (-3.2, -1.6))
    mesh = grid.mesh()
    F = PhaseSpaceDistribution.from_samples(grid, np.exp(-mesh["p1"] ** 2))
    res = liouville_residual(F, m=1.0)
    assert np.max(np.abs(res)) == 0.0


def test_liouville_free_streaming_second_order():
    maxima = []
    for n in (17, 33):
        res = liouville_residual(_free_streaming_carrier(n), m=1.0)
        maxima.append(np.max(np.abs(res[2:-2, 2:-2, 2:-2, 2:-2])))
    ratio = maxima[0] / maxima[1]
    assert 3.0 <= ratio <= 5.0


def test_liouville_linear_force_invariant():
    k = 0.7
    maxima = []
    for n in (17, 33):
        grid = Grid(("t", "p0", "p1"), (n, n, n),
                    (2.0 / (n - 1), 0.8 / (n - 1), 3.0 / (n - 1)), (0.0, 0.9, -1.5))
        mesh = grid.mesh()
        values = (np.exp(-((mesh["p1"] + k * mesh["t"] / mesh["p0"]) / 0.3) ** 2 / 2.0)
                  * np.exp(-((mesh["p0"] - 1.3) / 0.25) ** 2 / 2.0))
        F = PhaseSpaceDistribution.from_samples(grid, values)
        res = liouville_residual(F, force=(0.0, -k, 0.0, 0.0), m=1.0)
        maxima.append(np.max(np.abs(res[2:-2, 2:-2, 2:-2])))
    ratio = maxima[0] / maxima[1]
    assert 3.0 <= ratio <= 5.0


def test_liouville_rejects_gaussian_carrier():
    F = PhaseSpaceDistribution.gaussian([0, 0], [0, 0], [1, 1], [1, 1])
    with pytest.raises(UnsupportedCarrierError):
        liouville_residual(F, force=(0.0, lambda **c: c["x"], 0.0, 0.0))


def test_transform_zero_separation_is_marginal():
    F = PhaseSpaceDistribution.gaussian(mean_x=[0.0, 0.5], mean_p=[0.2, -0.1],
                                        sigma_x=[1.0, 0.8], sigma_p=[0.5, 0.7])
    x = FourVector.build(0.3, 0.2)
    value = wigner_moyal_transform(F, x, ZERO)
    marginal = (np.exp(-0.5 * (0.3 / 1.0) ** 2) / (1.0 * np.sqrt(2 * np.pi))
                * np.exp(-0.5 * ((0.2 - 0.5) / 0.8) ** 2) / (0.8 * np.sqrt(2 * np.pi)))
    assert value.imag == 0.0
    assert value.real == pytest.approx(marginal, rel=1e-12)


def test_transform_gaussian_damping_oracle():
    # zero mean momentum: marginal(x) * exp(-sigma_p^2 dx^2 / 2)
    sigma_p = 0.6
    F = PhaseSpaceDistribution.gaussian([0, 0], [0, 0], [0, 1.0], [0, sigma_p],
                                        active=(1,))
    sep = 0.35
    value = wigner_moyal_transform(F, ZERO, FourVector.build(0.0, sep))
    marginal = 1.0 / np.sqrt(2 * np.pi)
    assert value == pytest.approx(marginal * np.exp(-0.5 * sigma_p**2 * sep**2), abs=1e-14)


def test_transform_mean_momentum_phase_oracle():
    pbar, sigma_p, sep = 0.8, 0.6, 0.35
    base = PhaseSpaceDistribution.gaussian([0, 0], [0, 0.0], [0, 1.0], [0, sigma_p],
                                           active=(1,))
    shifted = PhaseSpaceDistribution.gaussian([0, 0], [0, pbar], [0, 1.0], [0, sigma_p],
                                              active=(1,))
    delta = FourVector.build(0.0, sep)
    v0 = wigner_moyal_transform(base, ZERO, delta)
    v1 = wigner_moyal_transform(shifted, ZERO, delta)
    # minkowski contraction: pbar . delta = -pbar * sep for spatial components
    assert v1 == pytest.approx(v0 * np.exp(-1j * pbar * sep), abs=1e-14)


def test_transform_positivity_random_mixtures(rng):
    for _ in range(200):
        comps = [GaussianComponent(float(rng.uniform(0.2, 2.0)),
                                   rng.uniform(-2, 2, 4), rng.uniform(-1.5, 1.5, 4),
                                   rng.uniform(0.4, 2.0, 4), rng.uniform(0.2, 1.5, 4),
                                   (0, 1))
                 for _ in range(int(rng.integers(1, 4)))]
        mix = PhaseSpaceDistribution.mixture(comps)
        x = FourVector.build(float(rng.uniform(-1, 1)), float(rng.uniform(-1, 1)))
        value = wigner_moyal_transform(mix, x, ZERO)
        assert value.real >= -1e-12
        assert abs(value.imag) <= 1e-12


def test_transform_hermiticity(rng):
    F = PhaseSpaceDistribution.gaussian([0.1, -0.2], [0.9, 0.4], [1.1, 0.8],
                                        [0.5, 0.7])
    x = FourVector.build(0.2, -0.1)
    for _ in range(10):
        d = FourVector(np.concatenate([rng.uniform(-0.5, 0.5, 2), np.zeros(2)]))
        minus = FourVector(-d.components)
        a = wigner_moyal_transform(F, x, d)
        b = wigner_moyal_transform(F, x, minus)
        assert a == pytest.approx(np.conj(b), abs=1e-12)

    grid = Grid(("x", "p1"), (33, 65), (0.2, 0.1), (-3.2, -3.2))
    mesh = grid.mesh()
    sampled = PhaseSpaceDistribution.from_samples(
        grid, np.exp(-mesh["x"] ** 2) * np.exp(-((mesh["p1"] - 0.3) / 0.5) ** 2))
    d = FourVector.build(0.0, 0.3)
    a = wigner_moyal_transform(sampled, ZERO, d)
    b = wigner_moyal_transform(sampled, ZERO, FourVector(-d.components))
    assert a == pytest.approx(np.conj(b), abs=1e-12)


def test_transform_kernel_convention_switch():
    # the printed variant carries scale 1/2 instead of 1/hbar
    F = PhaseSpaceDistribution.gaussian([0, 0], [0, 0.7], [0, 1.0], [0, 0.5],
                                        active=(1,))
    d = FourVector.build(0.0, 0.4)
    half = wigner_moyal_transform(F, ZERO, d, kernel="printed")
    action_at_half = wigner_moyal_transform(F, ZERO, FourVector.build(0.0, 0.2))
    assert half == pytest.approx(action_at_half, abs=1e-14)
    with pytest.raises(DomainError):
        wigner_moyal_transform(F, ZERO, d, kernel="bogus")


def test_transform_four_axis_carrier_marginal():
    F = _free_streaming_carrier(17)
    grid = F.grid
    it, ix = 8, 8
    x = FourVector.build(float(grid.coord("t")[it]), float(grid.coord("x")[ix]))
    value = wigner_moyal_transform(F, x, ZERO, quad_tol=None)
    # direct double quadrature over both momentum axes at that base point
    slice_vals = F.values[it, ix]
    expect = np.trapezoid(np.trapezoid(slice_vals, dx=grid.spacing("p1"), axis=1),
                          dx=grid.spacing("p0"))
    assert value.imag == 0.0
    assert value.real == pytest.approx(float(expect), rel=1e-12)


def test_transform_warns_on_large_separation():
    F = PhaseSpaceDistribution.gaussian([0, 0], [0, 0], [0, 1.0], [0, 2.0],
                                        active=(1,))
    with pytest.warns(UserWarning):
        wigner_moyal_transform(F, ZERO, FourVector.build(0.0, 3.0))


def test_transform_non_normalizable_and_accuracy_errors():
    grid = Grid(("x", "p1"), (16, 16), (0.2, 0.2), (-1.6, -1.6))
    zeros = PhaseSpaceDistribution.from_samples(grid, np.zeros(grid.shape))
    with pytest.raises(IntegrationError):
        wigner_moyal_transform(zeros, ZERO, ZERO)
    # a too-coarse momentum grid fails a strict quadrature tolerance
    coarse = Grid(("x", "p1"), (9, 9), (0.25, 1.5), (-1.0, -6.0))
    mesh = coarse.mesh()
    rough = PhaseSpaceDistribution.from_samples(
        coarse, np.exp(-mesh["x"] ** 2) * np.exp(-mesh["p1"] ** 2 / 2.0))
    with pytest.raises(AccuracyError):
        wigner_moyal_transform(rough, FourVector.build(0.0, 0.0),
                               FourVector.build(0.0, 0.5), quad_tol=1e-12)


def test_gauge_factor_unit_modulus():
    grid = Grid.spacetime_1p1(16, 0.2, 32, 0.2, -3.2)
    em = EMPotential.from_callables(grid, phi=lambda t, x: 0.3 * x,
                                    a1=lambda t, x: 0.1 * t + 0.05 * x)
    x = FourVector.build(0.8, 0.4)
    d = FourVector.build(0.2, 0.3)
    factor = gauge_factor(x, d, em, charge=0.7)
    assert abs(abs(factor) - 1.0) <= 1e-12
    assert factor != pytest.approx(1.0 + 0.0j)  # the phase actually acts
    assert gauge_factor(x, d, em, charge=0.0) == 1.0 + 0.0j


def test_gauge_linear_potential_closed_form():
    # static phi = c x, A = 0: I(y) = integral_0^1 c (s y1) y0 ds = c y0 y1 / 2
    grid = Grid.spatial(64, 0.1, -3.2)
    c = 0.25
    em = EMPotential.from_callables(grid, phi=lambda x: c * x)
    charge = 0.9
    x = FourVector.build(0.6, 0.8)
    d = FourVector.build(0.2, 0.4)
    yp = x.plus(d.scaled(0.5))
    ym = x.plus(d.scaled(-0.5))
    expected_phase = charge * c * 0.5 * (yp[0] * yp[1] + ym[0] * ym[1])
    assert gauge_factor(x, d, em, charge) == pytest.approx(np.exp(1j * expected_phase),
                                                           abs=1e-12)


def test_mean_momentum_zero_mean_carrier():
    F = PhaseSpaceDistribution.gaussian([0, 0], [0.9, 0.0], [1, 1], [0.4, 0.5])
    p = mean_momentum_from_density(F)
    assert p[0] == pytest.approx(0.9, rel=1e-6)
    assert abs(p[1]) <= 1e-8


def test_mean_momentum_matches_direct_moment():
    F = PhaseSpaceDistribution.gaussian([0.0, 0.3], [1.2, 0.3], [1.0, 1.0],
                                        [0.5, 0.4])
    p = mean_momentum_from_density(F)
    for slot in (0, 1):
        want = direct_momentum_moment(F, slot)
        assert p[slot] == pytest.approx(want, rel=1e-6)


def test_mean_momentum_narrow_carrier_is_mean():
    F = PhaseSpaceDistribution.gaussian([0, 0], [1.1, -0.6], [1, 1], [0.01, 0.01])
    p = mean_momentum_from_density(F)
    assert p[0] == pytest.approx(1.1, rel=1e-7)
    assert p[1] == pytest.approx(-0.6, rel=1e-7)


def test_mean_momentum_sampled_carrier():
    grid = Grid(("x", "p0", "p1"), (17, 49, 49), (0.25, 0.125, 0.125),
                (-2.0, 1.3 - 3.0, 0.3 - 3.0))
    F = PhaseSpaceDistribution.gaussian([0, 0], [1.3, 0.3], [0.6, 0.6], [0.4, 0.4]
                                        ).sample_on(grid)
    p = mean_momentum_from_density(F)
    for slot, want in ((0, direct_momentum_moment(F, slot=0)),
                       (1, direct_momentum_moment(F, slot=1))):
        assert p[slot] == pytest.approx(want, rel=1e-5)


def test_mean_momentum_inconsistent_density_raises():
    def bad_provider(delta):
        return complex(np.exp(delta[1]))  # real asymmetric: imaginary "momentum"

    with pytest.raises(InconsistentDensityError):
        mean_momentum_from_density(bad_provider, slots=(1,), h_delta=0.01)


def test_density_sample_zero_separation_must_be_real():
    with pytest.raises(InconsistentDensityError):
        DensitySample(ZERO, ZERO, 1.0 + 0.5j)
    DensitySample(ZERO, ZERO, 2.0 + 0.0j)
    DensitySample(ZERO, FourVector.build(0.0, 0.1), 1.0 + 0.5j)
