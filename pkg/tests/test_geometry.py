import numpy as np
import pytest

from relwave import (DomainError, FourVector, Grid, MetricField,
                     SingularMetricError, christoffel_from_metric,
                     dalembertian, minkowski_dot)
from relwave.geometry import second_derivative


def test_grid_invariants():
    grid = Grid.spacetime_1p1(16, 0.1, 32, 0.25, -4.0)
    assert grid.extents == (1.5, 7.75)
    with pytest.raises(DomainError):
        Grid.spatial(4, 0.1, 0.0)  # too few points
    with pytest.raises(DomainError):
        Grid.spatial(16, -0.1, 0.0)  # bad spacing
    with pytest.raises(DomainError):
        Grid(("t", "t"), (8, 8), (0.1, 0.1), (0.0, 0.0))


def test_minkowski_dot_signature(flat_1p1):
    _, g = flat_1p1
    e0 = FourVector.build(1.0)
    e1 = FourVector.build(0.0, 1.0)
    assert minkowski_dot(e0, e0, g, (0, 0)) == 1.0
    assert minkowski_dot(e1, e1, g, (0, 0)) == -1.0


def test_minkowski_dot_mass_shell(flat_1p1):
    # E^2 - p^2 = m^2 for m = 1, p = 0.5
    _, g = flat_1p1
    p = FourVector.build(np.hypot(1.0, 0.5), 0.5)
    assert minkowski_dot(p, p, g, (3, 7)) == pytest.approx(1.0, abs=1e-14)


def test_minkowski_dot_outside_grid(flat_1p1):
    _, g = flat_1p1
    v = FourVector.build(1.0)
    with pytest.raises(DomainError):
        minkowski_dot(v, v, g, (100, 0))


def test_index_round_trip(flat_1p1, rng):
    grid, flat = flat_1p1
    diag = np.empty(grid.shape + (4,))
    diag[..., 0] = 1.0 + 0.2 * rng.random(grid.shape)
    diag[..., 1:] = -(1.0 + 0.2 * rng.random(grid.shape + (3,)))
    curved = MetricField(grid, diag)
    for g, tol in ((flat, 1e-14), (curved, 1e-12)):
        for _ in range(20):
            v = FourVector(rng.normal(size=4))
            pt = (int(rng.integers(grid.counts[0])), int(rng.integers(grid.counts[1])))
            back = g.raise_components(v.lower(g, pt), pt)
            assert np.max(np.abs(back - v.components)) <= tol


def test_dalembertian_polynomial_exactness(flat_1p1):
    grid, g = flat_1p1
    mesh = grid.mesh()
    assert dalembertian(mesh["t"] ** 2, g)[5, 10] == pytest.approx(2.0, abs=1e-10)
    assert dalembertian(mesh["x"] ** 2, g)[5, 10] == pytest.approx(-2.0, abs=1e-10)


def test_dalembertian_sine_closed_form():
    # static f = sin(x): box f = -d_x^2 f = +sin(x), error O(h^2)
    grid = Grid.spacetime_1p1(16, 0.05, 128, 0.05, -3.2)
    g = MetricField.flat(grid)
    mesh = grid.mesh()
    out = dalembertian(np.sin(mesh["x"]), g)
    err = np.max(np.abs(out - np.sin(mesh["x"]))[2:-2, 2:-2])
    assert err < 0.05**2


def test_dalembertian_second_order_convergence():
    errs, hs = [], []
    for n in (32, 64, 128, 256):
        grid = Grid.spacetime_1p1(n, 2.0 / n, n, 2.0 / n, -1.0)
        g = MetricField.flat(grid)
        mesh = grid.mesh()
        f = np.sin(mesh["t"]) * np.cos(2.0 * mesh["x"])
        exact = -np.sin(mesh["t"]) * np.cos(2.0 * mesh["x"]) * (1.0 - 4.0)
        err = np.max(np.abs(dalembertian(f, g) - exact)[2:-2, 2:-2])
        errs.append(err)
        hs.append(2.0 / n)
    slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert 1.8 <= slope <= 2.2


def test_dalembertian_needs_enough_points():
    with pytest.raises(DomainError):
        second_derivative(np.ones(3), 0.1, 0)


def test_christoffel_flat_exact(flat_1p1):
    _, g = flat_1p1
    assert np.max(np.abs(christoffel_from_metric(g).values)) == 0.0


def test_christoffel_constant_metric_zero():
    grid = Grid.radial(16, 0.25)
    diag = np.empty(grid.shape + (4,))
    diag[..., 0] = 1.0
    diag[..., 1] = -(1.0 + 0.3)
    diag[..., 2:] = -1.0
    gamma = christoffel_from_metric(MetricField(grid, diag))
    assert np.max(np.abs(gamma.values)) == 0.0


def test_christoffel_weak_field_linear_potential():
    # g_00 = 1 + 2 phi(r) with linear phi: Gamma^r_tt = phi'(r) exactly
    grid = Grid.radial(32, 0.25)
    slope = 0.002
    phi = slope * grid.coord("r")
    g = MetricField.static_weak_field(grid, phi)
    gamma = christoffel_from_metric(g)
    # the weak-field g_rr = -(1 - 2 phi) adds the 1/g_rr factor
    expected = slope / (1.0 - 2.0 * phi)
    assert np.max(np.abs(gamma.values[..., 1, 0, 0] - expected)) < 1e-12
    # lower-index symmetry
    assert np.array_equal(gamma.values[..., 1, 0, 1], gamma.values[..., 1, 1, 0])


def test_singular_metric_rejected():
    grid = Grid.spatial(16, 0.1, 0.0)
    diag = np.empty(grid.shape + (4,))
    diag[..., 0] = 1.0
    diag[..., 1:] = -1.0
    diag[3, 1] = -1e-14
    with pytest.raises(SingularMetricError):
        christoffel_from_metric(MetricField(grid, diag))


def test_radial_reduction_weight_spherical_laplacian():
    # flat metric on a radial grid: box f(r) = -(1/r^2)(r^2 f')'; the
    # 1/r^2 weight amplifies truncation near the origin, so measure on
    # r >= 0.5 where the O(h^2) estimate applies cleanly
    errs = []
    for n, h in ((400, 0.01), (800, 0.005)):
        grid = Grid.radial(n, h)
        g = MetricField.flat(grid)
        r = grid.coord("r")
        f = np.exp(-(r**2))
        exact = -(4.0 * r**2 - 6.0) * np.exp(-(r**2))  # -(f'' + 2 f'/r)
        sel = r >= 0.5
        errs.append(np.max(np.abs(dalembertian(f, g) - exact)[sel][:-2]))
    assert errs[0] < 5e-4
    assert 3.0 <= errs[0] / errs[1] <= 5.0
