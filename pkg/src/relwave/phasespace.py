"""Joint phase-space distributions F(x, p) and the infinitesimal transform.

The transform maps a joint density to the two-point density

    rho(x + dx/2, x - dx/2) = integral F(x, p) exp(i p_b dx^b / hbar) d^4p

optionally multiplied by the electromagnetic gauge factor
exp[(i e / hbar c) (I(x + dx/2) + I(x - dx/2))] with I(y) the straight-line
potential integral from the coordinate origin to y.  At dx = 0 the value
is the plain configuration-space marginal and is manifestly real and
nonnegative for F >= 0.

Two carriers are supported: values sampled on a grid mixing position axes
("t", "x") and momentum axes ("p0", "p1"), and closed-form Gaussian
mixtures with diagonal covariances.  Reduced modes drop inactive
four-vector slots.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import RegularGridInterpolator

from .errors import (AccuracyError, DomainError, InconsistentDensityError,
                     IntegrationError, UnsupportedCarrierError)
from .geometry import (AXIS_SLOT, HBAR, C_LIGHT, MOMENTUM_AXES, SPACETIME_AXES,
                       FourVector, Grid, sample_on_grid)

#: flat metric diagonal used throughout this (special-relativistic) module
ETA = np.array([1.0, -1.0, -1.0, -1.0])

_GAUSS_NODES, _GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(32)
#: 32-node Gauss-Legendre rule mapped onto [0, 1]
_PATH_NODES = 0.5 * (_GAUSS_NODES + 1.0)
_PATH_WEIGHTS = 0.5 * _GAUSS_WEIGHTS


@dataclass(frozen=True)
class EMPotential:
    """Scalar potential phi and vector potential component A1 on a grid.

    The grid may be ("x",) for static potentials or ("t", "x") for
    time-dependent ones; the reduced transverse components vanish.
    """

    grid: Grid
    phi: np.ndarray
    a1: np.ndarray

    def __post_init__(self):
        for name, arr in (("phi", self.phi), ("a1", self.a1)):
            arr = np.asarray(arr, dtype=float)
            if arr.shape != self.grid.shape:
                raise DomainError(f"{name} shape {arr.shape} does not match grid {self.grid.shape}")
            if not np.all(np.isfinite(arr)):
                raise DomainError(f"{name} must be finite everywhere")
            object.__setattr__(self, name, arr)

    @classmethod
    def zero(cls, grid: Grid) -> "EMPotential":
        return cls(grid, np.zeros(grid.shape), np.zeros(grid.shape))

    @classmethod
    def from_callables(cls, grid: Grid, phi=None, a1=None) -> "EMPotential":
        return cls(grid, sample_on_grid(grid, phi), sample_on_grid(grid, a1))

    def is_zero(self) -> bool:
        return not (np.any(self.phi) or np.any(self.a1))

    def evaluate(self, t: np.ndarray, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Linear interpolation of (phi, A1) at spacetime points."""
        if self.grid.axes == ("x",):
            xs = self.grid.coord("x")
            lo, hi = xs[0], xs[-1]
            if np.any(x < lo - 1e-12) or np.any(x > hi + 1e-12):
                raise DomainError("potential evaluation point outside grid")
            return (np.interp(x, xs, self.phi), np.interp(x, xs, self.a1))
        if self.grid.axes == ("t", "x"):
            pts = np.stack([t, x], axis=-1)
            out = []
            for arr in (self.phi, self.a1):
                interp = RegularGridInterpolator(
                    (self.grid.coord("t"), self.grid.coord("x")), arr,
                    bounds_error=True)
                try:
                    out.append(interp(pts))
                except ValueError as exc:
                    raise DomainError(f"potential evaluation point outside grid: {exc}") from None
            return out[0], out[1]
        raise DomainError(f"EMPotential grids must be ('x',) or ('t', 'x'), got {self.grid.axes}")


@dataclass(frozen=True)
class GaussianComponent:
    """One weighted Gaussian factor N(x) N(p) with diagonal covariances."""

    weight: float
    mean_x: np.ndarray
    mean_p: np.ndarray
    sigma_x: np.ndarray
    sigma_p: np.ndarray
    active: tuple[int, ...]

    def __post_init__(self):
        if self.weight <= 0.0:
            raise DomainError("component weight must be positive")
        for name in ("mean_x", "mean_p", "sigma_x", "sigma_p"):
            arr = np.zeros(4)
            given = np.asarray(getattr(self, name), dtype=float)
            arr[: given.size] = given
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "active", tuple(sorted(set(int(s) for s in self.active))))
        for s in self.active:
            if not 0 <= s <= 3:
                raise DomainError(f"invalid four-vector slot {s}")
            if self.sigma_x[s] <= 0.0 or self.sigma_p[s] <= 0.0:
                raise DomainError("active-slot standard deviations must be positive")


@dataclass(frozen=True)
class PhaseSpaceDistribution:
    """Either a sampled nonnegative carrier or a Gaussian-mixture carrier."""

    grid: Grid | None = None
    values: np.ndarray | None = None
    components: tuple[GaussianComponent, ...] | None = None

    def __post_init__(self):
        if (self.values is None) == (self.components is None):
            raise DomainError("provide exactly one of sampled values or Gaussian components")
        if self.values is not None:
            if self.grid is None:
                raise DomainError("sampled carrier needs a grid")
            vals = np.asarray(self.values, dtype=float)
            if vals.shape != self.grid.shape:
                raise DomainError(f"values shape {vals.shape} does not match grid {self.grid.shape}")
            if not np.all(np.isfinite(vals)):
                raise IntegrationError("sampled carrier must be finite (normalizable)")
            if np.any(vals < 0.0):
                raise DomainError("phase-space density must be nonnegative")
            object.__setattr__(self, "values", vals)

    # -- constructors -------------------------------------------------

    @classmethod
    def from_samples(cls, grid: Grid, values: np.ndarray) -> "PhaseSpaceDistribution":
        return cls(grid=grid, values=values)

    @classmethod
    def gaussian(cls, mean_x, mean_p, sigma_x, sigma_p, weight: float = 1.0,
                 active: tuple[int, ...] = (0, 1)) -> "PhaseSpaceDistribution":
        comp = GaussianComponent(weight, mean_x, mean_p, sigma_x, sigma_p, active)
        return cls(components=(comp,))

    @classmethod
    def mixture(cls, components) -> "PhaseSpaceDistribution":
        comps = tuple(components)
        if not comps:
            raise DomainError("mixture needs at least one component")
        active = comps[0].active
        for c in comps:
            if c.active != active:
                raise DomainError("mixture components must share active slots")
        return cls(components=comps)

    # -- carrier queries ----------------------------------------------

    @property
    def is_sampled(self) -> bool:
        return self.values is not None

    def position_axes(self) -> tuple[str, ...]:
        if not self.is_sampled:
            raise UnsupportedCarrierError("Gaussian carriers have no grid axes")
        return tuple(a for a in self.grid.axes if a in SPACETIME_AXES)

    def momentum_axes(self) -> tuple[str, ...]:
        if not self.is_sampled:
            raise UnsupportedCarrierError("Gaussian carriers have no grid axes")
        return tuple(a for a in self.grid.axes if a in MOMENTUM_AXES)

    def active_slots(self) -> tuple[int, ...]:
        if self.is_sampled:
            return tuple(sorted({AXIS_SLOT[a] for a in self.momentum_axes()}))
        return self.components[0].active

    def total_weight(self) -> float:
        if self.is_sampled:
            return float(self.grid.integrate(self.values))
        return float(sum(c.weight for c in self.components))

    def momentum_width(self) -> float:
        """Largest momentum-space standard deviation (warning scale hbar/sigma)."""
        if not self.is_sampled:
            return float(max(max(c.sigma_p[s] for s in c.active) for c in self.components))
        total = self.grid.integrate(self.values)
        if not np.isfinite(total) or total <= 0.0:
            return 0.0
        best = 0.0
        for name in self.momentum_axes():
            p = self.grid.mesh()[name]
            mean = self.grid.integrate(p * self.values) / total
            var = self.grid.integrate((p - mean) ** 2 * self.values) / total
            best = max(best, float(np.sqrt(max(var, 0.0))))
        return best

    def momentum_scale(self) -> float:
        """Width plus mean magnitude: the scale a delta-derivative must resolve."""
        if not self.is_sampled:
            return float(max(max(c.sigma_p[s] + abs(c.mean_p[s]) for s in c.active)
                             for c in self.components))
        best = self.momentum_width()
        total = self.grid.integrate(self.values)
        if not np.isfinite(total) or total <= 0.0:
            return best
        for name in self.momentum_axes():
            p = self.grid.mesh()[name]
            best = max(best, abs(float(self.grid.integrate(p * self.values) / total)))
        return best

    def sample_on(self, grid: Grid) -> "PhaseSpaceDistribution":
        """Rasterize a Gaussian carrier onto a sampled grid."""
        if self.is_sampled:
            raise UnsupportedCarrierError("carrier is already sampled")
        mesh = grid.mesh()
        vals = np.zeros(grid.shape)
        for comp in self.components:
            f = np.full(grid.shape, comp.weight)
            for name in grid.axes:
                slot = AXIS_SLOT[name]
                if slot not in comp.active:
                    raise DomainError(f"axis {name!r} addresses inactive slot {slot}")
                if name in MOMENTUM_AXES:
                    mu, sig = comp.mean_p[slot], comp.sigma_p[slot]
                else:
                    mu, sig = comp.mean_x[slot], comp.sigma_x[slot]
                f = f * np.exp(-0.5 * ((mesh[name] - mu) / sig) ** 2) / (sig * np.sqrt(2.0 * np.pi))
            vals += f
        return PhaseSpaceDistribution.from_samples(grid, vals)


@dataclass(frozen=True)
class DensitySample:
    """One two-point density value rho(x + dx/2, x - dx/2)."""

    base: FourVector
    separation: FourVector
    value: complex

    def __post_init__(self):
        if np.allclose(self.separation.components, 0.0):
            if abs(self.value.imag) > 1e-10 * max(1.0, abs(self.value.real)):
                raise InconsistentDensityError(
                    f"density at zero separation must be real, got {self.value}")


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def _force_arrays(force, grid: Grid) -> np.ndarray:
    """Normalize a force spec to an array of shape (4, *grid.shape)."""
    out = np.zeros((4,) + grid.shape)
    if force is None:
        return out
    pos_mesh = {a: m for a, m in grid.mesh().items() if a in SPACETIME_AXES}
    if callable(force):
        arr = np.asarray(force(**pos_mesh), dtype=float)
        if arr.shape != (4,) + grid.shape:
            raise DomainError(f"force callable must return shape {(4,) + grid.shape}")
        return arr
    seq = list(force)
    if len(seq) != 4:
        raise DomainError("force must have four components")
    for s, item in enumerate(seq):
        if item is None:
            continue
        if callable(item):
            out[s] = np.broadcast_to(np.asarray(item(**pos_mesh), dtype=float), grid.shape)
        else:
            out[s] = float(item)
    if not np.all(np.isfinite(out)):
        raise DomainError("force must be finite")
    return out


def liouville_residual(F: PhaseSpaceDistribution, force=None, m: float = 1.0) -> np.ndarray:
    """Pointwise (p^a/m) dF/dx^a + f^a dF/dp^a on a sampled carrier.

    Exactly zero (in exact arithmetic) when F is built from tau-invariants
    of the characteristics; the sampled value decays at second order.
    """
    if not F.is_sampled:
        raise UnsupportedCarrierError(
            "liouville_residual needs a sampled carrier; rasterize with sample_on() first")
    grid = F.grid
    if min(grid.counts) < 3:
        raise DomainError("need at least 3 points per axis")
    mesh = grid.mesh()
    f_arr = _force_arrays(force, grid)
    residual = np.zeros(grid.shape)
    momentum_of_slot = {AXIS_SLOT[a]: a for a in F.momentum_axes()}
    for i, name in enumerate(grid.axes):
        # an axis the carrier does not vary along contributes exactly nothing
        if np.all(F.values == np.take(F.values, [0], axis=i)):
            continue
        dF = np.gradient(F.values, grid.spacings[i], axis=i, edge_order=2)
        slot = AXIS_SLOT[name]
        if name in SPACETIME_AXES:
            if slot not in momentum_of_slot:
                raise UnsupportedCarrierError(
                    f"position axis {name!r} needs momentum axis p{slot} on the carrier")
            residual += (mesh[momentum_of_slot[slot]] / m) * dF
        else:
            residual += f_arr[slot] * dF
    return residual


def _gauge_line_integral(y: FourVector, em: EMPotential) -> float:
    """Straight-line integral of A^lam du_lam from the origin to y."""
    s = _PATH_NODES
    t_pts = s * y[0]
    x_pts = s * y[1]
    phi_vals, a1_vals = em.evaluate(t_pts, x_pts)
    # A^lam du_lam = (A^0 y^0 g_00 + A^1 y^1 g_11) ds on the straight path
    integrand = phi_vals * y[0] * ETA[0] + a1_vals * y[1] * ETA[1]
    return float(np.sum(_PATH_WEIGHTS * integrand))


def gauge_factor(x: FourVector, delta: FourVector, em: EMPotential,
                 charge: float) -> complex:
    """exp[(i e / hbar c)(I(x + dx/2) + I(x - dx/2))]; unit modulus."""
    if charge == 0.0 or em is None or em.is_zero():
        return 1.0 + 0.0j
    plus = _gauge_line_integral(x.plus(delta.scaled(0.5)), em)
    minus = _gauge_line_integral(x.plus(delta.scaled(-0.5)), em)
    phase = (charge / (HBAR * C_LIGHT)) * (plus + minus)
    return complex(np.exp(1j * phase))


def _kernel_scale(kernel: str) -> float:
    # "action" is the exp(i p.dx / hbar) form required for -i hbar d/d(dx)
    # to extract momenta; "printed" keeps the exp(i p.dx / 2) variant for
    # audit comparisons.
    if kernel == "action":
        return 1.0 / HBAR
    if kernel == "printed":
        return 0.5
    raise DomainError(f"unknown kernel convention {kernel!r}")


def _sampled_position_slice(F: PhaseSpaceDistribution, x: FourVector) -> tuple[np.ndarray, list]:
    """Slice the carrier at the position nearest to x; keep momentum axes."""
    grid = F.grid
    index = [slice(None)] * grid.ndim
    for name in F.position_axes():
        i = grid.axis_index(name)
        coords = grid.coord(name)
        target = x[AXIS_SLOT[name]]
        j = int(np.argmin(np.abs(coords - target)))
        if abs(coords[j] - target) > 0.5 * grid.spacings[i] + 1e-12:
            raise DomainError(f"base point component {target} outside axis {name!r}")
        index[i] = j
    sliced = F.values[tuple(index)]
    mom = [(grid.coord(a), grid.spacing(a), AXIS_SLOT[a]) for a in F.momentum_axes()]
    return sliced, mom


def _momentum_quadrature(slice_vals: np.ndarray, mom_axes: list, delta_cov: np.ndarray,
                         scale: float, quad_tol: float | None) -> complex:
    integrand = slice_vals.astype(complex)
    for i, (coords, _, slot) in enumerate(mom_axes):
        shape = [1] * slice_vals.ndim
        shape[i] = -1
        integrand = integrand * np.exp(1j * scale * delta_cov[slot] * coords.reshape(shape))
    q_trap = integrand
    q_simp = integrand
    for i in range(len(mom_axes) - 1, -1, -1):
        dx = mom_axes[i][1]
        q_trap = np.trapezoid(q_trap, dx=dx, axis=i)
        q_simp = simpson(q_simp, dx=dx, axis=i)
    if quad_tol is not None:
        estimate = abs(q_trap - q_simp)
        if estimate > quad_tol * max(abs(q_trap), 1e-300) + 1e-14:
            raise AccuracyError(
                f"momentum quadrature estimate {estimate:.3e} above tolerance {quad_tol:.3e}")
    return complex(q_trap)


def wigner_moyal_transform(F: PhaseSpaceDistribution, x: FourVector, delta: FourVector,
                           em: EMPotential | None = None, gauge: bool = False,
                           charge: float = 0.0, kernel: str = "action",
                           quad_tol: float | None = 1e-6) -> complex:
    """Two-point density rho(x + dx/2, x - dx/2) from the carrier F."""
    scale = _kernel_scale(kernel)
    delta_cov = ETA * delta.components

    width = F.momentum_width()
    if width > 0.0:
        sep = float(np.max(np.abs(delta_cov)))
        if sep * width > HBAR:
            warnings.warn("separation exceeds the carrier momentum width scale hbar/sigma_p; "
                          "the infinitesimal expansion is no longer controlled")

    if F.is_sampled:
        total = F.grid.integrate(F.values)
        if not np.isfinite(total) or total <= 0.0:
            raise IntegrationError("carrier is not normalizable")
        slice_vals, mom_axes = _sampled_position_slice(F, x)
        if not mom_axes:
            raise UnsupportedCarrierError("sampled carrier has no momentum axes to integrate")
        value = _momentum_quadrature(slice_vals, mom_axes, delta_cov, scale, quad_tol)
    else:
        value = 0.0 + 0.0j
        for comp in F.components:
            marginal = comp.weight
            phase = 0.0
            damp = 0.0
            for s in comp.active:
                marginal *= (np.exp(-0.5 * ((x[s] - comp.mean_x[s]) / comp.sigma_x[s]) ** 2)
                             / (comp.sigma_x[s] * np.sqrt(2.0 * np.pi)))
                phase += scale * comp.mean_p[s] * delta_cov[s]
                damp += 0.5 * (scale * comp.sigma_p[s] * delta_cov[s]) ** 2
            value += marginal * np.exp(1j * phase - damp)
        value = complex(value)

    if gauge:
        if em is None:
            raise DomainError("gauge factor requested without an EM potential")
        value *= gauge_factor(x, delta, em, charge)
    return value


def density_sample(F: PhaseSpaceDistribution, x: FourVector, delta: FourVector,
                   **kwargs) -> DensitySample:
    return DensitySample(x, delta, wigner_moyal_transform(F, x, delta, **kwargs))


def integrated_density_provider(F: PhaseSpaceDistribution, kernel: str = "action"):
    """Callable delta -> integral of rho(x, delta) over all position axes."""
    scale = _kernel_scale(kernel)

    if F.is_sampled:
        grid = F.grid
        mesh = grid.mesh()

        def provider(delta: FourVector) -> complex:
            delta_cov = ETA * delta.components
            integrand = F.values.astype(complex)
            for name in F.momentum_axes():
                slot = AXIS_SLOT[name]
                integrand = integrand * np.exp(1j * scale * delta_cov[slot] * mesh[name])
            return complex(grid.integrate(integrand))

        return provider

    def provider(delta: FourVector) -> complex:
        delta_cov = ETA * delta.components
        value = 0.0 + 0.0j
        for comp in F.components:
            phase = sum(scale * comp.mean_p[s] * delta_cov[s] for s in comp.active)
            damp = sum(0.5 * (scale * comp.sigma_p[s] * delta_cov[s]) ** 2 for s in comp.active)
            value += comp.weight * np.exp(1j * phase - damp)
        return complex(value)

    return provider


def _default_h_delta(F: PhaseSpaceDistribution | None) -> float:
    if F is None:
        return 1.0 / 16.0
    if F.is_sampled:
        pos = [F.grid.spacing(a) for a in F.position_axes()]
        h = min(pos) if pos else min(F.grid.spacings)
        return h / 16.0
    # the closed-form carrier has no grid scale; 1/64 of the density
    # oscillation scale (width plus mean momentum) keeps the
    # post-Richardson truncation comfortably below 1e-6 relative
    scale = F.momentum_scale()
    return (HBAR / scale) / 64.0 if scale > 0 else 1.0 / 64.0


def mean_momentum_from_density(rho, slots: tuple[int, ...] | None = None,
                               h_delta=None, richardson: bool = True,
                               imag_rtol: float = 1e-6) -> FourVector:
    """Mean four-momentum via -i hbar d/d(dx_a) of the two-point density.

    `rho` is a PhaseSpaceDistribution or a callable delta -> x-integrated
    density value.  Centered differences in the covariant separation with
    one Richardson level; the result is normalized by the density at zero
    separation.  `h_delta` may be a single step or a {slot: step} mapping
    (grid-backed providers need steps aligned with their spacings).
    """
    if isinstance(rho, PhaseSpaceDistribution):
        if slots is None:
            slots = rho.active_slots()
        if h_delta is None:
            h_delta = _default_h_delta(rho)
        provider = integrated_density_provider(rho)
    else:
        provider = rho
        if slots is None:
            slots = (0, 1)
        if h_delta is None:
            h_delta = _default_h_delta(None)
    if not isinstance(h_delta, dict):
        h_delta = {slot: float(h_delta) for slot in slots}

    total = provider(FourVector.zero())
    if abs(total) == 0.0 or not np.isfinite(abs(total)):
        raise IntegrationError("density has zero or non-finite total weight")

    def offset(slot: int, h: float) -> FourVector:
        comp = np.zeros(4)
        comp[slot] = h * ETA[slot]  # covariant component h in this slot
        return FourVector(comp)

    def diff(slot: int, h: float) -> complex:
        return (-1j * HBAR) * (provider(offset(slot, h)) - provider(offset(slot, -h))) / (2.0 * h)

    components = np.zeros(4)
    worst_imag = 0.0
    for slot in slots:
        d1 = diff(slot, h_delta[slot])
        if richardson:
            d2 = diff(slot, 0.5 * h_delta[slot])
            est = (4.0 * d2 - d1) / 3.0
        else:
            est = d1
        est = est / total
        worst_imag = max(worst_imag, abs(est.imag))
        if abs(est.imag) > imag_rtol * max(abs(est.real), 1e-12):
            raise InconsistentDensityError(
                f"slot {slot}: imaginary part {est.imag:.3e} too large next to {est.real:.3e}")
        components[slot] = est.real
    return FourVector(components)


def direct_momentum_moment(F: PhaseSpaceDistribution, slot: int) -> float:
    """Oracle moment integral p^slot F d^np d^nx / integral F (no transform)."""
    if F.is_sampled:
        name = {AXIS_SLOT[a]: a for a in F.momentum_axes()}.get(slot)
        if name is None:
            raise DomainError(f"carrier has no momentum axis for slot {slot}")
        mesh = F.grid.mesh()
        total = F.grid.integrate(F.values)
        return float(F.grid.integrate(mesh[name] * F.values) / total)
    total = sum(c.weight for c in F.components)
    return float(sum(c.weight * c.mean_p[slot] for c in F.components) / total)
