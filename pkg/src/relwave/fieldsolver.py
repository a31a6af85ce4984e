"""Second-order amplitude equation in flat 1+1 spacetime.

The evolved equation, after expanding the gauge square once and for all,
reads (natural units, kappa = e/c)

    d_t^2 psi = d_x^2 psi + 2 i kappa phi d_t psi + 2 i kappa A1 d_x psi
                + [i kappa (div A) + kappa^2 (phi^2 - A1^2)
                   + 2 m W - m^2] psi,

with W = V + pi.E + mu.B the Lorentz-scalar potential.  Without W this is
the plain Klein-Gordon equation; the moment coupling keeps the equation
second order.  Time stepping is explicit leapfrog on this form (no
first-order reduction); stationary states come from the reduced spatial
operator -psi'' + (m^2 - 2mW) psi = E^2 psi via shift-invert iteration.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import kernels
from .errors import ConfigurationError, DomainError, InstabilityError
from .geometry import (HBAR, C_LIGHT, FourVector, Grid,
                       first_derivative, sample_on_grid)
from .phasespace import EMPotential


@dataclass(frozen=True)
class ComplexField:
    """Complex amplitude on a grid; evolution histories live on ("t", "x")."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != self.grid.shape:
            raise DomainError(f"values shape {vals.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(vals)):
            raise DomainError("field values must be finite")
        object.__setattr__(self, "values", vals)

    def conjugate(self) -> "ComplexField":
        return ComplexField(self.grid, np.conj(self.values))

    def snapshot(self, time_index: int) -> "ComplexField":
        """Spatial slice of a ("t", "x") history at one stored time level."""
        if self.grid.axes[0] != "t":
            raise DomainError("snapshot needs a time-major history")
        it = int(time_index)
        if not 0 <= it < self.grid.counts[0]:
            raise DomainError(f"time index {time_index} outside history")
        sub = Grid(self.grid.axes[1:], self.grid.counts[1:],
                   self.grid.spacings[1:], self.grid.origins[1:])
        return ComplexField(sub, self.values[it])


@dataclass(frozen=True)
class PotentialConfig:
    """Static external potentials: Lorentz scalar V, EM potentials, moments.

    The moment term contributes the Lorentz scalar pi.E + mu.B; in the
    reduced 1+1 mode only pi_1 E_1 survives and mu.B vanishes identically
    (stated limitation of the reduction, not an error).
    """

    grid: Grid
    scalar: np.ndarray
    em: EMPotential
    electric_moment: np.ndarray
    magnetic_moment: np.ndarray

    def __post_init__(self):
        scalar = np.broadcast_to(np.asarray(self.scalar, dtype=float), self.grid.shape).copy()
        if not np.all(np.isfinite(scalar)):
            raise DomainError("scalar potential must be finite")
        object.__setattr__(self, "scalar", scalar)
        for name in ("electric_moment", "magnetic_moment"):
            vec = np.zeros(3)
            given = np.asarray(getattr(self, name), dtype=float)
            vec[: given.size] = given
            if not np.all(np.isfinite(vec)):
                raise DomainError(f"{name} must be finite")
            object.__setattr__(self, name, vec)

    @classmethod
    def free(cls, grid: Grid) -> "PotentialConfig":
        return cls(grid, np.zeros(grid.shape), EMPotential.zero(grid),
                   np.zeros(3), np.zeros(3))

    @classmethod
    def with_scalar(cls, grid: Grid, v) -> "PotentialConfig":
        return cls(grid, sample_on_grid(grid, v), EMPotential.zero(grid),
                   np.zeros(3), np.zeros(3))

    def moment_scalar(self) -> np.ndarray:
        e_field, b_field = em_fields_from_potential(self.em)
        return (self.electric_moment[0] * e_field[..., 0]
                + self.electric_moment[1] * e_field[..., 1]
                + self.electric_moment[2] * e_field[..., 2]
                + self.magnetic_moment[0] * b_field[..., 0]
                + self.magnetic_moment[1] * b_field[..., 1]
                + self.magnetic_moment[2] * b_field[..., 2])

    def total_scalar(self) -> np.ndarray:
        """V + pi.E + mu.B sampled on the grid."""
        return self.scalar + self.moment_scalar()


@dataclass(frozen=True)
class StationaryState:
    """Eigenpair of the reduced spatial operator, Appendix-normalized."""

    energy: float
    profile: np.ndarray
    residual: float
    grid: Grid
    boundary: str


def em_fields_from_potential(em: EMPotential) -> tuple[np.ndarray, np.ndarray]:
    """E = -grad phi - dA/dt and B = curl A by centered differences.

    In the 1+1 reduction B = 0 and E has the single component E_1; the
    returned arrays carry three component slots for the moment contraction.
    """
    grid = em.grid
    e_field = np.zeros(grid.shape + (3,))
    b_field = np.zeros(grid.shape + (3,))
    if "x" in grid.axes:
        i = grid.axis_index("x")
        e_field[..., 0] -= first_derivative(em.phi, grid.spacings[i], i)
    if "t" in grid.axes:
        i = grid.axis_index("t")
        e_field[..., 0] -= first_derivative(em.a1, grid.spacings[i], i) / C_LIGHT
    return e_field, b_field


def _spatial_d1(values: np.ndarray, dx: float, periodic: bool) -> np.ndarray:
    if periodic:
        return (np.roll(values, -1) - np.roll(values, 1)) * (0.5 / dx)
    out = np.zeros_like(values)
    out[1:-1] = (values[2:] - values[:-2]) * (0.5 / dx)
    return out


def _spatial_d2(values: np.ndarray, dx: float, periodic: bool) -> np.ndarray:
    if periodic:
        return (np.roll(values, -1) - 2.0 * values + np.roll(values, 1)) / (dx * dx)
    out = np.zeros_like(values)
    out[1:-1] = (values[2:] - 2.0 * values[1:-1] + values[:-2]) / (dx * dx)
    return out


def evolve(psi0: ComplexField, psidot0: ComplexField, pot: PotentialConfig | None = None,
           steps: int = 100, dt: float = 0.01, m: float = 1.0, charge: float = 0.0,
           boundary: str = "periodic", use_numba: bool | None = None) -> ComplexField:
    """Leapfrog evolution; returns the full history on a ("t", "x") grid.

    Requires dt <= dx (c = 1 CFL limit) and static potentials on the same
    spatial grid as the initial data.
    """
    grid = psi0.grid
    if grid.axes != ("x",):
        raise DomainError("initial data must live on an ('x',) grid")
    if psidot0.grid != grid:
        raise DomainError("psi0 and psidot0 must share a grid")
    if boundary not in ("periodic", "dirichlet"):
        raise ConfigurationError(f"unknown boundary {boundary!r}")
    if steps < 7:
        raise ConfigurationError("need at least 7 steps (8 stored time levels)")
    dx = grid.spacings[0]
    if dt > dx:
        raise ConfigurationError(f"CFL violation: dt = {dt} exceeds dx = {dx} (c = 1)")
    if pot is None:
        pot = PotentialConfig.free(grid)
    if pot.grid != grid:
        raise ConfigurationError("potentials must live on the evolution grid")

    kappa = charge / C_LIGHT
    phi = pot.em.phi
    a1 = pot.em.a1
    w_total = pot.total_scalar()
    div_a = first_derivative(a1, dx, 0)
    a_coef = 2j * HBAR * kappa * a1 / HBAR**2
    b_coef = (1j * HBAR * kappa * div_a + kappa**2 * (phi**2 - a1**2)
              + 2.0 * m * w_total - (m * C_LIGHT) ** 2) / HBAR**2
    cphi = 2j * kappa * phi / HBAR
    gamma = cphi * dt / 2.0

    nt = steps + 1
    hist = np.zeros((nt, grid.counts[0]), dtype=complex)
    hist[0] = psi0.values
    periodic = boundary == "periodic"
    # second-order-accurate first step from the PDE itself
    ddpsi0 = (_spatial_d2(psi0.values, dx, periodic)
              + a_coef * _spatial_d1(psi0.values, dx, periodic)
              + b_coef * psi0.values + cphi * psidot0.values)
    hist[1] = psi0.values + dt * psidot0.values + 0.5 * dt * dt * ddpsi0
    if not periodic:
        hist[:2, 0] = 0.0
        hist[:2, -1] = 0.0

    kernels.leapfrog_history(hist, a_coef, b_coef, gamma, dt, dx, periodic,
                             use_numba=use_numba)

    bad = ~np.all(np.isfinite(hist.view(float).reshape(nt, -1)), axis=1)
    if np.any(bad):
        raise InstabilityError(int(np.argmax(bad)))

    tgrid = Grid.spacetime_1p1(nt, dt, grid.counts[0], dx, grid.origins[0])
    return ComplexField(tgrid, hist)


# ---------------------------------------------------------------------------
# stationary states
# ---------------------------------------------------------------------------


def _spatial_operator(q: np.ndarray, dx: float, boundary: str) -> sp.csc_matrix:
    """-hbar^2 d^2/dx^2 + q(x) as a sparse symmetric matrix."""
    inv = HBAR**2 / (dx * dx)
    if boundary == "dirichlet":
        qi = q[1:-1]
        n = qi.size
        main = 2.0 * inv + qi
        off = np.full(n - 1, -inv)
        return sp.diags([off, main, off], (-1, 0, 1), format="csc")
    if boundary == "periodic":
        n = q.size
        main = 2.0 * inv + q
        off = np.full(n - 1, -inv)
        mat = sp.diags([off, main, off], (-1, 0, 1), format="lil")
        mat[0, n - 1] = -inv
        mat[n - 1, 0] = -inv
        return mat.tocsc()
    raise ConfigurationError(f"unknown boundary {boundary!r}")


def _lambda_window(e_lo: float, e_hi: float) -> tuple[float, float, tuple[int, ...]]:
    if e_lo >= e_hi:
        raise ConfigurationError("energy window must satisfy lo < hi")
    if e_lo >= 0.0:
        return e_lo**2, e_hi**2, (1,)
    if e_hi <= 0.0:
        return e_hi**2, e_lo**2, (-1,)
    return 0.0, max(e_lo**2, e_hi**2), (1, -1)


def _window_eigensolve(H: sp.csc_matrix, lam_lo: float, lam_hi: float,
                       k_cap: int = 64) -> tuple[np.ndarray, np.ndarray]:
    """All eigenpairs with lambda in the window via shift-invert iteration."""
    n = H.shape[0]
    sigma = 0.5 * (lam_lo + lam_hi)
    k = min(8, n - 2)
    while True:
        try:
            vals, vecs = spla.eigsh(H, k=k, sigma=sigma, which="LM")
        except RuntimeError:
            sigma = sigma * (1.0 + 1e-7) + 1e-10
            continue
        covered_lo = vals.min() < lam_lo
        covered_hi = vals.max() > lam_hi
        if (covered_lo and covered_hi) or k >= min(n - 2, k_cap):
            break
        k = min(min(n - 2, k_cap), 2 * k)
    keep = (vals >= lam_lo - 1e-12) & (vals <= lam_hi + 1e-12)
    return vals[keep], vecs[:, keep]


def stationary_solve(pot: PotentialConfig, e_window: tuple[float, float],
                     m: float = 1.0, boundary: str = "dirichlet",
                     periodic_measure: bool | None = None) -> list[StationaryState]:
    """Eigenpairs of -hbar^2 psi'' + (m^2 - 2 m W) psi = E^2 psi in the window.

    Both E branches of each squared eigenvalue are reported when the
    window reaches them; profiles are normalized to unit total probability
    (integral of j^0 / |m| c over space equal to one).
    """
    grid = pot.grid
    if grid.axes != ("x",):
        raise ConfigurationError("stationary solve needs a static ('x',) potential grid")
    dx = grid.spacings[0]
    q = (m * C_LIGHT) ** 2 - 2.0 * m * pot.total_scalar()
    H = _spatial_operator(q, dx, boundary)
    lam_lo, lam_hi, signs = _lambda_window(*e_window)
    lam_lo = max(lam_lo, 0.0)
    vals, vecs = _window_eigensolve(H, lam_lo, lam_hi)

    periodic = boundary == "periodic" if periodic_measure is None else periodic_measure
    states = []
    for lam, vec in zip(vals, vecs.T):
        if lam < 0.0:
            continue
        resid = float(np.max(np.abs(H @ vec - lam * vec)) / np.max(np.abs(vec)))
        if boundary == "dirichlet":
            profile = np.zeros(grid.counts[0], dtype=complex)
            profile[1:-1] = vec
        else:
            profile = vec.astype(complex)
        for sign in signs:
            energy = sign * float(np.sqrt(lam))
            if not e_window[0] <= energy <= e_window[1]:
                continue
            states.append(StationaryState(
                energy, _normalize_profile(profile, energy, m, dx, periodic),
                resid, grid, boundary))
    states.sort(key=lambda s: s.energy)
    return states


def _normalize_profile(profile: np.ndarray, energy: float, m: float,
                       dx: float, periodic: bool) -> np.ndarray:
    """Scale so the Appendix-normalized charge integral equals one."""
    if abs(energy) < 1e-12:
        return profile
    dens = np.abs(profile) ** 2
    norm = dx * np.sum(dens) if periodic else np.trapezoid(dens, dx=dx)
    target = (m * C_LIGHT) ** 2 / abs(energy)
    return profile * np.sqrt(target / norm)


def stationary_field(state: StationaryState, nt: int, dt: float) -> ComplexField:
    """Expand psi(x) e^{-i E t / hbar} onto a ("t", "x") history grid."""
    grid = Grid.spacetime_1p1(nt, dt, state.grid.counts[0], state.grid.spacings[0],
                              state.grid.origins[0])
    t = grid.coord("t")[:, None]
    vals = state.profile[None, :] * np.exp(-1j * state.energy * t / HBAR)
    return ComplexField(grid, vals)


# ---------------------------------------------------------------------------
# density-function equation residual
# ---------------------------------------------------------------------------


def _gauge_square(values: np.ndarray, grid: Grid, phi: np.ndarray, a1: np.ndarray,
                  m: float, kappa: float) -> np.ndarray:
    """[i hbar d_a + kappa A_a][i hbar d^a + kappa A^a] f on a ("t", "x") grid.

    Second derivatives are nested first differences (a wide stencil),
    deliberately different from the solver's compact update so the
    residual stays an independent check of the evolved field.
    """
    dt_, dx_ = grid.spacings
    box = (first_derivative(first_derivative(values, dt_, 0), dt_, 0)
           - first_derivative(first_derivative(values, dx_, 1), dx_, 1))
    out = -(HBAR**2) * box
    if kappa != 0.0:
        div_a = (first_derivative(phi, dt_, 0) + first_derivative(a1, dx_, 1))
        out = out + 1j * HBAR * kappa * div_a * values
        out = out + 2j * HBAR * kappa * (phi * first_derivative(values, dt_, 0)
                                         + a1 * first_derivative(values, dx_, 1))
        out = out + kappa**2 * (phi**2 - a1**2) * values
    return out


def density_equation_residual(psi: ComplexField, pot: PotentialConfig | None,
                              delta: FourVector, m: float = 1.0,
                              charge: float = 0.0) -> np.ndarray:
    """Left side of the two-point density equation on rho(y, y') = psi*(y') psi(y).

    The separation must align with the grid (delta components equal to even
    multiples of the spacings) and stay below half the grid extent; the
    returned array is cropped to the base points where both shifted
    arguments exist.
    """
    grid = psi.grid
    if grid.axes != ("t", "x"):
        raise DomainError("density residual needs a ('t', 'x') history")
    dt_, dx_ = grid.spacings
    ext_t, ext_x = grid.extents
    if abs(delta[0]) > 0.5 * ext_t or abs(delta[1]) > 0.5 * ext_x:
        raise DomainError("separation larger than half the grid extent")
    shifts = []
    for comp, h in ((delta[0], dt_), (delta[1], dx_)):
        s = comp / (2.0 * h)
        if abs(s - round(s)) > 1e-6:
            raise DomainError("separation components must be even multiples of the spacing")
        shifts.append(int(round(s)))
    st, sx = shifts

    if pot is None:
        w_total = np.zeros(grid.shape)
        phi = np.zeros(grid.shape)
        a1 = np.zeros(grid.shape)
    else:
        w_total = np.broadcast_to(pot.total_scalar(), grid.shape)
        phi = np.broadcast_to(pot.em.phi, grid.shape)
        a1 = np.broadcast_to(pot.em.a1, grid.shape)

    kappa = charge / C_LIGHT
    k_psi = _gauge_square(psi.values, grid, phi, a1, m, kappa)
    k_psi_bar = _gauge_square(np.conj(psi.values), grid, phi, a1, m, kappa)

    def plus(arr):  # value at y = x + delta/2
        return _shifted(arr, st, sx)

    def minus(arr):  # value at y' = x - delta/2
        return _shifted(arr, -st, -sx)

    rho = minus(np.conj(psi.values)) * plus(psi.values)
    return ((minus(np.conj(psi.values)) * plus(k_psi)
             - plus(psi.values) * minus(k_psi_bar)) / (2.0 * m)
            - (plus(w_total) - minus(w_total)) * rho)


def _shifted(arr: np.ndarray, st: int, sx: int) -> np.ndarray:
    """arr evaluated at index + (st, sx), cropped to the common base region."""
    nt, nx = arr.shape
    at, ax = abs(st), abs(sx)
    base_t = slice(at, nt - at)
    base_x = slice(ax, nx - ax)
    return arr[base_t, base_x] if (st, sx) == (0, 0) else arr[
        slice(at + st, nt - at + st), slice(ax + sx, nx - ax + sx)]


def periodic_spatial_integral(values: np.ndarray, dx: float, axis: int = -1) -> np.ndarray:
    """Integral over one full period (rectangle rule is exact there)."""
    return dx * np.sum(values, axis=axis)
