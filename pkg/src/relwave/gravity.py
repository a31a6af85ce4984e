"""Coupled statistical-matter / weak-field-metric system on radial grids.

The quantum state sources gravity through the rank-one stress tensor
T_mu_nu = rho' u_mu u_nu with rho' = m R^2 and u_mu = grad_mu S / m.  The
full Einstein system is reduced, by declared design, to its static
spherically symmetric weak-field limit: the linearized field equation
becomes the radial Poisson problem

    (1/r^2) d_r (r^2 d_r Phi) = 4 pi G rho_eff,   rho_eff = 2 T_00 - tr T,

solved with Phi(r_end) = -G M_enclosed / r_end, and the metric is
g_00 = 1 + 2 Phi, g_rr = -(1 - 2 Phi), angular parts flat.  The quantum
side keeps the ansatz S = -E t, which satisfies the covariant continuity
law identically and turns the covariant amplitude equation into a radial
eigenproblem; in terms of u = r R it reads

    -hbar^2 [u'' + (c'/c)(u' - u/r)] + (m^2 - 2 m V) b u = E^2 (b/a) u

with a = g_00, b = -g_rr, c = sqrt(a/b).  For a flat metric this is
exactly the 1D Dirichlet operator of the flat-spacetime solver, which
pins the flat-limit cross-check.  The fixed-point loop alternates the
metric solve and the eigensolve with under-relaxation; the converged
metric is a *statistical* object (ensemble geometry), not the metric of
spacetime.  The field-equation prefactor follows the conventional
Newtonian-limit normalization so the uniform-ball oracle holds.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.integrate import cumulative_simpson

from .errors import (BoundaryConditionError, ConfigurationError, DomainError,
                     NonConvergenceError)
from .geometry import (AXIS_SLOT, HBAR, C_LIGHT, Grid, MetricField,
                       first_derivative, sample_on_grid)
from .madelung import MadelungPair

#: flat-metric trace signs used in the linearized source
_ETA_DIAG = np.array([1.0, -1.0, -1.0, -1.0])

#: relative wall density above which the monopole boundary match is refused
_DECAY_TOL = 1e-3


@dataclass(frozen=True)
class QuantumStressTensor:
    """T_mu_nu = rho' u_mu u_nu stored with its rank-one factors."""

    grid: Grid
    components: np.ndarray = field(repr=False)   # (*shape, 4, 4)
    rho_prime: np.ndarray = field(repr=False)    # (*shape,)
    four_velocity: np.ndarray = field(repr=False)  # covariant u_mu, (*shape, 4)

    def __add__(self, other: "QuantumStressTensor") -> "QuantumStressTensor":
        if other.grid != self.grid:
            raise DomainError("cannot add stress tensors on different grids")
        # the sum keeps only the component array exact; a sum is no longer
        # rank one, so the velocity factor is dropped
        return QuantumStressTensor(self.grid, self.components + other.components,
                                   self.rho_prime + other.rho_prime,
                                   np.zeros(self.grid.shape + (4,)))


@dataclass(frozen=True)
class GravityConfig:
    """Run parameters for the coupled solve."""

    newton_g: float
    mass: float = 1.0
    r_end: float = 20.0
    nr: int = 400
    scalar_potential: object = None
    matter_density: object = None
    max_iterations: int = 50
    tolerance: float = 1e-12
    relaxation: float = 0.5
    time_points: int = 8

    def __post_init__(self):
        if self.newton_g < 0.0:
            raise ConfigurationError("Newton constant must be nonnegative")
        if self.tolerance <= 0.0:
            raise ConfigurationError("tolerance must be positive")
        if not 0.0 < self.relaxation <= 1.0:
            raise ConfigurationError("relaxation factor must lie in (0, 1]")

    def radial_grid(self) -> Grid:
        # interior nodes of [0, r_end]: r_j = j h, j = 1..nr, h = r_end/(nr+1)
        return Grid.radial(self.nr, self.r_end / (self.nr + 1))


@dataclass(frozen=True)
class RadialState:
    """One eigenpair of the covariant radial problem."""

    energy: float
    pair: MadelungPair
    residual: float
    radial_profile: np.ndarray


@dataclass(frozen=True)
class IterationRecord:
    index: int
    energy: float
    max_delta_phi: float
    eigen_residual: float


@dataclass(frozen=True)
class CoupledResult:
    metric: MetricField
    pair: MadelungPair
    energy: float
    iterations: tuple[IterationRecord, ...]
    converged: bool
    fixed_point_residual: float
    eigen_residual: float


# ---------------------------------------------------------------------------
# stress tensor
# ---------------------------------------------------------------------------


def matter_tensor(mp: MadelungPair, g: MetricField, m: float = 1.0) -> QuantumStressTensor:
    """rho' = m R^2, u_mu = grad_mu S / m, T = rho' u (x) u."""
    if g.grid != mp.grid:
        raise DomainError("metric and pair must share a grid")
    grid = mp.grid
    u = np.zeros(grid.shape + (4,))
    for i, name in enumerate(grid.axes):
        u[..., AXIS_SLOT[name]] = first_derivative(mp.action, grid.spacings[i], i) / m
    rho_prime = m * mp.amplitude**2
    components = rho_prime[..., None, None] * u[..., :, None] * u[..., None, :]
    return QuantumStressTensor(grid, components, rho_prime, u)


def external_dust_tensor(grid: Grid, density) -> QuantumStressTensor:
    """Static dust at rest: T_00 = rho_M, u_mu = (1, 0, 0, 0).

    `density` may be a scalar, an array over the grid (or its radial
    profile), or a callable of the radial coordinate.
    """
    if callable(density):
        rho_r = np.asarray(density(grid.coord("r")), dtype=float)
        rho = np.broadcast_to(rho_r, grid.shape).copy()
    else:
        rho = np.broadcast_to(np.asarray(density, dtype=float), grid.shape).copy()
    if np.any(rho < 0.0):
        raise DomainError("matter density must be nonnegative")
    u = np.zeros(grid.shape + (4,))
    u[..., 0] = 1.0
    components = np.zeros(grid.shape + (4, 4))
    components[..., 0, 0] = rho
    return QuantumStressTensor(grid, components, rho, u)


def _radial_reduce(tensor: QuantumStressTensor, static_tol: float = 1e-9) -> tuple[Grid, np.ndarray]:
    """Check staticity and reduce the component array to radial profiles."""
    grid = tensor.grid
    comp = tensor.components
    if grid.axes == ("r",):
        return grid, comp
    if grid.axes == ("t", "r"):
        spread = float(np.max(np.abs(comp - comp[:1])))
        scale = max(float(np.max(np.abs(comp))), 1e-300)
        if spread > static_tol * scale:
            raise ConfigurationError("stress tensor is not static")
        rgrid = Grid.radial(grid.counts[1], grid.spacings[1])
        return rgrid, comp[0]
    raise DomainError(f"weak-field solve needs a radial grid, got {grid.axes}")


def effective_source(tensor: QuantumStressTensor) -> tuple[Grid, np.ndarray]:
    """rho_eff(r) = 2 T_00 - eta^mn T_mn (flat-trace linearization)."""
    rgrid, comp = _radial_reduce(tensor)
    trace = sum(_ETA_DIAG[s] * comp[..., s, s] for s in range(4))
    return rgrid, 2.0 * comp[..., 0, 0] - trace


# ---------------------------------------------------------------------------
# weak-field metric solve
# ---------------------------------------------------------------------------


def _poisson_radial(rho: np.ndarray, grid: Grid, newton_g: float) -> np.ndarray:
    """(1/r^2)(r^2 Phi')' = 4 pi G rho via the tridiagonal xi = r Phi system."""
    r = grid.coord("r")
    h = grid.spacings[0]
    n = r.size
    r_end = r[-1] + h

    # enclosed mass from the origin; the integrand r^2 rho vanishes at r = 0
    # and u(r_end) = 0 box boundary keeps the last ghost value irrelevant
    nodes = np.concatenate([[0.0], r])
    integrand = np.concatenate([[0.0], r**2 * rho])
    m_enc = 4.0 * np.pi * cumulative_simpson(integrand, x=nodes, initial=0.0)
    m_total = float(m_enc[-1])

    rhs = 4.0 * np.pi * newton_g * r * rho
    # xi'' = rhs, xi(0) = 0, xi(r_end) = r_end Phi(r_end) = -G M_total
    xi_end = -newton_g * m_total
    ab = np.zeros((3, n))
    ab[0, 1:] = 1.0
    ab[1] = -2.0
    ab[2, :-1] = 1.0
    b = rhs * h * h
    b[-1] -= xi_end
    xi = sla.solve_banded((1, 1), ab, b)
    return xi / r


def solve_metric_weak_field(tensor: QuantumStressTensor, cfg: GravityConfig) -> MetricField:
    """Linearized static metric sourced by the (static, decaying) tensor."""
    rgrid, rho_eff = effective_source(tensor)
    scale = float(np.max(np.abs(rho_eff)))
    if scale > 0.0 and abs(float(rho_eff[-1])) > _DECAY_TOL * scale:
        raise BoundaryConditionError(
            "source does not decay at the outer boundary; the monopole "
            "matching Phi(r_end) = -G M / r_end would be invalid")
    phi = _poisson_radial(rho_eff, rgrid, cfg.newton_g)
    return MetricField.static_weak_field(rgrid, phi)


def potential_from_metric(g: MetricField) -> np.ndarray:
    """Recover Phi = (g_00 - 1) / 2 on the metric grid."""
    return 0.5 * (g.diag[..., 0] - 1.0)


def poisson_residual(g: MetricField, tensor: QuantumStressTensor,
                     cfg: GravityConfig) -> float:
    """max |Phi - Phi(solve(source))|: fixed-point mismatch of the metric side."""
    fresh = solve_metric_weak_field(tensor, cfg)
    return float(np.max(np.abs(potential_from_metric(g) - potential_from_metric(fresh))))


# ---------------------------------------------------------------------------
# covariant radial eigenproblem
# ---------------------------------------------------------------------------


def _metric_radial_profiles(g: MetricField) -> tuple[Grid, np.ndarray, np.ndarray]:
    grid = g.grid
    if grid.axes == ("r",):
        return grid, g.diag[..., 0], -g.diag[..., 1]
    if grid.axes == ("t", "r"):
        rgrid = Grid.radial(grid.counts[1], grid.spacings[1])
        return rgrid, g.diag[0, :, 0], -g.diag[0, :, 1]
    raise DomainError(f"need a radial metric grid, got {grid.axes}")


def _radial_operator(g: MetricField, v, m: float):
    """Matrices (H, B) of the u-form eigenproblem H u = E^2 B u.

    Dirichlet ghosts u(0) = u(r_end) = 0 close both the second- and the
    first-derivative stencils, so the flat-metric matrix is exactly the
    1D Dirichlet operator of the flat solver.
    """
    rgrid, a, b = _metric_radial_profiles(g)
    r = rgrid.coord("r")
    h = rgrid.spacings[0]
    n = r.size
    q = (m * C_LIGHT) ** 2 - 2.0 * m * sample_on_grid(rgrid, v)

    inv_h2 = HBAR**2 / (h * h)
    H = np.zeros((n, n))
    idx = np.arange(n)
    H[idx, idx] = 2.0 * inv_h2 + q * b
    H[idx[:-1], idx[:-1] + 1] = -inv_h2
    H[idx[1:], idx[1:] - 1] = -inv_h2

    flat = bool(np.all(a == 1.0) and np.all(b == 1.0))
    if not flat:
        dln_c = first_derivative(0.5 * (np.log(a) - np.log(b)), h, 0)
        d1 = np.zeros((n, n))
        d1[idx[:-1], idx[:-1] + 1] = 0.5 / h
        d1[idx[1:], idx[1:] - 1] = -0.5 / h
        # ghost values are zero, so the edge rows keep only one neighbor
        H -= HBAR**2 * dln_c[:, None] * (d1 - np.diag(1.0 / r))
    B = np.diag(b / a)
    return rgrid, H, B, flat


def covariant_stationary_solve(g: MetricField, v=None, cfg: GravityConfig | None = None,
                               m: float = 1.0, state_index: int = 0,
                               time_points: int = 8) -> RadialState | None:
    """Ground (or state_index-th) eigenpair of the covariant radial problem.

    Returns None when no admissible (real, positive E^2) eigenvalue
    exists.  The returned pair lives on a ("t", "r") grid with S = -E t,
    under which the covariant continuity law holds identically.
    """
    if cfg is not None:
        m = cfg.mass
        time_points = cfg.time_points
    rgrid, H, B, flat = _radial_operator(g, v, m)
    if flat:
        lam, vecs = sla.eigh(H)
        lam = lam.astype(complex)
    else:
        lam, vecs = sla.eig(H, B)
    real_ok = np.abs(lam.imag) <= 1e-9 * np.maximum(np.abs(lam.real), 1.0)
    pos_ok = lam.real > 0.0
    order = np.argsort(lam.real)
    admissible = [k for k in order if real_ok[k] and pos_ok[k]]
    if state_index >= len(admissible):
        return None
    k = admissible[state_index]
    energy = float(np.sqrt(lam[k].real))
    u = np.real(vecs[:, k])
    if u[np.argmax(np.abs(u))] < 0:
        u = -u
    resid = float(np.max(np.abs(H @ u - lam[k].real * (B @ u))) / np.max(np.abs(u)))

    r = rgrid.coord("r")
    radial = u / r
    # Appendix normalization: 4 pi integral r^2 P dr = 1 with P = (E/m^2) R^2
    h = rgrid.spacings[0]
    norm = 4.0 * np.pi * np.trapezoid(r**2 * radial**2, dx=h)
    radial = radial * np.sqrt((m * C_LIGHT) ** 2 / (energy * norm))

    tr_grid = Grid.time_radial(time_points, h, rgrid.counts[0], h)
    t = tr_grid.coord("t")[:, None]
    amplitude = np.broadcast_to(radial[None, :], tr_grid.shape).copy()
    action = np.broadcast_to(-energy * t, tr_grid.shape).copy()
    pair = MadelungPair(tr_grid, amplitude, action,
                        np.zeros(tr_grid.shape, dtype=bool), 0.0)
    return RadialState(energy, pair, resid, radial)


def metric_on_time_grid(g: MetricField, time_points: int) -> MetricField:
    """Broadcast a radial metric onto the ("t", "r") grid of the pairs."""
    rgrid, a, b = _metric_radial_profiles(g)
    h = rgrid.spacings[0]
    tr_grid = Grid.time_radial(time_points, h, rgrid.counts[0], h)
    diag = np.empty(tr_grid.shape + (4,))
    diag[..., 0] = a[None, :]
    diag[..., 1] = -b[None, :]
    diag[..., 2] = -1.0
    diag[..., 3] = -1.0
    return MetricField(tr_grid, diag)


# ---------------------------------------------------------------------------
# coupled fixed point
# ---------------------------------------------------------------------------


def _source_tensor(state: RadialState, g_radial: MetricField, cfg: GravityConfig):
    tr_metric = metric_on_time_grid(g_radial, cfg.time_points)
    tensor = matter_tensor(state.pair, tr_metric, cfg.mass)
    if cfg.matter_density is not None:
        tensor = tensor + external_dust_tensor(tensor.grid, cfg.matter_density)
    return tensor


def coupled_solve(cfg: GravityConfig) -> CoupledResult:
    """Alternating metric/eigenstate fixed point with under-relaxation.

    Starts from the flat-space solution, stops when the largest metric
    potential change drops below the tolerance, and raises
    NonConvergenceError when the change grows three iterations in a row
    (the coupled system is genuinely nonlinear).  Hitting the iteration
    cap returns a flagged partial result instead of raising.
    """
    rgrid = cfg.radial_grid()
    phi = np.zeros(rgrid.counts[0])
    metric = MetricField.static_weak_field(rgrid, phi)
    state = covariant_stationary_solve(metric, cfg.scalar_potential, cfg)
    if state is None:
        raise NonConvergenceError("no admissible flat-space starting state")

    records: list[IterationRecord] = []
    converged = False
    growth_run = 0
    prev_change = None
    for it in range(1, cfg.max_iterations + 1):
        tensor = _source_tensor(state, metric, cfg)
        fresh = solve_metric_weak_field(tensor, cfg)
        delta = potential_from_metric(fresh) - phi
        change = float(np.max(np.abs(delta)))
        phi = phi + cfg.relaxation * delta
        metric = MetricField.static_weak_field(rgrid, phi)
        state = covariant_stationary_solve(metric, cfg.scalar_potential, cfg)
        if state is None:
            raise NonConvergenceError("eigenstate lost during iteration", records)
        records.append(IterationRecord(it, state.energy, change, state.residual))
        if prev_change is not None and change > prev_change:
            growth_run += 1
            if growth_run >= 3:
                raise NonConvergenceError(
                    f"metric change grew three iterations in a row (last {change:.3e})",
                    records)
        else:
            growth_run = 0
        prev_change = change
        if change < cfg.tolerance:
            converged = True
            break

    tensor = _source_tensor(state, metric, cfg)
    fp_resid = poisson_residual(metric, tensor, cfg)
    return CoupledResult(metric, state.pair, state.energy, tuple(records),
                         converged, fp_resid, state.residual)
