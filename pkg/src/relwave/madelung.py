"""Amplitude/phase decomposition and everything built on top of it.

Writing psi = R exp(i S / hbar) splits the second-order amplitude
equation into a continuity law for the flux R^2 d^a S / m and a
Hamilton-Jacobi-type relation whose non-classical term is the
statistical potential V_Q = -hbar^2 box R / (2 m R).  This module houses
the decomposition, both residuals, the conserved four-current and its
branch-normalized time component, the second-order two-point expansion
check, mean four-momentum integrals, and trajectory integration in the
effective potential V + V_Q.

Sign conventions (signature +,-,-,-): the positive-frequency plane wave
exp[i(kx - Et)] carries four-current j = (E/m, k/m) and phase gradient
d^a S = (-E, -k); the four-current therefore equals MINUS the Madelung
flux, j^a = -R^2 d^a S / m.  Trajectories use p^a = d^a S as the seed
momentum, so positive-frequency states flow backward in coordinate time
(the negative-energy bookkeeping the +/- m c normalization absorbs).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import (BranchMismatchWarning, DegenerateFieldError, DomainError)
from .fieldsolver import ComplexField
from .geometry import (AXIS_SLOT, HBAR, C_LIGHT, FourVector, Grid,
                       MetricField, dalembertian, first_derivative,
                       sample_on_grid)
from .phasespace import ETA


@dataclass(frozen=True)
class MadelungPair:
    """Nonnegative amplitude R and unwrapped action-phase S on a grid."""

    grid: Grid
    amplitude: np.ndarray = field(repr=False)
    action: np.ndarray = field(repr=False)
    node_mask: np.ndarray = field(repr=False)
    node_threshold: float = 0.0

    def __post_init__(self):
        for name in ("amplitude", "action"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != self.grid.shape:
                raise DomainError(f"{name} shape {arr.shape} does not match grid")
            object.__setattr__(self, name, arr)
        if np.any(self.amplitude < 0.0):
            raise DomainError("amplitude must be nonnegative")

    @classmethod
    def from_arrays(cls, grid: Grid, amplitude, action) -> "MadelungPair":
        amplitude = np.broadcast_to(np.asarray(amplitude, dtype=float), grid.shape).copy()
        action = np.broadcast_to(np.asarray(action, dtype=float), grid.shape).copy()
        return cls(grid, amplitude, action, np.zeros(grid.shape, dtype=bool))


@dataclass(frozen=True)
class FourCurrentField:
    """Conserved current j^a with its discrete divergence as a diagnostic."""

    grid: Grid
    components: np.ndarray = field(repr=False)
    divergence: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class TrajectoryState:
    position: FourVector
    momentum: FourVector
    tau: float = 0.0


@dataclass(frozen=True)
class TrajectoryPath:
    tau: np.ndarray
    position: np.ndarray  # (n, 4)
    momentum: np.ndarray  # (n, 4)
    exited_grid: bool
    crossed_node: bool

    def final_state(self) -> TrajectoryState:
        return TrajectoryState(FourVector(self.position[-1]),
                               FourVector(self.momentum[-1]), float(self.tau[-1]))


# ---------------------------------------------------------------------------
# decomposition
# ---------------------------------------------------------------------------


def _unwrap_swept(phase: np.ndarray, anchor: int) -> np.ndarray:
    """Unwrap along the last axis outward from an anchor column, then stitch
    rows through that column (time-major sweep).

    Anchoring at the column where the amplitude stays largest keeps
    roundoff-level phases in far tails from polluting the core.
    """
    if phase.ndim == 1:
        out = np.empty_like(phase)
        out[anchor:] = np.unwrap(phase[anchor:])
        out[: anchor + 1] = np.unwrap(phase[: anchor + 1][::-1])[::-1]
        return out
    out = np.empty_like(phase)
    out[..., anchor:] = np.unwrap(phase[..., anchor:], axis=-1)
    out[..., : anchor + 1] = np.unwrap(phase[..., : anchor + 1][..., ::-1],
                                       axis=-1)[..., ::-1]
    lead = out[..., anchor]
    stitched = np.unwrap(lead, axis=0)
    return out + (stitched - lead)[..., None]


def decompose(psi: ComplexField, eps_node: float = 1e-8) -> MadelungPair:
    """R = |psi|, S = hbar * unwrapped arg(psi).

    Points with R below eps_node * max R are flagged; their phase is
    replaced by linear interpolation along the sweep axis.
    """
    values = psi.values
    amplitude = np.abs(values)
    peak = float(amplitude.max())
    if peak == 0.0 or not np.isfinite(peak):
        raise DegenerateFieldError("field is zero everywhere")
    threshold = eps_node * peak
    mask = amplitude < threshold
    if mask.all():
        raise DegenerateFieldError("field is below the node threshold everywhere")
    if amplitude.ndim == 1:
        anchor = int(np.argmax(amplitude))
    else:
        anchor = int(np.argmax(np.min(amplitude.reshape(-1, amplitude.shape[-1]), axis=0)))
    phase = _unwrap_swept(np.angle(values), anchor)
    if mask.any():
        flat_phase = phase.reshape(-1, phase.shape[-1])
        flat_mask = mask.reshape(-1, mask.shape[-1])
        idx = np.arange(phase.shape[-1])
        for row_p, row_m in zip(flat_phase, flat_mask):
            if row_m.any() and not row_m.all():
                row_p[row_m] = np.interp(idx[row_m], idx[~row_m], row_p[~row_m])
    return MadelungPair(psi.grid, amplitude, HBAR * phase, mask, threshold)


def recompose(mp: MadelungPair) -> ComplexField:
    return ComplexField(mp.grid, mp.amplitude * np.exp(1j * mp.action / HBAR))


# ---------------------------------------------------------------------------
# potentials and residuals
# ---------------------------------------------------------------------------


def _metric_or_flat(grid: Grid, g: MetricField | None) -> MetricField:
    if g is None:
        return MetricField.flat(grid)
    if g.grid != grid:
        raise DomainError("metric grid does not match field grid")
    return g


def quantum_potential(mp: MadelungPair, m: float = 1.0,
                      g: MetricField | None = None) -> np.ndarray:
    """V_Q = -hbar^2 box R / (2 m R); NaN marks masked (node) points."""
    g = _metric_or_flat(mp.grid, g)
    box_r = dalembertian(mp.amplitude, g)
    out = np.full(mp.grid.shape, np.nan)
    ok = ~mp.node_mask & (mp.amplitude > 0.0)
    out[ok] = -(HBAR**2) * box_r[ok] / (2.0 * m * mp.amplitude[ok])
    return out


def effective_potential(mp: MadelungPair, v=None, m: float = 1.0,
                        g: MetricField | None = None) -> np.ndarray:
    """V_eff = V + V_Q, the statistical potential driving trajectories."""
    return sample_on_grid(mp.grid, v) + quantum_potential(mp, m, g)


def _weighted_divergence(flux_by_axis: dict[int, np.ndarray], grid: Grid,
                         weight: np.ndarray) -> np.ndarray:
    out = np.zeros(grid.shape)
    for i, flux in flux_by_axis.items():
        out = out + first_derivative(weight * flux, grid.spacings[i], i)
    return out / weight


def continuity_residual(mp: MadelungPair, g: MetricField | None = None,
                        m: float = 1.0) -> np.ndarray:
    """Covariant divergence of the flux R^2 grad^mu S / m (zero on shell)."""
    g = _metric_or_flat(mp.grid, g)
    grid = mp.grid
    weight = grid.reduction_weight() * g.sqrt_abs_det()
    g_inv = g.inverse_diag()
    flux = {}
    for i, name in enumerate(grid.axes):
        slot = AXIS_SLOT[name]
        ds = first_derivative(mp.action, grid.spacings[i], i)
        flux[i] = g_inv[..., slot] * mp.amplitude**2 * ds / m
    return _weighted_divergence(flux, grid, weight)


def hamilton_jacobi_residual(mp: MadelungPair, v=None, g: MetricField | None = None,
                             m: float = 1.0) -> np.ndarray:
    """-hbar^2 box R/(2mR) + V - mc^2/2 + grad_b S grad^b S/(2m)."""
    g = _metric_or_flat(mp.grid, g)
    grid = mp.grid
    g_inv = g.inverse_diag()
    contraction = np.zeros(grid.shape)
    for i, name in enumerate(grid.axes):
        slot = AXIS_SLOT[name]
        ds = first_derivative(mp.action, grid.spacings[i], i)
        contraction = contraction + g_inv[..., slot] * ds**2
    vq = quantum_potential(mp, m, g)
    return (vq + sample_on_grid(grid, v)
            - 0.5 * m * C_LIGHT**2 + contraction / (2.0 * m))


# ---------------------------------------------------------------------------
# four-current and probability density
# ---------------------------------------------------------------------------


def four_current(psi: ComplexField, m: float = 1.0) -> FourCurrentField:
    """j^a = (i hbar / 2m)[psi* d^a psi - psi d^a psi*] plus its divergence."""
    grid = psi.grid
    comps = np.zeros(grid.shape + (4,))
    flux = {}
    for i, name in enumerate(grid.axes):
        slot = AXIS_SLOT[name]
        dpsi = first_derivative(psi.values, grid.spacings[i], i)
        raised = ETA[slot] * dpsi
        j = (1j * HBAR / (2.0 * m)) * (np.conj(psi.values) * raised
                                       - psi.values * np.conj(raised))
        comps[..., slot] = j.real
        flux[i] = comps[..., slot]
    weight = grid.reduction_weight()
    div = _weighted_divergence(flux, grid, weight)
    return FourCurrentField(grid, comps, div)


def detect_branch(psi: ComplexField, m: float = 1.0) -> int:
    """+1 when the total j^0 is positive (particle), else -1 (antiparticle)."""
    j0 = four_current(psi, m).components[..., 0]
    return 1 if float(psi.grid.integrate(j0)) >= 0.0 else -1


def probability_density(psi: ComplexField, m: float = 1.0, branch="auto",
                        mixed_tol: float = 1e-6) -> np.ndarray:
    """P = j^0 / (+- m c); positive for the matched branch.

    When the negative-part integral exceeds `mixed_tol` times the positive
    one a BranchMismatchWarning reports both partial integrals.
    """
    if isinstance(branch, str):
        sign = detect_branch(psi, m) if branch == "auto" else {"particle": 1,
                                                               "antiparticle": -1}[branch]
    else:
        sign = int(branch)
    j0 = four_current(psi, m).components[..., 0]
    p_dens = j0 / (sign * m * C_LIGHT)
    if float(p_dens.min()) < 0.0:
        pos = float(psi.grid.integrate(np.where(p_dens > 0, p_dens, 0.0)))
        neg = float(psi.grid.integrate(np.where(p_dens < 0, p_dens, 0.0)))
        if abs(neg) > mixed_tol * max(pos, 1e-300):
            warnings.warn(
                f"probability density has mixed signs on the chosen branch "
                f"(positive part {pos:.6e}, negative part {neg:.6e})",
                BranchMismatchWarning)
    return p_dens


def total_probability(psi: ComplexField, m: float = 1.0, branch="auto",
                      periodic: bool = False) -> np.ndarray:
    """Spatial integral of P at each stored time level (t-conserved)."""
    grid = psi.grid
    if grid.axes[0] != "t":
        raise DomainError("total_probability needs a time-major history")
    p_dens = probability_density(psi, m, branch)
    weight = grid.reduction_weight()
    out = p_dens * weight
    for i in range(grid.ndim - 1, 0, -1):
        if periodic:
            out = grid.spacings[i] * np.sum(out, axis=i)
        else:
            out = np.trapezoid(out, dx=grid.spacings[i], axis=i)
    if "r" in grid.axes:
        out = out * 4.0 * np.pi
    return out


def normalize_to_unit_probability(psi: ComplexField, m: float = 1.0, branch="auto",
                                  periodic: bool = False) -> ComplexField:
    """Rescale so the mid-history total probability equals one."""
    totals = total_probability(psi, m, branch, periodic)
    mid = float(totals[len(totals) // 2])
    if mid <= 0.0:
        raise DomainError("total probability is not positive; wrong branch?")
    return ComplexField(psi.grid, psi.values / np.sqrt(mid))


# ---------------------------------------------------------------------------
# second-order two-point expansion
# ---------------------------------------------------------------------------


def expansion_check(mp: MadelungPair, point: tuple[int, ...], delta: FourVector) -> float:
    """|exact two-point product - second-order expansion| at one base point.

    The separation must lie along a single grid axis and land on grid
    points when halved; exact values come from the recomposed amplitude,
    the expansion from centered derivatives of R and S at the base point.
    """
    grid = mp.grid
    nonzero = [s for s in range(4) if delta[s] != 0.0]
    if len(nonzero) > 1:
        raise DomainError("expansion check needs a single-axis separation")
    psi = recompose(mp).values
    pt = tuple(int(i) for i in point)
    if not grid.contains_index(pt):
        raise DomainError(f"base point {point} outside grid")
    if not nonzero:
        return 0.0
    slot = nonzero[0]
    axis_name = {AXIS_SLOT[a]: a for a in grid.axes}.get(slot)
    if axis_name is None:
        raise DomainError(f"grid has no axis for four-vector slot {slot}")
    ax = grid.axis_index(axis_name)
    h = grid.spacings[ax]
    steps = delta[slot] / (2.0 * h)
    if abs(steps - round(steps)) > 1e-9:
        raise DomainError("separation must be an even multiple of the axis spacing")
    s = int(round(steps))
    i = pt[ax]
    n = grid.counts[ax]
    if not (0 < i < n - 1 and 0 <= i - abs(s) and i + abs(s) < n):
        raise DomainError("shifted points leave the grid")

    def at(offset: int):
        idx = list(pt)
        idx[ax] = i + offset
        return tuple(idx)

    exact = np.conj(psi[at(-s)]) * psi[at(s)]
    ds = (mp.action[at(1)] - mp.action[at(-1)]) / (2.0 * h)
    dr = (mp.amplitude[at(1)] - mp.amplitude[at(-1)]) / (2.0 * h)
    d2r = (mp.amplitude[at(1)] - 2.0 * mp.amplitude[pt] + mp.amplitude[at(-1)]) / h**2
    r0 = mp.amplitude[pt]
    sep = delta[slot]
    expansion = (np.exp(1j * ds * sep / HBAR)
                 * (r0**2 - (sep / 2.0) ** 2 * (dr**2 - r0 * d2r)))
    return float(abs(exact - expansion))


# ---------------------------------------------------------------------------
# mean four-momentum
# ---------------------------------------------------------------------------


def mean_four_momentum_amplitude(psi: ComplexField) -> FourVector:
    """integral (hbar/2i)[psi d^a psi* - psi* d^a psi] d^n x (not normalized)."""
    grid = psi.grid
    comps = np.zeros(4)
    for i, name in enumerate(grid.axes):
        slot = AXIS_SLOT[name]
        dpsi = first_derivative(psi.values, grid.spacings[i], i)
        raised = ETA[slot] * dpsi
        integrand = (HBAR / 2j) * (psi.values * np.conj(raised)
                                   - np.conj(psi.values) * raised)
        comps[slot] = float(np.real(grid.integrate(integrand)))
    return FourVector(comps)


def amplitude_norm(psi: ComplexField) -> float:
    """integral |psi|^2 d^n x with the same quadrature as the mean integrals."""
    return float(np.real(psi.grid.integrate(np.abs(psi.values) ** 2)))


def amplitude_density_provider(psi: ComplexField, periodic_x: bool = True):
    """Region-mean two-point density delta -> <psi*(x+d/2) psi(x-d/2)>.

    Matches the transform-side ordering (the one under which
    -i hbar d/d(dx) extracts +E for positive-frequency states).  Spatial
    shifts wrap when periodic_x; time shifts crop the history, and the
    mean over the cropped base region keeps the normalization unbiased.
    Separations must be even multiples of the grid spacings.
    """
    grid = psi.grid
    if grid.axes != ("t", "x"):
        raise DomainError("amplitude density provider needs a ('t', 'x') history")
    dt_, dx_ = grid.spacings

    def provider(delta: FourVector) -> complex:
        st = delta[0] / (2.0 * dt_)
        sx = delta[1] / (2.0 * dx_)
        if abs(st - round(st)) > 1e-9 or abs(sx - round(sx)) > 1e-9:
            raise DomainError("separation must align with the grid (even multiples)")
        st, sx = int(round(st)), int(round(sx))
        vals = psi.values
        if sx != 0:
            if periodic_x:
                plus = np.roll(vals, -sx, axis=1)
                minus = np.roll(vals, sx, axis=1)
            else:
                raise DomainError("non-periodic spatial shifts are not supported")
        else:
            plus = minus = vals
        if st != 0:
            nt, a = vals.shape[0], abs(st)
            if 2 * a >= nt:
                raise DomainError("time separation larger than the stored history")
            product = (np.conj(plus[a + st: nt - a + st])
                       * minus[a - st: nt - a - st])
        else:
            product = np.conj(plus) * minus
        return complex(np.mean(product))

    return provider


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------


def _interp_linear_2d(field_vals: np.ndarray, grid: Grid, t: float, x: float) -> float:
    val, inside = kernels._bilinear(field_vals, grid.origins[0], grid.spacings[0],
                                    grid.origins[1], grid.spacings[1], t, x)
    if not inside:
        raise DomainError(f"point (t={t}, x={x}) outside grid")
    return val


def integrate_trajectory(seed: FourVector, mp: MadelungPair, v=None,
                         m: float = 1.0, tau_span: float = 1.0, dtau: float = 1e-3,
                         use_numba: bool | None = None) -> TrajectoryPath:
    """Integrate dx^a/dtau = p^a/m, dp^a/dtau = -d^a V_eff with RK4.

    The seed momentum is the phase gradient p^a = d^a S at the seed point.
    Paths are truncated with a flag when they leave the grid; entering a
    node region (R below the decomposition threshold) sets another flag.
    """
    grid = mp.grid
    if grid.axes != ("t", "x"):
        raise DomainError("trajectories need a ('t', 'x') field")
    v_eff = effective_potential(mp, v, m)
    v_eff = np.where(np.isfinite(v_eff), v_eff, 0.0)
    dt_, dx_ = grid.spacings
    # acc^a = -d^a V_eff; raising flips the sign of the spatial derivative
    acc0 = -first_derivative(v_eff, dt_, 0)
    acc1 = first_derivative(v_eff, dx_, 1)

    ds_t = first_derivative(mp.action, dt_, 0)
    ds_x = first_derivative(mp.action, dx_, 1)
    t0, x0 = seed[0], seed[1]
    r_here = _interp_linear_2d(mp.amplitude, grid, t0, x0)
    if r_here < mp.node_threshold:
        raise DomainError("seed point sits inside a node region")
    p0 = _interp_linear_2d(ds_t, grid, t0, x0)
    p1 = -_interp_linear_2d(ds_x, grid, t0, x0)

    nsteps = max(1, int(round(tau_span / dtau)))
    ts, xs, p0s, p1s, exited, crossed = kernels.integrate_rk4(
        (t0, x0, p0, p1), acc0, acc1, mp.amplitude,
        grid.origins[0], dt_, grid.origins[1], dx_,
        dtau, nsteps, m, mp.node_threshold, use_numba=use_numba)

    n = ts.shape[0]
    pos = np.zeros((n, 4))
    mom = np.zeros((n, 4))
    pos[:, 0], pos[:, 1] = ts, xs
    mom[:, 0], mom[:, 1] = p0s, p1s
    return TrajectoryPath(dtau * np.arange(n), pos, mom, exited, crossed)


def phase_gradient(mp: MadelungPair) -> np.ndarray:
    """Contravariant d^a S on the grid, shape (*grid.shape, 4)."""
    grid = mp.grid
    out = np.zeros(grid.shape + (4,))
    for i, name in enumerate(grid.axes):
        slot = AXIS_SLOT[name]
        out[..., slot] = ETA[slot] * first_derivative(mp.action, grid.spacings[i], i)
    return out
