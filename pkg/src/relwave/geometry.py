"""Grids, four-vectors, diagonal metrics and difference operators.

Everything downstream works in natural units (hbar = c = 1); the particle
mass m, charge e and Newton constant G are plain run parameters.  The
signature is (+,-,-,-), so for an on-shell plane wave d_beta S d^beta S =
m^2 and the wave operator reads box = d_t^2 - d_x^2 on flat 1+1 grids.

Reduced dimensionality conventions:

* flat spacetime work runs on ("t", "x") or ("x",) grids,
* gravity work runs on ("t", "r") or ("r",) grids, where the suppressed
  angular directions contribute the spherical volume weight r^2 to every
  divergence and integral,
* phase-space carriers may add momentum axes "p0", "p1".

Metric components are stored as the diagonal (g_00, g_11, g_22, g_33) per
grid point; the quasi-Cartesian flat constructor is exactly
diag(1, -1, -1, -1) on every grid, including radial ones.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, SingularMetricError

HBAR = 1.0
C_LIGHT = 1.0

#: four-vector slot addressed by each named grid axis
AXIS_SLOT = {"t": 0, "x": 1, "r": 1, "p0": 0, "p1": 1}
SPACETIME_AXES = ("t", "x", "r")
MOMENTUM_AXES = ("p0", "p1")


@dataclass(frozen=True)
class Grid:
    """Uniform tensor-product grid with named axes.

    ``extents == spacing * (count - 1)`` per axis by construction; every
    active axis carries at least 8 points.
    """

    axes: tuple[str, ...]
    counts: tuple[int, ...]
    spacings: tuple[float, ...]
    origins: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "axes", tuple(self.axes))
        object.__setattr__(self, "counts", tuple(int(n) for n in self.counts))
        object.__setattr__(self, "spacings", tuple(float(h) for h in self.spacings))
        object.__setattr__(self, "origins", tuple(float(o) for o in self.origins))
        if not (len(self.axes) == len(self.counts) == len(self.spacings) == len(self.origins)):
            raise DomainError("axes, counts, spacings and origins must have equal length")
        if len(set(self.axes)) != len(self.axes):
            raise DomainError(f"duplicate axis names in {self.axes}")
        for name in self.axes:
            if name not in AXIS_SLOT:
                raise DomainError(f"unknown axis name {name!r}")
        for name, n, h in zip(self.axes, self.counts, self.spacings):
            if h <= 0.0:
                raise DomainError(f"axis {name!r}: spacing must be positive, got {h}")
            if n < 8:
                raise DomainError(f"axis {name!r}: need at least 8 points, got {n}")

    # -- constructors -------------------------------------------------

    @classmethod
    def spacetime_1p1(cls, nt: int, dt: float, nx: int, dx: float,
                      x_min: float, t_min: float = 0.0) -> "Grid":
        return cls(("t", "x"), (nt, nx), (dt, dx), (t_min, x_min))

    @classmethod
    def spatial(cls, nx: int, dx: float, x_min: float) -> "Grid":
        return cls(("x",), (nx,), (dx,), (x_min,))

    @classmethod
    def radial(cls, nr: int, dr: float) -> "Grid":
        """Radial nodes r_j = dr * (j + 1); the origin r = 0 is excluded."""
        return cls(("r",), (nr,), (dr,), (dr,))

    @classmethod
    def time_radial(cls, nt: int, dt: float, nr: int, dr: float) -> "Grid":
        return cls(("t", "r"), (nt, nr), (dt, dr), (0.0, dr))

    # -- basic queries ------------------------------------------------

    @property
    def ndim(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.counts

    @property
    def extents(self) -> tuple[float, ...]:
        return tuple(h * (n - 1) for h, n in zip(self.spacings, self.counts))

    def axis_index(self, name: str) -> int:
        try:
            return self.axes.index(name)
        except ValueError:
            raise DomainError(f"grid has no axis {name!r} (axes: {self.axes})") from None

    def spacing(self, name: str) -> float:
        return self.spacings[self.axis_index(name)]

    def coord(self, name: str) -> np.ndarray:
        i = self.axis_index(name)
        return self.origins[i] + self.spacings[i] * np.arange(self.counts[i])

    def mesh(self) -> dict[str, np.ndarray]:
        arrays = np.meshgrid(*(self.coord(a) for a in self.axes), indexing="ij")
        return dict(zip(self.axes, arrays))

    def contains_index(self, point: tuple[int, ...]) -> bool:
        if len(point) != self.ndim:
            return False
        return all(0 <= int(i) < n for i, n in zip(point, self.counts))

    def reduction_weight(self) -> np.ndarray:
        """Coordinate-volume weight of the suppressed dimensions.

        r^2 on radial grids (spherical reduction), 1 elsewhere.  Enters
        every divergence, d'Alembertian and volume integral.
        """
        w = np.ones(self.shape)
        if "r" in self.axes:
            i = self.axis_index("r")
            r = self.coord("r")
            shape = [1] * self.ndim
            shape[i] = -1
            w = w * (r ** 2).reshape(shape)
        return w

    def refine(self, factor: int) -> "Grid":
        """Same extents, spacing divided by `factor` (counts (n-1)*factor+1)."""
        counts = tuple((n - 1) * factor + 1 for n in self.counts)
        spacings = tuple(h / factor for h in self.spacings)
        return Grid(self.axes, counts, spacings, self.origins)

    def integrate(self, values: np.ndarray) -> complex | float:
        """Trapezoidal integral over every grid axis (the reduced d^n x)."""
        out = np.asarray(values)
        for i in range(self.ndim - 1, -1, -1):
            out = np.trapezoid(out, dx=self.spacings[i], axis=i)
        return out


@dataclass(frozen=True)
class FourVector:
    """Contravariant four-vector (v0, v1, v2, v3); inactive slots stay 0."""

    components: np.ndarray

    def __post_init__(self):
        comp = np.array(self.components, dtype=float)
        if comp.shape != (4,):
            raise DomainError(f"four-vector needs 4 components, got shape {comp.shape}")
        if not np.all(np.isfinite(comp)):
            raise DomainError("four-vector components must be finite")
        comp.setflags(write=False)
        object.__setattr__(self, "components", comp)

    @classmethod
    def build(cls, v0: float = 0.0, v1: float = 0.0, v2: float = 0.0, v3: float = 0.0) -> "FourVector":
        return cls(np.array([v0, v1, v2, v3]))

    @classmethod
    def zero(cls) -> "FourVector":
        return cls(np.zeros(4))

    def __getitem__(self, i: int) -> float:
        return float(self.components[i])

    def scaled(self, s: float) -> "FourVector":
        return FourVector(self.components * s)

    def plus(self, other: "FourVector") -> "FourVector":
        return FourVector(self.components + other.components)

    def lower(self, g: "MetricField", point: tuple[int, ...]) -> np.ndarray:
        """Covariant components g_mu_mu v^mu at a grid point."""
        return g.at(point) * self.components


@dataclass(frozen=True)
class MetricField:
    """Diagonal metric g_mu_nu on a grid, signature (+,-,-,-)."""

    grid: Grid
    diag: np.ndarray
    signature: str = "+---"

    def __post_init__(self):
        diag = np.asarray(self.diag, dtype=float)
        if diag.shape != self.grid.shape + (4,):
            raise DomainError(
                f"metric diagonal shape {diag.shape} does not match grid {self.grid.shape} + (4,)")
        object.__setattr__(self, "diag", diag)

    @classmethod
    def flat(cls, grid: Grid) -> "MetricField":
        diag = np.empty(grid.shape + (4,))
        diag[..., 0] = 1.0
        diag[..., 1:] = -1.0
        return cls(grid, diag)

    @classmethod
    def static_weak_field(cls, grid: Grid, phi) -> "MetricField":
        """g_00 = 1 + 2 phi, g_rr = -(1 - 2 phi), angular parts flat.

        `phi` may be a scalar, an array over the grid, or a radial profile
        broadcast over any leading time axis.
        """
        phi_arr = np.broadcast_to(np.asarray(phi, dtype=float), grid.shape)
        diag = np.empty(grid.shape + (4,))
        diag[..., 0] = 1.0 + 2.0 * phi_arr
        diag[..., 1] = -(1.0 - 2.0 * phi_arr)
        diag[..., 2] = -1.0
        diag[..., 3] = -1.0
        m = cls(grid, diag)
        m.validate_signature()
        return m

    def validate_signature(self):
        if not np.all(self.diag[..., 0] > 0.0):
            raise SingularMetricError("g_00 must stay positive everywhere")
        if not np.all(self.diag[..., 1:] < 0.0):
            raise SingularMetricError("spatial metric components must stay negative")

    def at(self, point: tuple[int, ...]) -> np.ndarray:
        if not self.grid.contains_index(tuple(point)):
            raise DomainError(f"point {point} outside grid of shape {self.grid.shape}")
        return self.diag[tuple(int(i) for i in point)]

    def is_flat(self) -> bool:
        return (np.all(self.diag[..., 0] == 1.0)
                and np.all(self.diag[..., 1:] == -1.0))

    def inverse_diag(self) -> np.ndarray:
        if np.any(np.abs(self.diag) < 1e-12):
            raise SingularMetricError("metric component below 1e-12, cannot invert")
        return 1.0 / self.diag

    def sqrt_abs_det(self) -> np.ndarray:
        return np.sqrt(np.abs(np.prod(self.diag, axis=-1)))

    def raise_components(self, covariant: np.ndarray, point: tuple[int, ...]) -> np.ndarray:
        g = self.at(point)
        if np.any(np.abs(g) < 1e-12):
            raise SingularMetricError("metric component below 1e-12, cannot invert")
        return covariant / g


@dataclass(frozen=True)
class ChristoffelField:
    """Connection coefficients Gamma^lam_mu_nu per grid point."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def at(self, point: tuple[int, ...]) -> np.ndarray:
        if not self.grid.contains_index(tuple(point)):
            raise DomainError(f"point {point} outside grid of shape {self.grid.shape}")
        return self.values[tuple(int(i) for i in point)]


def minkowski_dot(a: FourVector, b: FourVector, g: MetricField,
                  point: tuple[int, ...]) -> float:
    """g_mu_nu a^mu b^nu at a grid point."""
    return float(np.sum(g.at(point) * a.components * b.components))


# ---------------------------------------------------------------------------
# difference operators
# ---------------------------------------------------------------------------

def first_derivative(f: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Centered interior, second-order one-sided at the edges.

    Arrays constant along the axis return exact zeros (the one-sided edge
    formula would otherwise leave one-ulp residue).
    """
    f = np.asarray(f)
    if np.all(f == np.take(f, [0], axis=axis)):
        return np.zeros(f.shape, dtype=np.result_type(f.dtype, float))
    return np.gradient(f, h, axis=axis, edge_order=2)


def second_derivative(f: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Compact 3-point interior stencil, second-order one-sided at the edges."""
    f = np.moveaxis(np.asarray(f), axis, 0)
    if f.shape[0] < 4:
        raise DomainError("second_derivative needs at least 4 points along the axis")
    out = np.empty(f.shape, dtype=np.result_type(f.dtype, float))
    inv_h2 = 1.0 / (h * h)
    out[1:-1] = (f[2:] - 2.0 * f[1:-1] + f[:-2]) * inv_h2
    out[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) * inv_h2
    out[-1] = (2.0 * f[-1] - 5.0 * f[-2] + 4.0 * f[-3] - f[-4]) * inv_h2
    return np.moveaxis(out, 0, axis)


def _flux_divergence_term(f: np.ndarray, c: np.ndarray, h: float, axis: int) -> np.ndarray:
    """d_axis(c * d_axis f) in conservative form.

    Interior points use half-point coefficient averages (self-adjoint,
    reduces bit-for-bit to the compact stencil when c is constant);
    boundary rows expand to c f'' + c' f' with one-sided stencils.
    """
    f = np.moveaxis(np.asarray(f), axis, 0)
    c = np.moveaxis(np.asarray(c), axis, 0)
    out = np.empty(f.shape, dtype=np.result_type(f.dtype, float))
    inv_h2 = 1.0 / (h * h)
    c_half = 0.5 * (c[1:] + c[:-1])
    out[1:-1] = (c_half[1:] * (f[2:] - f[1:-1])
                 - c_half[:-1] * (f[1:-1] - f[:-2])) * inv_h2
    d2 = second_derivative(f, h, 0)
    d1 = np.gradient(f, h, axis=0, edge_order=2)
    dc = np.gradient(c, h, axis=0, edge_order=2)
    for edge in (0, -1):
        out[edge] = c[edge] * d2[edge] + dc[edge] * d1[edge]
    return np.moveaxis(out, 0, axis)


def dalembertian(f: np.ndarray, g: MetricField) -> np.ndarray:
    """Wave operator box f = (1/D) d_mu (D g^mu_mu d_mu f), D = W sqrt|g|.

    W is the spherical reduction weight (r^2 on radial grids).  On a flat
    ("t", "x") grid this is exactly d_t^2 f - d_x^2 f; on a static ("x",)
    or ("r",) grid only the (negative) spatial part survives.  Truncation
    is O(h^2) pointwise; on radial grids the 1/r^2 weight amplifies it
    near the coordinate origin, so accuracy there holds only for r >> h
    (the radial eigensolver sidesteps this through the u = r R form).
    """
    grid = g.grid
    f = np.asarray(f)
    if f.shape != grid.shape:
        raise DomainError(f"field shape {f.shape} does not match grid {grid.shape}")
    for name in grid.axes:
        if name not in SPACETIME_AXES:
            raise DomainError(f"dalembertian needs spacetime axes only, got {name!r}")
    if min(grid.counts) < 4:
        raise DomainError("dalembertian needs at least 4 points per active axis")
    weight = grid.reduction_weight() * g.sqrt_abs_det()
    g_inv = g.inverse_diag()
    out = np.zeros(grid.shape, dtype=np.result_type(f.dtype, float))
    for i, name in enumerate(grid.axes):
        slot = AXIS_SLOT[name]
        coeff = weight * g_inv[..., slot]
        out = out + _flux_divergence_term(f, coeff, grid.spacings[i], i)
    return out / weight


def christoffel_from_metric(g: MetricField) -> ChristoffelField:
    """Gamma^lam_mu_nu = 1/2 g^lam_lam (d_mu g_lam_nu + d_nu g_lam_mu - d_lam g_mu_nu).

    Derivatives along four-vector slots without a grid axis vanish (the
    reduced directions are symmetry directions).
    """
    grid = g.grid
    g_inv = g.inverse_diag()

    slot_axis = {}
    for i, name in enumerate(grid.axes):
        slot_axis[AXIS_SLOT[name]] = i

    def d_slot(arr: np.ndarray, slot: int) -> np.ndarray:
        # constant components short-circuit so constant metrics give exact zeros
        if slot not in slot_axis or np.all(arr == arr.flat[0]):
            return np.zeros(grid.shape)
        i = slot_axis[slot]
        return np.gradient(arr, grid.spacings[i], axis=i, edge_order=2)

    dg = np.zeros(grid.shape + (4, 4))  # dg[..., sigma, mu] = d_mu g_sigma_sigma
    for sigma in range(4):
        for mu in slot_axis:
            dg[..., sigma, mu] = d_slot(g.diag[..., sigma], mu)

    gamma = np.zeros(grid.shape + (4, 4, 4))
    for lam in range(4):
        for mu in range(4):
            for nu in range(4):
                term = np.zeros(grid.shape)
                if lam == nu:
                    term = term + dg[..., lam, mu]
                if lam == mu:
                    term = term + dg[..., lam, nu]
                if mu == nu:
                    term = term - dg[..., mu, lam]
                gamma[..., lam, mu, nu] = 0.5 * g_inv[..., lam] * term
    return ChristoffelField(grid, gamma)


def sample_on_grid(grid: Grid, spec) -> np.ndarray:
    """Materialize a field spec: None -> zeros, scalar/array -> broadcast,
    callable -> called with named coordinate meshes."""
    if spec is None:
        return np.zeros(grid.shape)
    if callable(spec):
        return np.broadcast_to(np.asarray(spec(**grid.mesh()), dtype=float),
                               grid.shape).copy()
    arr = np.asarray(spec, dtype=float)
    return np.broadcast_to(arr, grid.shape).copy()
