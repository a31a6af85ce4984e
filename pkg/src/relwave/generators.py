"""Built-in initial data and potential generators, plus columnar file I/O.

Plane waves use the convention psi = exp[i(k x - E t)] with
E = +sqrt(m^2 + k^2) on the positive-frequency branch; the negative
branch flips the sign of E.  Packet initial data is synthesized in
Fourier space so every mode starts exactly on the chosen branch.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigurationError, DomainError
from .fieldsolver import ComplexField
from .geometry import HBAR, Grid, sample_on_grid


def dispersion_energy(k, m: float):
    return np.sqrt((m * 1.0) ** 2 + np.asarray(k) ** 2)


def plane_wave_initial(grid: Grid, k: float, m: float = 1.0, branch: int = 1,
                       amplitude: float = 1.0) -> tuple[ComplexField, ComplexField]:
    """psi0 = A e^{i k x}, psidot0 = -i branch E_k psi0 on an ('x',) grid."""
    if grid.axes != ("x",):
        raise DomainError("plane-wave initial data needs an ('x',) grid")
    x = grid.coord("x")
    psi = amplitude * np.exp(1j * k * x)
    energy = float(dispersion_energy(k, m))
    return (ComplexField(grid, psi),
            ComplexField(grid, -1j * branch * energy * psi / HBAR))


def periodic_wavenumber(grid: Grid, mode: int) -> float:
    """k = 2 pi mode / L for the periodic box of length L = n dx."""
    n = grid.counts[grid.axis_index("x")]
    length = n * grid.spacing("x")
    return 2.0 * np.pi * mode / length


def gaussian_packet_initial(grid: Grid, x0: float, sigma: float, k_mean: float,
                            m: float = 1.0, branch: int = 1,
                            amplitude: float = 1.0) -> tuple[ComplexField, ComplexField]:
    """Gaussian envelope exp(-(x-x0)^2/4 sigma^2) e^{i k x}, single-branch start.

    The time derivative is built mode by mode (psidot = -i branch E_k psi_k
    under the periodic FFT), so the packet carries no admixture of the
    opposite frequency branch.
    """
    if grid.axes != ("x",):
        raise DomainError("packet initial data needs an ('x',) grid")
    x = grid.coord("x")
    n = grid.counts[0]
    dx = grid.spacings[0]
    psi = amplitude * np.exp(-((x - x0) ** 2) / (4.0 * sigma**2)) * np.exp(1j * k_mean * x)
    k_modes = 2.0 * np.pi * np.fft.fftfreq(n, d=dx)
    energies = dispersion_energy(k_modes, m)
    psidot = np.fft.ifft(-1j * branch * energies * np.fft.fft(psi)) / HBAR
    return ComplexField(grid, psi), ComplexField(grid, psidot)


def plane_wave_field(grid: Grid, k: float, m: float = 1.0, branch: int = 1,
                     amplitude: float = 1.0) -> ComplexField:
    """Analytically sampled psi = A exp[i(k x - branch E t)] on ('t', 'x')."""
    if grid.axes != ("t", "x"):
        raise DomainError("plane-wave field needs a ('t', 'x') grid")
    mesh = grid.mesh()
    energy = float(dispersion_energy(k, m))
    vals = amplitude * np.exp(1j * (k * mesh["x"] - branch * energy * mesh["t"]) / HBAR)
    return ComplexField(grid, vals)


def square_well(grid: Grid, depth: float, width: float, center: float = 0.0):
    """Attractive square well V = -depth inside |x - center| < width/2."""
    x = grid.coord("x")
    v = np.where(np.abs(x - center) < 0.5 * width, -float(depth), 0.0)
    return v


def constant_potential(grid: Grid, value: float):
    return np.full(grid.shape, float(value))


def load_columnar(path) -> np.ndarray:
    """Read a whitespace-separated columnar text file ('#' comments)."""
    data = np.loadtxt(path, comments="#", ndmin=2)
    if data.shape[1] < 2:
        raise ConfigurationError(f"{path}: need at least two columns (x, value)")
    return data


def potential_from_file(grid: Grid, path):
    """Interpolate (x, value) pairs from a columnar file onto the grid."""
    data = load_columnar(path)
    x = grid.coord("x")
    if x[0] < data[0, 0] - 1e-9 or x[-1] > data[-1, 0] + 1e-9:
        raise ConfigurationError(f"{path}: tabulated range does not cover the grid")
    return np.interp(x, data[:, 0], data[:, 1])


def initial_data_from_file(grid: Grid, path) -> tuple[ComplexField, ComplexField]:
    """Columns x, Re psi, Im psi[, Re psidot, Im psidot]."""
    data = load_columnar(path)
    x = grid.coord("x")
    if data.shape[1] < 3:
        raise ConfigurationError(f"{path}: need columns x, Re(psi), Im(psi)")
    psi = np.interp(x, data[:, 0], data[:, 1]) + 1j * np.interp(x, data[:, 0], data[:, 2])
    if data.shape[1] >= 5:
        psidot = (np.interp(x, data[:, 0], data[:, 3])
                  + 1j * np.interp(x, data[:, 0], data[:, 4]))
    else:
        psidot = np.zeros_like(psi)
    return ComplexField(grid, psi), ComplexField(grid, psidot)


def scalar_potential(grid: Grid, kind: str, **params):
    """Config-key dispatch for scalar potentials."""
    if kind == "none":
        return np.zeros(grid.shape)
    if kind == "constant":
        return constant_potential(grid, params["value"])
    if kind == "square_well":
        return square_well(grid, params["depth"], params["width"],
                           params.get("center", 0.0))
    if kind == "file":
        return potential_from_file(grid, params["path"])
    if kind == "callable":
        return sample_on_grid(grid, params["fn"])
    raise ConfigurationError(f"unknown potential kind {kind!r}")
