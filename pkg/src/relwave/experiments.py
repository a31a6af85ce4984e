"""Experiment drivers behind the CLI subcommands.

Each driver builds its problem from a validated RunConfig, writes
columnar data files (and optional SVG plots) into the output directory,
and returns a RunReport whose checks decide the exit code.
"""

from __future__ import annotations

import time
from pathlib import Path

import numpy as np

from . import generators as gen
from . import verify
from .config import RunConfig
from .errors import ConfigurationError
from .fieldsolver import PotentialConfig, evolve, stationary_solve
from .geometry import FourVector, Grid
from .gravity import GravityConfig, coupled_solve, potential_from_metric
from .madelung import (decompose, four_current, hamilton_jacobi_residual,
                       integrate_trajectory, phase_gradient,
                       probability_density, quantum_potential, recompose,
                       total_probability)
from .phasespace import PhaseSpaceDistribution, wigner_moyal_transform
from .plotting import export_columnar, svg_line_plot
from .report import CheckResult, RunReport


def _grid_from(cfg: RunConfig) -> Grid:
    g = cfg["grid"]
    return Grid.spatial(g["x_points"], g["x_spacing"], g["x_min"])


def _potential_from(section: dict, grid: Grid) -> PotentialConfig:
    kind = section["potential"]
    if kind == "none":
        return PotentialConfig.free(grid)
    if kind == "constant":
        return PotentialConfig.with_scalar(grid, section["potential_value"])
    if kind == "square_well":
        return PotentialConfig.with_scalar(
            grid, gen.square_well(grid, section["well_depth"], section["well_width"]))
    if kind == "file":
        return PotentialConfig.with_scalar(
            grid, gen.potential_from_file(grid, section["potential_file"]))
    raise ConfigurationError(f"unknown potential kind {kind!r}")


def _initial_from(section: dict, grid: Grid, mass: float):
    kind = section["generator"]
    if kind == "plane_wave":
        k = gen.periodic_wavenumber(grid, section["wave_mode"])
        return gen.plane_wave_initial(grid, k, mass, branch=section["branch"])
    if kind == "gaussian_packet":
        return gen.gaussian_packet_initial(grid, section["packet_center"],
                                           section["packet_sigma"],
                                           section["packet_momentum"], mass,
                                           branch=section["branch"])
    if kind == "file":
        return gen.initial_data_from_file(grid, section["initial_file"])
    raise ConfigurationError(f"unknown initial-data generator {kind!r}")


def run_evolve(cfg: RunConfig, outdir: Path, plots: bool) -> RunReport:
    t0 = time.perf_counter()
    rep = RunReport("evolve", cfg.config_hash)
    section = cfg["evolve"]
    mass = cfg["physics"]["mass"]
    charge = cfg["physics"]["charge"]
    grid = _grid_from(cfg)
    pot = _potential_from(section, grid)
    psi0, psidot0 = _initial_from(section, grid, mass)
    hist = evolve(psi0, psidot0, pot, steps=section["steps"], dt=section["dt"],
                  m=mass, charge=charge, boundary=section["boundary"])

    periodic = section["boundary"] == "periodic"
    totals = total_probability(hist, m=mass, periodic=periodic)
    t_axis = hist.grid.coord("t")
    export_columnar(outdir / "evolve_charge.txt",
                    {"t": t_axis[1:-1], "total_P": totals[1:-1]},
                    {"t": "1/mc^2", "total_P": "1"})
    mid = len(t_axis) - 1
    p_dens = probability_density(hist, m=mass)
    export_columnar(outdir / "evolve_final.txt",
                    {"x": grid.coord("x"),
                     "re_psi": hist.values[mid].real,
                     "im_psi": hist.values[mid].imag,
                     "P": p_dens[mid]},
                    {"x": "hbar/mc"})
    if plots:
        svg_line_plot(outdir / "evolve_final.svg",
                      [(grid.coord("x"), np.abs(hist.values[mid]), "|psi|"),
                       (grid.coord("x"), p_dens[mid], "P")],
                      title="final snapshot", xlabel="x", ylabel="amplitude")

    rep.add(CheckResult.flag("evolution finite", bool(np.all(np.isfinite(totals)))))
    if charge == 0.0:
        span = t_axis[-3] - t_axis[2]
        drift = float(np.max(np.abs(totals[2:-2] - totals[2]))) / max(span, 1e-30)
        rep.add(CheckResult.bound("charge drift per unit time", drift, 1e-6))
    rep.elapsed_seconds = time.perf_counter() - t0
    return rep


def run_stationary(cfg: RunConfig, outdir: Path, plots: bool) -> RunReport:
    t0 = time.perf_counter()
    rep = RunReport("stationary", cfg.config_hash)
    section = cfg["stationary"]
    mass = cfg["physics"]["mass"]
    grid = _grid_from(cfg)
    pot = _potential_from(section, grid)
    states = stationary_solve(pot, (section["window_low"], section["window_high"]),
                              m=mass, boundary=section["boundary"])
    rep.add(CheckResult.flag("window produced states", bool(states)))
    if states:
        export_columnar(outdir / "stationary_spectrum.txt",
                        {"index": np.arange(len(states)),
                         "energy": np.array([s.energy for s in states]),
                         "residual": np.array([s.residual for s in states])},
                        {"energy": "mc^2"})
        export_columnar(outdir / "stationary_ground.txt",
                        {"x": grid.coord("x"),
                         "re_psi": states[0].profile.real,
                         "im_psi": states[0].profile.imag},
                        {"x": "hbar/mc"})
        rep.add(CheckResult.bound("worst eigen residual",
                                  max(s.residual for s in states), 1e-8))
        if section["potential"] == "none" and section["boundary"] == "periodic":
            dx = grid.spacings[0]
            n = grid.counts[0]
            modes = 2.0 * np.pi * np.arange(n // 2 + 1) / (n * dx)
            disp = np.sqrt(mass**2 + (2.0 - 2.0 * np.cos(modes * dx)) / dx**2)
            worst = max(float(np.min(np.abs(abs(s.energy) - disp))) for s in states)
            rep.add(CheckResult.bound("free spectrum matches discrete dispersion",
                                      worst, 1e-8))
        if plots:
            svg_line_plot(outdir / "stationary_ground.svg",
                          [(grid.coord("x"), np.abs(states[0].profile), "|psi_0|")],
                          title="ground profile", xlabel="x")
    rep.elapsed_seconds = time.perf_counter() - t0
    return rep


def run_transform(cfg: RunConfig, outdir: Path, plots: bool, seed: int) -> RunReport:
    t0 = time.perf_counter()
    rep = RunReport("transform", cfg.config_hash)
    section = cfg["transform"]
    rng = np.random.default_rng(seed)
    zero = FourVector.zero()
    worst_neg, worst_imag = 0.0, 0.0
    for _ in range(section["mixtures"]):
        mix = verify._random_mixture(rng)
        x = FourVector.build(float(rng.uniform(-1, 1)), float(rng.uniform(-1, 1)))
        value = wigner_moyal_transform(mix, x, zero)
        worst_neg = min(worst_neg, value.real)
        worst_imag = max(worst_imag, abs(value.imag))
    rep.add(CheckResult(f"zero-separation positivity over {section['mixtures']} mixtures",
                        worst_neg, 1e-12, worst_neg >= -1e-12))
    rep.add(CheckResult.bound("zero-separation imaginary part", worst_imag, 1e-12))

    sig_x = section["carrier_sigma_x"]
    sig_p = section["carrier_sigma_p"]
    pbar = section["carrier_momentum"]
    npts = section["oracle_points"]
    npts += (npts + 1) % 2  # odd count keeps x = 0 on the grid
    carrier_grid = Grid(("x", "p1"), (npts, section["oracle_momentum_points"]),
                        (8 * sig_x / (npts - 1),
                         16 * sig_p / (section["oracle_momentum_points"] - 1)),
                        (-4 * sig_x, pbar - 8 * sig_p))
    gauss = PhaseSpaceDistribution.gaussian(mean_x=[0, 0], mean_p=[0, pbar],
                                            sigma_x=[0, sig_x], sigma_p=[0, sig_p],
                                            active=(1,))
    sampled = gauss.sample_on(carrier_grid)
    # stay within the controlled-separation regime hbar / sigma_p
    sep_max = 0.3 / sig_p
    seps = np.linspace(-sep_max, sep_max, 25)
    got = np.array([wigner_moyal_transform(sampled, zero, FourVector.build(0.0, float(s)))
                    for s in seps])
    want = np.array([wigner_moyal_transform(gauss, zero, FourVector.build(0.0, float(s)))
                     for s in seps])
    export_columnar(outdir / "transform_oracle.txt",
                    {"separation": seps, "re_rho": got.real, "im_rho": got.imag,
                     "re_closed": want.real, "im_closed": want.imag},
                    {"separation": "hbar/mc"})
    rep.add(CheckResult.bound("sampled transform vs Gaussian closed form",
                              float(np.max(np.abs(got - want))), 1e-8))
    if plots:
        svg_line_plot(outdir / "transform_oracle.svg",
                      [(seps, got.real, "Re rho (quadrature)"),
                       (seps, want.real, "Re rho (closed form)")],
                      title="two-point density vs separation", xlabel="separation")
    rep.elapsed_seconds = time.perf_counter() - t0
    return rep


def run_madelung(cfg: RunConfig, outdir: Path, plots: bool) -> RunReport:
    t0 = time.perf_counter()
    rep = RunReport("madelung", cfg.config_hash)
    section = cfg["madelung"]
    mass = cfg["physics"]["mass"]
    grid = _grid_from(cfg)
    psi0, psidot0 = gen.gaussian_packet_initial(grid, section["packet_center"],
                                                section["packet_sigma"],
                                                section["packet_momentum"], mass)
    hist = evolve(psi0, psidot0, steps=section["steps"], dt=section["dt"], m=mass)
    mp = decompose(hist)
    back = recompose(mp)
    ok = ~mp.node_mask
    rep.add(CheckResult.bound("decompose/recompose round trip",
                              float(np.max(np.abs(back.values[ok] - hist.values[ok]))),
                              1e-12))

    current = four_current(hist, m=mass)
    flux = phase_gradient(mp) * (mp.amplitude**2 / mass)[..., None]
    core = np.abs(hist.values) > 0.05 * np.abs(hist.values).max()
    equiv = max(float(np.max(np.abs((current.components[..., s] + flux[..., s])[core])))
                for s in (0, 1))
    h2 = max(hist.grid.spacings) ** 2
    rep.add(CheckResult.bound("current equivalence |j + R^2 grad S / m| (C h^2, C = 2)",
                              equiv, 2.0 * h2))

    hj = hamilton_jacobi_residual(mp, m=mass)
    rep.add(CheckResult.bound("Hamilton-Jacobi residual on the packet core (C h^2, C = 5)",
                              float(np.max(np.abs(hj[2:-2, 2:-2][core[2:-2, 2:-2]]))),
                              5.0 * h2))

    mid = len(hist.grid.coord("t")) // 2
    vq = quantum_potential(mp, m=mass)
    export_columnar(outdir / "madelung_fields.txt",
                    {"x": grid.coord("x"),
                     "R": mp.amplitude[mid],
                     "S": mp.action[mid],
                     "V_Q": np.nan_to_num(vq[mid])},
                    {"x": "hbar/mc", "S": "hbar", "V_Q": "mc^2"})
    if plots:
        svg_line_plot(outdir / "madelung_fields.svg",
                      [(grid.coord("x"), mp.amplitude[mid], "R"),
                       (grid.coord("x"), np.nan_to_num(vq[mid]), "V_Q")],
                      title="Madelung fields at mid-history", xlabel="x")
    rep.elapsed_seconds = time.perf_counter() - t0
    return rep


def run_trajectories(cfg: RunConfig, outdir: Path, plots: bool) -> RunReport:
    t0 = time.perf_counter()
    rep = RunReport("trajectories", cfg.config_hash)
    section = cfg["trajectories"]
    mass = cfg["physics"]["mass"]
    k = section["wave_momentum"]
    energy = float(np.hypot(mass, k))
    gtx = Grid.spacetime_1p1(101, 0.02, 201, 0.05, -5.0)
    mp = decompose(gen.plane_wave_field(gtx, k, mass))
    worst = 0.0
    series = []
    for idx in range(section["count"]):
        x_seed = -2.0 + idx * 4.0 / max(section["count"] - 1, 1)
        path = integrate_trajectory(FourVector.build(1.6, x_seed), mp, m=mass,
                                    tau_span=section["tau_span"],
                                    dtau=section["dtau"])
        export_columnar(outdir / f"trajectory_{idx}.txt",
                        {"tau": path.tau,
                         "t": path.position[:, 0], "x": path.position[:, 1],
                         "p0": path.momentum[:, 0], "p1": path.momentum[:, 1]},
                        {"tau": "1/mc^2", "p0": "mc", "p1": "mc"})
        t_line = 1.6 - energy * path.tau / mass
        x_line = x_seed - k * path.tau / mass
        worst = max(worst,
                    float(np.max(np.abs(path.position[:, 0] - t_line))),
                    float(np.max(np.abs(path.position[:, 1] - x_line))))
        series.append((path.position[:, 1], path.position[:, 0], f"seed {idx}"))
    rep.add(CheckResult.bound("plane-wave straight-line deviation", worst, 1e-9))
    if plots:
        svg_line_plot(outdir / "trajectories.svg", series, title="trajectories",
                      xlabel="x", ylabel="t", markers=True)
    rep.elapsed_seconds = time.perf_counter() - t0
    return rep


def run_gravity(cfg: RunConfig, outdir: Path, plots: bool) -> RunReport:
    t0 = time.perf_counter()
    rep = RunReport("gravity", cfg.config_hash)
    section = cfg["gravity"]
    gcfg = GravityConfig(newton_g=cfg["physics"]["newton_g"],
                         mass=cfg["physics"]["mass"],
                         r_end=section["r_end"], nr=section["r_points"],
                         relaxation=section["relaxation"],
                         max_iterations=section["max_iterations"],
                         tolerance=section["tolerance"])
    result = coupled_solve(gcfg)
    export_columnar(outdir / "gravity_trace.txt",
                    {"iteration": np.array([r.index for r in result.iterations]),
                     "energy": np.array([r.energy for r in result.iterations]),
                     "max_dphi": np.array([r.max_delta_phi for r in result.iterations]),
                     "eig_residual": np.array([r.eigen_residual for r in result.iterations])},
                    {"energy": "mc^2"})
    grid = gcfg.radial_grid()
    phi = potential_from_metric(result.metric)
    export_columnar(outdir / "gravity_profiles.txt",
                    {"r": grid.coord("r"),
                     "R": result.pair.amplitude[0],
                     "phi": phi},
                    {"r": "hbar/mc", "phi": "c^2"})
    rep.add(CheckResult.flag("fixed point converged", result.converged))
    rep.add(CheckResult.bound("fixed-point metric residual",
                              result.fixed_point_residual, 1e-8))
    rep.add(CheckResult.bound("eigenproblem residual", result.eigen_residual, 1e-8))
    rep.add(CheckResult(f"energy (statistical metric, G={gcfg.newton_g})",
                        result.energy, float("inf"), True))
    if gcfg.newton_g == 0.0:
        rep.add(CheckResult.bound("flat limit: max |Phi|",
                                  float(np.max(np.abs(phi))), 1e-8))
    if plots:
        svg_line_plot(outdir / "gravity_profiles.svg",
                      [(grid.coord("r"), result.pair.amplitude[0], "R"),
                       (grid.coord("r"), phi / max(np.max(np.abs(phi)), 1e-300), "Phi (scaled)")],
                      title="coupled profiles", xlabel="r")
    rep.elapsed_seconds = time.perf_counter() - t0
    return rep


def run_converge(cfg: RunConfig, outdir: Path, plots: bool,
                 levels: int | None = None) -> RunReport:
    t0 = time.perf_counter()
    rep = RunReport("converge", cfg.config_hash)
    section = cfg["converge"]
    n_levels = levels if levels is not None else section["levels"]
    rows = verify.derivation_closure_study(levels=n_levels,
                                           base_nx=section["base_points"],
                                           length=section["domain"],
                                           final_time=section["final_time"])
    hs = np.array([r[0] for r in rows])
    dens = np.array([r[1] for r in rows])
    cont = np.array([r[2] for r in rows])
    export_columnar(outdir / "converge_residuals.txt",
                    {"h": hs, "density_residual": dens, "continuity_residual": cont},
                    {"h": "hbar/mc"})
    slope_d = verify._fit_slope(hs, dens)
    slope_c = verify._fit_slope(hs, cont)
    rep.add(CheckResult.window("density-equation residual order", slope_d, 1.8, 2.2))
    rep.add(CheckResult.window("continuity residual order", slope_c, 1.8, 2.2))
    if plots:
        svg_line_plot(outdir / "converge_residuals.svg",
                      [(hs, dens, "density residual"), (hs, cont, "continuity residual")],
                      title="refinement study", xlabel="h", ylabel="residual",
                      logx=True, logy=True, markers=True,
                      annotation=f"slopes: {slope_d:.2f}, {slope_c:.2f}")
    rep.elapsed_seconds = time.perf_counter() - t0
    return rep


def run_verify_all(cfg: RunConfig, outdir: Path, seed: int) -> RunReport:
    t0 = time.perf_counter()
    aggregate = RunReport("verify_all", cfg.config_hash)
    for report in verify.verify_all(seed=seed):
        report.config_hash = cfg.config_hash
        report.write(outdir)
        aggregate.add(CheckResult.flag(f"criterion suite: {report.experiment}",
                                       report.passed))
    aggregate.elapsed_seconds = time.perf_counter() - t0
    aggregate.add(CheckResult("full suite runtime [s]", aggregate.elapsed_seconds,
                              300.0, aggregate.elapsed_seconds < 300.0))
    return aggregate
