"""Run configuration: one TOML file, strict keys, derived experiment specs."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .errors import ConfigurationError

_REQUIRED = object()

#: section -> key -> (expected types, default or _REQUIRED)
_SCHEMA: dict[str, dict[str, tuple[tuple[type, ...], object]]] = {
    "run": {
        "name": ((str,), "run"),
        "seed": ((int,), 0),
        "out": ((str,), "runs/out"),
        "plots": ((bool,), True),
    },
    "physics": {
        "mass": ((int, float), _REQUIRED),
        "charge": ((int, float), 0.0),
        "newton_g": ((int, float), 0.0),
    },
    "grid": {
        "x_points": ((int,), 256),
        "x_spacing": ((int, float), 0.15625),
        "x_min": ((int, float), -20.0),
    },
    "evolve": {
        "generator": ((str,), "gaussian_packet"),
        "packet_center": ((int, float), 0.0),
        "packet_sigma": ((int, float), 2.0),
        "packet_momentum": ((int, float), 0.5),
        "wave_mode": ((int,), 1),
        "branch": ((int,), 1),
        "steps": ((int,), 200),
        "dt": ((int, float), 0.05),
        "boundary": ((str,), "periodic"),
        "potential": ((str,), "none"),
        "potential_value": ((int, float), 0.0),
        "well_depth": ((int, float), 0.0),
        "well_width": ((int, float), 0.0),
        "initial_file": ((str,), ""),
        "potential_file": ((str,), ""),
    },
    "stationary": {
        "boundary": ((str,), "dirichlet"),
        "window_low": ((int, float), 0.5),
        "window_high": ((int, float), 1.5),
        "potential": ((str,), "none"),
        "potential_value": ((int, float), 0.0),
        "well_depth": ((int, float), 0.0),
        "well_width": ((int, float), 0.0),
        "potential_file": ((str,), ""),
    },
    "transform": {
        "mixtures": ((int,), 200),
        "max_components": ((int,), 3),
        "oracle_points": ((int,), 96),
        "oracle_momentum_points": ((int,), 129),
        # Gaussian carrier descriptor for the quadrature oracle (reduced
        # one-axis mode: spatial slot only)
        "carrier_momentum": ((int, float), 0.3),
        "carrier_sigma_x": ((int, float), 0.8),
        "carrier_sigma_p": ((int, float), 0.5),
    },
    "madelung": {
        "steps": ((int,), 160),
        "dt": ((int, float), 0.05),
        "packet_center": ((int, float), -5.0),
        "packet_sigma": ((int, float), 2.0),
        "packet_momentum": ((int, float), 0.6),
    },
    "trajectories": {
        "count": ((int,), 5),
        "tau_span": ((int, float), 0.8),
        "dtau": ((int, float), 0.004),
        "wave_momentum": ((int, float), 0.5),
    },
    "gravity": {
        "r_end": ((int, float), 20.0),
        "r_points": ((int,), 300),
        "relaxation": ((int, float), 0.5),
        "max_iterations": ((int,), 50),
        "tolerance": ((int, float), 1e-12),
    },
    "converge": {
        "levels": ((int,), 4),
        "base_points": ((int,), 128),
        "domain": ((int, float), 40.0),
        "final_time": ((int, float), 4.0),
    },
}


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration with the raw file hash for provenance."""

    sections: dict = field(repr=False)
    config_hash: str = ""
    source: str = ""

    def __getitem__(self, section: str) -> dict:
        return self.sections[section]

    @property
    def seed(self) -> int:
        return self.sections["run"]["seed"]


def git_blob_sha1(data: bytes) -> str:
    h = hashlib.sha1()
    h.update(b"blob %d\x00" % len(data))
    h.update(data)
    return h.hexdigest()


def _validate(raw: dict) -> dict:
    sections: dict = {}
    for section, table in raw.items():
        if section not in _SCHEMA:
            raise ConfigurationError(f"unknown config section [{section}]")
        if not isinstance(table, dict):
            raise ConfigurationError(f"[{section}] must be a table of keys")
        schema = _SCHEMA[section]
        for key in table:
            if key not in schema:
                raise ConfigurationError(f"unknown key {section}.{key}")
    for section, schema in _SCHEMA.items():
        table = raw.get(section, {})
        out = {}
        for key, (types, default) in schema.items():
            if key in table:
                value = table[key]
                if isinstance(value, bool) and bool not in types:
                    raise ConfigurationError(f"{section}.{key} has the wrong type")
                if not isinstance(value, types):
                    raise ConfigurationError(f"{section}.{key} has the wrong type")
                out[key] = float(value) if types == (int, float) else value
            elif default is _REQUIRED:
                raise ConfigurationError(f"missing required key {section}.{key}")
            else:
                out[key] = default
        sections[section] = out
    return sections


def load_config(path) -> RunConfig:
    data = Path(path).read_bytes()
    try:
        raw = tomllib.loads(data.decode("utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"cannot parse {path}: {exc}") from None
    return RunConfig(_validate(raw), git_blob_sha1(data), str(path))


def default_config_path() -> Path:
    return Path(__file__).parent / "data" / "default.toml"
