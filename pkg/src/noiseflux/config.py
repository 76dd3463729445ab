"""Experiment configuration: flat ``key = value`` files plus CLI overrides.

Lines are ``key = value``; ``#`` starts a comment; list values are
comma-separated. Unknown keys are rejected by name. A run's manifest is
written in the same format, so ``--config manifest.cfg`` replays it.

Keys
----
field            zero | constant | femto | tabulated
E                constant field strength
E0, omega        femtosecond pulse amplitude and angular frequency
field_file       two-column (time, field) text file for ``tabulated``
sigma, k0        packet width and plane-wave momentum
x_obs            observation point
t_max, t_samples output grid (t_samples points on [0, t_max])
D                noise intensity for single-D commands
d_list           noise intensities for the figure sweeps
dt, seed         noise path step and 64-bit seed
n_paths          Monte Carlo ensemble size
routes           subset of analytic, averaged, mc, tdse, classical
drift_coefficient  c in the averaged-flux drift term c D t^2
exact_paths      sample (f, Phi) increments jointly instead of trapezoid
tdse_x_min, tdse_x_max, tdse_n, tdse_dt, tdse_track   TDSE grid
workers          threads used for ensemble fan-out
out_dir, format  output directory; csv | svg | both
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path

from . import __version__
from .analytic import DRIFT_COEFFICIENT, PacketSpec
from .errors import ConfigError
from .fields import FieldModel, make_field
from .stochastic import DEFAULT_DT, DEFAULT_N_PATHS, DEFAULT_SEED, NoiseSpec
from .tdse import GridSpec

ROUTES = ("analytic", "averaged", "mc", "tdse", "classical")
FORMATS = ("csv", "svg", "both")


@dataclass(frozen=True)
class ExperimentConfig:
    field: str = "constant"
    E: float = 0.3
    E0: float = 0.1
    omega: float = 0.114
    field_file: str = ""
    sigma: float = 1.0
    k0: float = 0.0
    x_obs: float = 20.0
    t_max: float = 100.0
    t_samples: int = 400
    D: float = 0.0
    d_list: tuple = (0.0, 0.005, 0.01, 0.02)
    dt: float = DEFAULT_DT
    seed: int = DEFAULT_SEED
    n_paths: int = DEFAULT_N_PATHS
    routes: tuple = ("averaged", "mc")
    drift_coefficient: float = DRIFT_COEFFICIENT
    exact_paths: bool = False
    tdse_x_min: float = -400.0
    tdse_x_max: float = 600.0
    tdse_n: int = 2 ** 14
    tdse_dt: float = 5e-3
    tdse_track: bool = True
    workers: int = 1
    out_dir: str = "out"
    format: str = "both"

    def __post_init__(self):
        if not self.routes:
            raise ConfigError("at least one route is required", key="routes")
        bad = [r for r in self.routes if r not in ROUTES]
        if bad:
            raise ConfigError(f"unknown route(s) {bad}; choose from {list(ROUTES)}", key="routes")
        if self.t_samples < 2:
            raise ConfigError("t_samples must be >= 2", key="t_samples")
        if not self.t_max > 0:
            raise ConfigError("t_max must be positive", key="t_max")
        if self.D < 0:
            raise ConfigError("D must be >= 0", key="D")
        if not self.d_list or any(d < 0 for d in self.d_list):
            raise ConfigError("d_list needs one or more values >= 0", key="d_list")
        if self.n_paths < 2:
            raise ConfigError("n_paths must be >= 2", key="n_paths")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}", key="format")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1", key="workers")

    # -- derived objects
    def field_model(self) -> FieldModel:
        params = {"E": self.E, "E0": self.E0, "omega": self.omega}
        if self.field_file:
            params["field_file"] = self.field_file
        return make_field(self.field, **params)

    def packet(self) -> PacketSpec:
        return PacketSpec(sigma=self.sigma, k0=self.k0)

    def noise(self, D: float = None) -> NoiseSpec:
        return NoiseSpec(D=self.D if D is None else D, dt=self.dt, seed=self.seed)

    def grid(self) -> GridSpec:
        return GridSpec(x_min=self.tdse_x_min, x_max=self.tdse_x_max, n=self.tdse_n,
                        dt=self.tdse_dt, track=self.tdse_track)

    def times(self):
        import numpy as np
        return np.linspace(0.0, self.t_max, self.t_samples)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_text(self, command: str = "") -> str:
        lines = [f"# noiseflux {__version__} manifest"]
        if command:
            lines.append(f"# command: {command}")
        for f in fields(self):
            lines.append(f"{f.name} = {_format_value(getattr(self, f.name))}")
        return "\n".join(lines) + "\n"


_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _format_value(v):
    if isinstance(v, tuple):
        return ", ".join(_format_value(x) for x in v)
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse_bool(key, raw):
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {raw!r}", key=key)


def coerce(key: str, raw):
    """Convert a raw string (or already-typed value) for ``key``."""
    if key not in _TYPES:
        raise ConfigError(f"unknown configuration key {key!r}", key=key)
    kind = _TYPES[key]
    if not isinstance(raw, str):
        return tuple(raw) if kind == "tuple" else raw
    try:
        if kind == "float":
            return float(raw)
        if kind == "int":
            return int(raw, 0)
        if kind == "bool":
            return _parse_bool(key, raw)
        if kind == "tuple":
            items = [s.strip() for s in raw.split(",") if s.strip()]
            if key == "d_list":
                return tuple(float(s) for s in items)
            return tuple(items)
        return raw.strip()
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse {raw!r} ({exc})", key=key) from None


def parse_text(text: str) -> dict:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        values[key] = coerce(key, raw)
    return values


def load_config(path=None, base: ExperimentConfig = None, **overrides) -> ExperimentConfig:
    """Defaults <- ``base`` <- config file <- ``overrides`` (None values ignored)."""
    cfg = base or ExperimentConfig()
    changes = {}
    if path:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file {p} not found", key="config")
        changes.update(parse_text(p.read_text(encoding="utf-8")))
    for key, val in overrides.items():
        if val is not None:
            changes[key] = coerce(key, val)
    try:
        return cfg.replace(**changes)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def write_manifest(cfg: ExperimentConfig, out_dir, command: str) -> Path:
    path = Path(out_dir) / "manifest.cfg"
    path.write_text(cfg.to_text(command), encoding="utf-8")
    return path
