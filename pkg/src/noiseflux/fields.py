"""Deterministic driving fields, their time integrals, and unit scalings.

Every model exposes three functions of dimensionless time:

* ``field_at``       E(t)
* ``momentum_gain``  f(t)   = int_0^t E(t') dt'
* ``displacement``   Phi(t) = int_0^t f(t') dt'

All three accept scalars or arrays and return the same shape.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import constants as _const

from .errors import ConfigError, DomainError, QuadratureError, RangeError

DEFAULT_RTOL = 1e-10


# ---------------------------------------------------------------------------
# quadrature


def simpson(func: Callable[[np.ndarray], np.ndarray], a: float, b: float,
            rtol: float = DEFAULT_RTOL, min_panels: int = 16,
            max_levels: int = 22) -> float:
    """Composite Simpson rule on [a, b] with step halving.

    Halving stops once two successive estimates agree to ``rtol`` relative to
    the integral of ``|func|`` (so integrands that cancel to ~0 still
    terminate). Function values are reused between levels. The returned
    value carries one Richardson step, (16 S_2n - S_n) / 15, which is Boole's
    rule on the finest grid.
    """
    if b == a:
        return 0.0
    n = min_panels + (min_panels % 2)
    x = np.linspace(a, b, n + 1)
    y = np.asarray(func(x), dtype=float)
    w = np.ones(n + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    h = (b - a) / n
    est = h / 3.0 * np.dot(w, y)
    delta = math.inf
    for level in range(max_levels):
        # midpoints of the current nodes become the new odd nodes
        xm = 0.5 * (x[:-1] + x[1:])
        ym = np.asarray(func(xm), dtype=float)
        x_new = np.empty(2 * n + 1)
        y_new = np.empty(2 * n + 1)
        x_new[0::2], x_new[1::2] = x, xm
        y_new[0::2], y_new[1::2] = y, ym
        x, y, n = x_new, y_new, 2 * n
        h = (b - a) / n
        w = np.ones(n + 1)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        new = h / 3.0 * np.dot(w, y)
        scale = abs(h / 3.0 * np.dot(w, np.abs(y)))
        delta = abs(new - est)
        if delta <= rtol * scale or scale == 0.0:
            return float(new + (new - est) / 15.0)
        est = new
    raise QuadratureError(
        f"Simpson step halving did not reach rtol={rtol:g} on [{a:g}, {b:g}] "
        f"after {max_levels} levels (last change {delta:.3e}, estimate {est:.17g})",
        a=a, b=b, estimate=float(est), delta=delta, levels=max_levels)


# ---------------------------------------------------------------------------
# units


@dataclass(frozen=True)
class UnitSystem:
    """Length/time/field scales tied together by x0**2 / tau0 = hbar / m.

    Only ``x0`` is free; ``tau0`` and ``E0`` are derived. The default
    constants give Hartree atomic units, where x0 = 1 implies tau0 = E0 = 1.
    """

    x0: float = 1.0
    hbar: float = 1.0
    mass: float = 1.0
    charge: float = 1.0

    def __post_init__(self):
        for name in ("x0", "hbar", "mass", "charge"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"UnitSystem.{name} must be positive", key=name)

    @classmethod
    def atomic(cls) -> "UnitSystem":
        return cls()

    @classmethod
    def si(cls, x0: float = _const.physical_constants["Bohr radius"][0]) -> "UnitSystem":
        """Electron in SI units; the default length is the Bohr radius."""
        return cls(x0=x0, hbar=_const.hbar, mass=_const.m_e, charge=_const.e)

    @property
    def tau0(self) -> float:
        return self.mass * self.x0 ** 2 / self.hbar

    @property
    def E0(self) -> float:
        return self.hbar / (self.charge * self.x0 * self.tau0)

    def scale(self, kind: str) -> float:
        """Physical value of one dimensionless unit of ``kind``.

        A one-dimensional probability flux is a rate, so its unit is 1/tau0.
        """
        if kind == "length":
            return self.x0
        if kind == "time":
            return self.tau0
        if kind == "field":
            return self.E0
        if kind == "flux":
            return 1.0 / self.tau0
        raise ConfigError(f"unknown quantity kind {kind!r}; expected length, time, field or flux",
                          key="kind")


def convert(units: UnitSystem, kind: str, value, direction: str = "to_dimensionless"):
    """Scale ``value`` between physical and dimensionless units."""
    s = units.scale(kind)
    if direction == "to_dimensionless":
        return np.asarray(value) / s if np.ndim(value) else value / s
    if direction == "to_physical":
        return np.asarray(value) * s if np.ndim(value) else value * s
    raise ConfigError(f"unknown direction {direction!r}; expected to_dimensionless or to_physical",
                      key="direction")


# ---------------------------------------------------------------------------
# field models


def _as_time(t):
    arr = np.asarray(t, dtype=float)
    return arr, arr.ndim == 0


def _check_nonnegative(arr):
    if np.any(arr < 0):
        raise DomainError("time must be non-negative")


class FieldModel:
    """Base class; subclasses implement ``_field``, and optionally closed forms."""

    kind = "abstract"

    def field_at(self, t):
        arr, scalar = _as_time(t)
        _check_nonnegative(arr)
        out = self._field(arr)
        return float(out) if scalar else out

    def momentum_gain(self, t):
        return self.integrals(t)[0]

    def displacement(self, t):
        return self.integrals(t)[1]

    def integrals(self, t):
        """Return ``(f(t), Phi(t))`` together, sharing the quadrature work."""
        arr, scalar = _as_time(t)
        _check_nonnegative(arr)
        f, phi = self._integrals(arr)
        if scalar:
            return float(f), float(phi)
        return f, phi

    def params(self) -> dict:
        return {"field": self.kind}

    # generic route: segment-wise Simpson between the requested times
    def _integrals(self, t: np.ndarray):
        flat = t.ravel()
        order = np.argsort(flat, kind="stable")
        ts = flat[order]
        f_sorted = np.empty_like(ts)
        p_sorted = np.empty_like(ts)
        f_prev = p_prev = t_prev = 0.0
        for i, ti in enumerate(ts):
            if ti > t_prev:
                h = ti - t_prev
                lo, hi = t_prev, ti
                df = simpson(self._field, lo, hi)
                # int_lo^hi (hi - s) E(s) ds is the Phi increment beyond f_prev * h
                dp = simpson(lambda s, hi=hi: (hi - s) * self._field(s), lo, hi)
                p_prev = p_prev + f_prev * h + dp
                f_prev = f_prev + df
                t_prev = ti
            f_sorted[i] = f_prev
            p_sorted[i] = p_prev
        f = np.empty_like(flat)
        p = np.empty_like(flat)
        f[order] = f_sorted
        p[order] = p_sorted
        return f.reshape(t.shape), p.reshape(t.shape)

    def _field(self, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class ZeroField(FieldModel):
    kind = "zero"

    def _field(self, t):
        return np.zeros_like(t)

    def _integrals(self, t):
        return np.zeros_like(t), np.zeros_like(t)


@dataclass(frozen=True)
class ConstantField(FieldModel):
    E: float = 0.3
    kind = "constant"

    def _field(self, t):
        return np.full_like(t, self.E)

    def _integrals(self, t):
        return self.E * t, 0.5 * self.E * t * t

    def params(self):
        return {"field": self.kind, "E": self.E}


@dataclass(frozen=True)
class FemtoPulse(FieldModel):
    """E0 * exp(-5 (w t / 2pi - 1)^4) * sin(w t); envelope peaks at one period."""

    E0: float = 0.1
    omega: float = 0.114
    kind = "femto"

    def __post_init__(self):
        if not self.omega > 0:
            raise ConfigError("FemtoPulse omega must be positive", key="omega")

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.omega

    def _field(self, t):
        u = self.omega * t / (2.0 * math.pi) - 1.0
        return self.E0 * np.exp(-5.0 * u ** 4) * np.sin(self.omega * t)

    def params(self):
        return {"field": self.kind, "E0": self.E0, "omega": self.omega}


@dataclass(frozen=True, eq=False)
class TabulatedField(FieldModel):
    """Piecewise-linear field through samples on a grid starting at t = 0.

    The integrals are exact for the interpolant (trapezoid at the nodes,
    quadratic/cubic inside a cell). The field is zero before t = 0 and it is
    an error to evaluate beyond the last node.
    """

    times: np.ndarray = field(default_factory=lambda: np.zeros(2))
    values: np.ndarray = field(default_factory=lambda: np.zeros(2))
    kind = "tabulated"

    def __post_init__(self):
        times = np.array(self.times, dtype=float)
        values = np.array(self.values, dtype=float)
        if times.ndim != 1 or times.shape != values.shape or times.size < 2:
            raise ConfigError("tabulated field needs matching 1-D times/values with >= 2 samples",
                              key="field_file")
        if times[0] != 0.0:
            raise ConfigError("tabulated field grid must start at t = 0", key="field_file")
        if np.any(np.diff(times) <= 0):
            raise ConfigError("tabulated field grid must be strictly increasing", key="field_file")
        times.flags.writeable = False
        values.flags.writeable = False
        h = np.diff(times)
        slope = np.diff(values) / h
        f_nodes = np.concatenate([[0.0], np.cumsum(0.5 * h * (values[:-1] + values[1:]))])
        p_inc = f_nodes[:-1] * h + values[:-1] * h ** 2 / 2 + slope * h ** 3 / 6
        p_nodes = np.concatenate([[0.0], np.cumsum(p_inc)])
        for name, val in (("times", times), ("values", values), ("_slope", slope),
                          ("_f_nodes", f_nodes), ("_p_nodes", p_nodes)):
            object.__setattr__(self, name, val)

    @classmethod
    def from_file(cls, path) -> "TabulatedField":
        if not Path(path).is_file():
            raise ConfigError(f"field file {path} not found", key="field_file")
        try:
            data = np.loadtxt(Path(path), comments="#", ndmin=2)
        except ValueError as exc:
            raise ConfigError(f"{path}: {exc}", key="field_file") from None
        if data.shape[1] != 2:
            raise ConfigError(f"{path}: expected two whitespace-separated columns (time, field)",
                              key="field_file")
        return cls(times=data[:, 0], values=data[:, 1])

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def _locate(self, t):
        if np.any(t > self.times[-1]):
            raise RangeError(f"time beyond tabulated range [0, {self.t_end:g}]")
        idx = np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, self.times.size - 2)
        return idx, t - self.times[idx]

    def field_at(self, t):
        arr, scalar = _as_time(t)
        idx, tau = self._locate(arr)
        out = np.where(arr < 0, 0.0, self.values[idx] + self._slope[idx] * tau)
        return float(out) if scalar else out

    def integrals(self, t):
        arr, scalar = _as_time(t)
        idx, tau = self._locate(arr)
        v, m = self.values[idx], self._slope[idx]
        f = self._f_nodes[idx] + v * tau + m * tau ** 2 / 2
        p = self._p_nodes[idx] + self._f_nodes[idx] * tau + v * tau ** 2 / 2 + m * tau ** 3 / 6
        neg = arr < 0
        f = np.where(neg, 0.0, f)
        p = np.where(neg, 0.0, p)
        if scalar:
            return float(f), float(p)
        return f, p

    def _field(self, t):
        return self.field_at(t)

    def params(self):
        return {"field": self.kind, "n_samples": int(self.times.size), "t_end": self.t_end}


def make_field(kind: str, **params) -> FieldModel:
    """Build a field model from a config-style tag and parameters."""
    kind = kind.lower()
    if kind == "zero":
        return ZeroField()
    if kind == "constant":
        return ConstantField(E=float(params.get("E", 0.3)))
    if kind in ("femto", "femtopulse", "pulse"):
        return FemtoPulse(E0=float(params.get("E0", 0.1)), omega=float(params.get("omega", 0.114)))
    if kind == "tabulated":
        if "field_file" not in params:
            raise ConfigError("tabulated field requires field_file", key="field_file")
        return TabulatedField.from_file(params["field_file"])
    raise ConfigError(f"unknown field model {kind!r}", key="field")


# module-level spellings of the model methods


def field_at(model: FieldModel, t):
    return model.field_at(t)


def momentum_gain(model: FieldModel, t):
    return model.momentum_gain(t)


def displacement(model: FieldModel, t):
    return model.displacement(t)
