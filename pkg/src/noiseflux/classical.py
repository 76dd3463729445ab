"""Classical electron under E(t) plus white noise: trajectories and energy balance.

Dimensionless equations of motion, with the same force sign as the quantum
Hamiltonian (potential -E x, force +E):

    dy = E(t) dt + dW,   dW ~ N(0, 2 D dt)
    dx = y dt

The velocity uses an Euler-Maruyama step with the drift sampled at the step
midpoint. The position is the trapezoidal integral of the velocity. Without
noise this is exact for constant fields. Trajectory ``i`` uses the same
(seed, i) Philox stream as noise path ``i`` in :mod:`noiseflux.stochastic`, so
``y - f(t)`` reproduces that path's f_noise.

Mean energy balance: d<y^2/2>/dt = E <y> + D. The +D term is the
Furutsu-Novikov value of <y eta>; the measured rate confirms a full D
rather than D/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import analytic
from .analytic import PacketSpec
from .errors import ConfigError
from .fields import FieldModel, simpson
from .stochastic import NoiseSpec, _increments, ensemble_stats, map_chunks, n_steps


@dataclass(frozen=True, eq=False)
class ClassicalEnsemble:
    times: np.ndarray
    x_paths: np.ndarray
    y_paths: np.ndarray
    D: float

    @property
    def n(self) -> int:
        return self.x_paths.shape[0]

    def moments(self):
        """Per-time ensemble means and standard errors of x, y and y^2/2."""
        return {
            "x": ensemble_stats(self.x_paths),
            "y": ensemble_stats(self.y_paths),
            "kinetic": ensemble_stats(0.5 * self.y_paths ** 2),
        }


def simulate(field: FieldModel, spec: NoiseSpec, t_max: float, n: int,
             record_every: int = 1, workers: int = 1) -> ClassicalEnsemble:
    """Integrate ``n`` trajectories from x = y = 0 up to ``t_max``."""
    if n < 1:
        raise ConfigError("need at least one trajectory", key="n_paths")
    if record_every < 1:
        raise ConfigError("record_every must be >= 1", key="record_every")
    steps = n_steps(t_max, spec.dt)
    dt = spec.dt
    t_nodes = dt * np.arange(steps + 1)
    drift = field.field_at(t_nodes[:-1] + 0.5 * dt) * dt
    keep = np.arange(0, steps + 1, record_every)

    def chunk(indices):
        dw = np.stack([_increments(spec, steps, i, exact=False)[0] for i in indices])
        dy = dw + drift
        y = np.concatenate([np.zeros((len(indices), 1)), np.cumsum(dy, axis=1)], axis=1)
        x = np.concatenate([np.zeros((len(indices), 1)),
                            np.cumsum(0.5 * dt * (y[:, 1:] + y[:, :-1]), axis=1)], axis=1)
        return np.concatenate([x[:, keep], y[:, keep]], axis=1)

    both = map_chunks(chunk, n, workers)
    m = keep.size
    return ClassicalEnsemble(times=t_nodes[keep], x_paths=both[:, :m], y_paths=both[:, m:],
                             D=spec.D)


@dataclass(frozen=True, eq=False)
class EnergyRateReport:
    """Finite-difference kinetic-energy rate against E <y> + D, per interval."""

    t_mid: np.ndarray
    empirical: np.ndarray
    stderr: np.ndarray
    theory: np.ndarray
    D: float

    @property
    def z(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            dev = self.empirical - self.theory
            z = np.where(self.stderr > 0, dev / self.stderr, np.where(dev == 0, 0.0, np.inf))
        return z

    @property
    def max_abs_z(self) -> float:
        return float(np.max(np.abs(self.z)))


def energy_rate_report(ensemble: ClassicalEnsemble, field: FieldModel,
                       stride: int = 1) -> EnergyRateReport:
    """Compare d<y^2/2>/dt with the work rate plus noise pumping.

    Differences are taken over ``stride`` recorded samples. The standard
    error comes from the spread of the per-trajectory energy increments.
    """
    if ensemble.n < 100:
        raise ConfigError("energy_rate_report needs at least 100 trajectories", key="n_paths")
    t = ensemble.times[::stride]
    y = ensemble.y_paths[:, ::stride]
    h = np.diff(t)
    de = 0.5 * (y[:, 1:] ** 2 - y[:, :-1] ** 2) / h
    stats = ensemble_stats(de)
    y_mean = ensemble_stats(y).mean
    # <y> follows d<y> = E dt, so over [a, b] the mean work int E <y> ds is exactly
    # <y>(a) df + df^2 / 2 with df = f(b) - f(a)
    t_mid = 0.5 * (t[1:] + t[:-1])
    df = np.diff(field.momentum_gain(t))
    work = (y_mean[:-1] * df + 0.5 * df * df) / h
    return EnergyRateReport(t_mid=t_mid, empirical=stats.mean, stderr=stats.stderr,
                            theory=work + ensemble.D, D=ensemble.D)


@dataclass(frozen=True)
class PumpingFit:
    rate: float
    stderr: float
    D: float

    @property
    def relative_error(self) -> float:
        if self.D == 0:
            return abs(self.rate)
        return abs(self.rate - self.D) / self.D


def fit_pumping_rate(ensemble: ClassicalEnsemble, field: FieldModel,
                     window=(0.0, 50.0)) -> PumpingFit:
    """Least-squares slope of <y^2/2> - f(t)^2/2 over ``window``.

    f(t)^2/2 is the kinetic energy the field alone would supply, so the
    slope is the noise pumping rate (D in theory). The quoted error is the
    spread of per-trajectory slopes over sqrt(n).
    """
    lo, hi = window
    sel = (ensemble.times >= lo) & (ensemble.times <= hi)
    t = ensemble.times[sel]
    f = field.momentum_gain(t)
    excess = 0.5 * ensemble.y_paths[:, sel] ** 2 - 0.5 * f ** 2
    tc = t - t.mean()
    weights = tc / np.sum(tc * tc)
    per_path = excess @ weights
    stats = ensemble_stats(per_path[:, None])
    return PumpingFit(rate=float(stats.mean[0]), stderr=float(stats.stderr[0]), D=ensemble.D)


@dataclass(frozen=True)
class CrosscheckReport:
    t_probe: float
    classical_mean: float
    classical_stderr: float
    quantum_center: float
    deterministic_center: float
    tdse_center: float
    tolerance: float

    @property
    def deviation(self) -> float:
        return abs(self.classical_mean - self.quantum_center)

    @property
    def agrees(self) -> bool:
        ok = self.deviation <= 3.0 * self.classical_stderr + self.tolerance
        if not math.isnan(self.tdse_center):
            ok = ok and abs(self.tdse_center - self.quantum_center) <= self.tolerance
        return ok


def quantum_classical_crosscheck(field: FieldModel, spec: NoiseSpec, packet: PacketSpec,
                                 grid=None, t_probe: float = 20.0, n: int = 10_000,
                                 tolerance: float = 1e-4) -> CrosscheckReport:
    """Classical mean position against the centre of the noise-averaged packet.

    The quantum centre is the first moment of the averaged density, computed
    by quadrature. If a TDSE ``grid`` is given, the noise-free solver's <x>
    at ``t_probe`` is reported too. ``tolerance`` absorbs integrator error on
    top of the 3-standard-error Monte Carlo band.
    """
    ens = simulate(field, spec, t_probe, n)
    stats = ensemble_stats(ens.x_paths[:, -1:])
    phi = field.displacement(float(t_probe))
    width = math.sqrt(packet.sigma ** 2 + (t_probe / packet.sigma) ** 2
                      + float(analytic.noise_width2(t_probe, spec.D)))
    lo, hi = phi - 12 * width, phi + 12 * width
    center = simpson(lambda x: x * analytic.averaged_density(x, t_probe, packet, field, spec.D),
                     lo, hi, rtol=1e-12)
    mass = simpson(lambda x: analytic.averaged_density(x, t_probe, packet, field, spec.D),
                   lo, hi, rtol=1e-12)
    tdse_center = math.nan
    if grid is not None:
        from .tdse import evolve, init_gaussian
        ev = evolve(init_gaussian(grid, packet), field, [float(t_probe)])
        tdse_center = float(ev.x_mean[-1])
    return CrosscheckReport(t_probe=float(t_probe), classical_mean=float(stats.mean[0]),
                            classical_stderr=float(stats.stderr[0]),
                            quantum_center=center / mass, deterministic_center=float(phi),
                            tdse_center=tdse_center, tolerance=tolerance)
