"""White-noise realisations and Monte Carlo averages of the packet flux.

The noise itself is never sampled pointwise. Each realisation is the pair
of its integrals on a uniform grid:

    f_noise(t)   = int_0^t eta      (Brownian, increments ~ N(0, 2 D dt))
    Phi_noise(t) = int_0^t f_noise  (integrated Brownian)

Noise enters additively and only through these integrals, so the Ito and
Stratonovich readings of the averages coincide.

Path ``i`` of an ensemble draws from a Philox counter-based stream keyed by
``(seed, i)``. Any subset of paths can therefore be regenerated
independently, and ensemble results do not depend on how paths are split
across workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .analytic import FluxSeries, PacketSpec, flux_from_integrals
from .errors import ConfigError, RangeError
from .fields import FieldModel

DEFAULT_DT = 0.05
DEFAULT_N_PATHS = 10_000
DEFAULT_SEED = 20170401
CHUNK = 512


@dataclass(frozen=True)
class NoiseSpec:
    D: float = 0.0
    dt: float = DEFAULT_DT
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if not self.D >= 0:
            raise ConfigError("noise intensity D must be non-negative", key="D")
        if not self.dt > 0:
            raise ConfigError("noise time step dt must be positive", key="dt")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ConfigError("seed must fit in 64 unsigned bits", key="seed")


@dataclass(frozen=True, eq=False)
class NoisePath:
    times: np.ndarray
    f_tilde: np.ndarray
    phi_tilde: np.ndarray

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def t_max(self) -> float:
        return float(self.times[-1])


@dataclass(frozen=True, eq=False)
class EnsembleStats:
    mean: np.ndarray
    stderr: np.ndarray
    n: int


def path_generator(seed: int, index: int) -> np.random.Generator:
    """Independent stream for path ``index``; the Philox key is (seed, index)."""
    key = np.array([int(seed), int(index)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def n_steps(t_max: float, dt: float) -> int:
    if not t_max > 0:
        raise ConfigError("t_max must be positive", key="t_max")
    return int(math.ceil(t_max / dt - 1e-9))


def _increments(spec: NoiseSpec, steps: int, index: int, exact: bool):
    """Brownian increments, plus integrated-Brownian increments when ``exact``.

    The first ``steps`` normals drive f_noise in both modes, so switching
    mode changes Phi_noise but never f_noise.
    """
    rng = path_generator(spec.seed, index)
    z1 = rng.standard_normal(steps)
    df = math.sqrt(2.0 * spec.D * spec.dt) * z1
    if not exact:
        return df, None
    z2 = rng.standard_normal(steps)
    dt = spec.dt
    # int_0^dt (W(s) - W(0)) ds given dW: mean dW dt / 2, residual var 2D dt^3 / 12
    dphi = 0.5 * dt * df + math.sqrt(2.0 * spec.D * dt ** 3 / 12.0) * z2
    return df, dphi


def _integrate(df, dphi, dt):
    lead = df.shape[:-1] + (1,)
    f = np.concatenate([np.zeros(lead), np.cumsum(df, axis=-1)], axis=-1)
    if dphi is None:
        # trapezoid of f_noise
        steps = 0.5 * dt * (f[..., 1:] + f[..., :-1])
    else:
        steps = f[..., :-1] * dt + dphi
    phi = np.concatenate([np.zeros(lead), np.cumsum(steps, axis=-1)], axis=-1)
    return f, phi


def sample_path(spec: NoiseSpec, t_max: float, index: int = 0, exact: bool = False) -> NoisePath:
    """One realisation of (f_noise, Phi_noise) on ``0, dt, ..., >= t_max``.

    By default Phi_noise is the trapezoidal integral of the Brownian path.
    With ``exact=True`` each step's (Brownian, integrated-Brownian) increment
    pair is drawn from its exact joint Gaussian law instead.
    """
    steps = n_steps(t_max, spec.dt)
    df, dphi = _increments(spec, steps, index, exact)
    f, phi = _integrate(df, dphi, spec.dt)
    return NoisePath(times=spec.dt * np.arange(steps + 1), f_tilde=f, phi_tilde=phi)


def sample_paths(spec: NoiseSpec, t_max: float, indices, exact: bool = False):
    """Stack of paths for ``indices``; returns ``(times, f, phi)`` with shape (len, steps+1)."""
    steps = n_steps(t_max, spec.dt)
    indices = list(indices)
    df = np.empty((len(indices), steps))
    dphi = np.empty((len(indices), steps)) if exact else None
    for row, i in enumerate(indices):
        a, b = _increments(spec, steps, i, exact)
        df[row] = a
        if exact:
            dphi[row] = b
    f, phi = _integrate(df, dphi, spec.dt)
    return spec.dt * np.arange(steps + 1), f, phi


def _path_values(times, f, phi, t_grid):
    """f_noise, Phi_noise at arbitrary times, exact for a piecewise-linear f_noise."""
    t_grid = np.asarray(t_grid, dtype=float)
    dt = times[1] - times[0]
    if np.any(t_grid < 0) or np.any(t_grid > times[-1] * (1 + 1e-12)):
        raise RangeError(f"requested times outside the noise path range [0, {times[-1]:g}]")
    idx = np.clip(np.floor(t_grid / dt + 1e-9).astype(int), 0, times.size - 2)
    tau = np.clip(t_grid - times[idx], 0.0, dt)
    f0 = f[..., idx]
    slope = (f[..., idx + 1] - f0) / dt
    f_at = f0 + slope * tau
    phi_at = phi[..., idx] + f0 * tau + 0.5 * slope * tau ** 2
    return f_at, phi_at


def realization_flux(x: float, t_grid, packet: PacketSpec, field: FieldModel,
                     path: NoisePath, f0=None, phi0=None) -> FluxSeries:
    """Packet current for one noise realisation.

    The deterministic integrals are shifted by the path's f_noise and
    Phi_noise. ``f0``/``phi0`` may be passed to reuse precomputed
    deterministic integrals on ``t_grid``.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if f0 is None or phi0 is None:
        f0, phi0 = field.integrals(t_grid)
    fn, pn = _path_values(path.times, path.f_tilde, path.phi_tilde, t_grid)
    values = flux_from_integrals(x, t_grid, packet.sigma, f0 + fn, phi0 + pn)
    return FluxSeries(x_obs=x, times=t_grid, values=np.asarray(values, dtype=float),
                      label="realization")


def pairwise_sum(a: np.ndarray) -> np.ndarray:
    """Sum over axis 0 with a fixed balanced binary tree."""
    n = a.shape[0]
    if n == 0:
        return np.zeros(a.shape[1:])
    if n <= 8:
        out = a[0].copy()
        for row in a[1:]:
            out += row
        return out
    half = n // 2
    return pairwise_sum(a[:half]) + pairwise_sum(a[half:])


def ensemble_stats(samples: np.ndarray) -> EnsembleStats:
    """Mean and standard error over axis 0 with a deterministic reduction order."""
    n = samples.shape[0]
    mean = pairwise_sum(samples) / n
    if n < 2:
        return EnsembleStats(mean=mean, stderr=np.full_like(mean, np.nan), n=n)
    var = pairwise_sum((samples - mean) ** 2) / (n - 1)
    return EnsembleStats(mean=mean, stderr=np.sqrt(var / n), n=n)


def _chunks(n: int, size: int = CHUNK):
    return [range(lo, min(lo + size, n)) for lo in range(0, n, size)]


def map_chunks(fn, n: int, workers: int = 1):
    """Apply ``fn`` to fixed index chunks and stack results in index order."""
    chunks = _chunks(n)
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(fn, chunks))
    else:
        parts = [fn(c) for c in chunks]
    return np.concatenate(parts, axis=0)


def flux_samples(x: float, t_grid, packet: PacketSpec, field: FieldModel, spec: NoiseSpec,
                 n_paths: int, workers: int = 1, exact: bool = False) -> np.ndarray:
    """Per-realisation currents, shape (n_paths, len(t_grid)), rows in path order."""
    t_grid = np.asarray(t_grid, dtype=float)
    f0, phi0 = field.integrals(t_grid)
    t_max = max(float(t_grid[-1]), spec.dt)

    def chunk(indices):
        times, f, phi = sample_paths(spec, t_max, indices, exact=exact)
        fn, pn = _path_values(times, f, phi, t_grid)
        return flux_from_integrals(x, t_grid, packet.sigma, f0 + fn, phi0 + pn)

    return map_chunks(chunk, n_paths, workers)


def ensemble_flux(x: float, t_grid, packet: PacketSpec, field: FieldModel, spec: NoiseSpec,
                  n_paths: int = DEFAULT_N_PATHS, workers: int = 1,
                  exact: bool = False) -> FluxSeries:
    """Monte Carlo mean of the current over ``n_paths`` realisations, with standard errors."""
    if n_paths < 2:
        raise ConfigError("ensemble_flux needs at least two paths", key="n_paths")
    if spec.D == 0:
        # every realisation is the deterministic one; skip the rounding of a mean of copies
        j = flux_samples(x, t_grid, packet, field, spec, 1)[0]
        stats = EnsembleStats(mean=j, stderr=np.zeros_like(j), n=n_paths)
    else:
        stats = ensemble_stats(flux_samples(x, t_grid, packet, field, spec, n_paths, workers,
                                            exact))
    return FluxSeries(x_obs=x, times=np.asarray(t_grid, dtype=float), values=stats.mean,
                      stderr=stats.stderr, label=f"mc D={spec.D:g}")


# ---------------------------------------------------------------------------
# covariance diagnostics


def theory_ff(t1, t2, D):
    """<f_noise(t1) f_noise(t2)> = 2 D min(t1, t2)."""
    return 2.0 * D * np.minimum(t1, t2)


def theory_phiphi(t1, t2, D):
    """<Phi_noise(t1) Phi_noise(t2)> = D a^2 (b - a/3), a = min, b = max."""
    a, b = np.minimum(t1, t2), np.maximum(t1, t2)
    return D * a * a * (b - a / 3.0)


def theory_phif(t1, t2, D):
    """<Phi_noise(t1) f_noise(t2)> = 2 D int_0^t1 min(s, t2) ds."""
    t1 = np.asarray(t1, dtype=float)
    t2 = np.asarray(t2, dtype=float)
    return np.where(t1 <= t2, D * t1 * t1, D * t2 * (2.0 * t1 - t2))


@dataclass(frozen=True)
class CovarianceRow:
    t1: float
    t2: float
    ff: float
    ff_se: float
    ff_theory: float
    phiphi: float
    phiphi_se: float
    phiphi_theory: float
    phif: float
    phif_se: float
    phif_theory: float
    phif_alt: float

    @property
    def ff_z(self) -> float:
        return _z(self.ff, self.ff_theory, self.ff_se)

    @property
    def phiphi_z(self) -> float:
        return _z(self.phiphi, self.phiphi_theory, self.phiphi_se)

    @property
    def phif_z(self) -> float:
        return _z(self.phif, self.phif_theory, self.phif_se)


def _z(est, theory, se):
    if se == 0:
        return 0.0 if est == theory else math.inf
    return (est - theory) / se


@dataclass(frozen=True, eq=False)
class CovarianceReport:
    D: float
    n_paths: int
    times: np.ndarray
    rows: tuple
    var_phi_times: np.ndarray
    var_phi: np.ndarray
    var_phi_slope: float

    def max_abs_z(self, which: str = "ff", diagonal_only: bool = False) -> float:
        rows = [r for r in self.rows if not diagonal_only or r.t1 == r.t2]
        return max(abs(getattr(r, f"{which}_z")) for r in rows)

    def table(self):
        """Rows as plain dicts, ready for CSV output."""
        keys = CovarianceRow.__dataclass_fields__.keys()
        return [{k: getattr(r, k) for k in keys} for r in self.rows]


def _moment(a, b):
    prod = a * b
    stats = ensemble_stats(prod[:, None])
    return float(stats.mean[0]), float(stats.stderr[0])


def covariance_report(spec: NoiseSpec, t_max: float, n_paths: int,
                      times=None, exact: bool = False,
                      slope_window=(1.0, 50.0), workers: int = 1) -> CovarianceReport:
    """Empirical second moments of (f_noise, Phi_noise) next to their theory.

    Each (t1, t2) row compares <f f>, <Phi Phi> and <Phi(t1) f(t2)>. At equal
    times the Phi-f column is the cross moment D t^2; ``phif_alt`` carries
    the competing value 2 D t^2 so the two can be told apart. The report
    also fits the log-log slope of Var[Phi_noise] over ``slope_window``.
    """
    if n_paths < 100:
        raise ConfigError("covariance_report needs at least 100 paths", key="n_paths")
    if times is None:
        times = np.linspace(t_max / 5, t_max, 5)
    times = np.asarray(times, dtype=float)
    lo, hi = slope_window
    hi = min(hi, t_max)
    slope_times = np.geomspace(lo, hi, 12)
    probe = np.concatenate([times, slope_times])

    def chunk(indices):
        tt, f, phi = sample_paths(spec, max(t_max, hi), indices, exact=exact)
        fn, pn = _path_values(tt, f, phi, probe)
        return np.concatenate([fn, pn], axis=1)

    both = map_chunks(chunk, n_paths, workers)
    m = probe.size
    f_all, p_all = both[:, :m], both[:, m:]
    f_t, p_t = f_all[:, :times.size], p_all[:, :times.size]
    rows = []
    for i, t1 in enumerate(times):
        for j, t2 in enumerate(times):
            ff, ff_se = _moment(f_t[:, i], f_t[:, j])
            pp, pp_se = _moment(p_t[:, i], p_t[:, j])
            pf, pf_se = _moment(p_t[:, i], f_t[:, j])
            alt = 2.0 * float(theory_phif(t1, t2, spec.D))
            rows.append(CovarianceRow(
                t1=float(t1), t2=float(t2),
                ff=ff, ff_se=ff_se, ff_theory=float(theory_ff(t1, t2, spec.D)),
                phiphi=pp, phiphi_se=pp_se, phiphi_theory=float(theory_phiphi(t1, t2, spec.D)),
                phif=pf, phif_se=pf_se, phif_theory=float(theory_phif(t1, t2, spec.D)),
                phif_alt=alt))
    p_slope = p_all[:, times.size:]
    var_phi = ensemble_stats(p_slope ** 2).mean - ensemble_stats(p_slope).mean ** 2
    if spec.D > 0:
        slope = float(np.polyfit(np.log(slope_times), np.log(var_phi), 1)[0])
    else:
        slope = math.nan
    return CovarianceReport(D=spec.D, n_paths=n_paths, times=times, rows=tuple(rows),
                            var_phi_times=slope_times, var_phi=var_phi, var_phi_slope=slope)
