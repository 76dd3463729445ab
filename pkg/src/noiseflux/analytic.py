"""Closed-form wavefunction, density and flux for a driven Gaussian packet.

The packet starts as the real Gaussian ``(sigma sqrt(pi))**-1/2 exp(-x^2 / 2 sigma^2)``.
In a spatially uniform field it stays Gaussian: its centre follows
``Phi(t)``, its momentum follows ``f(t)`` and its squared density width grows
as ``sigma^2 + t^2 / sigma^2``. Averaging over white noise of intensity D
adds ``4 D t^3 / 3`` to that width and a drift term ``G(t) = 2 D t^2`` to the
velocity field. The coefficient 2 in ``G`` is ``2 <Phi_noise f_noise>`` and
is confirmed by the Monte Carlo ensemble in :mod:`noiseflux.stochastic`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError
from .fields import FieldModel, simpson

#: Coefficient c in the noise drift term G(t) = c * D * t**2 of the averaged flux.
DRIFT_COEFFICIENT = 2.0


@dataclass(frozen=True)
class PacketSpec:
    sigma: float = 1.0
    k0: float = 0.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ConfigError("packet width sigma must be positive", key="sigma")


@dataclass(frozen=True, eq=False)
class FluxSeries:
    """Flux at one observation point sampled on a time grid."""

    x_obs: float
    times: np.ndarray
    values: np.ndarray
    stderr: np.ndarray = field(default_factory=lambda: np.empty(0))
    label: str = ""

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        stderr = np.asarray(self.stderr, dtype=float)
        if times.ndim != 1 or values.shape != times.shape:
            raise ValueError("times and values must be 1-D arrays of equal length")
        if times.size > 1 and np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing")
        if stderr.size and (stderr.shape != times.shape or np.any(stderr < 0)):
            raise ValueError("stderr must be non-negative and match times")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "stderr", stderr)

    @property
    def has_stderr(self) -> bool:
        return self.stderr.size > 0


def initial_momentum_amplitude(k, sigma: float):
    """Fourier image of the initial packet, normalised so int |phi|^2 dk/2pi = 1."""
    return np.sqrt(2.0 * math.sqrt(math.pi) * sigma) * np.exp(-0.5 * (sigma * np.asarray(k)) ** 2)


def phase_integral(k, t: float, field: FieldModel) -> np.ndarray:
    """int_0^t (k + f(t') - f(t))^2 dt', expanded in powers of k.

    Only the k-independent part needs quadrature:
    k^2 t + 2 k (Phi - t f) + int_0^t (f(t') - f(t))^2 dt'.
    """
    if t < 0:
        raise DomainError("time must be non-negative")
    k = np.asarray(k, dtype=float)
    if t == 0:
        return np.zeros_like(k)
    f_t, phi_t = field.integrals(float(t))
    rest = simpson(lambda s: (field.momentum_gain(s) - f_t) ** 2, 0.0, float(t))
    return k * k * t + 2.0 * k * (phi_t - t * f_t) + rest


def psi_momentum(k, t: float, packet: PacketSpec, field: FieldModel):
    """Momentum-space wavefunction along the field characteristics."""
    k = np.asarray(k, dtype=float)
    f_t = field.momentum_gain(float(t))
    out = initial_momentum_amplitude(k - f_t, packet.sigma) * np.exp(
        -0.5j * phase_integral(k, t, field))
    return complex(out) if out.ndim == 0 else out


def plane_wave_flux(k0: float, t, field: FieldModel):
    """Flux of an initial plane wave exp(i k0 x); the field only adds f(t)."""
    return k0 + field.momentum_gain(t)


def _width2(t, sigma):
    return sigma ** 2 + (t / sigma) ** 2


def _packet_flux(x, t, sigma, f, phi, extra_width2=0.0, drift=0.0):
    """rho * (f + (x - phi) (t / sigma^2 + drift) / W), W = squared width."""
    w2 = _width2(t, sigma) + extra_width2
    y = x - phi
    rho = np.exp(-y * y / w2) / np.sqrt(np.pi * w2)
    vel = f + y / w2 * (t / sigma ** 2 + drift)
    # the real packet at rest has exactly zero current at t = 0
    return np.where(t == 0, 0.0, rho * vel)


def _finish(out):
    return float(out) if np.ndim(out) == 0 else out


def gaussian_density(x, t, packet: PacketSpec, field: FieldModel):
    """|psi(x, t)|^2 for the driven packet."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    phi = field.displacement(t)
    w2 = _width2(t, packet.sigma)
    return _finish(np.exp(-(x - phi) ** 2 / w2) / np.sqrt(np.pi * w2))


def gaussian_flux(x, t, packet: PacketSpec, field: FieldModel):
    """Probability current of the driven packet without noise."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    f, phi = field.integrals(t)
    return _finish(_packet_flux(x, t, packet.sigma, f, phi))


def flux_from_integrals(x, t, sigma: float, f, phi):
    """Same as :func:`gaussian_flux` with f(t), Phi(t) supplied directly."""
    return _finish(_packet_flux(np.asarray(x, float), np.asarray(t, float), sigma,
                                np.asarray(f, float), np.asarray(phi, float)))


def zero_flux_point(t, packet: PacketSpec, field: FieldModel):
    """Position where the current changes sign, Phi - f (sigma^4 + t^2) / t."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise DomainError("zero-flux point is defined only for t > 0")
    f, phi = field.integrals(t)
    return _finish(phi - f * (packet.sigma ** 4 + t * t) / t)


def noise_width2(t, D: float):
    """Extra squared width 2 <Phi_noise^2> = 4 D t^3 / 3 from averaging over noise."""
    return 4.0 * D * np.asarray(t, dtype=float) ** 3 / 3.0


def noise_drift(t, D: float, coefficient: float = DRIFT_COEFFICIENT):
    """G(t) = coefficient * D * t^2."""
    return coefficient * D * np.asarray(t, dtype=float) ** 2


def averaged_density(x, t, packet: PacketSpec, field: FieldModel, D: float):
    """Noise-averaged density; a Gaussian centred on the deterministic Phi(t)."""
    if D < 0:
        raise DomainError("noise intensity D must be non-negative")
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    phi = field.displacement(t)
    w2 = _width2(t, packet.sigma) + noise_width2(t, D)
    return _finish(np.exp(-(x - phi) ** 2 / w2) / np.sqrt(np.pi * w2))


def averaged_flux(x, t, packet: PacketSpec, field: FieldModel, D: float,
                  drift_coefficient: float = DRIFT_COEFFICIENT):
    """Noise-averaged current for white noise of intensity ``D``.

    ``drift_coefficient`` sets G(t) = c D t^2; anything other than the
    default 2 is only useful for checking that the Monte Carlo ensemble
    rejects it.
    """
    if D < 0:
        raise DomainError("noise intensity D must be non-negative")
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    f, phi = field.integrals(t)
    return _finish(_packet_flux(x, t, packet.sigma, f, phi,
                                extra_width2=noise_width2(t, D),
                                drift=noise_drift(t, D, drift_coefficient)))
