"""Probability flux of a driven electron wave packet under Gaussian white noise.

Three independent routes to the same quantity:

* :mod:`noiseflux.analytic`   closed-form deterministic and noise-averaged flux
* :mod:`noiseflux.stochastic` Monte Carlo over sampled noise realisations
* :mod:`noiseflux.tdse`       split-operator solution of the Schroedinger equation

:mod:`noiseflux.classical` holds the classical counterpart, and
:mod:`noiseflux.cli` the experiment runner.
"""

__version__ = "0.1.0"

from .analytic import (DRIFT_COEFFICIENT, FluxSeries, PacketSpec, averaged_flux,
                       gaussian_density, gaussian_flux, plane_wave_flux, psi_momentum,
                       zero_flux_point)
from .fields import (ConstantField, FemtoPulse, FieldModel, TabulatedField, UnitSystem,
                     ZeroField, convert, displacement, field_at, momentum_gain)
from .stochastic import (NoisePath, NoiseSpec, covariance_report, ensemble_flux,
                         realization_flux, sample_path)

__all__ = [
    "DRIFT_COEFFICIENT", "FluxSeries", "PacketSpec", "averaged_flux", "gaussian_density",
    "gaussian_flux", "plane_wave_flux", "psi_momentum", "zero_flux_point",
    "ConstantField", "FemtoPulse", "FieldModel", "TabulatedField", "UnitSystem", "ZeroField",
    "convert", "displacement", "field_at", "momentum_gain",
    "NoisePath", "NoiseSpec", "covariance_report", "ensemble_flux", "realization_flux",
    "sample_path",
]
