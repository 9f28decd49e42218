"""Dimension spectra and covering simulations for dynamical covering sets on
self-similar sets, in symbolic form."""

from .errors import CoverSpectraError
from .ifs import (IfsSpec, OrbitSample, TargetSchedule, Word, canonical_schedule,
                  sample_orbit, similarity_dimension, validate_ifs, word_weights)
from .pressure import (CriticalAlphas, PressureValue, Regime, Side, SpectrumPoint,
                       classify_regime, critical_alphas, pressure_root,
                       pressure_second_derivative, spectrum_point, spectrum_s,
                       spectrum_t, transition_diagnostic, variational_optimum)

__version__ = "0.1.0"
