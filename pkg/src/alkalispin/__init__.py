"""Transverse spin relaxation of alkali-metal vapors.

The coupled evolution of the total spin ``<F+>`` and electron spin ``<S+>``
under S-damping, spin exchange and diffusion, its eigenmodes, time-domain
integration and the decay metrics used to compare low- and high-field
coherence.
"""
from ._kernel import BACKEND
from .analysis import FitResult, MetricError, fit_damped_sinusoid, one_over_e_time, spectral_linewidth
from .dynamics import IntegrationError, ProbeProfile, Trace, integrate, matrix_exponential_oracle
from .eigen import (
    DegenerateMatrixError,
    EigenMode,
    EvolutionMatrix,
    build_matrix,
    dominant_coherence,
    eigenmodes,
    high_field_rates,
    relaxed_state,
    suppression_factor,
    sweep_field,
)
from .model import DomainError, FieldPoint, RateSet, SpinState, Species, species_cesium
from .rates import Budget, CellConfig, ConfigurationError, budget

__version__ = "0.1.0"
