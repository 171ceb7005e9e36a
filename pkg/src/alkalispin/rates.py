"""Relaxation-rate budget of an alkali vapor cell.

Collision rates are ``n sigma v_rel``; wall relaxation is the damping of the
slowest diffusion mode of a sphere with fully depolarizing walls. Cross
sections and vapor-pressure coefficients are always supplied by the caller.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

from scipy.constants import atomic_mass, k as K_B, pi, torr
from scipy.optimize import brentq

from .model import AMAGAT_CM3, DomainError, RateSet, Species

#: Reference gas temperature for amagat-based inputs, K.
T_STANDARD = 273.15


class ConfigurationError(ValueError):
    """Required configuration data (e.g. a correlation or cross section) is missing."""


def mean_relative_speed(T: float, m1: float, m2: float) -> float:
    """Mean relative thermal speed ``sqrt(8 k T / (pi mu))`` in cm/s.

    Parameters
    ----------
    T : float
        Temperature, K.
    m1, m2 : float
        Masses of the two partners, amu.
    """
    if not (T > 0 and m1 > 0 and m2 > 0):
        raise DomainError("temperature and masses must be positive")
    mu = m1 * m2 / (m1 + m2) * atomic_mass
    return math.sqrt(8.0 * K_B * T / (pi * mu)) * 100.0


def binary_collision_rate(n: float, sigma: float, v_bar: float) -> float:
    """Rate ``n sigma v_bar`` (s^-1) for density in cm^-3, sigma in cm^2, speed in cm/s."""
    if n < 0 or sigma < 0 or v_bar < 0:
        raise DomainError("density, cross section and speed must be >= 0")
    return n * sigma * v_bar


def diffusion_coefficient(D0: float, n0: float, T0: float, n_buffer: float, T: float) -> float:
    """``D0 (n0/n) (T/T0)^(3/2)`` in cm^2/s."""
    if not all(x > 0 for x in (D0, n0, T0, n_buffer, T)):
        raise DomainError("diffusion inputs must be positive")
    return D0 * (n0 / n_buffer) * (T / T0) ** 1.5


def diffusion_mode_rate(D0: float, n0: float, T0: float, n_buffer: float, T: float, radius_a: float) -> float:
    """Damping rate ``D (pi/a)^2`` of the slowest diffusion mode in a sphere of radius `a` (cm)."""
    if not radius_a > 0:
        raise DomainError("cell radius must be positive")
    return diffusion_coefficient(D0, n0, T0, n_buffer, T) * (pi / radius_a) ** 2


def number_density_from_pressure(P: float, T: float) -> float:
    """Ideal-gas number density in cm^-3 for pressure `P` in pascal."""
    if not T > 0:
        raise DomainError("temperature must be positive")
    if P < 0:
        raise DomainError("pressure must be >= 0")
    return P / (K_B * T) * 1e-6


@dataclass(frozen=True)
class VaporPressureCorrelation:
    """Saturated vapor pressure ``log10 P = A - B/T``, with P in `unit` ("torr" or "pa")."""

    A: float
    B: float
    unit: str = "torr"
    source: str = ""

    def pressure_pa(self, T: float) -> float:
        p = 10.0 ** (self.A - self.B / T)
        if self.unit == "torr":
            return p * torr
        if self.unit == "pa":
            return p
        raise ConfigurationError(f"unknown pressure unit {self.unit!r}")


def alkali_vapor_density(T: float, correlation: VaporPressureCorrelation | Mapping | None) -> float:
    """Saturated alkali number density (cm^-3) at temperature `T` from a supplied correlation."""
    if correlation is None:
        raise ConfigurationError("a vapor-pressure correlation (A, B) is required")
    if isinstance(correlation, Mapping):
        try:
            correlation = VaporPressureCorrelation(**correlation)
        except TypeError as exc:
            raise ConfigurationError(f"bad vapor-pressure correlation: {exc}") from None
    if not T > 0:
        raise DomainError("temperature must be positive")
    return number_density_from_pressure(correlation.pressure_pa(T), T)


def lifetime_T1(species: Species, rates: RateSet) -> float:
    """Longitudinal lifetime ``1 / (R_sd/q_sd + R_diff)``; ``inf`` if both vanish.

    S-damping is slowed by the nuclear flywheel; diffusion to the walls is
    not. Spin exchange does not enter.
    """
    total = rates.R_sd / species.q_sd + rates.R_diff
    return 1.0 / total if total > 0 else math.inf


@dataclass(frozen=True)
class CellConfig:
    """Vapor cell and gas parameters.

    Attributes
    ----------
    radius_a : float
        Cell radius, cm.
    T : float
        Temperature, K.
    n_alkali : float
        Alkali number density, cm^-3.
    n_buffer : float
        Buffer-gas density, cm^-3. Give either this or `buffer_amagat`.
    D0 : float
        Alkali diffusion coefficient in the buffer gas at `n0`, `T0`, cm^2/s.
    cross_sections : mapping
        ``sr_buffer`` (spin rotation with buffer gas) and ``se_alkali``
        (alkali-alkali spin exchange), cm^2.
    alkali_mass, buffer_mass : float
        amu.
    """

    radius_a: float
    T: float
    n_alkali: float
    D0: float
    cross_sections: Mapping[str, float]
    alkali_mass: float
    buffer_mass: float
    n_buffer: float | None = None
    buffer_amagat: float | None = None
    n0: float = AMAGAT_CM3
    T0: float = T_STANDARD

    def __post_init__(self):
        if (self.n_buffer is None) == (self.buffer_amagat is None):
            raise ConfigurationError("give exactly one of n_buffer and buffer_amagat")
        if self.n_buffer is None:
            object.__setattr__(self, "n_buffer", self.buffer_amagat * AMAGAT_CM3)
        for key in ("sr_buffer", "se_alkali"):
            if key not in self.cross_sections:
                raise ConfigurationError(f"missing cross section {key!r}")
            if not self.cross_sections[key] >= 0:
                raise DomainError(f"cross section {key!r} must be >= 0")
        object.__setattr__(self, "cross_sections", dict(self.cross_sections))
        if not self.radius_a > 0:
            raise DomainError("radius_a must be positive")
        for name in ("T", "D0", "alkali_mass", "buffer_mass", "n0", "T0"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")
        if self.n_alkali < 0 or self.n_buffer < 0:
            raise DomainError("densities must be >= 0")


@dataclass(frozen=True)
class Budget:
    """Rate budget with a re-evaluable formula string per quantity."""

    rates: RateSet
    T1_estimate: float
    provenance: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "rates": self.rates.as_dict(),
            "T1_estimate_s": self.T1_estimate,
            "provenance": dict(self.provenance),
        }


def evaluate_provenance(expr: str) -> float:
    """Re-evaluate the right-hand side of a provenance string (arithmetic and ``pi`` only)."""
    rhs = expr.split("=", 1)[1]
    return float(eval(rhs, {"__builtins__": {}}, {"pi": pi, "inf": math.inf}))


def budget(cell: CellConfig, species: Species, probe_rate: float = 0.0) -> Budget:
    """Compose spin-rotation, spin-exchange, probe and diffusion rates for `cell`."""
    if not probe_rate >= 0:
        raise DomainError("probe rate must be >= 0")
    sig_sr = cell.cross_sections["sr_buffer"]
    sig_se = cell.cross_sections["se_alkali"]
    v_sr = mean_relative_speed(cell.T, cell.alkali_mass, cell.buffer_mass)
    v_se = mean_relative_speed(cell.T, cell.alkali_mass, cell.alkali_mass)
    R_sr = binary_collision_rate(cell.n_buffer, sig_sr, v_sr)
    R_se = binary_collision_rate(cell.n_alkali, sig_se, v_se)
    if cell.n_buffer > 0:
        R_diff = diffusion_mode_rate(cell.D0, cell.n0, cell.T0, cell.n_buffer, cell.T, cell.radius_a)
        diff_expr = (f"R_diff = {cell.D0!r} * ({cell.n0!r} / {cell.n_buffer!r}) * "
                     f"({cell.T!r} / {cell.T0!r}) ** 1.5 * (pi / {cell.radius_a!r}) ** 2")
    else:
        # no buffer gas: diffusion is not the limiting process; leave it out
        R_diff = 0.0
        diff_expr = "R_diff = 0.0"
    rates = RateSet(R_sr=R_sr, R_se=R_se, R_pr=probe_rate, R_diff=R_diff)
    T1 = lifetime_T1(species, rates)
    provenance = {
        "v_rel_sr": f"v_rel_sr = (8 * {K_B!r} * {cell.T!r} / (pi * {cell.alkali_mass!r} * {cell.buffer_mass!r}"
                    f" / ({cell.alkali_mass!r} + {cell.buffer_mass!r}) / {1 / atomic_mass!r})) ** 0.5 * 100.0",
        "v_rel_se": f"v_rel_se = (8 * {K_B!r} * {cell.T!r} / (pi * {cell.alkali_mass!r} * {cell.alkali_mass!r}"
                    f" / ({cell.alkali_mass!r} + {cell.alkali_mass!r}) / {1 / atomic_mass!r})) ** 0.5 * 100.0",
        "R_sr": f"R_sr = {cell.n_buffer!r} * {sig_sr!r} * {v_sr!r}",
        "R_se": f"R_se = {cell.n_alkali!r} * {sig_se!r} * {v_se!r}",
        "R_pr": f"R_pr = {float(probe_rate)!r}",
        "R_diff": diff_expr,
        "T1_estimate": (f"T1_estimate = 1.0 / (({R_sr!r} + {float(probe_rate)!r}) / {species.q_sd!r} + {R_diff!r})"
                        if math.isfinite(T1) else "T1_estimate = inf"),
    }
    return Budget(rates=rates, T1_estimate=T1, provenance=provenance)


def temperature_for_density(n_alkali: float, correlation: VaporPressureCorrelation,
                            T_lo: float = 200.0, T_hi: float = 800.0) -> float:
    """Temperature (K) at which the saturated vapor reaches `n_alkali` (cm^-3)."""
    if not n_alkali > 0:
        raise DomainError("density must be positive")
    return brentq(lambda T: alkali_vapor_density(T, correlation) - n_alkali, T_lo, T_hi, xtol=1e-10)
