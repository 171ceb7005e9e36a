"""Physical value types shared across the package.

Units are fixed throughout: seconds, gauss, centimetres and s^-1 for rates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

#: Electron gyromagnetic ratio magnitude, rad s^-1 G^-1 (CODATA 2018, 1.76085963e11 rad/s/T).
GAMMA_E_DEFAULT = 1.7608e7

#: 1 amagat in cm^-3.
AMAGAT_CM3 = 2.6868e19


class DomainError(ValueError):
    """An argument lies outside the domain where a physical formula applies."""


def _is_half_integer(x: float) -> bool:
    return math.isfinite(x) and abs(2.0 * x - round(2.0 * x)) < 1e-12


def q_sd_factor(I: float) -> float:
    """Slowing-down factor ``(2I+1)^2 / 2`` for S-damping in the low-polarization limit.

    Raises
    ------
    DomainError
        If `I` is not a positive integer or half-integer.
    """
    if not _is_half_integer(I) or I <= 0:
        raise DomainError(f"nuclear spin must be a positive half-integer, got {I!r}")
    return (2.0 * I + 1.0) ** 2 / 2.0


def polarization_from_pumping(T_pump: float, T1: float) -> float:
    """Initial polarization ``T1 / (T_pump + T1)`` reached after pumping for `T_pump`."""
    if not T1 > 0 or not math.isfinite(T1):
        raise DomainError(f"T1 must be positive and finite, got {T1!r}")
    if not T_pump >= 0:
        raise DomainError(f"T_pump must be non-negative, got {T_pump!r}")
    if math.isinf(T_pump):
        return 0.0
    return T1 / (T_pump + T1)


@dataclass(frozen=True)
class Species:
    """An alkali-metal species.

    Attributes
    ----------
    name : str
    I : float
        Nuclear spin.
    gamma_e : float
        Electron gyromagnetic ratio, rad s^-1 G^-1.
    q_sd : float
        Slowing-down factor when S-damping dominates, always ``(2I+1)^2/2``.
    q_se0 : float
        Ratio ``<F+>/<S+>`` locked by rapid spin exchange at low polarization
        (spin temperature). Defaults to ``1 + 4I(I+1)/3``, which is 22 for Cs.
    """

    name: str
    I: float
    gamma_e: float = GAMMA_E_DEFAULT
    q_se0: float = 0.0
    q_sd: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "q_sd", q_sd_factor(self.I))
        if not (self.gamma_e > 0 and math.isfinite(self.gamma_e)):
            raise DomainError(f"gamma_e must be positive, got {self.gamma_e!r}")
        if self.q_se0 == 0.0:
            object.__setattr__(self, "q_se0", 1.0 + 4.0 * self.I * (self.I + 1.0) / 3.0)
        if not (self.q_se0 > 0 and math.isfinite(self.q_se0)):
            raise DomainError(f"q_se0 must be positive, got {self.q_se0!r}")

    @property
    def multiplicity(self) -> float:
        """``2I + 1``, the factor dividing the free-electron Larmor rate at high field."""
        return 2.0 * self.I + 1.0


def species_cesium(gamma_e: float = GAMMA_E_DEFAULT) -> Species:
    """Cesium-133: I = 7/2, q_sd = 32, q_se0 = 22."""
    return Species(name="Cs", I=3.5, gamma_e=gamma_e, q_se0=22.0)


@dataclass(frozen=True)
class RateSet:
    """Relaxation-rate budget, all in s^-1.

    ``R_sd`` (total S-damping) is derived as ``R_sr + R_pr``.
    """

    R_sr: float = 0.0
    R_se: float = 0.0
    R_pr: float = 0.0
    R_diff: float = 0.0

    def __post_init__(self):
        for name in ("R_sr", "R_se", "R_pr", "R_diff"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise DomainError(f"{name} must be finite and >= 0, got {value!r}")

    @property
    def R_sd(self) -> float:
        return self.R_sr + self.R_pr

    def replace(self, **changes) -> "RateSet":
        values = {k: getattr(self, k) for k in ("R_sr", "R_se", "R_pr", "R_diff")}
        values.update(changes)
        return RateSet(**values)

    def as_dict(self) -> dict:
        return {
            "R_sr": self.R_sr,
            "R_se": self.R_se,
            "R_pr": self.R_pr,
            "R_diff": self.R_diff,
            "R_sd": self.R_sd,
        }


@dataclass(frozen=True)
class FieldPoint:
    """Magnetic field along z, gauss (signed)."""

    B: float

    def __post_init__(self):
        if not math.isfinite(self.B):
            raise DomainError(f"field must be finite, got {self.B!r}")


@dataclass(frozen=True)
class SpinState:
    """Transverse spin components ``<F+>`` and ``<S+>``.

    The nuclear part ``<I+>`` is ``F_plus - S_plus``.
    """

    F_plus: complex
    S_plus: complex

    def __post_init__(self):
        object.__setattr__(self, "F_plus", complex(self.F_plus))
        object.__setattr__(self, "S_plus", complex(self.S_plus))
        if not all(math.isfinite(v) for v in (self.F_plus.real, self.F_plus.imag,
                                              self.S_plus.real, self.S_plus.imag)):
            raise DomainError("spin state components must be finite")

    @property
    def I_plus(self) -> complex:
        return self.F_plus - self.S_plus

    @classmethod
    def spin_temperature(cls, species: Species, F_plus: complex = 1.0) -> "SpinState":
        """Low-polarization spin-temperature state ``S+ = F+ / q_se0``."""
        state = cls(F_plus, complex(F_plus) / species.q_se0)
        if abs(state.S_plus) > abs(state.F_plus):
            raise DomainError("spin-temperature state requires |S+| <= |F+|")
        return state

    def as_array(self) -> np.ndarray:
        return np.array([self.F_plus, self.S_plus], dtype=complex)

    def __mul__(self, c):
        return SpinState(self.F_plus * c, self.S_plus * c)

    __rmul__ = __mul__

    def __add__(self, other: "SpinState") -> "SpinState":
        return SpinState(self.F_plus + other.F_plus, self.S_plus + other.S_plus)
