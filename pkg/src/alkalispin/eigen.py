"""Linear generator of the coupled (<F+>, <S+>) dynamics and its eigenmodes.

The state vector is ``x = (F+, S+)`` and evolves as ``dx/dt = M x`` with

    dF+/dt = -(i g B + R_sd) S+ - R_diff F+
    dS+/dt = -i g B/(2 q) F+ - R_sd (S+ - (F+ - S+)/q)
             - R_se (S+ - F+/q_se0) - R_diff S+

where ``g`` is the electron gyromagnetic ratio, ``q = (2I+1)^2/2`` and
``R_sd = R_sr + R_pr``. The spin-exchange term relaxes the electron spin
toward the spin-temperature locking ``S+ = F+/q_se0``; diffusion is a scalar
decay of both components.

Eigenvalues ``lambda`` of ``M`` give a decay rate ``gamma = -Re(lambda)`` and
a precession rate ``omega = -Im(lambda)``. With this sign ``omega > 0`` for
``B > 0``, because the transverse spin precesses as ``exp(-i omega t)``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .model import DomainError, FieldPoint, RateSet, SpinState, Species

#: Relative gap below which two eigenvalues are treated as coincident.
DEGENERACY_RTOL = 1e-12


class DegenerateMatrixError(ArithmeticError):
    """The generator is defective and the requested operation needs a full eigenbasis."""


@dataclass(frozen=True, eq=False)
class EvolutionMatrix:
    """2x2 complex generator in the ordered basis (F+, S+), units s^-1."""

    m: np.ndarray
    species: Species | None = None
    rates: RateSet | None = None
    field: FieldPoint | None = None

    def __post_init__(self):
        m = np.array(self.m, dtype=complex)
        if m.shape != (2, 2):
            raise ValueError(f"generator must be 2x2, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise DomainError("generator entries must be finite")
        m.setflags(write=False)
        object.__setattr__(self, "m", m)

    @property
    def trace(self) -> complex:
        return complex(self.m[0, 0] + self.m[1, 1])

    @property
    def det(self) -> complex:
        return complex(self.m[0, 0] * self.m[1, 1] - self.m[0, 1] * self.m[1, 0])

    def __array__(self, dtype=None, copy=None):
        return np.array(self.m, dtype=dtype)


def build_matrix(species: Species, rates: RateSet, field: FieldPoint | float) -> EvolutionMatrix:
    """Assemble the evolution generator for one species, rate set and field."""
    if not isinstance(field, FieldPoint):
        field = FieldPoint(float(field))
    q = species.q_sd
    larmor = species.gamma_e * field.B
    R_sd = rates.R_sd
    m = np.empty((2, 2), dtype=complex)
    m[0, 0] = -rates.R_diff
    m[0, 1] = -(1j * larmor + R_sd)
    m[1, 0] = -1j * larmor / (2.0 * q) + R_sd / q + rates.R_se / species.q_se0
    m[1, 1] = -R_sd * (1.0 + 1.0 / q) - rates.R_se - rates.R_diff
    return EvolutionMatrix(m, species=species, rates=rates, field=field)


@dataclass(frozen=True)
class EigenMode:
    """One eigenmode of the generator.

    ``vector`` has unit norm; ``weight`` is the coefficient of the initial
    state along it. For a defective generator the second mode carries the
    generalized eigenvector and ``degenerate`` is set on both.
    """

    eigenvalue: complex
    vector: np.ndarray = field(repr=False, compare=False)
    weight: complex
    degenerate: bool = False

    @property
    def gamma(self) -> float:
        return -self.eigenvalue.real

    @property
    def omega(self) -> float:
        return -self.eigenvalue.imag


def _eigenvalues(m: np.ndarray) -> tuple[complex, complex]:
    a, b, c, d = complex(m[0, 0]), complex(m[0, 1]), complex(m[1, 0]), complex(m[1, 1])
    half_tr = 0.5 * (a + d)
    s = cmath.sqrt(0.25 * (a - d) ** 2 + b * c)
    # larger-magnitude root first; the other from the product avoids cancellation
    big = half_tr + s if abs(half_tr + s) >= abs(half_tr - s) else half_tr - s
    if big == 0:
        return 0j, 0j
    det = a * d - b * c
    return big, det / big


def _ldexp(z, e: int):
    """``z * 2**e`` for complex scalars or arrays, exact barring over/underflow."""
    z = np.asarray(z, dtype=complex)
    out = np.ldexp(z.real, e) + 1j * np.ldexp(z.imag, e)
    return complex(out) if out.ndim == 0 else out


def _unit(v: np.ndarray) -> np.ndarray:
    v = v / np.max(np.abs(v))  # rescale first so subnormal entries survive
    k = 0 if abs(v[0]) > 1e-300 else 1
    v = v * (abs(v[k]) / v[k])  # phase convention: leading component real positive
    return v / np.linalg.norm(v)


def _eigenvector(m: np.ndarray, lam: complex) -> np.ndarray:
    a, b, c, d = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
    u = np.array([b, lam - a], dtype=complex)
    v = np.array([lam - d, c], dtype=complex)
    w = u if np.linalg.norm(u) >= np.linalg.norm(v) else v
    return _unit(w)


def _solve2(v1: np.ndarray, v2: np.ndarray, x: np.ndarray) -> tuple[complex, complex]:
    det = v1[0] * v2[1] - v2[0] * v1[1]
    w1 = (x[0] * v2[1] - v2[0] * x[1]) / det
    w2 = (v1[0] * x[1] - x[0] * v1[1]) / det
    return complex(w1), complex(w2)


def _ordered(m1: EigenMode, m2: EigenMode, scale: float) -> tuple[EigenMode, EigenMode]:
    if abs(m1.gamma - m2.gamma) <= DEGENERACY_RTOL * scale:
        swap = m2.omega < m1.omega
    else:
        swap = m2.gamma < m1.gamma
    return (m2, m1) if swap else (m1, m2)


def eigenmodes(matrix: EvolutionMatrix, initial: SpinState | Sequence[complex]) -> tuple[EigenMode, EigenMode]:
    """Closed-form eigendecomposition and projection of `initial` on the modes.

    Returns the two modes sorted by ascending decay rate (ties by ascending
    precession rate). A defective generator is flagged via
    ``EigenMode.degenerate``; its weights refer to the Jordan basis
    (eigenvector, generalized eigenvector).
    """
    m = matrix.m
    x = initial.as_array() if isinstance(initial, SpinState) else np.asarray(initial, dtype=complex)
    if not np.any(x):
        raise ValueError("initial state must be nonzero")
    scale = float(np.max(np.abs(m)))
    if scale == 0.0:
        e1, e2 = np.array([1, 0], dtype=complex), np.array([0, 1], dtype=complex)
        return (EigenMode(0j, e1, complex(x[0])), EigenMode(0j, e2, complex(x[1])))
    # work on M / 2^e (exact) so tiny or huge entries neither underflow nor overflow
    e = math.frexp(scale)[1]
    ms = np.ldexp(m.real, -e) + 1j * np.ldexp(m.imag, -e)
    mu1, mu2 = _eigenvalues(ms)

    if abs(mu1 - mu2) <= DEGENERACY_RTOL:
        mu = 0.5 * (mu1 + mu2)
        lam = _ldexp(mu, e)
        off = abs(ms[0, 1]) + abs(ms[1, 0]) + abs(ms[0, 0] - ms[1, 1])
        if off <= DEGENERACY_RTOL:
            # scalar matrix: every vector is an eigenvector
            e1, e2 = np.array([1, 0], dtype=complex), np.array([0, 1], dtype=complex)
            return (EigenMode(lam, e1, complex(x[0])), EigenMode(lam, e2, complex(x[1])))
        v1 = _eigenvector(ms, mu)
        # (M - lam) v2 = v1 with the minimum-norm solution; v2 carries units of time
        v2 = _ldexp(np.linalg.lstsq(ms - mu * np.eye(2), v1, rcond=None)[0], -e)
        w1, w2 = _solve2(v1, v2, x)
        return (EigenMode(lam, v1, w1, True), EigenMode(lam, v2, w2, True))

    v1 = _eigenvector(ms, mu1)
    v2 = _eigenvector(ms, mu2)
    w1, w2 = _solve2(v1, v2, x)
    return _ordered(EigenMode(_ldexp(mu1, e), v1, w1), EigenMode(_ldexp(mu2, e), v2, w2), scale)


def dominant_coherence(matrix: EvolutionMatrix, initial: SpinState | Sequence[complex]) -> tuple[float, float]:
    """Return ``(T2, omega)`` of the mode carrying the largest share of `initial`.

    ``T2`` is ``inf`` for an undamped mode.
    """
    modes = eigenmodes(matrix, initial)
    mags = [abs(md.weight) for md in modes]
    if max(mags) == 0.0:
        raise ArithmeticError("initial state has no weight on either eigenmode")
    # modes arrive sorted by gamma, so a tie keeps the slower one
    top = 1 if mags[1] > mags[0] * (1.0 + 1e-12) else 0
    mode = modes[top]
    T2 = 1.0 / mode.gamma if mode.gamma > 0 else math.inf
    return T2, mode.omega


def high_field_rates(species: Species, R_sd: float) -> tuple[float, float]:
    """Asymptotic decay rates of the two modes for ``g|B| >> R_sd``.

    The generator gives ``R_sd (2q + 2 -/+ sqrt(2q)) / (4q)``, i.e. 29/64 and
    37/64 of ``R_sd`` for Cs. These agree with the secular S-damping rates of
    the upper and lower hyperfine manifolds from the full density matrix.
    """
    q = species.q_sd
    root = math.sqrt(2.0 * q)
    return R_sd * (2.0 * q + 2.0 - root) / (4.0 * q), R_sd * (2.0 * q + 2.0 + root) / (4.0 * q)


def suppression_factor(species: Species, rates: RateSet) -> float:
    """Ratio of the mean high-field decay rate to the low-field rate ``R_sd/q``.

    Pure S-damping only; for rate sets with spin exchange or diffusion use
    :func:`suppression_factor_numeric`.
    """
    if not rates.R_sd > 0:
        raise DomainError("suppression factor needs R_sd > 0")
    if rates.R_se != 0 or rates.R_diff != 0:
        raise DomainError("closed form holds for R_se = R_diff = 0; use suppression_factor_numeric")
    slow, fast = high_field_rates(species, rates.R_sd)
    return 0.5 * (slow + fast) / (rates.R_sd / species.q_sd)


def suppression_factor_numeric(
    species: Species,
    rates: RateSet,
    B_high: float,
    initial: SpinState | None = None,
    B_low: float = 0.0,
) -> float:
    """Suppression from eigenvalues at two fields: mean gamma at `B_high` over dominant gamma at `B_low`."""
    if initial is None:
        initial = SpinState.spin_temperature(species)
    T2_low, _ = dominant_coherence(build_matrix(species, rates, B_low), initial)
    hi = eigenmodes(build_matrix(species, rates, B_high), initial)
    return 0.5 * (hi[0].gamma + hi[1].gamma) * T2_low


def relaxed_state(species: Species, rates: RateSet, F_plus: complex = 1.0) -> SpinState:
    """State left after slow pumping: the slowest mode of the zero-field generator.

    Falls back to the spin-temperature state when no process couples S+ to
    F+ (R_sd = R_se = 0).
    """
    if rates.R_sd == 0 and rates.R_se == 0:
        return SpinState.spin_temperature(species, F_plus)
    slow = eigenmodes(build_matrix(species, rates, 0.0), [1.0, 0.0])[0]
    v = slow.vector
    return SpinState(F_plus, complex(F_plus) * v[1] / v[0])


@dataclass(frozen=True)
class SweepRow:
    B: float
    omega1: float = math.nan
    gamma1: float = math.nan
    omega2: float = math.nan
    gamma2: float = math.nan
    T2_dominant: float = math.nan
    error: str | None = None


def sweep_field(
    species: Species,
    rates: RateSet,
    fields: Sequence[FieldPoint | float],
    initial: SpinState | None = None,
) -> list[SweepRow]:
    """Eigenmodes and dominant coherence time at each field, in input order.

    A failure at one field yields a row with ``error`` set; the sweep goes on.
    """
    if len(fields) == 0:
        raise ValueError("field list is empty")
    if initial is None:
        initial = SpinState.spin_temperature(species)
    rows = []
    for f in fields:
        B = f.B if isinstance(f, FieldPoint) else float(f)
        try:
            matrix = build_matrix(species, rates, B)
            m1, m2 = eigenmodes(matrix, initial)
            T2, _ = dominant_coherence(matrix, initial)
            rows.append(SweepRow(B, m1.omega, m1.gamma, m2.omega, m2.gamma, T2))
        except (ArithmeticError, ValueError) as exc:
            rows.append(SweepRow(B, error=f"{type(exc).__name__}: {exc}"))
    return rows


def half_suppression_field(
    species: Species,
    rates: RateSet,
    initial: SpinState | None = None,
    B_max: float = 1.0,
    rel_tol: float = 1e-6,
) -> float:
    """Smallest field at which the dominant T2 drops to half its zero-field value.

    Scans log-spaced fields up to `B_max` gauss, then bisects the first crossing.
    """
    if initial is None:
        initial = SpinState.spin_temperature(species)

    def excess(B):
        T2, _ = dominant_coherence(build_matrix(species, rates, B), initial)
        return T2 - 0.5 * T2_0

    T2_0, _ = dominant_coherence(build_matrix(species, rates, 0.0), initial)
    if not math.isfinite(T2_0):
        raise DomainError("zero-field coherence time is infinite")
    grid = np.geomspace(B_max * 1e-9, B_max, 400)
    lo = 0.0
    for B in grid:
        if excess(B) <= 0:
            hi = B
            break
        lo = B
    else:
        raise DomainError(f"T2 does not halve below B = {B_max} G")
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if excess(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
