"""Time-domain evolution of the transverse spin.

:func:`integrate` runs the adaptive Runge-Kutta kernel (compiled when
available, see :mod:`alkalispin._kernel`); :func:`matrix_exponential_oracle`
is the exact eigen-expansion used to check it. :func:`simulate_gaussian_probe`
models a probe beam with a Gaussian intensity profile as a set of
independent annular shells, each with its own probe-induced relaxation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernel
from .eigen import (
    DegenerateMatrixError,
    EvolutionMatrix,
    build_matrix,
    dominant_coherence,
    eigenmodes,
)
from .model import DomainError, FieldPoint, RateSet, SpinState, Species


class IntegrationError(ArithmeticError):
    """The adaptive integrator could not reach the end of the time grid."""

    def __init__(self, message: str, t_last: float):
        super().__init__(f"{message} (last good time {t_last:.6g} s)")
        self.t_last = t_last


@dataclass(frozen=True, eq=False)
class Trace:
    """Sampled observable ``y = Re <S+>`` at times ``t``.

    ``states`` optionally holds the full complex (F+, S+) trajectory,
    shape ``(len(t), 2)``.
    """

    t: np.ndarray
    y: np.ndarray
    meta: dict = field(default_factory=dict)
    states: np.ndarray | None = None

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if t.ndim != 1 or y.shape != t.shape:
            raise ValueError("t and y must be 1-D arrays of equal length")
        if len(t) < 2:
            raise ValueError("a trace needs at least two samples")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(y))):
            raise ValueError("trace samples must be finite")
        if np.any(np.diff(t) <= 0):
            raise ValueError("sample times must be strictly increasing")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "y", y)

    def __len__(self):
        return len(self.t)

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])

    def is_uniform(self, rtol: float = 1e-6) -> bool:
        d = np.diff(self.t)
        return bool(np.all(np.abs(d - d.mean()) <= rtol * d.mean()))


def time_grid(t_end: float, n: int = 2000, t_start: float = 0.0) -> np.ndarray:
    """Uniform grid of `n` samples from `t_start` to `t_end`."""
    if not t_end > t_start:
        raise ValueError("t_end must exceed t_start")
    return np.linspace(t_start, t_end, n)


def default_time_grid(matrix: EvolutionMatrix, initial: SpinState, n: int = 2000, n_decay: float = 5.0) -> np.ndarray:
    """Grid spanning `n_decay` dominant coherence times (or 5 Larmor periods if undamped)."""
    T2, omega = dominant_coherence(matrix, initial)
    if math.isfinite(T2):
        span = n_decay * T2
    elif omega != 0.0:
        span = 5.0 * 2.0 * math.pi / abs(omega)
    else:
        span = 1.0
    return time_grid(span, n)


def _meta(matrix: EvolutionMatrix) -> dict:
    meta = {}
    if matrix.field is not None:
        meta["B"] = matrix.field.B
    if matrix.rates is not None:
        meta.update(matrix.rates.as_dict())
    if matrix.species is not None:
        meta["species"] = matrix.species.name
    return meta


def _as_vector(initial) -> np.ndarray:
    if isinstance(initial, SpinState):
        return initial.as_array()
    x = np.asarray(initial, dtype=complex)
    if x.shape != (2,):
        raise ValueError("initial state must have two components (F+, S+)")
    return x


def integrate(
    matrix: EvolutionMatrix,
    initial: SpinState | Sequence[complex],
    t_grid: Sequence[float],
    rel_tol: float = 1e-8,
    abs_tol: float | None = None,
    fixed_step: float | None = None,
    max_steps: int = 50_000_000,
) -> Trace:
    """Integrate ``d(F+, S+)/dt = M (F+, S+)`` and sample onto `t_grid`.

    Parameters
    ----------
    matrix : EvolutionMatrix
    initial : SpinState or pair of complex
        State at ``t_grid[0]``.
    t_grid : array_like
        Strictly increasing sample times, s.
    rel_tol, abs_tol : float
        Local error tolerances of the Dormand-Prince 5(4) controller.
        `abs_tol` defaults to ``1e-3 * rel_tol * |initial|`` so that results
        scale exactly with the initial state.
    fixed_step : float, optional
        Use classical RK4 with this maximum step instead of the adaptive pair.

    Raises
    ------
    IntegrationError
        If the step size underflows or `max_steps` is exhausted.
    """
    t = np.ascontiguousarray(t_grid, dtype=float)
    if t.ndim != 1 or len(t) < 2 or np.any(np.diff(t) <= 0):
        raise ValueError("t_grid must be strictly increasing with at least two points")
    if not (0.0 < rel_tol < 1.0):
        raise ValueError("rel_tol must lie in (0, 1)")
    x0 = _as_vector(initial)
    scale = float(np.linalg.norm(x0))
    if abs_tol is None:
        abs_tol = 1e-3 * rel_tol * scale
    elif not (0.0 < abs_tol < 1.0):
        raise ValueError("abs_tol must lie in (0, 1)")

    if scale == 0.0:
        states = np.zeros((len(t), 2), dtype=complex)
    elif fixed_step is not None:
        if not fixed_step > 0:
            raise ValueError("fixed_step must be positive")
        states = _kernel.rk4_fixed(matrix.m, x0, t, float(fixed_step))
    else:
        states, status, t_last, _ = _kernel.dp45(matrix.m, x0, t, rel_tol, abs_tol, 0.0, int(max_steps))
        if status == _kernel.STEP_UNDERFLOW:
            raise IntegrationError("step size underflow", t_last)
        if status == _kernel.TOO_MANY_STEPS:
            raise IntegrationError(f"exceeded {max_steps} steps", t_last)
    if not np.all(np.isfinite(states)):
        raise IntegrationError("non-finite state", float(t[0]))
    return Trace(t, states[:, 1].real.copy(), meta=_meta(matrix), states=states)


def oracle_states(matrix: EvolutionMatrix, initial, t) -> np.ndarray:
    """Exact states ``sum_i w_i v_i exp(lambda_i t)`` at each time in `t`, shape ``(n, 2)``."""
    x0 = _as_vector(initial)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if not np.any(x0):
        return np.zeros((len(t), 2), dtype=complex)
    modes = eigenmodes(matrix, x0)
    if modes[0].degenerate:
        raise DegenerateMatrixError("generator is defective; the eigen expansion does not apply")
    out = np.zeros((len(t), 2), dtype=complex)
    for md in modes:
        out += (md.weight * np.exp(md.eigenvalue * t))[:, None] * md.vector[None, :]
    out[t == 0.0] = x0
    return out


def matrix_exponential_oracle(matrix: EvolutionMatrix, initial, t: float) -> SpinState:
    """Exact state at time `t` from the eigendecomposition of the generator.

    Raises
    ------
    DegenerateMatrixError
        If the generator is defective.
    """
    if t == 0.0:
        x0 = _as_vector(initial)
        return SpinState(x0[0], x0[1])
    state = oracle_states(matrix, initial, [t])[0]
    return SpinState(state[0], state[1])


# -- Gaussian probe -----------------------------------------------------------


@dataclass(frozen=True)
class ProbeProfile:
    """Gaussian probe beam illuminating a disk of radius `a`.

    Attributes
    ----------
    R_pr_peak : float
        Probe-induced relaxation rate on the beam axis, s^-1.
    w : float
        1/e^2 intensity radius, cm.
    a : float
        Cell radius, cm.
    n_shells : int
        Number of equal-area annuli.
    """

    R_pr_peak: float
    w: float
    a: float
    n_shells: int = 64
    weight_mode: str = "intensity"

    def __post_init__(self):
        if not (self.w > 0 and self.a > 0):
            raise DomainError("beam and cell radii must be positive")
        if not (isinstance(self.n_shells, (int, np.integer)) and self.n_shells >= 1):
            raise DomainError("n_shells must be a positive integer")
        if not (self.R_pr_peak >= 0 and math.isfinite(self.R_pr_peak)):
            raise DomainError("R_pr_peak must be finite and >= 0")
        if self.weight_mode != "intensity":
            raise DomainError(f"unsupported weight mode {self.weight_mode!r}")

    def radii(self) -> np.ndarray:
        """Radius splitting each equal-area annulus into two equal areas."""
        k = np.arange(self.n_shells)
        return self.a * np.sqrt((k + 0.5) / self.n_shells)

    def intensity(self) -> np.ndarray:
        """Relative intensity ``exp(-2 r^2 / w^2)`` at each shell radius."""
        r = self.radii()
        return np.exp(-2.0 * r**2 / self.w**2)

    def shell_rates(self, base: RateSet) -> list[RateSet]:
        return [base.replace(R_pr=base.R_pr + self.R_pr_peak * x) for x in self.intensity()]


def simulate_shells(
    species: Species,
    rate_sets: Sequence[RateSet],
    weights: Sequence[float],
    field: FieldPoint | float,
    initial: SpinState,
    t_grid: Sequence[float],
    rel_tol: float = 1e-8,
) -> Trace:
    """Weighted mean of independent shell traces, summed in shell order."""
    weights = np.asarray(weights, dtype=float)
    if len(rate_sets) != len(weights) or len(weights) == 0:
        raise ValueError("need one weight per rate set")
    if np.any(weights < 0) or not weights.sum() > 0:
        raise ValueError("weights must be non-negative with positive sum")
    t = np.asarray(t_grid, dtype=float)
    y = np.zeros(len(t))
    states = np.zeros((len(t), 2), dtype=complex)
    for rates, wk in zip(rate_sets, weights):
        tr = integrate(build_matrix(species, rates, field), initial, t, rel_tol=rel_tol)
        y += wk * tr.y
        states += wk * tr.states
    norm = weights.sum()
    B = field.B if isinstance(field, FieldPoint) else float(field)
    return Trace(t, y / norm, meta={"B": B, "n_shells": len(weights)}, states=states / norm)


def simulate_gaussian_probe(
    species: Species,
    base_rates: RateSet,
    profile: ProbeProfile,
    field: FieldPoint | float,
    initial: SpinState,
    t_grid: Sequence[float],
    rel_tol: float = 1e-8,
) -> Trace:
    """Signal seen by a Gaussian probe whose absorption also relaxes the spins.

    Each equal-area shell gets ``R_pr = R_pr_peak exp(-2 r^2/w^2)`` on top of
    `base_rates` and evolves on its own; shells are weighted by the local
    probe intensity, which normalizes the trace to ``y(0)`` of `initial`.
    """
    tr = simulate_shells(
        species, profile.shell_rates(base_rates), profile.intensity(), field, initial, t_grid, rel_tol
    )
    tr.meta.update({"R_pr_peak": profile.R_pr_peak, "w": profile.w, "a": profile.a})
    return tr


def probe_lifetime(species: Species, base_rates: RateSet, profile: ProbeProfile) -> float:
    """Composite T1: inverse of the intensity-weighted mean of shell rates ``R_sd/q + R_diff``."""
    weights = profile.intensity()
    rates = np.array([r.R_sd / species.q_sd + r.R_diff for r in profile.shell_rates(base_rates)])
    mean = float(np.dot(weights, rates) / weights.sum())
    return 1.0 / mean if mean > 0 else math.inf


def tune_probe_peak(
    species: Species, base_rates: RateSet, w: float, a: float, n_shells: int, T1: float
) -> ProbeProfile:
    """Profile whose peak probe rate makes :func:`probe_lifetime` equal `T1`."""
    shape = ProbeProfile(0.0, w, a, n_shells)
    x = shape.intensity()
    mean_x = float(np.dot(x, x) / x.sum())
    needed = 1.0 / T1 - base_rates.R_sd / species.q_sd - base_rates.R_diff
    if needed < 0:
        raise DomainError(f"base rates alone already give T1 < {T1} s")
    return ProbeProfile(species.q_sd * needed / mean_x, w, a, n_shells)
