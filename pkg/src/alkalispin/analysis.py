"""Measurement pipeline for transverse-spin traces.

Fits the damped sinusoid ``y = A exp(-t/T2) sin(omega t + phi)`` and
extracts model-free decay metrics: the 1/e time of the envelope and the
FWHM of the power spectrum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dynamics import Trace

MAX_ITER = 200
XTOL = 1e-8


class MetricError(ValueError):
    """A decay metric cannot be extracted from the trace."""


@dataclass(frozen=True)
class FitResult:
    A: float
    T2: float
    omega: float
    phi: float
    rms_residual: float
    converged: bool
    iterations: int
    degenerate_omega: bool = False

    def as_dict(self) -> dict:
        return {
            "A": self.A,
            "T2_s": self.T2,
            "omega_rad_s": self.omega,
            "phi_rad": self.phi,
            "rms_residual": self.rms_residual,
            "converged": self.converged,
            "iterations": self.iterations,
            "degenerate_omega": self.degenerate_omega,
        }


def damped_sinusoid(t, A, T2, omega, phi):
    t = np.asarray(t, dtype=float)
    return A * np.exp(-t / T2) * np.sin(omega * t + phi)


def damped_sinusoid_jacobian(t, A, T2, omega, phi) -> np.ndarray:
    """Columns d/dA, d/dT2, d/domega, d/dphi of :func:`damped_sinusoid`."""
    t = np.asarray(t, dtype=float)
    env = np.exp(-t / T2)
    s = np.sin(omega * t + phi)
    c = np.cos(omega * t + phi)
    return np.column_stack([
        env * s,
        A * env * s * t / T2**2,
        A * env * c * t,
        A * env * c,
    ])


def _exponential(t, A, T2):
    return A * np.exp(-t / T2)


def _exponential_jacobian(t, A, T2):
    env = np.exp(-t / T2)
    return np.column_stack([env, A * env * t / T2**2])


def levenberg_marquardt(
    model: Callable,
    jacobian: Callable,
    p0,
    t: np.ndarray,
    y: np.ndarray,
    valid: Callable = lambda p: True,
    max_iter: int = MAX_ITER,
    xtol: float = XTOL,
):
    """Minimize ``sum (y - model(t, *p))^2`` with Marquardt-scaled damping.

    Returns ``(p, converged, iterations)``. Steps that leave the `valid`
    region are treated as rejected.
    """
    p = np.array(p0, dtype=float)
    r = y - model(t, *p)
    cost = float(r @ r)
    mu = 1e-3
    nu = 2.0
    for it in range(1, max_iter + 1):
        J = jacobian(t, *p)
        scale = np.sqrt(np.sum(J * J, axis=0))
        scale[scale == 0] = 1.0
        Js = J / scale
        g = Js.T @ r
        if not np.any(g):
            return p, True, it
        while True:
            aug = np.vstack([Js, math.sqrt(mu) * np.eye(len(p))])
            rhs = np.concatenate([r, np.zeros(len(p))])
            step = np.linalg.lstsq(aug, rhs, rcond=None)[0] / scale
            trial = p + step
            if valid(trial):
                r_trial = y - model(t, *trial)
                cost_trial = float(r_trial @ r_trial)
            else:
                cost_trial = math.inf
            # predicted decrease of the damped linear model
            sstep = step * scale
            predicted = float(sstep @ (mu * sstep + g))
            if cost_trial < cost and predicted > 0:
                rho = (cost - cost_trial) / predicted
                mu *= max(1.0 / 3.0, 1.0 - (2.0 * rho - 1.0) ** 3)
                nu = 2.0
                small = np.all(np.abs(step) <= xtol * (np.abs(trial) + 1e-300))
                p, r, cost = trial, r_trial, cost_trial
                if small:
                    return p, True, it
                break
            if np.all(np.abs(step) <= xtol * (np.abs(p) + 1e-300)):
                # no downhill step left at machine resolution
                return p, True, it
            mu *= nu
            nu *= 2.0
            if mu > 1e20:
                return p, False, it
    return p, False, max_iter


def _wrap_phase(phi: float) -> float:
    phi = math.remainder(phi, 2.0 * math.pi)
    return math.pi if phi == -math.pi else phi


def _spectral_omega(t: np.ndarray, y: np.ndarray) -> float:
    n = len(y)
    dt = (t[-1] - t[0]) / (n - 1)
    spec = np.abs(np.fft.rfft(y, 4 * n))
    f = np.fft.rfftfreq(4 * n, dt)
    k = int(np.argmax(spec))
    if 0 < k < len(spec) - 1:
        a, b, c = spec[k - 1], spec[k], spec[k + 1]
        denom = a - 2 * b + c
        shift = 0.5 * (a - c) / denom if denom != 0 else 0.0
        return 2.0 * math.pi * (f[k] + shift * (f[1] - f[0]))
    return 2.0 * math.pi * f[k]


def _sign_changes(y: np.ndarray) -> np.ndarray:
    s = np.sign(y)
    nz = np.nonzero(s)[0]
    return nz[1:][s[nz[1:]] != s[nz[:-1]]]


def _local_maxima(a: np.ndarray) -> np.ndarray:
    i = np.arange(1, len(a) - 1)
    return i[(a[i] >= a[i - 1]) & (a[i] > a[i + 1])]


def _initial_decay(t: np.ndarray, y: np.ndarray) -> float:
    span = t[-1] - t[0]
    ay = np.abs(y)
    peaks = _local_maxima(ay)
    if len(peaks) >= 2:
        tt, yy = t[peaks], ay[peaks]
    else:
        keep = ay > 0.1 * ay.max()
        tt, yy = t[keep], ay[keep]
    if len(tt) < 2:
        return span
    slope = np.polyfit(tt - t[0], np.log(yy), 1)[0]
    return -1.0 / slope if slope < 0 else span


def initial_guess(trace: Trace) -> tuple[float, float, float, float]:
    """Starting ``(A, T2, omega, phi)`` from the spectrum, envelope and first samples."""
    t, y = trace.t, trace.y
    span = t[-1] - t[0]
    omega = _spectral_omega(t, y) if trace.is_uniform() else 0.0
    crossings = _sign_changes(y)
    if omega < 2.0 * math.pi / (10.0 * span) and len(crossings) >= 2:
        # spectral peak swamped by the DC tail of a few-cycle signal
        tc = t[crossings]
        omega = math.pi * (len(tc) - 1) / (tc[-1] - tc[0])
    T2 = _initial_decay(t, y)
    A = float(np.max(np.abs(y)))
    s = float(np.clip(y[0] / A, -1.0, 1.0)) if A > 0 else 0.0
    phi = math.asin(s)
    if y[1] < y[0]:
        phi = math.pi - phi
    return A, T2, omega, _wrap_phase(phi)


def fit_damped_sinusoid(trace: Trace, initial_guess_: tuple | None = None) -> FitResult:
    """Least-squares fit of ``A exp(-t/T2) sin(omega t + phi)`` to `trace`.

    With no `initial_guess_`, starting values come from :func:`initial_guess`.
    If the starting frequency is below ``2 pi / (10 span)`` the trace is
    treated as over-damped: the pure exponential ``A exp(-t/T2)`` is fitted
    and reported with ``omega = 0``, ``phi = +/- pi/2`` and
    ``degenerate_omega`` set. The full model, seeded at the threshold
    frequency, replaces it only if it converges above the threshold with
    less than half the residual.
    """
    t, y = trace.t, trace.y
    if len(t) < 8:
        raise ValueError("fit needs at least 8 samples")
    if not np.any(y):
        raise MetricError("trace is identically zero")
    t0 = t[0]
    tr = t - t0  # fit in shifted time for conditioning
    span = tr[-1]
    if initial_guess_ is None:
        A, T2, omega, phi = initial_guess(trace)
    else:
        A, T2, omega, phi = map(float, initial_guess_)
        A *= math.exp(-t0 / T2)
        phi += omega * t0

    threshold = 2.0 * math.pi / (10.0 * span)
    if initial_guess_ is None and omega < threshold:
        A0 = float(y[0]) if y[0] != 0 else float(y[np.argmax(np.abs(y))])
        p, converged, iters = levenberg_marquardt(
            _exponential, _exponential_jacobian, (A0, T2), tr, y, valid=lambda p: p[1] > 0
        )
        rms = float(np.sqrt(np.mean((y - _exponential(tr, *p)) ** 2)))
        # an over-damped but still precessing signal: keep the full model
        # only when it is clearly better and its frequency is resolved
        full = _fit_full(tr, y, (A, p[1], threshold, phi))
        if full.converged and full.omega >= threshold and full.rms_residual < 0.5 * rms:
            return _shift_origin(full, t0)
        A, T2 = p
        A *= math.exp(t0 / T2)
        return FitResult(abs(A), T2, 0.0, math.copysign(math.pi / 2, A), rms, converged, iters, True)

    return _shift_origin(_fit_full(tr, y, (A, T2, omega, phi)), t0)


def _fit_full(t: np.ndarray, y: np.ndarray, p0) -> FitResult:
    p, converged, iters = levenberg_marquardt(
        damped_sinusoid, damped_sinusoid_jacobian, p0, t, y, valid=lambda p: p[1] > 0
    )
    A, T2, omega, phi = p
    rms = float(np.sqrt(np.mean((y - damped_sinusoid(t, A, T2, omega, phi)) ** 2)))
    if omega < 0:
        omega, phi = -omega, math.pi - phi
    if A < 0:
        A, phi = -A, phi + math.pi
    return FitResult(A, T2, omega, _wrap_phase(phi), rms, converged, iters)


def _shift_origin(fit: FitResult, t0: float) -> FitResult:
    """Re-express a fit made in ``t - t0`` in the original time coordinate."""
    return FitResult(
        fit.A * math.exp(t0 / fit.T2), fit.T2, fit.omega, _wrap_phase(fit.phi - fit.omega * t0),
        fit.rms_residual, fit.converged, fit.iterations, fit.degenerate_omega,
    )


def envelope(trace: Trace) -> tuple[np.ndarray, np.ndarray]:
    """Rectified-peak envelope, or ``|y|`` itself when the trace has fewer than two sign changes.

    For oscillating traces the envelope points are ``(t0, |y0|)`` followed by
    the local maxima of ``|y|``.
    """
    t, ay = trace.t, np.abs(trace.y)
    if len(_sign_changes(trace.y)) < 2:
        return t.copy(), ay
    peaks = _local_maxima(ay)
    idx = np.concatenate([[0], peaks])
    return t[idx], ay[idx]


def one_over_e_time(trace: Trace) -> float:
    """Elapsed time until the envelope first falls below 1/e of its starting amplitude.

    The starting amplitude is ``max(|y0|, first envelope peak)``, so traces
    that start at a zero of the oscillation are handled. The crossing is
    located by linear interpolation between envelope points.
    """
    te, env = envelope(trace)
    ref_i = 0 if len(env) < 2 or env[0] >= env[1] else 1
    ref = env[ref_i]
    if ref == 0:
        raise MetricError("trace starts from zero amplitude")
    level = ref / math.e
    below = np.nonzero(env[ref_i:] < level)[0]
    if len(below) == 0:
        raise MetricError("envelope never falls below 1/e within the trace")
    j = ref_i + int(below[0])
    t1, t2, e1, e2 = te[j - 1], te[j], env[j - 1], env[j]
    return float(t1 + (e1 - level) * (t2 - t1) / (e1 - e2)) - float(trace.t[0])


def spectral_linewidth(trace: Trace, pad: int = 4) -> float:
    """FWHM (Hz) of the squared-magnitude spectrum around its global peak.

    The spectrum is two-sided, so a non-oscillating decay gives a line
    centred at zero frequency.
    """
    if not trace.is_uniform():
        raise MetricError("linewidth needs uniform sampling")
    n = len(trace.y)
    power = np.abs(np.fft.fftshift(np.fft.fft(trace.y, pad * n))) ** 2
    f = np.fft.fftshift(np.fft.fftfreq(pad * n, trace.dt))
    k = int(np.argmax(power))
    if k == 0 or k == len(power) - 1:
        raise MetricError("spectral peak at the boundary; linewidth unresolved")
    half = power[k] / 2.0

    def crossing(direction: int) -> float:
        i = k
        while 0 < i < len(power) - 1 and power[i] >= half:
            i += direction
        if power[i] >= half:
            raise MetricError("half-power point beyond the spectral window")
        j = i - direction
        return f[j] + (power[j] - half) * (f[i] - f[j]) / (power[j] - power[i])

    return float(crossing(+1) - crossing(-1))


METRICS = ("fit-T2", "1/e", "linewidth")


def suppression_from_traces(low: Trace, high: Trace, metric: str = "fit-T2") -> float:
    """Low-field over high-field coherence by the chosen metric (>= 1 when low field is longer-lived)."""
    if metric in ("fit-T2", "fit"):
        return fit_damped_sinusoid(low).T2 / fit_damped_sinusoid(high).T2
    if metric in ("1/e", "one-over-e"):
        return one_over_e_time(low) / one_over_e_time(high)
    if metric == "linewidth":
        return spectral_linewidth(high) / spectral_linewidth(low)
    raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")


def log_envelope_curvature(trace: Trace, floor: float = 1e-3) -> float:
    """Second derivative of ``ln(envelope)`` w.r.t. normalized time ``t / span``.

    From a quadratic least-squares fit over envelope points above `floor`
    times the peak. Zero for a single exponential, positive for a mixture.
    """
    te, env = envelope(trace)
    keep = env > floor * env.max()
    if np.count_nonzero(keep) < 3:
        raise MetricError("too few envelope points for a curvature estimate")
    u = (te[keep] - trace.t[0]) / (trace.t[-1] - trace.t[0])
    c2 = np.polyfit(u, np.log(env[keep]), 2)[0]
    return float(2.0 * c2)
