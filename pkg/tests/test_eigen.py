import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from alkalispin.eigen import (
    DegenerateMatrixError,
    EvolutionMatrix,
    build_matrix,
    dominant_coherence,
    eigenmodes,
    half_suppression_field,
    high_field_rates,
    relaxed_state,
    suppression_factor,
    suppression_factor_numeric,
    sweep_field,
)
from alkalispin.model import DomainError, RateSet, SpinState, Species, species_cesium

CS = species_cesium()
G = CS.gamma_e
rates_st = st.builds(
    RateSet,
    R_sr=st.floats(0, 1e4),
    R_se=st.floats(0, 1e4),
    R_pr=st.floats(0, 1e4),
    R_diff=st.floats(0, 1e3),
)
field_st = st.floats(-1e6 / G, 1e6 / G)


# -- build_matrix -------------------------------------------------------------

def test_matrix_pure_sd_zero_field(sd100):
    m = build_matrix(CS, sd100, 0.0).m
    np.testing.assert_array_equal(m, [[0, -100], [3.125, -103.125]])


def test_matrix_rate_free():
    m = build_matrix(CS, RateSet(), 1e-3).m
    expected = [[0, -1j * G * 1e-3], [-1j * G * 1e-3 / 64, 0]]
    np.testing.assert_allclose(m, expected, rtol=1e-15)


def test_matrix_spin_exchange_and_diffusion(sd100):
    base = build_matrix(CS, sd100, 0.0).m
    m = build_matrix(CS, sd100.replace(R_se=500.0, R_diff=1.0), 0.0).m
    delta = m - base
    np.testing.assert_allclose(delta, [[-1, 0], [500 / 22, -500 - 1]], rtol=1e-14)


def test_matrix_is_read_only(sd100):
    mat = build_matrix(CS, sd100, 0.0)
    with pytest.raises(ValueError):
        mat.m[0, 0] = 1.0


def test_matrix_rejects_nonfinite():
    with pytest.raises(DomainError):
        EvolutionMatrix(np.array([[np.nan, 0], [0, 0]]))


# -- eigenmodes ---------------------------------------------------------------

def test_eigenvalues_zero_field(sd100):
    modes = eigenmodes(build_matrix(CS, sd100, 0.0), SpinState.spin_temperature(CS))
    assert [md.eigenvalue for md in modes] == pytest.approx([-3.125, -100.0], rel=1e-14)
    assert 1 / modes[0].gamma == pytest.approx(0.32, rel=1e-14)


@given(st.floats(-1.0, 1.0).filter(lambda b: b != 0))
def test_eigenvalues_rate_free(B):
    modes = eigenmodes(build_matrix(CS, RateSet(), B), [1.0, 0.0])
    for md in modes:
        assert md.gamma == 0.0
    assert sorted(md.omega for md in modes) == pytest.approx(sorted([G * B / 8, -G * B / 8]), rel=1e-14)


def test_high_field_rates_follow_the_generator(sd100):
    # gamma_e B = 1e6 rad/s: converged to the asymptote well inside 0.5%
    modes = eigenmodes(build_matrix(CS, sd100, 1e6 / G), [1.0, 0.0])
    slow, fast = high_field_rates(CS, 100.0)
    assert (slow, fast) == pytest.approx((100 * 29 / 64, 100 * 37 / 64), rel=1e-15)
    assert modes[0].gamma == pytest.approx(slow, rel=1e-4)
    assert modes[1].gamma == pytest.approx(fast, rel=1e-4)


def _spin_ops(j):
    m = np.arange(j, -j - 1, -1)
    jp = np.zeros((len(m), len(m)))
    for k in range(1, len(m)):
        jp[k - 1, k] = math.sqrt(j * (j + 1) - m[k] * (m[k] + 1))
    return (jp + jp.T) / 2, (jp - jp.T) / 2j, np.diag(m)


@pytest.mark.parametrize("I", [1.5, 2.5, 3.5])
def test_high_field_rates_match_density_matrix(I):
    """Secular S-damping of each hyperfine coherence from the full density matrix.

    S-damping evolves rho at rate R toward rho/4 + sum_i S_i rho S_i; at high
    field each manifold's coherence decays independently.
    """
    d = int(2 * I + 1)
    S = [np.kron(np.eye(d), s) for s in _spin_ops(0.5)]
    In = [np.kron(i, np.eye(2)) for i in _spin_ops(I)]
    Fx, Fy = In[0] + S[0], In[1] + S[1]
    w, v = np.linalg.eigh(sum(a @ b for a, b in zip(In, S)))
    rates = []
    for sel in (w > 0, w < 0):
        P = v[:, sel] @ v[:, sel].conj().T
        Fp = P @ (Fx + 1j * Fy) @ P
        rho = P @ (Fx - 1j * Fy) @ P
        damped = P @ (0.25 * rho + sum(s @ rho @ s for s in S)) @ P
        rates.append(1 - (np.trace(Fp @ damped) / np.trace(Fp @ rho)).real)
    assert sorted(rates) == pytest.approx(high_field_rates(Species("x", I), 1.0), rel=1e-12)


@settings(max_examples=200)
@given(rates_st, field_st)
def test_trace_and_determinant_identities(rates, B):
    mat = build_matrix(CS, rates, B)
    assume(np.any(mat.m))
    m1, m2 = eigenmodes(mat, [1.0, 0.3])
    scale = np.abs(mat.m).max()
    assert abs(m1.eigenvalue + m2.eigenvalue - mat.trace) <= 1e-12 * scale
    assert abs(m1.eigenvalue * m2.eigenvalue - mat.det) <= 1e-12 * scale**2


@settings(max_examples=200)
@given(rates_st, field_st, st.complex_numbers(max_magnitude=10), st.complex_numbers(max_magnitude=10))
def test_modes_reconstruct_initial_state(rates, B, f, s):
    assume(abs(f) + abs(s) > 1e-3)
    mat = build_matrix(CS, rates, B)
    modes = eigenmodes(mat, [f, s])
    assume(not modes[0].degenerate)
    x = sum(md.weight * md.vector for md in modes)
    np.testing.assert_allclose(x, [f, s], atol=1e-9 * (abs(f) + abs(s)))
    for md in modes:
        assert md.gamma >= -1e-9 * max(abs(mat.trace), 1.0)
        assert np.linalg.norm(md.vector) == pytest.approx(1.0, rel=1e-12)
        np.testing.assert_allclose(mat.m @ md.vector, md.eigenvalue * md.vector,
                                   atol=1e-9 * max(np.abs(mat.m).max(), 1.0))
    assert modes[0].gamma <= modes[1].gamma + 1e-12 * np.abs(mat.m).max()


def test_tie_broken_by_omega():
    # rate-free: equal gammas, opposite omegas
    modes = eigenmodes(build_matrix(CS, RateSet(), 1e-3), [1.0, 0.0])
    assert modes[0].omega < modes[1].omega


def test_defective_generator_is_flagged():
    m = np.array([[-1.0, 1.0], [0.0, -1.0]], dtype=complex)
    modes = eigenmodes(EvolutionMatrix(m), [0.3, 0.7])
    assert all(md.degenerate for md in modes)
    assert modes[0].eigenvalue == modes[1].eigenvalue == -1
    x = modes[0].weight * modes[0].vector + modes[1].weight * modes[1].vector
    np.testing.assert_allclose(x, [0.3, 0.7], atol=1e-14)


def test_zero_initial_state_rejected(sd100):
    with pytest.raises(ValueError):
        eigenmodes(build_matrix(CS, sd100, 0.0), [0.0, 0.0])


# -- dominant coherence -------------------------------------------------------

def test_dominant_low_field(sd100):
    T2, omega = dominant_coherence(build_matrix(CS, sd100, 0.0), SpinState.spin_temperature(CS))
    assert T2 == pytest.approx(0.32, rel=1e-14)
    T2, omega = dominant_coherence(build_matrix(CS, sd100, 10.0 / G), SpinState.spin_temperature(CS))
    assert omega == pytest.approx(10 / 62, rel=0.01)


def test_dominant_rate_free():
    T2, omega = dominant_coherence(build_matrix(CS, RateSet(), 1e-3), SpinState.spin_temperature(CS))
    assert T2 == math.inf
    assert abs(omega) == pytest.approx(G * 1e-3 / 8, rel=1e-14)


@pytest.mark.parametrize("R_sd", [1.0, 37.0, 2133.0, 1e4])
def test_low_field_asymptotes(R_sd):
    rates = RateSet(R_sr=R_sd)
    B = 1e-4 * R_sd / G
    T2, omega = dominant_coherence(build_matrix(CS, rates, B), SpinState.spin_temperature(CS))
    assert T2 * R_sd == pytest.approx(32.0, rel=1e-3)
    assert omega / B == pytest.approx(G / 62, rel=1e-3)


@pytest.mark.parametrize("R_sd", [1.0, 100.0, 1e4])
def test_high_field_asymptote_is_reached(R_sd):
    rates = RateSet(R_sr=R_sd)
    m1, m2 = eigenmodes(build_matrix(CS, rates, 1e4 * R_sd / G), [1.0, 0.0])
    assert (m1.gamma, m2.gamma) == pytest.approx(high_field_rates(CS, R_sd), rel=1e-3)


@settings(max_examples=50)
@given(st.floats(1.0, 1e4), st.floats(0, 1e3), st.floats(0, 1e3))
def test_T2_non_increasing_in_field(R_sd, b1, b2):
    lo, hi = sorted((b1, b2))
    rates = RateSet(R_sr=R_sd)
    ini = SpinState.spin_temperature(CS)
    T_lo, _ = dominant_coherence(build_matrix(CS, rates, lo * R_sd / G), ini)
    T_hi, _ = dominant_coherence(build_matrix(CS, rates, hi * R_sd / G), ini)
    assert T_hi <= T_lo * (1 + 1e-9)


# -- suppression --------------------------------------------------------------

def test_suppression_factor_cesium(sd100):
    assert suppression_factor(CS, sd100) == 16.5


def test_suppression_factor_spin_half():
    assert suppression_factor(Species("H", 0.5), RateSet(R_sr=7.0)) == pytest.approx(1.5, rel=1e-15)


@given(st.floats(1e-3, 1e6))
def test_suppression_factor_scale_free(c):
    assert suppression_factor(CS, RateSet(R_sr=c)) == pytest.approx(16.5, rel=1e-12)


@pytest.mark.parametrize("rates", [RateSet(), RateSet(R_sr=1, R_se=1), RateSet(R_sr=1, R_diff=1)])
def test_suppression_factor_domain(rates):
    with pytest.raises(DomainError):
        suppression_factor(CS, rates)


def test_numeric_suppression_matches_closed_form_and_drops_with_diffusion():
    rates = RateSet(R_sr=100.0)
    B_high = 1e5 * 100 / G
    assert suppression_factor_numeric(CS, rates, B_high) == pytest.approx(16.5, rel=1e-6)
    with_diff = suppression_factor_numeric(CS, rates.replace(R_diff=1.0), B_high)
    assert with_diff < suppression_factor_numeric(CS, rates, B_high)


def test_relaxed_state_is_slow_mode(sd100):
    s = relaxed_state(CS, sd100)
    assert s.F_plus == 1 and s.S_plus == pytest.approx(1 / 32, rel=1e-12)
    # strong spin exchange brings it back to spin temperature
    s = relaxed_state(CS, RateSet(R_sr=1.0, R_se=1e6))
    assert s.S_plus.real == pytest.approx(1 / 22, rel=1e-3)
    assert relaxed_state(CS, RateSet()).S_plus == pytest.approx(1 / 22)


# -- sweeps -------------------------------------------------------------------

def test_sweep_single_zero_field(sd100):
    (row,) = sweep_field(CS, sd100, [0.0])
    assert row.T2_dominant == pytest.approx(0.32, rel=1e-14)
    assert row.error is None


def test_sweep_symmetric_fields(sd100):
    a, b = sweep_field(CS, sd100, [-3e-5, 3e-5])
    assert (a.gamma1, a.gamma2) == pytest.approx((b.gamma1, b.gamma2), rel=1e-14)
    assert sorted([a.omega1, a.omega2]) == pytest.approx(sorted([-b.omega1, -b.omega2]), rel=1e-14)


def test_sweep_rows_match_eigenmodes(sd100):
    fields = np.geomspace(1e-7, 1e-2, 7)
    ini = SpinState.spin_temperature(CS)
    for B, row in zip(fields, sweep_field(CS, sd100, fields, ini)):
        m1, m2 = eigenmodes(build_matrix(CS, sd100, B), ini)
        assert row.B == B
        assert (row.gamma1, row.omega1, row.gamma2, row.omega2) == (m1.gamma, m1.omega, m2.gamma, m2.omega)


def test_sweep_marks_bad_rows(sd100):
    rows = sweep_field(CS, sd100, [0.0, math.inf, 1e-3])
    assert rows[0].error is None and rows[2].error is None
    assert rows[1].error and math.isnan(rows[1].T2_dominant)


def test_sweep_empty():
    with pytest.raises(ValueError):
        sweep_field(CS, RateSet(R_sr=1.0), [])


def test_sr_preset_sweep_plateaus():
    rates = RateSet(R_sr=32 / 15e-3)
    fields = np.concatenate([[0.0], np.geomspace(1e-7, 1e-2, 50)])
    rows = sweep_field(CS, rates, fields, relaxed_state(CS, rates))
    low = [r.T2_dominant for r in rows if r.B <= 4e-8]
    high = [r.T2_dominant for r in rows if r.B >= 8e-4]
    assert all(abs(T - 15e-3) < 0.5e-3 for T in low)
    assert all(1e-3 <= T <= 1.5e-3 for T in high)


def test_spin_exchange_raises_half_suppression_field(sd100):
    B0 = half_suppression_field(CS, sd100)
    B1 = half_suppression_field(CS, sd100.replace(R_se=1000.0))
    assert B1 > B0
    T2_0, _ = dominant_coherence(build_matrix(CS, sd100, 0.0), SpinState.spin_temperature(CS))
    T2_h, _ = dominant_coherence(build_matrix(CS, sd100, B0), SpinState.spin_temperature(CS))
    assert T2_h == pytest.approx(0.5 * T2_0, rel=1e-4)
