import math

import mpmath
import numpy as np
import pytest
from scipy import integrate

from fdamimo.config import DomainError, OffsetModel, PulseDraw, RadarConfig, Target
from fdamimo.signal_model import (approximation_error, draw_pulse, draw_stack,
                                  i1_integral, i1_matrix,
                                  matched_output_approx, matched_output_exact,
                                  sample_offsets, steering_vectors,
                                  white_noise_sigma)

CFG = RadarConfig()
TARGET = Target(theta=math.radians(30.0), r=6000.0)


# ---------------------------------------------------------------- steering

def test_steering_boresight_receive_all_ones():
    a_rx, _, _ = steering_vectors(CFG, 0.0, 1000.0)
    np.testing.assert_allclose(a_rx, np.ones(CFG.n_rx), atol=1e-15)


def test_spatial_frequency_at_30_degrees():
    # with d = c/(2 f0): f_theta = sin(theta)/2
    assert CFG.spatial_frequency(math.radians(30.0)) == pytest.approx(0.25, abs=1e-15)


def test_transmit_phase_against_high_precision_oracle():
    # phi = 2 r delta_f / c - f_theta at the table scene, 50-digit evaluation
    mpmath.mp.dps = 50
    phi_hp = (2 * mpmath.mpf(6000) * mpmath.mpf(10_000) / mpmath.mpf(299_792_458)
              - mpmath.sin(mpmath.pi / 6) / 2)
    _, a_tx, _ = steering_vectors(CFG, math.radians(30.0), 6000.0)
    # recover phi from the first nontrivial entry
    phi = math.atan2(a_tx[1].imag, a_tx[1].real) / (2.0 * math.pi)
    expected = float(phi_hp - mpmath.floor(phi_hp + mpmath.mpf("0.5")))
    assert phi == pytest.approx(expected, abs=1e-12)


def test_steering_unit_modulus_and_kron_consistency():
    a_rx, a_tx, a = steering_vectors(CFG, 0.41, 9200.0)
    np.testing.assert_allclose(np.abs(a_rx), 1.0, atol=1e-12)
    np.testing.assert_allclose(np.abs(a_tx), 1.0, atol=1e-12)
    # structurally exact: the joint vector is the elementwise product grid
    np.testing.assert_array_equal(a, (a_tx[:, None] * a_rx[None, :]).ravel())
    for n in range(CFG.n_tx):
        for m in range(CFG.n_rx):
            # scalar vs vectorized complex multiply may differ in the last ulp
            assert abs(a[n * CFG.n_rx + m] - a_tx[n] * a_rx[m]) < 4e-16


def test_steering_domain_errors():
    with pytest.raises(DomainError):
        steering_vectors(CFG, 0.0, CFG.r_max * 1.01)
    with pytest.raises(DomainError):
        steering_vectors(CFG, math.pi, 100.0)


def test_waveform_orthogonality_by_quadrature():
    # int_0^{t_p} exp(j 2 pi delta_f (n1-n2) t) dt = 0 for n1 != n2
    for k in (1, 2, 3):
        re, _ = integrate.quad(lambda t: math.cos(2 * math.pi * CFG.delta_f * k * t),
                               0.0, CFG.t_p, epsabs=1e-16)
        im, _ = integrate.quad(lambda t: math.sin(2 * math.pi * CFG.delta_f * k * t),
                               0.0, CFG.t_p, epsabs=1e-16)
        assert math.hypot(re, im) < 1e-10 * CFG.t_p


# ------------------------------------------------------------- I1 integral

def test_i1_diagonal():
    assert i1_integral(CFG, 2, 2) == CFG.t_p ** 2 / 2.0


def test_i1_against_adaptive_quadrature():
    for i in range(1, CFG.n_tx + 1):
        for n in range(1, CFG.n_tx + 1):
            f = (i - n) * CFG.delta_f
            re, _ = integrate.quad(lambda t: math.cos(2 * math.pi * f * t) * t,
                                   0.0, CFG.t_p, epsabs=1e-20)
            im, _ = integrate.quad(lambda t: -math.sin(2 * math.pi * f * t) * t,
                                   0.0, CFG.t_p, epsabs=1e-20)
            oracle = re + 1j * im
            val = i1_integral(CFG, i, n)
            assert abs(val - oracle) < 1e-10 * abs(oracle)


def test_i1_bound():
    for i in range(1, CFG.n_tx + 1):
        for n in range(1, CFG.n_tx + 1):
            assert abs(i1_integral(CFG, i, n)) <= CFG.t_p ** 2 / 2.0 + 1e-18


def test_i1_matrix_matches_scalar():
    mat = i1_matrix(CFG)
    for i in range(1, CFG.n_tx + 1):
        for n in range(1, CFG.n_tx + 1):
            assert mat[i - 1, n - 1] == i1_integral(CFG, i, n)


def test_i1_index_guard():
    with pytest.raises(DomainError):
        i1_integral(CFG, 0, 1)


# ------------------------------------------------------ matched filter bank

def _zero_draw():
    return PulseDraw(f_e_t=np.zeros(CFG.n_tx),
                     f_e_r=np.zeros((CFG.n_rx, CFG.n_tx)))


def test_exact_zero_offsets_close_to_rank_one():
    exact = matched_output_exact(CFG, TARGET, _zero_draw()).y
    approx, n_t, n_r = matched_output_approx(CFG, TARGET, _zero_draw())
    assert np.abs(n_t).max() == 0.0
    assert np.abs(n_r).max() == 0.0
    dev = np.linalg.norm(approx.y - exact) / np.linalg.norm(exact)
    assert dev < 1e-3          # aperture approximation floor
    assert np.linalg.matrix_rank(approx.y, tol=1e-12 * np.abs(approx.y).max()) == 1


def test_exact_zero_reflectivity():
    tgt = Target(theta=0.1, r=2000.0, alpha=0.0)
    out = matched_output_exact(CFG, tgt, _zero_draw())
    assert np.abs(out.y).max() == 0.0


def test_exact_closed_matches_quadrature():
    draw = sample_offsets(CFG, OffsetModel(sigma_t=300.0, sigma_r=300.0, seed=5), 0)
    closed = matched_output_exact(CFG, TARGET, draw, integrator="closed").y
    quad = matched_output_exact(CFG, TARGET, draw, integrator="quad",
                                rtol=1e-10).y
    assert np.abs(closed - quad).max() < 1e-10 * np.abs(closed).max()


def test_exact_unknown_integrator():
    with pytest.raises(DomainError):
        matched_output_exact(CFG, TARGET, _zero_draw(), integrator="simpson")


def test_proposition1_row_ratios():
    off = OffsetModel(sigma_t=0.05 * CFG.delta_f, seed=11)
    f_theta = CFG.spatial_frequency(TARGET.theta)
    for k in range(20):
        draw = sample_offsets(CFG, off, k)
        _, n_t, _ = matched_output_approx(CFG, TARGET, draw)
        for m1 in range(CFG.n_rx):
            for m2 in range(CFG.n_rx):
                expected = np.exp(-2j * np.pi * (m1 - m2) * f_theta)
                ratio = n_t[m1] / n_t[m2]
                assert np.abs(ratio - expected).max() < 1e-10


def test_proposition1_columns_are_disturbed():
    off = OffsetModel(sigma_t=0.05 * CFG.delta_f, seed=12)
    phases = []
    for k in range(150):
        draw = sample_offsets(CFG, off, k)
        _, n_t, _ = matched_output_approx(CFG, TARGET, draw)
        phases.append(np.angle(n_t[0, 0] / n_t[0, 1]))
    phases = np.array(phases)
    # circular variance 1 - |mean(exp(j phase))| must be clearly nonzero
    resultant = np.abs(np.exp(1j * phases).mean())
    assert 1.0 - resultant > 1e-3


def test_transmit_noise_single_offset_hand_expansion():
    # one nonzero f_e_t: N_t must equal its defining sum term-by-term,
    # with I1 evaluated by independent quadrature
    f_et = np.zeros(CFG.n_tx)
    f_et[2] = 417.0
    draw = PulseDraw(f_e_t=f_et, f_e_r=np.zeros((CFG.n_rx, CFG.n_tx)))
    _, n_t, n_r = matched_output_approx(CFG, TARGET, draw)
    assert np.abs(n_r).max() == 0.0
    beta = TARGET.beta(CFG)
    f_theta = CFG.spatial_frequency(TARGET.theta)
    for m in range(1, CFG.n_rx + 1):
        for n in range(1, CFG.n_tx + 1):
            i = 3   # the only contributing transmit index
            f = (i - n) * CFG.delta_f
            re, _ = integrate.quad(lambda t: math.cos(2 * math.pi * f * t) * t,
                                   0.0, CFG.t_p, epsabs=1e-20)
            im, _ = integrate.quad(lambda t: -math.sin(2 * math.pi * f * t) * t,
                                   0.0, CFG.t_p, epsabs=1e-20)
            i1 = re + 1j * im
            phase = np.exp(2j * np.pi * ((n - 1) * CFG.delta_f * 2 * TARGET.r / CFG.c
                                         - (m + i - 2) * f_theta))
            expected = -2j * np.pi * beta / CFG.t_p * f_et[2] * phase * i1
            assert abs(n_t[m - 1, n - 1] - expected) < 1e-12 * abs(expected)


def test_approx_equals_exact_to_second_order():
    # the first-order pipeline must agree with the exact one per draw;
    # a sign slip on N_t would show up as a first-order (~20x) mismatch
    off = OffsetModel(sigma_t=0.01 * CFG.delta_f, sigma_r=0.01 * CFG.delta_f,
                      seed=9)
    draw = sample_offsets(CFG, off, 0)
    exact = matched_output_exact(CFG, TARGET, draw).y
    approx = matched_output_approx(CFG, TARGET, draw)[0].y
    rel = np.linalg.norm(approx - exact) / np.linalg.norm(exact)
    assert rel < 2e-2


# ----------------------------------------------------------------- pulses

def test_draw_pulse_clean_rank_one():
    out = draw_pulse(CFG, TARGET, OffsetModel(seed=0), snr_db=math.inf)
    a_rx, a_tx, _ = steering_vectors(CFG, TARGET.theta, TARGET.r)
    expected = TARGET.beta(CFG) * np.outer(a_rx, a_tx)
    np.testing.assert_allclose(out.y, expected, rtol=0, atol=1e-18)


def test_draw_pulse_snr_calibration():
    # empirical noise-to-signal ratio at 0 dB over 1e4 pulses within 3 %
    off = OffsetModel(seed=21)
    a_rx, a_tx, _ = steering_vectors(CFG, TARGET.theta, TARGET.r)
    clean = TARGET.beta(CFG) * np.outer(a_rx, a_tx)
    sig = np.linalg.norm(clean) ** 2
    acc = 0.0
    n = 10_000
    for k in range(n):
        y = draw_pulse(CFG, TARGET, off, snr_db=0.0, pulse_index=k).y
        acc += np.linalg.norm(y - clean) ** 2
    assert acc / n / sig == pytest.approx(1.0, rel=0.03)


def test_draw_pulse_deterministic():
    off = OffsetModel(sigma_t=200.0, sigma_r=100.0, seed=5)
    y1 = draw_pulse(CFG, TARGET, off, snr_db=10.0, pulse_index=3).y
    y2 = draw_pulse(CFG, TARGET, off, snr_db=10.0, pulse_index=3).y
    assert np.array_equal(y1, y2)


def test_vectorization_order():
    out = draw_pulse(CFG, TARGET, OffsetModel(seed=0), snr_db=math.inf)
    vec = out.vec
    for n in range(CFG.n_tx):
        for m in range(CFG.n_rx):
            assert vec[n * CFG.n_rx + m] == out.y[m, n]


def test_draw_stack_shape_and_determinism():
    off = OffsetModel(sigma_t=100.0, seed=9)
    x1 = draw_stack(CFG, TARGET, off, 15.0, 6)
    x2 = draw_stack(CFG, TARGET, off, 15.0, 6)
    assert x1.shape == (CFG.n_rx * CFG.n_tx, 6)
    assert np.array_equal(x1, x2)


def test_white_noise_sigma_definition():
    sigma0 = white_noise_sigma(CFG, TARGET, 20.0)
    assert sigma0 ** 2 == pytest.approx(abs(TARGET.beta(CFG)) ** 2 / 100.0)


# --------------------------------------------------- approximation error

def test_approximation_error_zero_offsets_floor():
    err = approximation_error(CFG, TARGET, OffsetModel(seed=1), n_pulses=3,
                              scenario="both", integrator="closed")
    assert err < 1e-3


def test_approximation_error_scenario_guard():
    with pytest.raises(DomainError):
        approximation_error(CFG, TARGET, OffsetModel(seed=1), 2,
                            scenario="all")
