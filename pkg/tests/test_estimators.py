import math

import numpy as np
import pytest

from fdamimo.config import DomainError, OffsetModel, RadarConfig, Target
from fdamimo.estimators import (GridSpec, build_c4, find_peaks_2d, music_2d,
                                music_rows, omp, sample_covariance)
from fdamimo.signal_model import draw_stack, steering_vectors

CFG = RadarConfig()
FULL = GridSpec.default(CFG)
# a target sitting exactly on grid nodes (30.0 deg is node 1200; r node 600)
TARGET = Target(theta=float(FULL.theta_axis[1200]), r=float(FULL.r_axis[600]))
GRID = GridSpec.window(CFG, TARGET.theta, TARGET.r)


def _clean_stack(targets=TARGET, n_pulses=8, seed=0):
    return draw_stack(CFG, targets, OffsetModel(seed=seed), math.inf, n_pulses)


def test_gridspec_guards():
    with pytest.raises(DomainError):
        GridSpec(theta_axis=np.array([0.0]), r_axis=np.array([0.0, 1.0]))
    with pytest.raises(DomainError):
        GridSpec(theta_axis=np.array([0.0, 0.0]), r_axis=np.array([0.0, 1.0]))


def test_default_grid_resolution():
    assert len(FULL.theta_axis) == 1801
    assert len(FULL.r_axis) == 1500
    assert FULL.theta_axis[1] - FULL.theta_axis[0] == pytest.approx(
        math.radians(0.1))
    assert FULL.r_axis[1] - FULL.r_axis[0] == pytest.approx(CFG.r_max / 1500)


def test_window_grid_aligns_with_full_grid():
    win = GridSpec.window(CFG, TARGET.theta, TARGET.r)
    assert any(abs(t - TARGET.theta) < 1e-12 for t in win.theta_axis)
    assert any(abs(r - TARGET.r) < 1e-9 for r in win.r_axis)


def test_music2d_exact_recovery_on_node():
    _, est = music_2d(_clean_stack(), GRID, 1, CFG)
    assert est[0].theta == TARGET.theta
    assert est[0].r == TARGET.r


def test_music2d_spectrum_properties():
    spec, _ = music_2d(_clean_stack(), GRID, 1, CFG)
    assert np.all(np.isfinite(spec.values))
    assert np.all(spec.values >= 0)
    assert spec.peak == (TARGET.theta, TARGET.r)


def test_music2d_rejects_too_many_targets():
    with pytest.raises(DomainError):
        music_2d(_clean_stack(), GRID, CFG.n_rx * CFG.n_tx, CFG)


def test_noise_subspace_orthogonality():
    # oracle check with the explicitly built noise subspace
    x = _clean_stack()
    r_mat = sample_covariance(x)
    vals, vecs = np.linalg.eigh(r_mat)
    u_n = vecs[:, :-1]          # all but the largest eigenvalue
    _, _, a = steering_vectors(CFG, TARGET.theta, TARGET.r)
    assert np.abs(u_n.conj().T @ a).max() < 1e-8


def test_scaling_invariance_of_argmax():
    x = draw_stack(CFG, TARGET, OffsetModel(sigma_t=200.0, seed=3), 20.0, 30)
    c = 0.3 - 1.7j
    for runner in (
        lambda d: music_2d(d, GRID, 1, CFG)[1],
        lambda d: omp(d, GRID, 1, CFG)[0],
        lambda d: music_2d(build_c4(d), GRID, 1, CFG)[1],
    ):
        e1, e2 = runner(x), runner(c * x)
        assert e1[0].theta == e2[0].theta
        assert (e1[0].r == e2[0].r) or (math.isnan(e1[0].r) and math.isnan(e2[0].r))
    r1 = music_rows(x, GRID.theta_axis, 1, CFG)[1]
    r2 = music_rows(c * x, GRID.theta_axis, 1, CFG)[1]
    assert r1[0].theta == r2[0].theta


def test_dual_targets_same_angle_resolved():
    # coexisting returns need per-pulse phase fluctuation to decorrelate
    t2 = Target(theta=TARGET.theta, r=float(FULL.r_axis[900]))
    x = draw_stack(CFG, [TARGET, t2], OffsetModel(seed=5), 30.0, 64,
                   phase_fluctuation=True)
    grid = GridSpec.window(CFG, TARGET.theta, (TARGET.r + t2.r) / 2,
                           r_halfwidth=2500.0)
    spec, est = music_2d(x, grid, 2, CFG)
    got_r = sorted(e.r for e in est)
    assert abs(got_r[0] - TARGET.r) < 50.0
    assert abs(got_r[1] - t2.r) < 50.0
    # both peaks clear half of the maximum
    peak_vals = sorted(e.diagnostics["peak_value"] for e in est)
    assert peak_vals[0] > 0.5 * peak_vals[1]


def test_music_rows_invariant_to_tx_offsets():
    theta_axis = GRID.theta_axis
    base = music_rows(_clean_stack(n_pulses=16), theta_axis, 1, CFG)[1]
    for ratio in (0.02, 0.05, 0.1):
        off = OffsetModel(sigma_t=ratio * CFG.delta_f, seed=7)
        x = draw_stack(CFG, TARGET, off, math.inf, 16)
        est = music_rows(x, theta_axis, 1, CFG)[1]
        assert est[0].theta == base[0].theta


def test_music_rows_boresight():
    t = Target(theta=0.0, r=TARGET.r)
    x = draw_stack(CFG, t, OffsetModel(seed=1), math.inf, 8)
    est = music_rows(x, FULL.theta_axis, 1, CFG)[1]
    assert est[0].theta == 0.0


def test_omp_exact_recovery_and_coefficient():
    x = _clean_stack(n_pulses=4)
    est, coefs, norms = omp(x, GRID, 1, CFG)
    assert est[0].theta == TARGET.theta and est[0].r == TARGET.r
    assert norms[-1] < 1e-10
    expected = TARGET.beta(CFG) * math.sqrt(CFG.n_rx * CFG.n_tx)
    assert abs(coefs[0, 0] - expected) < 1e-9 * abs(expected)


def test_omp_residual_non_increasing():
    t2 = Target(theta=float(FULL.theta_axis[1250]), r=float(FULL.r_axis[800]))
    x = draw_stack(CFG, [TARGET, t2], OffsetModel(sigma_r=200.0, seed=2),
                   10.0, 20)
    grid = GridSpec.window(CFG, TARGET.theta, (TARGET.r + t2.r) / 2,
                           theta_halfwidth=math.radians(7.0),
                           r_halfwidth=2500.0)
    _, _, norms = omp(x, grid, 2, CFG)
    assert all(b <= a + 1e-12 for a, b in zip(norms, norms[1:]))


def test_omp_needs_targets():
    with pytest.raises(DomainError):
        omp(_clean_stack(), GRID, 0, CFG)


def test_find_peaks_tie_breaks_lowest_index():
    values = np.zeros((5, 5))
    values[1, 2] = 1.0
    values[3, 4] = 1.0
    grid = GridSpec(theta_axis=np.arange(5.0) * 0.01,
                    r_axis=np.arange(5.0) * 10.0)
    picks = find_peaks_2d(values, grid, 1, 0, 0)
    assert picks[0][:2] == (1, 2)


# ----------------------------------------------------------- cumulant tests

def test_c4_gaussian_nulling_level():
    rng = np.random.default_rng(0)
    mn, l = CFG.n_rx * CFG.n_tx, 10_000
    x = (rng.normal(size=(mn, l)) + 1j * rng.normal(size=(mn, l))) / math.sqrt(2)
    cum = build_c4(x)
    # all entries are O(1/sqrt(L)): bound by 5x the worst moment-estimator std
    assert np.abs(cum.c4).max() < 5.0 * math.sqrt(24.0 / l)


def test_c4_autoterm_matches_direct_moments():
    rng = np.random.default_rng(1)
    mn, l = CFG.n_rx * CFG.n_tx, 5000
    x = (rng.normal(size=(mn, l)) + 1j * rng.normal(size=(mn, l))) / math.sqrt(2)
    cum = build_c4(x)
    i = 3
    xi = x[i]
    direct = (np.mean(np.abs(xi) ** 4)
              - 2.0 * np.mean(np.abs(xi) ** 2) ** 2
              - abs(np.mean(xi ** 2)) ** 2)
    entry = cum.c4[i * mn + i, i * mn + i]
    assert abs(entry - direct) < 1e-12


def test_c4_noiseless_rank_one_structure():
    x = _clean_stack(n_pulses=4)
    cum = build_c4(x)
    evals = np.linalg.eigvalsh(cum.c4)
    mags = np.sort(np.abs(evals))
    assert mags[-2] / mags[-1] < 1e-8
    # h = -2 |beta|^4 and the eigvector is (a kron conj(a)) / MN
    beta4 = abs(TARGET.beta(CFG)) ** 4
    assert cum.h.real == pytest.approx(-2.0 * beta4, rel=1e-9)
    _, _, a = steering_vectors(CFG, TARGET.theta, TARGET.r)
    b = np.kron(a, a.conj())
    resid = cum.c4 - cum.h * np.outer(b, b.conj())
    assert np.abs(resid).max() < 1e-8 * np.abs(cum.c4).max()


def test_c4_decay_when_pulses_quadrupled():
    rng = np.random.default_rng(5)
    mn = CFG.n_rx * CFG.n_tx
    x = (rng.normal(size=(mn, 8000)) + 1j * rng.normal(size=(mn, 8000))) / math.sqrt(2)
    small = np.abs(build_c4(x[:, :2000]).c4).max()
    big = np.abs(build_c4(x).c4).max()
    assert big / small == pytest.approx(0.5, abs=0.15)


def test_c4_needs_multiple_pulses():
    with pytest.raises(DomainError):
        build_c4(np.ones((16, 1), dtype=complex))
