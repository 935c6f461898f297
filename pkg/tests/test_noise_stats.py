import math

import numpy as np
import pytest

from fdamimo.config import OffsetModel, RadarConfig, Target
from fdamimo.noise_stats import (covariance_model, empirical_tx_covariance,
                                 equalized_snr, structure_report)

CFG = RadarConfig()
TARGET = Target(theta=math.radians(30.0), r=0.4 * CFG.r_max)


def test_ct_zero_without_tx_offsets():
    cov = covariance_model(CFG, TARGET, OffsetModel(sigma_r=200.0))
    assert np.abs(cov.ct).max() == 0.0
    assert np.abs(cov.cr).max() > 0.0


def test_cr_diagonal_and_positive():
    cov = covariance_model(CFG, TARGET, OffsetModel(sigma_r=250.0))
    off_diag = cov.cr[~np.eye(cov.cr.shape[0], dtype=bool)]
    assert np.abs(off_diag).max() == 0.0
    diag = np.diag(cov.cr)
    assert np.abs(diag.imag).max() == 0.0
    assert diag.real.min() > 0.0


def test_assembled_matrices_hermitian():
    cov = covariance_model(CFG, TARGET,
                           OffsetModel(sigma_t=300.0, sigma_r=200.0),
                           sigma0=1e-5)
    for mat in (cov.c0, cov.ct, cov.cr, cov.c_total, cov.c_tilde):
        scale = np.abs(mat).max()
        assert np.abs(mat - mat.conj().T).max() < 1e-12 * scale


def test_ct_block_toeplitz_elementwise():
    cov = covariance_model(CFG, TARGET, OffsetModel(sigma_t=300.0))
    m, n = CFG.n_rx, CFG.n_tx
    ct = cov.ct
    for bn in range(n):
        for bq in range(n):
            block = ct[bn * m:(bn + 1) * m, bq * m:(bq + 1) * m]
            for mm in range(m):
                for pp in range(m):
                    ref = block[mm - pp if mm >= pp else 0,
                                0 if mm >= pp else pp - mm]
                    assert abs(block[mm, pp] - ref) < 1e-12 * np.abs(ct).max()


def test_structure_report_flags():
    cov = covariance_model(CFG, TARGET,
                           OffsetModel(sigma_t=300.0, sigma_r=200.0))
    rep = structure_report(cov, n_rx=CFG.n_rx)
    assert rep.ct_block_toeplitz
    assert rep.ct_blocks_rank1
    assert rep.ct_singular
    assert rep.cr_diagonal
    assert rep.all_hermitian
    assert rep.deviations["ct_block_rank_ratio"] < 1e-10


def test_structure_report_rx_only_vacuous_ct():
    cov = covariance_model(CFG, TARGET, OffsetModel(sigma_r=200.0))
    rep = structure_report(cov, n_rx=CFG.n_rx)
    assert rep.cr_diagonal
    assert rep.ct_block_toeplitz and rep.ct_blocks_rank1 and rep.ct_singular


def test_empirical_tx_covariance_matches_model():
    off = OffsetModel(sigma_t=0.05 * CFG.delta_f, seed=0)
    cov = covariance_model(CFG, TARGET, off)
    emp = empirical_tx_covariance(CFG, TARGET, off, 4000)
    mask = np.abs(cov.ct) > 0.01 * np.abs(cov.ct).max()
    rel = np.abs(emp[mask] - cov.ct[mask]) / np.abs(cov.ct[mask])
    assert rel.max() < 0.10     # 5 % at 1e4 draws is the acceptance check


def test_cr_trace_grows_with_range():
    off = OffsetModel(sigma_r=200.0)
    tr = []
    for frac in (0.1, 0.9):
        t = Target(theta=TARGET.theta, r=frac * CFG.r_max)
        tr.append(np.trace(covariance_model(CFG, t, off).cr).real)
    assert tr[1] > tr[0]


def test_tx_equalized_snr_range_independent():
    off = OffsetModel(sigma_t=200.0, seed=0)
    vals = []
    for frac in (0.1, 0.8):
        t = Target(theta=TARGET.theta, r=frac * CFG.r_max)
        vals.append(equalized_snr(CFG, t, off, mode="model").snr_model_db)
    assert abs(vals[0] - vals[1]) < 0.1


def test_rx_noise_power_5db_above_tx():
    # at r = 0.4 r_max and equal sigma, with the table-calibrated tx law
    sigma = 0.05 * CFG.delta_f
    tx = equalized_snr(CFG, TARGET, OffsetModel(sigma_t=sigma, tx_law="uniform"),
                       mode="model").snr_model_db
    rx = equalized_snr(CFG, TARGET, OffsetModel(sigma_r=sigma),
                       mode="model").snr_model_db
    assert tx - rx == pytest.approx(5.0, abs=1.0)


def test_equalized_snr_sentinel():
    rep = equalized_snr(CFG, TARGET, OffsetModel(), mode="both")
    assert math.isinf(rep.snr_model_db)
    assert math.isinf(rep.snr_empirical_db)


def test_equalized_snr_ratio_invariance():
    # identical sigma/delta_f and r/r_max give identical model values
    vals = []
    for df in (1e3, 10e3):
        cfg = RadarConfig(delta_f=df)
        t = Target(theta=math.radians(30.0), r=0.4 * cfg.r_max)
        off = OffsetModel(sigma_t=0.04 * df)
        vals.append(equalized_snr(cfg, t, off, mode="model").snr_model_db)
    assert vals[0] == pytest.approx(vals[1], abs=1e-9)


def test_equalized_snr_reference_anchor_points():
    # rx-only model values are the reference estimation column
    rx = equalized_snr(CFG, TARGET, OffsetModel(sigma_r=0.1 * CFG.delta_f),
                       mode="model").snr_model_db
    assert rx == pytest.approx(3.05, abs=0.05)
    tx = equalized_snr(CFG, TARGET,
                       OffsetModel(sigma_t=0.02 * CFG.delta_f, tx_law="uniform"),
                       mode="model").snr_model_db
    assert tx == pytest.approx(22.05, abs=0.05)


def test_equalized_snr_empirical_close_to_model():
    off = OffsetModel(sigma_r=0.04 * CFG.delta_f, seed=2)
    rep = equalized_snr(CFG, TARGET, off, mode="both", n_pulses=400)
    assert rep.snr_empirical_db == pytest.approx(rep.snr_model_db, abs=0.6)


def test_equalized_snr_mode_guard():
    with pytest.raises(ValueError):
        equalized_snr(CFG, TARGET, OffsetModel(sigma_t=1.0), mode="exact")
