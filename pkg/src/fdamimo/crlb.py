"""Fisher information and Cramer-Rao bounds under the colored offset noise.

For range, the full covariance C = C0 + Ct + Cr applies:

    F(r,r) = Re{ |beta|^2 (da/dr)^H C^-1 (da/dr) }
             + 1/2 tr{ C^-1 dC/dr C^-1 dC/dr }

For angle, the transmit-offset noise does not disturb row phase differences,
so only C~ = C0 + Cr enters F(theta,theta) (same shape with d/dtheta).
With L i.i.d. pulses both entries scale by L.  The bound reported is the
diagonal reciprocal, CRLB{s_i} = 1 / F_ii, with beta treated as a known
nuisance amplitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import NumericError, OffsetModel, RadarConfig, Target
from .noise_stats import covariance_model
from .signal_model import i1_matrix, steering_vectors


@dataclass
class FimReport:
    f_rr: float
    f_theta_theta: float
    crlb_r: float          # m^2
    crlb_theta: float      # rad^2
    n_pulses: int
    sigma0: float

    def to_dict(self) -> dict:
        return {
            "f_rr": self.f_rr,
            "f_theta_theta": self.f_theta_theta,
            "crlb_r_m2": self.crlb_r,
            "crlb_theta_rad2": self.crlb_theta,
            "n_pulses": self.n_pulses,
            "sigma0": self.sigma0,
        }


def steering_derivatives(cfg: RadarConfig, theta: float, r: float):
    """Analytic d a / d theta and d a / d r of the joint steering vector."""
    a_rx, a_tx, _ = steering_vectors(cfg, theta, r)
    m_idx = np.arange(cfg.n_rx)
    n_idx = np.arange(cfg.n_tx)
    ft_prime = cfg.f0 * cfg.d * math.cos(theta) / cfg.c
    da_tx_dr = 2j * np.pi * n_idx * (2.0 * cfg.delta_f / cfg.c) * a_tx
    da_rx_dth = -2j * np.pi * m_idx * ft_prime * a_rx
    da_tx_dth = -2j * np.pi * n_idx * ft_prime * a_tx
    da_dr = np.kron(da_tx_dr, a_rx)
    da_dth = np.kron(da_tx_dth, a_rx) + np.kron(a_tx, da_rx_dth)
    return da_dth, da_dr


def covariance_derivatives(cfg: RadarConfig, target: Target,
                           offsets: OffsetModel):
    """Analytic dC_t/dr, dC_r/dr and dC_r/dtheta from the entry formulas."""
    mn = cfg.n_rx * cfg.n_tx
    beta_sq = abs(target.beta(cfg)) ** 2
    f_theta = cfg.spatial_frequency(target.theta)
    ft_prime = cfg.f0 * cfg.d * math.cos(target.theta) / cfg.c
    i1 = i1_matrix(cfg)
    i_idx = np.arange(1, cfg.n_tx + 1)

    dct_dr = np.zeros((mn, mn), dtype=complex)
    if offsets.sigma_t > 0:
        from .noise_stats import covariance_model as _cm
        ct = _cm(cfg, target, offsets).ct
        lag = np.arange(cfg.n_tx)[:, None] - np.arange(cfg.n_tx)[None, :]
        phase_rate = 2j * np.pi * lag * cfg.delta_f * 2.0 / cfg.c
        dct_dr = ct * np.kron(phase_rate, np.ones((cfg.n_rx, cfg.n_rx)))

    dcr_dr = np.zeros((mn, mn), dtype=complex)
    dcr_dth = np.zeros((mn, mn), dtype=complex)
    if offsets.sigma_r > 0:
        k_r = 4.0 * math.pi ** 2 * beta_sq * offsets.rx_variance()
        tau_r = 2.0 * target.r / cfg.c
        d_dr = np.empty(cfg.n_tx)
        d_dth = np.empty(cfg.n_tx)
        for n in range(cfg.n_tx):
            rel = i_idx - (n + 1)
            ph = np.exp(-2j * np.pi * rel * f_theta)
            cross = np.real(ph * i1[:, n]).sum()
            dcross_dth = np.real(-2j * np.pi * rel * ft_prime * ph * i1[:, n]).sum()
            vph = np.exp(-2j * np.pi * i_idx * f_theta)
            v = (vph * i1[:, n]).sum()
            dv_dth = (-2j * np.pi * i_idx * ft_prime * vph * i1[:, n]).sum()
            d_dr[n] = (2.0 * tau_r * (2.0 / cfg.c)
                       + (2.0 / cfg.c) * 2.0 / cfg.t_p * cross)
            d_dth[n] = (2.0 * tau_r / cfg.t_p * dcross_dth
                        + 2.0 * np.real(dv_dth * np.conj(v)) / cfg.t_p ** 2)
        dcr_dr = np.diag(k_r * np.repeat(d_dr, cfg.n_rx)).astype(complex)
        dcr_dth = np.diag(k_r * np.repeat(d_dth, cfg.n_rx)).astype(complex)
    return dct_dr, dcr_dr, dcr_dth


def _solve_psd(c: np.ndarray, rhs: np.ndarray, label: str) -> np.ndarray:
    cond = np.linalg.cond(c)
    if not np.isfinite(cond) or cond > 1e14:
        raise NumericError(f"{label} is numerically singular (cond={cond:.3e}); "
                           f"need sigma0 > 0 or a receive-offset component")
    return np.linalg.solve(c, rhs)


def fim(cfg: RadarConfig, target: Target, offsets: OffsetModel,
        sigma0: float, n_pulses: int = 1) -> FimReport:
    """Fisher information entries F(r,r), F(theta,theta) and their CRLBs."""
    target.validate(cfg)
    beta_sq = abs(target.beta(cfg)) ** 2
    da_dth, da_dr = steering_derivatives(cfg, target.theta, target.r)
    cov = covariance_model(cfg, target, offsets, sigma0=sigma0)
    dct_dr, dcr_dr, dcr_dth = covariance_derivatives(cfg, target, offsets)

    c = cov.c_total
    dc_dr = dct_dr + dcr_dr
    sol = _solve_psd(c, da_dr, "C")
    f_rr = float(np.real(beta_sq * np.vdot(da_dr, sol)))
    if np.abs(dc_dr).max() > 0:
        a = _solve_psd(c, dc_dr, "C")
        f_rr += 0.5 * float(np.real(np.trace(a @ a)))

    c_tilde = cov.c_tilde
    sol_t = _solve_psd(c_tilde, da_dth, "C~")
    f_tt = float(np.real(beta_sq * np.vdot(da_dth, sol_t)))
    if np.abs(dcr_dth).max() > 0:
        a_t = _solve_psd(c_tilde, dcr_dth, "C~")
        f_tt += 0.5 * float(np.real(np.trace(a_t @ a_t)))

    f_rr *= n_pulses
    f_tt *= n_pulses
    if f_rr <= 0 or f_tt <= 0:
        raise NumericError(f"non-positive information entries: "
                           f"F_rr={f_rr}, F_tt={f_tt}")
    return FimReport(f_rr=f_rr, f_theta_theta=f_tt,
                     crlb_r=1.0 / f_rr, crlb_theta=1.0 / f_tt,
                     n_pulses=n_pulses, sigma0=sigma0)


def crlb_curve(cfg: RadarConfig, target: Target, sweep: str, values,
               offsets: OffsetModel | None = None, snr_db: float = 20.0,
               n_pulses: int = 1) -> list[dict]:
    """One FimReport per sweep point over sigma_t, sigma_r or snr."""
    if sweep not in ("sigma_t", "sigma_r", "snr"):
        raise ValueError(f"unknown sweep {sweep!r}")
    values = list(values)
    if not values:
        raise ValueError("sweep values must be nonempty")
    base = offsets or OffsetModel()
    from .signal_model import white_noise_sigma
    rows = []
    for v in values:
        off = base
        snr = snr_db
        if sweep == "sigma_t":
            off = OffsetModel(sigma_t=v, sigma_r=base.sigma_r, seed=base.seed,
                              tx_law=base.tx_law, rx_law=base.rx_law)
        elif sweep == "sigma_r":
            off = OffsetModel(sigma_t=base.sigma_t, sigma_r=v, seed=base.seed,
                              tx_law=base.tx_law, rx_law=base.rx_law)
        else:
            snr = v
        sigma0 = white_noise_sigma(cfg, target, snr)
        rep = fim(cfg, target, off, sigma0, n_pulses=n_pulses)
        rows.append({"sweep_value": float(v),
                     "crlb_r_m2": rep.crlb_r,
                     "crlb_theta_rad2": rep.crlb_theta})
    return rows
