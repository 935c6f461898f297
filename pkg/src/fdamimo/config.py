"""Radar geometry, target and frequency-offset configuration.

Conventions used throughout the package:

* ``N`` transmit elements (index ``n``), ``M`` receive elements (index ``m``),
  both uniform linear arrays with common spacing ``d = c / (2 f0)``.
* Pulse duration ``t_p = 1 / delta_f`` (transmit waveforms orthogonal over
  one pulse).
* The matched-filter output is an ``M x N`` complex matrix ``Y``; its vector
  form stacks columns, i.e. element ``(n-1)*M + m`` is ``Y[m, n]``
  (1-based), which is ``Y.reshape(M*N, order="F")`` in numpy.
* Angles are radians internally; degrees only at the CLI/service boundary.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0

#: Offset draw laws.  "gaussian" is the default zero-mean normal law.
#: "uniform" draws from U(-2*sigma, 2*sigma), variance (4/3)*sigma^2; the
#: transmit-offset SNR reference tables need that inflated variance (the
#: receive side matches the Gaussian law exactly — see noise_stats).
OFFSET_LAWS = ("gaussian", "uniform")


class DomainError(ValueError):
    """A physically invalid configuration or out-of-range parameter."""


class NumericError(RuntimeError):
    """A numerical routine failed to converge or produced garbage."""


@dataclass(frozen=True)
class RadarConfig:
    """Array geometry and waveform parameters.

    Derived quantities:
      t_p   = 1 / delta_f          pulse duration (orthogonality)
      d     = c / (2 f0)           element spacing (half wavelength)
      r_max = c / (2 delta_f)      maximum unambiguous range
    """

    n_tx: int = 4
    n_rx: int = 4
    f0: float = 10e9
    delta_f: float = 10e3
    energy: float = 1.0
    c: float = SPEED_OF_LIGHT

    def __post_init__(self):
        if self.n_tx < 1 or self.n_rx < 1:
            raise DomainError(f"need at least one element per array, got "
                              f"N={self.n_tx}, M={self.n_rx}")
        if self.f0 <= 0 or self.delta_f <= 0:
            raise DomainError("f0 and delta_f must be positive")
        if self.delta_f / self.f0 >= 1e-3:
            raise DomainError(
                f"delta_f/f0 = {self.delta_f / self.f0:.3e} violates the "
                f"narrowband assumption (must be < 1e-3)")
        if self.energy <= 0 or self.c <= 0:
            raise DomainError("energy and c must be positive")

    @property
    def t_p(self) -> float:
        return 1.0 / self.delta_f

    @property
    def d(self) -> float:
        return self.c / (2.0 * self.f0)

    @property
    def r_max(self) -> float:
        return self.c / (2.0 * self.delta_f)

    def spatial_frequency(self, theta: float) -> float:
        """Normalized spatial frequency f_theta = f0 * d * sin(theta) / c."""
        return self.f0 * self.d * math.sin(theta) / self.c


@dataclass(frozen=True)
class Target:
    """Point target at DOA ``theta`` (rad) and range ``r`` (m)."""

    theta: float
    r: float
    alpha: complex = 1.0 + 0.0j

    def validate(self, cfg: RadarConfig) -> None:
        if not -math.pi / 2 <= self.theta <= math.pi / 2:
            raise DomainError(f"theta={self.theta} rad outside [-pi/2, pi/2]")
        if not 0.0 <= self.r < cfg.r_max:
            raise DomainError(
                f"r={self.r} m outside the unambiguous range [0, {cfg.r_max})")

    def beta(self, cfg: RadarConfig) -> complex:
        """Composite amplitude alpha * t_p * sqrt(E/N) * exp(j 4 pi f0 r / c)."""
        mag = self.alpha * cfg.t_p * math.sqrt(cfg.energy / cfg.n_tx)
        return mag * cmath.exp(4j * math.pi * cfg.f0 * self.r / cfg.c)


@dataclass(frozen=True)
class OffsetModel:
    """Per-pulse carrier / down-conversion frequency offset statistics.

    Offsets are zero mean, constant within a pulse and i.i.d. across pulses.
    ``sigma_t`` drives one draw per transmit element, ``sigma_r`` one draw per
    (receive element, matched filter) pair.
    """

    sigma_t: float = 0.0
    sigma_r: float = 0.0
    seed: int = 0
    tx_law: str = "gaussian"
    rx_law: str = "gaussian"

    def __post_init__(self):
        if self.sigma_t < 0 or self.sigma_r < 0:
            raise DomainError("offset standard deviations must be >= 0")
        for law in (self.tx_law, self.rx_law):
            if law not in OFFSET_LAWS:
                raise DomainError(f"unknown offset law {law!r}")

    def taylor_validity(self, cfg: RadarConfig) -> str:
        """First-order-model validity: 'valid' below 0.05*delta_f,
        'invalid' above 0.1*delta_f, 'marginal' in between."""
        worst = max(self.sigma_t, self.sigma_r)
        if worst < 0.05 * cfg.delta_f:
            return "valid"
        if worst > 0.1 * cfg.delta_f:
            return "invalid"
        return "marginal"

    def tx_variance(self) -> float:
        return _law_variance(self.tx_law, self.sigma_t)

    def rx_variance(self) -> float:
        return _law_variance(self.rx_law, self.sigma_r)

    def scenario(self) -> str:
        if self.sigma_t > 0 and self.sigma_r == 0:
            return "tx-only"
        if self.sigma_r > 0 and self.sigma_t == 0:
            return "rx-only"
        if self.sigma_t == 0 and self.sigma_r == 0:
            return "none"
        return "both"


def _law_variance(law: str, sigma: float) -> float:
    if law == "uniform":
        return (4.0 / 3.0) * sigma * sigma
    return sigma * sigma


@dataclass(frozen=True)
class PulseDraw:
    """One pulse's offset realization: f_e_t (N,) and f_e_r (M, N), in Hz."""

    f_e_t: np.ndarray
    f_e_r: np.ndarray

    def masked(self, tx: bool = True, rx: bool = True) -> "PulseDraw":
        return PulseDraw(
            f_e_t=self.f_e_t if tx else np.zeros_like(self.f_e_t),
            f_e_r=self.f_e_r if rx else np.zeros_like(self.f_e_r),
        )


def pulse_rng(seed: int, *counters: int) -> np.random.Generator:
    """Counter-based RNG: same (seed, counters) always gives the same stream,
    and distinct counters give independent streams (parallel-safe)."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *[int(k) for k in counters]]))


def sample_offsets(cfg: RadarConfig, offsets: OffsetModel, pulse_index: int) -> PulseDraw:
    """Draw one pulse's transmit and receive offsets (Hz)."""
    rng = pulse_rng(offsets.seed, pulse_index)
    f_e_t = _draw(rng, offsets.tx_law, offsets.sigma_t, (cfg.n_tx,))
    f_e_r = _draw(rng, offsets.rx_law, offsets.sigma_r, (cfg.n_rx, cfg.n_tx))
    return PulseDraw(f_e_t=f_e_t, f_e_r=f_e_r)


def _draw(rng: np.random.Generator, law: str, sigma: float, shape) -> np.ndarray:
    if sigma == 0.0:
        return np.zeros(shape)
    if law == "uniform":
        return rng.uniform(-2.0 * sigma, 2.0 * sigma, size=shape)
    return rng.normal(0.0, sigma, size=shape)


# Table-style defaults used by the experiment drivers: N = M = 4, one target
# at 6 km / 30 deg, f0 = 10 GHz, delta_f = 10 kHz, sigma_t = sigma_r = 500 Hz,
# SNR 20 dB, L = 200 pulses.
def default_config() -> RadarConfig:
    return RadarConfig()


def default_target(cfg: RadarConfig | None = None) -> Target:
    return Target(theta=math.radians(30.0), r=6000.0)


def default_offsets(seed: int = 0) -> OffsetModel:
    return OffsetModel(sigma_t=500.0, sigma_r=500.0, seed=seed)
