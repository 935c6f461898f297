"""Range-angle estimators: 2D-MUSIC, row-only MUSIC, fourth-order-cumulant
MUSIC and grid OMP (the ANM denoiser lives in anm.py).

All grid searches share one trick: the joint steering vector factors as

    a(theta, r) = (g_r * h_theta) kron a_r(theta),
    g_r[n] = exp(j 2 pi n * 2 r delta_f / c),  h_theta[n] = exp(-j 2 pi n f_theta),

so a projection ||U^H a||^2 over a (theta, r) grid costs O(|theta| (M N K +
|r| N K)) instead of O(|theta| |r| M N K).  MUSIC spectra are evaluated in
the complement form 1 / (||a||^2 - ||U_s^H a||^2), which is identical to the
noise-subspace form for an orthonormal eigenbasis and never materializes the
large noise subspace.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import DomainError, NumericError, RadarConfig


@dataclass(frozen=True)
class GridSpec:
    """Uniform search grid; angles in radians, ranges in meters."""

    theta_axis: np.ndarray
    r_axis: np.ndarray

    def __post_init__(self):
        for axis, name in ((self.theta_axis, "theta"), (self.r_axis, "r")):
            if len(axis) < 2:
                raise DomainError(f"{name} axis needs at least 2 points")
            if np.any(np.diff(axis) <= 0):
                raise DomainError(f"{name} axis must be strictly increasing")

    @classmethod
    def default(cls, cfg: RadarConfig) -> "GridSpec":
        """0.1 deg over [-90, 90] and r_max/1500 over [0, r_max)."""
        theta = np.deg2rad(np.arange(-900, 901) / 10.0)
        r = np.arange(1500) * (cfg.r_max / 1500.0)
        return cls(theta_axis=theta, r_axis=r)

    @classmethod
    def window(cls, cfg: RadarConfig, theta0: float, r0: float,
               theta_halfwidth: float = math.radians(2.0),
               r_halfwidth: float = 500.0) -> "GridSpec":
        """Default-resolution grid restricted to a window around (theta0, r0).

        Built by slicing the default axes, so window nodes are bitwise
        identical to full-grid nodes: a window search and a full search
        return the same cell whenever the peak lies inside the window.
        """
        full = cls.default(cfg)
        t_step = math.pi / 1800.0
        r_step = cfg.r_max / 1500.0
        t_lo = max(0, round((theta0 - theta_halfwidth + math.pi / 2) / t_step))
        t_hi = min(1800, round((theta0 + theta_halfwidth + math.pi / 2) / t_step))
        r_lo = max(0, round((r0 - r_halfwidth) / r_step))
        r_hi = min(1499, round((r0 + r_halfwidth) / r_step))
        return cls(theta_axis=full.theta_axis[t_lo:t_hi + 1],
                   r_axis=full.r_axis[r_lo:r_hi + 1])

    @property
    def n_cells(self) -> int:
        return len(self.theta_axis) * len(self.r_axis)


@dataclass
class Spectrum2D:
    values: np.ndarray          # |theta| x |r|, real >= 0
    theta_axis: np.ndarray
    r_axis: np.ndarray
    peak: tuple                 # (theta, r) of the global argmax
    peak_value: float


@dataclass
class Estimate:
    theta: float                # rad
    r: float                    # m
    amplitude: complex
    method: str
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "theta_deg": math.degrees(self.theta),
            "r_m": None if math.isnan(self.r) else self.r,
            "amplitude_re": self.amplitude.real,
            "amplitude_im": self.amplitude.imag,
            "method": self.method,
            "diagnostics": dict(self.diagnostics),
        }


@dataclass
class CumulantMatrix:
    """Fourth-order cumulant matrix C4 ((MN)^2 x (MN)^2) and its scale."""

    c4: np.ndarray
    h: complex


def _tx_factors(cfg: RadarConfig, grid: GridSpec):
    """Per-theta receive vectors / h factors and the per-r transmit ramp."""
    n_idx = np.arange(cfg.n_tx)
    m_idx = np.arange(cfg.n_rx)
    f_theta = cfg.f0 * cfg.d * np.sin(grid.theta_axis) / cfg.c
    a_r_all = np.exp(-2j * np.pi * np.outer(m_idx, f_theta))     # M x |th|
    h_all = np.exp(-2j * np.pi * np.outer(n_idx, f_theta))       # N x |th|
    g_all = np.exp(2j * np.pi * np.outer(n_idx, 2.0 * grid.r_axis
                                         * cfg.delta_f / cfg.c))  # N x |r|
    return a_r_all, h_all, g_all


def _projection_power(cfg: RadarConfig, grid: GridSpec, basis: np.ndarray) -> np.ndarray:
    """||basis^H a(theta, r)||^2 on the grid; basis is MN x K."""
    m, n = cfg.n_rx, cfg.n_tx
    k = basis.shape[1]
    a_r_all, h_all, g_all = _tx_factors(cfg, grid)
    w = basis.reshape(m, n, k, order="F")                        # m, n, k
    out = np.empty((len(grid.theta_axis), len(grid.r_axis)))
    g_c = g_all.conj()
    for ti in range(len(grid.theta_axis)):
        b = np.einsum("m,mnk->nk", a_r_all[:, ti].conj(), w)
        b = h_all[:, ti].conj()[:, None] * b                     # n, k
        vals = g_c.T @ b                                          # |r|, k
        out[ti] = np.sum(np.abs(vals) ** 2, axis=1)
    return out


def find_peaks_2d(values: np.ndarray, grid: GridSpec, n_peaks: int,
                  sep_theta_cells: int = 11, sep_r_cells: int = 15):
    """Greedy separated peak picking; ties go to the lowest (theta, r) index."""
    work = values.copy()
    picks = []
    for _ in range(n_peaks):
        flat = int(np.argmax(work))
        ti, ri = np.unravel_index(flat, work.shape)
        picks.append((int(ti), int(ri), float(values[ti, ri])))
        t_lo, t_hi = max(0, ti - sep_theta_cells), ti + sep_theta_cells + 1
        r_lo, r_hi = max(0, ri - sep_r_cells), ri + sep_r_cells + 1
        work[t_lo:t_hi, r_lo:r_hi] = -np.inf
    return picks


def sample_covariance(x_stack: np.ndarray) -> np.ndarray:
    l = x_stack.shape[1]
    return x_stack @ x_stack.conj().T / l


def _signal_subspace(r_mat: np.ndarray, n_targets: int) -> np.ndarray:
    dim = r_mat.shape[0]
    if n_targets >= dim:
        raise DomainError(f"n_targets={n_targets} must be < dimension {dim}")
    if not np.all(np.isfinite(r_mat)):
        raise NumericError("covariance contains non-finite entries")
    vals, vecs = np.linalg.eigh((r_mat + r_mat.conj().T) / 2.0)
    # magnitude sort: a cumulant matrix puts the signal at the most negative
    # eigenvalue (its scale is -2|beta|^4); covariances are unaffected
    order = np.argsort(np.abs(vals))
    return vecs[:, order[dim - n_targets:]]


def music_2d(data, grid: GridSpec, n_targets: int, cfg: RadarConfig,
             sep_theta_cells: int = 11, sep_r_cells: int = 15):
    """2D MUSIC on a pulse stack (MN x L) or a CumulantMatrix.

    Returns (Spectrum2D, [Estimate]).  Spectrum values are the reciprocal of
    the squared distance from the steering vector to the signal subspace.
    """
    if isinstance(data, CumulantMatrix):
        return _music_c4(data, grid, n_targets, cfg, sep_theta_cells, sep_r_cells)
    x = np.asarray(data)
    if x.ndim == 1:
        x = x[:, None]
    us = _signal_subspace(sample_covariance(x), n_targets)
    mn = x.shape[0]
    denom = mn - _projection_power(cfg, grid, us)
    return _spectrum_and_peaks(denom, grid, n_targets, mn, "music2d",
                               sep_theta_cells, sep_r_cells)


def _spectrum_and_peaks(denom, grid, n_targets, norm_sq, method,
                        sep_theta_cells, sep_r_cells):
    floor = 1e-15 * norm_sq
    values = 1.0 / np.maximum(denom, floor)
    picks = find_peaks_2d(values, grid, n_targets, sep_theta_cells, sep_r_cells)
    estimates = [Estimate(theta=float(grid.theta_axis[ti]),
                          r=float(grid.r_axis[ri]),
                          amplitude=0j, method=method,
                          diagnostics={"peak_value": val})
                 for ti, ri, val in picks]
    ti, ri, val = picks[0]
    spec = Spectrum2D(values=values, theta_axis=grid.theta_axis,
                      r_axis=grid.r_axis,
                      peak=(float(grid.theta_axis[ti]), float(grid.r_axis[ri])),
                      peak_value=val)
    return spec, estimates


def music_rows(x_stack: np.ndarray, theta_axis: np.ndarray, n_targets: int,
               cfg: RadarConfig, sep_theta_cells: int = 11):
    """DOA-only MUSIC on the receive rows (M x N*L snapshot matrix).

    Only row phase differences enter, so transmit offsets do not move the
    estimate.
    """
    m, n = cfg.n_rx, cfg.n_tx
    l = x_stack.shape[1]
    rows = x_stack.reshape(m, n, l, order="F").reshape(m, n * l)
    us = _signal_subspace(sample_covariance(rows), n_targets)
    a_all = np.exp(-2j * np.pi * np.outer(
        np.arange(m), cfg.f0 * cfg.d * np.sin(theta_axis) / cfg.c))
    denom = m - np.sum(np.abs(us.conj().T @ a_all) ** 2, axis=0)
    values = 1.0 / np.maximum(denom, 1e-15 * m)
    work = values.copy()
    estimates = []
    for _ in range(n_targets):
        ti = int(np.argmax(work))
        estimates.append(Estimate(theta=float(theta_axis[ti]), r=math.nan,
                                  amplitude=0j, method="musicr",
                                  diagnostics={"peak_value": float(values[ti])}))
        work[max(0, ti - sep_theta_cells):ti + sep_theta_cells + 1] = -np.inf
    return values, estimates


def build_c4(x_stack: np.ndarray) -> CumulantMatrix:
    """Sample fourth-order cumulant matrix of the vectorized pulses.

    Entry [(i-1)MN+j, (p-1)MN+q] is the cumulant with arguments
    (x_i, x_j^*, x_p^*, x_q): the fourth moment E{x_i x_j^* x_p^* x_q} minus
    its three Gaussian pairings.  Circular Gaussian input nulls every entry;
    a deterministic rank-1 signal beta*a leaves h (a kron a^*)(a kron a^*)^H
    with h = -2 |beta|^4.
    """
    x = np.asarray(x_stack)
    if x.ndim != 2 or x.shape[1] < 2:
        raise DomainError("build_c4 needs an MN x L stack with L >= 2")
    mn, l = x.shape
    g = x @ x.conj().T / l                     # E{x_i x_p^*}
    h_mat = x @ x.T / l                        # E{x_i x_q}
    v = np.einsum("il,jl->ijl", x, x.conj()).reshape(mn * mn, l)
    m4 = v @ v.conj().T / l                    # E{x_i x_j^* x_p^* x_q}
    gvec = g.reshape(-1)                       # (i, j) -> i*MN + j
    term_pairs = np.outer(gvec, gvec.conj())   # E{x_i x_j^*} E{x_p^* x_q}
    term_kron = np.kron(g, g.conj())           # E{x_i x_p^*} E{x_j^* x_q}
    term_pseudo = np.einsum("iq,jp->ijpq", h_mat, h_mat.conj()).reshape(
        mn * mn, mn * mn)                      # E{x_i x_q} E{x_j^* x_p^*}
    c4 = m4 - term_pairs - term_kron - term_pseudo
    eig = np.linalg.eigvalsh((c4 + c4.conj().T) / 2.0)
    lead = eig[0] if abs(eig[0]) > abs(eig[-1]) else eig[-1]
    return CumulantMatrix(c4=c4, h=complex(lead / mn ** 2))


def _music_c4(cum: CumulantMatrix, grid: GridSpec, n_targets: int,
              cfg: RadarConfig, sep_theta_cells: int, sep_r_cells: int):
    """MUSIC on C4 with steering b = a kron conj(a)."""
    mn = cfg.n_rx * cfg.n_tx
    if cum.c4.shape[0] != mn * mn:
        raise DomainError("cumulant matrix size does not match the config")
    us = _signal_subspace(cum.c4, n_targets)
    k = us.shape[1]
    vs = us.reshape(mn, mn, k)                 # row (i, j) C-order
    a_r_all, h_all, g_all = _tx_factors(cfg, grid)
    denom = np.empty((len(grid.theta_axis), len(grid.r_axis)))
    for ti in range(len(grid.theta_axis)):
        a_t_all = h_all[:, ti][:, None] * g_all            # N x |r|
        a_all = np.einsum("nr,m->mnr", a_t_all, a_r_all[:, ti]).reshape(
            mn, -1, order="F")                             # MN x |r|
        # b^H u_s = sum_ij conj(V[i,j]) a_i conj(a_j)
        proj = np.einsum("ir,ijk,jr->rk", a_all, vs.conj(), a_all.conj())
        denom[ti] = mn ** 2 - np.sum(np.abs(proj) ** 2, axis=1)
    return _spectrum_and_peaks(denom, grid, n_targets, mn ** 2, "music2dc",
                               sep_theta_cells, sep_r_cells)


def omp(x_stack: np.ndarray, grid: GridSpec, n_targets: int, cfg: RadarConfig):
    """Greedy orthogonal matching pursuit on the (theta, r) dictionary.

    Atoms are unit-normalized joint steering vectors; with a multi-pulse
    stack the selection metric is the residual correlation energy summed
    over pulses (simultaneous OMP).  Runs exactly n_targets iterations with
    a least-squares refit each time.

    Returns (estimates, coefficients, residual_norms).
    """
    if n_targets < 1:
        raise DomainError("n_targets must be >= 1")
    x = np.asarray(x_stack)
    if x.ndim == 1:
        x = x[:, None]
    m, n = cfg.n_rx, cfg.n_tx
    mn = m * n
    l = x.shape[1]
    scale = math.sqrt(mn)
    a_r_all, h_all, g_all = _tx_factors(cfg, grid)
    g_c = g_all.conj()

    residual = x.copy()
    chosen: list[tuple[int, int]] = []
    atoms = np.zeros((mn, 0), dtype=complex)
    residual_norms = [float(np.linalg.norm(residual))]
    coefs = np.zeros((0, l), dtype=complex)
    for _ in range(n_targets):
        res3 = residual.reshape(m, n, l, order="F")
        best = (-1.0, 0, 0)
        for ti in range(len(grid.theta_axis)):
            p = np.einsum("m,mnl->nl", a_r_all[:, ti].conj(), res3)
            p = h_all[:, ti].conj()[:, None] * p
            corr = g_c.T @ p                                  # |r| x L
            energy = np.sum(np.abs(corr) ** 2, axis=1)
            ri = int(np.argmax(energy))
            if energy[ri] > best[0]:
                best = (float(energy[ri]), ti, ri)
        _, ti, ri = best
        if (ti, ri) in chosen:
            break
        chosen.append((ti, ri))
        a_t = h_all[:, ti] * g_all[:, ri]
        atom = np.kron(a_t, a_r_all[:, ti]) / scale
        atoms = np.hstack([atoms, atom[:, None]])
        coefs, _, rank, _ = np.linalg.lstsq(atoms, x, rcond=None)
        if rank < atoms.shape[1]:
            raise NumericError("selected atoms are rank deficient")
        residual = x - atoms @ coefs
        residual_norms.append(float(np.linalg.norm(residual)))

    estimates = []
    for k, (ti, ri) in enumerate(chosen):
        amp = complex(coefs[k].mean())
        estimates.append(Estimate(
            theta=float(grid.theta_axis[ti]), r=float(grid.r_axis[ri]),
            amplitude=amp, method="omp",
            diagnostics={"residual_norm": residual_norms[-1],
                         "iteration": k + 1}))
    return estimates, coefs, residual_norms
