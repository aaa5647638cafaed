"""Monte Carlo verification of the pilot-based estimation error statistics.

Fading is synthesized by circulant embedding: spectrum samples on an M-point
grid (M >= 4N, a power of two) shape i.i.d. proper Gaussian coefficients,
and N contiguous samples of the inverse transform form one block. Every trial
draws from its own Philox stream keyed by ``seed + trial``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from . import estimator
from .bounds import ChannelConfig, joint_penalty, pilot_error_variance
from .estimator import PowerProfile
from .psd import circulant_equivalent, toeplitz_correlation

log = logging.getLogger(__name__)

_U64 = 1 << 64


def trial_rng(seed, trial=0):
    return np.random.Generator(np.random.Philox((int(seed) + int(trial)) % _U64))


def proper_gaussian(rng, shape, variance=1.0):
    """Circularly symmetric complex normal samples; each component has variance/2."""
    sd = math.sqrt(variance / 2.0)
    return sd * rng.standard_normal(shape) + 1j * sd * rng.standard_normal(shape)


def embedding_size(N):
    return 1 << max(2, math.ceil(math.log2(4 * N)))


def _embedding_sqrt(model, M, clipped=None):
    lam = circulant_equivalent(model, M).eigenvalues
    floor = -1e-9 * model.sigma_h_sq
    if np.any(lam < floor):
        raise ValueError(f"circulant eigenvalue {lam.min()} below {floor}")
    if np.any(lam < 0):
        if clipped is not None:
            clipped.append(int(np.sum(lam < 0)))
        lam = np.clip(lam, 0.0, None)
    return np.sqrt(lam / M)


def generate_fading(model, N, seed, rng=None):
    """One block of N proper Gaussian fading samples with the model's spectrum."""
    if N < 2:
        raise ValueError("N must be >= 2")
    rng = trial_rng(seed) if rng is None else rng
    M = embedding_size(N)
    amp = _embedding_sqrt(model, M)
    w = proper_gaussian(rng, M)
    return np.fft.ifft(amp * w)[:N] * M


def empirical_psd(sequences, window="hann", overlap=0.5, nperseg=None):
    """Averaged windowed periodogram over a set of equal-length complex sequences.

    Returns (f, density) with f ascending on [-1/2, 1/2); the density is
    two-sided, so sum(density) * df approximates the mean power.
    """
    seqs = [np.asarray(s) for s in sequences]
    if not seqs:
        raise ValueError("need at least one sequence")
    n = len(seqs[0])
    if any(len(s) != n for s in seqs):
        raise ValueError("sequences must have equal length")
    if n < 64:
        raise ValueError(f"sequence length {n} too short (need >= 64)")
    if window != "hann":
        raise ValueError(f"unsupported window {window!r}")
    nseg = min(n, 256) if nperseg is None else int(nperseg)
    if not 0.0 <= overlap < 1.0:
        raise ValueError("overlap must lie in [0, 1)")
    f, p = signal.welch(np.asarray(seqs), fs=1.0, window="hann", nperseg=nseg,
                        noverlap=int(round(overlap * nseg)), detrend=False,
                        return_onesided=False, scaling="density", axis=-1)
    p = np.mean(np.atleast_2d(p), axis=0)
    return np.fft.fftshift(f), np.fft.fftshift(p)


@dataclass(frozen=True)
class McConfig:
    cfg: ChannelConfig
    N: int
    trials: int
    seed: int = 0
    interior_fraction: float = 0.5
    var_rel_tol: float = 0.03
    psd_rel_tol: float = 0.05
    szego_rel_tol: float = 0.05
    max_lag: int = 16
    joint_reference: bool = False

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.N < 4 * self.cfg.L:
            raise ValueError("block length must be at least 4 L")
        if not 0.0 < self.interior_fraction <= 1.0:
            raise ValueError("interior_fraction must lie in (0, 1]")
        if not 0 <= self.seed < _U64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def interior(self):
        m = max(1, int(round(self.interior_fraction * self.N)))
        start = (self.N - m) // 2
        return slice(start, start + m)


@dataclass
class Check:
    name: str
    passed: bool
    margin: float

    def line(self):
        return f"{self.name},{'pass' if self.passed else 'fail'},{self.margin:.9g}"


@dataclass
class McReport:
    empirical_error_variance: float
    analytic_error_variance: float
    full_block_error_variance: float
    empirical_error_psd: tuple
    analytic_inband_psd: float
    empirical_inband_psd: float
    empirical_error_autocorr: np.ndarray
    logdet_gap_finite: float
    szego_target: float
    trial_error_variances: np.ndarray
    joint_error_variance: float | None = None
    trial_joint_error_variances: np.ndarray | None = None
    events: list = field(default_factory=list)
    checks: list = field(default_factory=list)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)


def _rel_check(name, value, target, tol):
    err = abs(value - target) / abs(target) if target else abs(value)
    return Check(name, err <= tol, tol - err)


def run_pilot_estimation(mc):
    """Simulate pilot-aided LMMSE estimation and compare with the stationary theory."""
    cfg = mc.cfg
    N, L = mc.N, cfg.L
    R = toeplitz_correlation(cfg.psd, N).matrix
    events = []
    pil = PowerProfile.pilots(N, L, cfg.sigma_x_sq)
    G, act = estimator.lmmse_filter(R, pil.symbols().astype(complex), cfg.sigma_n_sq, events)
    if mc.joint_reference:
        cm = PowerProfile.uniform(N, cfg.sigma_x_sq)
        Gj, actj = estimator.lmmse_filter(R, cm.symbols().astype(complex), cfg.sigma_n_sq, events)

    M = embedding_size(N)
    clipped = []
    amp = _embedding_sqrt(cfg.psd, M, clipped)
    if clipped:
        events.append(f"clipped {clipped[0]} small negative embedding eigenvalues")
    sx = math.sqrt(cfg.sigma_x_sq)
    sl = mc.interior()

    interior_err = []
    tv, tvj, full = [], [], []
    for t in range(mc.trials):
        rng = trial_rng(mc.seed, t)
        h = np.fft.ifft(amp * proper_gaussian(rng, M))[:N] * M
        noise = proper_gaussian(rng, N, cfg.sigma_n_sq)
        y = sx * h + noise
        e = h - (G @ y[act] if act.size else 0.0)
        interior_err.append(e[sl])
        tv.append(np.mean(np.abs(e[sl]) ** 2))
        full.append(np.mean(np.abs(e) ** 2))
        if mc.joint_reference:
            ej = h - Gj @ y[actj]
            tvj.append(np.mean(np.abs(ej[sl]) ** 2))

    E = np.asarray(interior_err)
    emp_var = float(np.mean(tv))
    ana_var = pilot_error_variance(cfg)

    m = E.shape[1]
    if m >= 64:
        f, dens = empirical_psd(E, nperseg=m)
    else:
        f, dens = np.array([]), np.array([])
    band = np.abs(f) <= cfg.psd.f_d
    emp_band = float(np.mean(dens[band])) if band.any() else float("nan")
    ana_band = float(np.mean(estimator.error_spectrum_pilot(cfg.psd, cfg.rho, L, f[band]))) if band.any() else float("nan")

    K = min(mc.max_lag, m - 1)
    acf = np.array([np.mean(E[:, k:] * E[:, :m - k].conj()) for k in range(K + 1)])

    gap, target = float("nan"), float("nan")
    if cfg.rho > 0:
        Rp = estimator.error_correlation(R, pil, cfg.sigma_n_sq)
        Rj = estimator.error_correlation(R, PowerProfile.uniform(N, cfg.sigma_x_sq), cfg.sigma_n_sq)
        gap = estimator.logdet_rate_gap(Rp, Rj, events)
        target = joint_penalty(cfg)

    checks = [_rel_check("error_variance", emp_var, ana_var, mc.var_rel_tol)]
    if band.any():
        checks.append(_rel_check("inband_error_psd", emp_band, ana_band, mc.psd_rel_tol))
    if cfg.rho > 0:
        checks.append(_rel_check("logdet_gap_vs_szego", gap, target, mc.szego_rel_tol))
    return McReport(
        empirical_error_variance=emp_var,
        analytic_error_variance=ana_var,
        full_block_error_variance=float(np.mean(full)),
        empirical_error_psd=(f, dens),
        analytic_inband_psd=ana_band,
        empirical_inband_psd=emp_band,
        empirical_error_autocorr=acf,
        logdet_gap_finite=gap,
        szego_target=target,
        trial_error_variances=np.asarray(tv),
        joint_error_variance=float(np.mean(tvj)) if tvj else None,
        trial_joint_error_variances=np.asarray(tvj) if tvj else None,
        events=events,
        checks=checks,
    )
