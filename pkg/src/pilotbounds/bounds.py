"""Achievable-rate bounds for pilot-aided transmission over stationary Rayleigh fading.

All rates are computed in nats internally and returned in bits per channel
use unless ``unit="nats"`` is requested.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .psd import FadingPsd, psd_value
from .quadrature import LN2, exp_log_moment, freq_integral

# slack for 1/(2 f_d) landing a hair below an integer in floating point
_NYQ_EPS = 1e-9


class BoundKind(str, enum.Enum):
    SEP_LOWER = "SepLower"
    SEP_UPPER = "SepUpper"
    JOINT_LOWER = "JointLower"
    IID_PG_LOWER = "IidPgLower"
    IID_PG_UPPER = "IidPgUpper"
    COHERENT = "Coherent"


def max_pilot_spacing(f_d):
    """Largest integer pilot spacing that still samples the fading at Nyquist rate."""
    if not 0.0 < f_d < 0.5:
        raise ValueError(f"f_d must lie in (0, 0.5), got {f_d}")
    return int(math.floor(1.0 / (2.0 * f_d) + _NYQ_EPS))


@dataclass(frozen=True)
class ChannelConfig:
    rho: float
    sigma_h_sq: float
    sigma_n_sq: float
    sigma_x_sq: float
    L: int
    psd: FadingPsd

    def __post_init__(self):
        if self.sigma_n_sq <= 0 or self.sigma_h_sq <= 0 or self.sigma_x_sq < 0:
            raise ValueError("variances must be positive (sigma_x_sq may be 0)")
        expected = self.sigma_x_sq * self.sigma_h_sq / self.sigma_n_sq
        if abs(self.rho - expected) > 1e-12 * max(abs(expected), 1e-300):
            raise ValueError(f"rho={self.rho} inconsistent with sigma_x^2 sigma_h^2 / sigma_n^2 = {expected}")
        if not math.isclose(self.psd.sigma_h_sq, self.sigma_h_sq, rel_tol=1e-12):
            raise ValueError("psd.sigma_h_sq differs from sigma_h_sq")
        if int(self.L) != self.L or self.L < 1:
            raise ValueError(f"pilot spacing must be a positive integer, got {self.L}")
        object.__setattr__(self, "L", int(self.L))
        if self.L > max_pilot_spacing(self.psd.f_d):
            raise ValueError(f"pilot spacing L={self.L} violates Nyquist sampling for f_d={self.psd.f_d}")

    @classmethod
    def from_snr(cls, rho, psd, L, sigma_n_sq=1.0):
        """Build a config at SNR ``rho`` by choosing the symbol power."""
        sigma_x_sq = rho * sigma_n_sq / psd.sigma_h_sq
        rho_exact = sigma_x_sq * psd.sigma_h_sq / sigma_n_sq
        return cls(rho_exact, psd.sigma_h_sq, sigma_n_sq, sigma_x_sq, L, psd)

    def with_spacing(self, L):
        return ChannelConfig(self.rho, self.sigma_h_sq, self.sigma_n_sq, self.sigma_x_sq, L, self.psd)


@dataclass(frozen=True)
class RateBound:
    kind: BoundKind
    value: float
    config_echo: ChannelConfig
    unit: str = "bits"

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ArithmeticError(f"{self.kind.value} evaluated to {self.value}")

    def __float__(self):
        return float(self.value)


def _emit(kind, nats, cfg, unit):
    if unit == "bits":
        return RateBound(kind, nats / LN2, cfg, "bits")
    if unit == "nats":
        return RateBound(kind, nats, cfg, "nats")
    raise ValueError(f"unit must be 'bits' or 'nats', got {unit!r}")


def _rect_config(rho, f_d, L=1):
    return ChannelConfig.from_snr(rho, FadingPsd.rectangular(f_d), L)


def pilot_error_variance(cfg):
    """Stationary interpolation error variance of pilot-only LMMSE estimation."""
    s2 = cfg.sigma_h_sq
    q = cfg.rho / (cfg.L * s2)

    def integrand(f):
        s = psd_value(cfg.psd, f)
        return s / (q * s + 1.0)

    return freq_integral(integrand, cfg.psd.breakpoints)


def _pre_log(L):
    return (L - 1) / L


def _sep_terms(cfg):
    se = pilot_error_variance(cfg) / cfg.sigma_h_sq
    rho_eff = cfg.rho * (1.0 - se) / (1.0 + cfg.rho * se)
    return se, max(rho_eff, 0.0)


def sep_lower(cfg, unit="bits"):
    """Lower bound for separate processing with Gaussian data symbols."""
    _, rho_eff = _sep_terms(cfg)
    return _emit(BoundKind.SEP_LOWER, _pre_log(cfg.L) * exp_log_moment(rho_eff), cfg, unit)


def sep_upper(cfg, unit="bits"):
    """Upper bound for separate processing; adds the non-Gaussian effective-noise term."""
    se, rho_eff = _sep_terms(cfg)
    a = cfg.rho * se
    correction = math.log1p(a) - exp_log_moment(a)
    nats = _pre_log(cfg.L) * (exp_log_moment(rho_eff) + correction)
    return _emit(BoundKind.SEP_UPPER, nats, cfg, unit)


def joint_penalty(cfg):
    """int log((rho S/s2 + 1) / (rho S/(L s2) + 1)) df, in nats."""
    s2 = cfg.sigma_h_sq
    rho, L = cfg.rho, cfg.L

    def integrand(f):
        s = psd_value(cfg.psd, f) / s2
        return math.log1p(rho * s) - math.log1p(rho * s / L)

    return freq_integral(integrand, cfg.psd.breakpoints)


def joint_lower(cfg, unit="bits"):
    """Lower bound for joint processing of pilot and data symbols, any spectrum.

    Not clamped: it can go negative when the Doppler spread is large.
    """
    nats = _pre_log(cfg.L) * exp_log_moment(cfg.rho) - joint_penalty(cfg)
    return _emit(BoundKind.JOINT_LOWER, nats, cfg, unit)


def joint_lower_rect(rho, f_d, L, unit="bits"):
    """Closed form of the joint-processing lower bound for a flat Doppler spectrum."""
    cfg = _rect_config(rho, f_d, L)
    b = rho / (2.0 * f_d)
    nats = _pre_log(L) * exp_log_moment(rho) - 2.0 * f_d * (math.log1p(b) - math.log1p(b / L))
    return _emit(BoundKind.JOINT_LOWER, nats, cfg, unit)


def optimal_pilot_spacing(rho, f_d):
    """Return (L_opt, L_cont) for the flat-spectrum joint lower bound.

    L_opt is the Nyquist-limited integer maximizer; L_cont is the unique
    stationary point of the bound seen as a function of a real-valued L.
    """
    if not rho > 0:
        raise ValueError("optimal spacing needs rho > 0")
    L_opt = max_pilot_spacing(f_d)
    c = exp_log_moment(rho)
    factor = c * rho / (rho - c)
    if not factor > 1.0:
        raise ArithmeticError(f"stationary-point factor {factor} is not above 1 at rho={rho}")
    return L_opt, factor / (2.0 * f_d)


def sep_optimal_spacing(psd, rho, sigma_n_sq=1.0):
    """Integer L in [1, L_max] maximizing the separate-processing lower bound.

    Exhaustive search; ties go to the smaller spacing.
    """
    best_L, best = 1, -math.inf
    for L in range(1, max_pilot_spacing(psd.f_d) + 1):
        v = sep_lower(ChannelConfig.from_snr(rho, psd, L, sigma_n_sq), unit="nats").value
        if v > best:
            best_L, best = L, v
    return best_L


def iid_pg_lower(rho, f_d, unit="bits"):
    """Lower bound for i.i.d. Gaussian inputs without pilots (flat spectrum), clamped at 0."""
    cfg = _rect_config(rho, f_d)
    nats = max(exp_log_moment(rho) - 2.0 * f_d * math.log1p(rho / (2.0 * f_d)), 0.0)
    return _emit(BoundKind.IID_PG_LOWER, nats, cfg, unit)


def iid_pg_upper(rho, f_d, unit="bits"):
    cfg = _rect_config(rho, f_d)
    c = exp_log_moment(rho)
    branch = math.log1p(rho) - 2.0 * f_d * exp_log_moment(rho / (2.0 * f_d))
    return _emit(BoundKind.IID_PG_UPPER, min(branch, c), cfg, unit)


def coherent(cfg, unit="bits"):
    return _emit(BoundKind.COHERENT, exp_log_moment(cfg.rho), cfg, unit)
