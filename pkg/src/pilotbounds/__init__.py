"""Rate bounds for pilot-aided transmission over stationary Rayleigh flat fading."""

from .bounds import (
    BoundKind,
    ChannelConfig,
    RateBound,
    coherent,
    iid_pg_lower,
    iid_pg_upper,
    joint_lower,
    joint_lower_rect,
    max_pilot_spacing,
    optimal_pilot_spacing,
    pilot_error_variance,
    sep_lower,
    sep_optimal_spacing,
    sep_upper,
)
from .psd import FadingPsd, PsdKind
from .quadrature import IntegralSpec, coherent_capacity, exp_log_moment, freq_integral

__all__ = [
    "BoundKind", "ChannelConfig", "FadingPsd", "IntegralSpec", "PsdKind", "RateBound",
    "coherent", "coherent_capacity", "exp_log_moment", "freq_integral", "iid_pg_lower",
    "iid_pg_upper", "joint_lower", "joint_lower_rect", "max_pilot_spacing",
    "optimal_pilot_spacing", "pilot_error_variance", "sep_lower", "sep_optimal_spacing",
    "sep_upper",
]
