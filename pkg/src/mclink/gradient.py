"""Analytical derivatives of the error probabilities with respect to the
molecule budget, plus an independent finite-difference verifier.

Every per-pattern term is the chain rule through z = (C_thr - mu)/sigma:

    dQ/dz = -exp(-z^2/2) / sqrt(2*pi)
    dz/dn = (-mu'*sigma - (C_thr - mu)*sigma' + C_thr'*sigma) / sigma^2

with mu' the tap sum of the active bits, sigma' = mu'/(2*sigma*V_R), and
C_thr' = 0 for an absolute threshold or alpha*taps[0] for a fractional one.
Degenerate patterns (zero variance) are deterministic decisions: piecewise
constant in n_m, so they contribute zero gradient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

from .channel import TapVector
from .detection import (
    MAX_MEMORY_LENGTH,
    ConfigurationError,
    LinkConfig,
    hypothesis_stats,
    pattern_bits,
    resolve_threshold,
)

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class StatsGradient:
    """Derivatives of a pattern's mean and standard deviation w.r.t. n_m."""

    d_mean: float  # 1/m^3 per molecule
    d_sigma: float  # 1/m^3 per molecule
    degenerate: bool


class ErrorProbGradients(NamedTuple):
    d_p_miss: float
    d_p_false_alarm: float
    d_p_error: float


def stats_gradients(
    taps: TapVector,
    n_m: float,
    isi_pattern: Sequence[int],
    current_bit: int,
    receiver_volume: float,
) -> StatsGradient:
    """d(mu)/dn and d(sigma)/dn for one ISI pattern.

    mu is linear in n_m, so d_mean is the plain tap sum of the active bits.
    sigma = sqrt(n_m * d_mean / V_R) gives d_sigma = d_mean/(2*sigma*V_R).
    A degenerate pattern returns a flagged zero instead of NaN.
    """
    stats = hypothesis_stats(taps, n_m, isi_pattern, current_bit, receiver_volume)
    d_mean = current_bit * taps.taps[0]
    for j, bit in enumerate(isi_pattern):
        d_mean += bit * taps.taps[j + 1]
    if stats.degenerate:
        return StatsGradient(d_mean=d_mean, d_sigma=0.0, degenerate=True)
    d_sigma = d_mean / (2.0 * stats.sigma * receiver_volume)
    return StatsGradient(d_mean=d_mean, d_sigma=d_sigma, degenerate=False)


def error_prob_gradients(
    taps: TapVector, link: LinkConfig, receiver_volume: float
) -> ErrorProbGradients:
    """dP_M/dn, dP_FA/dn and dP_e/dn at the link's molecule budget."""
    L = link.memory_length
    if L != taps.memory_length:
        raise ValueError(
            f"link memory length {L} does not match tap vector ({taps.memory_length})"
        )
    if L > MAX_MEMORY_LENGTH:
        raise ConfigurationError(
            f"memory length {L} exceeds the enumeration limit {MAX_MEMORY_LENGTH}"
        )
    threshold = resolve_threshold(link.threshold, link.n_m, taps.main_tap)
    if link.threshold.mode == "fractional":
        d_threshold = link.threshold.value * taps.main_tap
    else:
        d_threshold = 0.0

    miss_sum = 0.0
    alarm_sum = 0.0
    for pattern in range(1 << L):
        bits = pattern_bits(pattern, L)
        for current_bit in (1, 0):
            stats = hypothesis_stats(taps, link.n_m, bits, current_bit, receiver_volume)
            if stats.degenerate:
                continue
            grad = stats_gradients(taps, link.n_m, bits, current_bit, receiver_volume)
            sigma = stats.sigma
            z = (threshold - stats.mean) / sigma
            dz = (
                -grad.d_mean * sigma
                - (threshold - stats.mean) * grad.d_sigma
                + d_threshold * sigma
            ) / stats.variance
            dq = -_INV_SQRT_2PI * math.exp(-0.5 * z * z) * dz
            if current_bit == 1:
                miss_sum += dq
            else:
                alarm_sum += dq
    scale = 1.0 / (1 << L)
    d_p_miss = -miss_sum * scale
    d_p_false_alarm = alarm_sum * scale
    return ErrorProbGradients(
        d_p_miss=d_p_miss,
        d_p_false_alarm=d_p_false_alarm,
        d_p_error=0.5 * (d_p_miss + d_p_false_alarm),
    )


def finite_difference_check(
    f: Callable[[float], float],
    analytic: float,
    n_m: float,
    relative_step: float = 1e-6,
) -> float:
    """Relative disagreement between an analytic derivative and a central
    finite difference of f at n_m, with step h = relative_step * n_m.

    Steps outside (1e-8, 1e-2) are rejected: larger steps carry visible
    truncation error in the Gaussian tail, smaller ones drown in round-off.
    """
    if not 1e-8 < relative_step < 1e-2:
        raise ValueError(
            f"relative_step must lie in (1e-8, 1e-2), got {relative_step!r}"
        )
    h = relative_step * n_m
    f_plus = f(n_m + h)
    f_minus = f(n_m - h)
    if not (math.isfinite(f_plus) and math.isfinite(f_minus)):
        raise ValueError(f"non-finite function evaluation near n_m={n_m!r}")
    central = (f_plus - f_minus) / (2.0 * h)
    return abs(analytic - central) / max(abs(analytic), 1e-300)
