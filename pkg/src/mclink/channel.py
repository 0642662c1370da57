"""Closed-form diffusion channel for a point source and a spherical passive receiver.

A point transmitter releases molecules into an unbounded 3D medium with
diffusion coefficient D (m^2/s).  The expected concentration at distance d
(m) and time t (s) per released molecule is the free-diffusion kernel

    h(t) = (4*pi*D*t)^(-3/2) * exp(-d^2 / (4*D*t))        [1/m^3]

h peaks at t_p = d^2/(6*D); the peak value per molecule is
(3/(2*pi*e))^(3/2) / d^3.  The receiver is a passive sphere of radius r
(observation volume V_R = 4/3*pi*r^3) that counts molecules without
absorbing them.  Within each bit interval the link samples h at t_p, so the
inter-symbol tap for lag j is h(j*T_b + t_p).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple


@dataclass(frozen=True)
class ChannelParams:
    """Physical link geometry and diffusion constants (SI units)."""

    diffusion_coefficient: float  # m^2/s
    distance: float  # m, transmitter to receiver center
    receiver_radius: float  # m
    bit_interval: float  # s

    def __post_init__(self) -> None:
        for name in ("diffusion_coefficient", "distance", "receiver_radius", "bit_interval"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a finite positive number, got {value!r}")
        if self.receiver_radius >= self.distance:
            raise ValueError(
                f"receiver_radius ({self.receiver_radius}) must be smaller than "
                f"distance ({self.distance}): the receiver sphere may not contain the transmitter"
            )
        if self.bit_interval <= self.peak_time:
            raise ValueError(
                f"bit_interval ({self.bit_interval}) must exceed the peak time "
                f"{self.peak_time}: the concentration peak must fall inside one bit interval"
            )

    @property
    def peak_time(self) -> float:
        """Time of maximum concentration, d^2/(6*D), in seconds."""
        return self.distance**2 / (6.0 * self.diffusion_coefficient)

    @property
    def receiver_volume(self) -> float:
        """Spherical observation volume V_R = 4/3*pi*r^3, in m^3."""
        return 4.0 * math.pi * self.receiver_radius**3 / 3.0


@dataclass(frozen=True)
class TapVector:
    """Impulse-response samples at the per-bit sampling instant.

    taps[j] is the concentration per released molecule (1/m^3) observed at
    j*T_b + sample_offset; taps[0] belongs to the current bit, taps[j >= 1]
    are the inter-symbol contributions of earlier bits.
    """

    taps: tuple[float, ...]
    sample_offset: float  # s

    def __post_init__(self) -> None:
        if len(self.taps) < 1:
            raise ValueError("tap vector needs at least the current-bit tap")
        for j, tap in enumerate(self.taps):
            if not (math.isfinite(tap) and tap > 0.0):
                raise ValueError(f"tap {j} must be finite and positive, got {tap!r}")
        for j in range(1, len(self.taps)):
            if self.taps[j] >= self.taps[0]:
                raise ValueError(f"main tap must dominate: taps[{j}] >= taps[0]")
            if j >= 2 and self.taps[j] >= self.taps[j - 1]:
                raise ValueError(f"ISI taps must decrease: taps[{j}] >= taps[{j - 1}]")

    @property
    def main_tap(self) -> float:
        return self.taps[0]

    @property
    def memory_length(self) -> int:
        """Number of modeled ISI lags L."""
        return len(self.taps) - 1


class PeakMetrics(NamedTuple):
    peak_time: float  # s
    peak_concentration: float  # 1/m^3


class Snr(NamedTuple):
    linear: float
    db: float


def impulse_response(params: ChannelParams, t: float) -> float:
    """Concentration per released molecule at time t (1/m^3).

    Evaluates the free-diffusion kernel at the receiver center.  t must be
    strictly positive; the kernel is singular-free but undefined at t <= 0.
    """
    if not (math.isfinite(t) and t > 0.0):
        raise ValueError(f"time must be finite and positive, got {t!r}")
    d = params.diffusion_coefficient
    return (4.0 * math.pi * d * t) ** -1.5 * math.exp(
        -params.distance**2 / (4.0 * d * t)
    )


def peak_metrics(params: ChannelParams, n_m: float) -> PeakMetrics:
    """Peak sampling time and peak concentration for n_m released molecules.

    peak_time = d^2/(6*D) and peak_concentration = (n_m/d^3)*(3/(2*pi*e))^(3/2);
    the identity n_m * impulse_response(params, peak_time) == peak_concentration
    holds to machine precision.
    """
    if n_m < 0:
        raise ValueError(f"molecule count must be non-negative, got {n_m!r}")
    c_max = (n_m / params.distance**3) * (3.0 / (2.0 * math.pi * math.e)) ** 1.5
    return PeakMetrics(peak_time=params.peak_time, peak_concentration=c_max)


def channel_taps(params: ChannelParams, memory_length: int) -> TapVector:
    """Sample the impulse response at j*T_b + t_p for lags j = 0..memory_length."""
    if memory_length < 0 or memory_length != int(memory_length):
        raise ValueError(f"memory_length must be a non-negative integer, got {memory_length!r}")
    t_p = params.peak_time
    taps = tuple(
        impulse_response(params, j * params.bit_interval + t_p)
        for j in range(int(memory_length) + 1)
    )
    return TapVector(taps=taps, sample_offset=t_p)


def snr(params: ChannelParams, n_m: float, sampling_time: float | None = None) -> Snr:
    """Signal-to-noise ratio of the sampled concentration.

    The counting-noise variance equals mean/V_R, so the ratio collapses to
    n_m * V_R * h(sampling_time).  sampling_time defaults to the peak time.
    Returns both the linear ratio and its decibel value 10*log10(linear).
    """
    if n_m <= 0:
        raise ValueError(f"no signal: molecule count must be positive, got {n_m!r}")
    t = params.peak_time if sampling_time is None else sampling_time
    linear = n_m * params.receiver_volume * impulse_response(params, t)
    return Snr(linear=linear, db=10.0 * math.log10(linear))
