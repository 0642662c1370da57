"""Independent verification engines for the analytic link model.

Two simulators, deliberately sharing no code with the closed-form path:

* A Gaussian Monte Carlo of the full OOK link: random equiprobable bits,
  one noisy concentration draw per active tap (variance = mean/V_R), sum,
  threshold, count bit errors.  Validates the enumerated P_e.
* A Brownian particle walker: independent 3D random walks with per-axis
  step Normal(0, 2*D*dt), counted inside the passive receiver sphere.
  Validates the diffusion kernel itself.

Determinism contract: results are bit-identical for a fixed seed and
config.  Random draws are generated per fixed-size chunk (bits) or block
(walkers) from streams keyed by (seed, stream, index), and reductions run
in index order, so any parallel partitioning along those units cannot
change the output.  The draw layout per chunk is fixed regardless of bit
content.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .channel import ChannelParams, channel_taps, impulse_response
from .detection import LinkConfig, resolve_threshold

# 95% two-sided standard-normal quantile for the Wilson interval.
_Z95 = 1.959963984540054

# Walkers simulated per RNG block; the unit of parallel partitioning.
_WALKER_BLOCK = 16384

# Sub-stream tags so bit and noise draws never collide.
_STREAM_BITS = 0
_STREAM_NOISE = 1


@dataclass(frozen=True)
class MonteCarloConfig:
    bit_count: int
    seed: int
    chunk_size: int = 65536

    def __post_init__(self) -> None:
        if self.bit_count < 10_000:
            raise ValueError(
                f"bit_count must be >= 1e4 for a meaningful confidence interval, got {self.bit_count}"
            )
        if self.chunk_size < 1:
            raise ValueError(f"chunk_size must be positive, got {self.chunk_size}")


@dataclass(frozen=True)
class ParticleSimConfig:
    molecule_count: int
    time_step: float  # s
    horizon: float  # s
    seed: int

    def __post_init__(self) -> None:
        if self.molecule_count < 10_000:
            raise ValueError(
                f"molecule_count must be >= 1e4, got {self.molecule_count}"
            )
        if self.time_step <= 0 or self.horizon <= 0:
            raise ValueError("time_step and horizon must be positive")
        if self.time_step > self.horizon:
            raise ValueError("time_step must not exceed the horizon")


@dataclass(frozen=True)
class BerEstimate:
    """Monte Carlo BER with its 95% Wilson confidence interval."""

    p_hat: float
    half_width_95: float
    errors_observed: int
    bit_count: int
    ci_low: float
    ci_high: float

    def contains(self, p: float) -> bool:
        return self.ci_low <= p <= self.ci_high


class SampleCheck(NamedTuple):
    """One particle-simulation observation against the closed-form kernel."""

    time: float  # realized sample time (snapped to the step grid), s
    observed_count: float
    expected_count: float
    relative_deviation: float


def wilson_interval(errors: int, trials: int, z: float = _Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials < 1:
        raise ValueError("trials must be positive")
    if not 0 <= errors <= trials:
        raise ValueError(f"errors {errors} outside [0, {trials}]")
    p = errors / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (p + z2 / (2.0 * trials)) / denom
    half = (z / denom) * math.sqrt(p * (1.0 - p) / trials + z2 / (4.0 * trials * trials))
    return center - half, center + half


def simulate_link_ber(
    params: ChannelParams, link: LinkConfig, mc: MonteCarloConfig
) -> BerEstimate:
    """Monte Carlo bit error rate of the OOK link.

    Per bit k the observation is the sum over lags j of an independent
    Gaussian with mean b_{k-j}*n_m*taps[j] and variance mean/V_R (exactly
    zero when the bit is 0).  Negative sums clamp to zero before the
    threshold comparison; bits before the start of transmission are zero.
    """
    taps_vec = channel_taps(params, link.memory_length)
    taps = np.asarray(taps_vec.taps)
    n_taps = taps.size
    volume = params.receiver_volume
    threshold = resolve_threshold(link.threshold, link.n_m, taps_vec.main_tap)

    bits_rng = np.random.default_rng([mc.seed, _STREAM_BITS])
    bits = bits_rng.integers(0, 2, size=mc.bit_count, dtype=np.uint8)
    # Leading zeros stand in for the empty channel before the first bit.
    padded = np.concatenate([np.zeros(n_taps - 1, dtype=np.uint8), bits])

    errors = 0
    n_chunks = (mc.bit_count + mc.chunk_size - 1) // mc.chunk_size
    for chunk in range(n_chunks):
        start = chunk * mc.chunk_size
        stop = min(start + mc.chunk_size, mc.bit_count)
        length = stop - start
        noise_rng = np.random.default_rng([mc.seed, _STREAM_NOISE, chunk])
        # Fixed draw layout: one standard normal per (bit, lag) even for
        # inactive taps, so the stream is independent of bit content.
        z = noise_rng.standard_normal((length, n_taps))
        y = np.zeros(length)
        for j in range(n_taps):
            active = padded[n_taps - 1 + start - j : n_taps - 1 + stop - j].astype(np.float64)
            mean = active * (link.n_m * taps[j])
            y += mean + np.sqrt(mean / volume) * z[:, j]
        np.maximum(y, 0.0, out=y)  # concentrations are physically non-negative
        decoded = y >= threshold
        errors += int(np.sum(decoded != bits[start:stop].astype(bool)))

    p_hat = errors / mc.bit_count
    ci_low, ci_high = wilson_interval(errors, mc.bit_count)
    return BerEstimate(
        p_hat=p_hat,
        half_width_95=0.5 * (ci_high - ci_low),
        errors_observed=errors,
        bit_count=mc.bit_count,
        ci_low=ci_low,
        ci_high=ci_high,
    )


def brownian_validate(
    params: ChannelParams, sim: ParticleSimConfig, sample_times: Sequence[float]
) -> list[SampleCheck]:
    """Random-walk validation of the diffusion kernel.

    Walkers start at the origin and take independent Gaussian steps; at each
    sample time the number inside the receiver sphere (centered at distance
    d, radius r) is compared with molecule_count * h(t) * V_R.  Walkers are
    only counted, never removed.  Sample times snap to the nearest step of
    the time grid; the realized times are reported.
    """
    peak_time = params.peak_time
    if sim.time_step > peak_time / 50.0:
        raise ValueError(
            f"time_step {sim.time_step} too coarse: must be <= peak_time/50 = {peak_time / 50.0:.3e}"
        )
    if not sample_times:
        raise ValueError("need at least one sample time")
    for t in sample_times:
        if not 0.0 < t <= sim.horizon:
            raise ValueError(f"sample time {t} outside (0, horizon={sim.horizon}]")

    steps = [max(1, round(t / sim.time_step)) for t in sample_times]
    step_to_slot: dict[int, list[int]] = {}
    for slot, step in enumerate(steps):
        step_to_slot.setdefault(step, []).append(slot)
    max_step = max(steps)

    step_std = math.sqrt(2.0 * params.diffusion_coefficient * sim.time_step)
    center = params.distance
    radius_sq = params.receiver_radius**2
    counts = np.zeros(len(steps), dtype=np.int64)

    n_blocks = (sim.molecule_count + _WALKER_BLOCK - 1) // _WALKER_BLOCK
    for block in range(n_blocks):
        walkers = min(_WALKER_BLOCK, sim.molecule_count - block * _WALKER_BLOCK)
        rng = np.random.default_rng([sim.seed, block])
        pos = np.zeros((walkers, 3))
        for step in range(1, max_step + 1):
            pos += rng.standard_normal((walkers, 3)) * step_std
            slots = step_to_slot.get(step)
            if slots is None:
                continue
            dx = pos[:, 0] - center
            inside = int(np.sum(dx * dx + pos[:, 1] ** 2 + pos[:, 2] ** 2 <= radius_sq))
            for slot in slots:
                counts[slot] += inside

    volume = params.receiver_volume
    results = []
    for slot, step in enumerate(steps):
        t = step * sim.time_step
        expected = sim.molecule_count * impulse_response(params, t) * volume
        observed = float(counts[slot])
        results.append(
            SampleCheck(
                time=t,
                observed_count=observed,
                expected_count=expected,
                relative_deviation=(observed - expected) / expected,
            )
        )
    return results
