"""Analytical OOK threshold detection under inter-symbol interference.

Each received sample is Gaussian: the mean is the tap-weighted sum of the
current and the last L transmitted bits, and the counting-noise variance is
mean/V_R.  The detector compares the sample against a preset concentration
threshold.  Miss and false-alarm probabilities are exact averages over all
2^L equiprobable ISI bit patterns:

    P_M  = 1 - 2^-L * sum_patterns Q((C_thr - mu_1)/sigma_1)
    P_FA =     2^-L * sum_patterns Q((C_thr - mu_0)/sigma_0)
    P_e  = (P_M + P_FA) / 2

P_M is accumulated through the reflection Q(x) = 1 - Q(-x), i.e. as the
mean of Q((mu_1 - C_thr)/sigma_1), which avoids the catastrophic
cancellation of `1 - sum` once misses become rare.

Pattern convention: bit j of the pattern integer (little-endian, j = 0..L-1)
multiplies tap lag j+1.  A pattern with zero variance (all-zero ISI under
H0) is a deterministic sample; its term is the indicator mean >= threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .channel import TapVector

_SQRT2 = math.sqrt(2.0)

# 2^L patterns are enumerated exhaustively; refuse beyond this.
MAX_MEMORY_LENGTH = 24


class ConfigurationError(ValueError):
    """A structurally valid input combination that the model cannot evaluate."""


@dataclass(frozen=True)
class ThresholdSpec:
    """Detection threshold, either absolute (1/m^3) or a fraction of the
    no-ISI signal mean n_m * h(t_p)."""

    mode: str  # "absolute" | "fractional"
    value: float

    def __post_init__(self) -> None:
        if self.mode not in ("absolute", "fractional"):
            raise ValueError(f"threshold mode must be 'absolute' or 'fractional', got {self.mode!r}")
        if not (math.isfinite(self.value) and self.value > 0.0):
            raise ValueError(f"threshold value must be finite and positive, got {self.value!r}")
        if self.mode == "fractional" and self.value >= 1.0:
            raise ValueError(
                f"fractional threshold must stay below 1 (threshold < peak concentration), "
                f"got {self.value!r}"
            )


@dataclass(frozen=True)
class LinkConfig:
    """Transmit/detect configuration: molecule budget, ISI memory, threshold.

    n_m is real-valued so the optimizer can move it continuously; simulation
    interprets it as a molecule count.
    """

    n_m: float
    memory_length: int
    threshold: ThresholdSpec

    def __post_init__(self) -> None:
        if not (math.isfinite(self.n_m) and self.n_m > 0.0):
            raise ValueError(f"n_m must be finite and positive, got {self.n_m!r}")
        if self.memory_length < 0 or self.memory_length != int(self.memory_length):
            raise ValueError(f"memory_length must be a non-negative integer, got {self.memory_length!r}")


@dataclass(frozen=True)
class HypothesisStats:
    """Mean (1/m^3) and variance (1/m^6) of the received concentration for
    one ISI pattern under a fixed current bit."""

    mean: float
    variance: float

    @property
    def degenerate(self) -> bool:
        """True when the sample is deterministic (no molecules in flight)."""
        return self.variance == 0.0

    @property
    def sigma(self) -> float:
        return math.sqrt(self.variance)


@dataclass(frozen=True)
class BerResult:
    p_miss: float
    p_false_alarm: float

    @property
    def p_error(self) -> float:
        """Equal-prior average of miss and false alarm."""
        return 0.5 * (self.p_miss + self.p_false_alarm)


def q_function(x: float) -> float:
    """Tail probability of the standard normal, Q(x) = P(Z > x).

    Computed via the complementary error function for numerical stability in
    the far tail; satisfies Q(x) + Q(-x) == 1.
    """
    if math.isnan(x):
        raise ValueError("q_function is undefined for NaN input")
    return 0.5 * math.erfc(x / _SQRT2)


def pattern_bits(pattern_index: int, memory_length: int) -> tuple[int, ...]:
    """Expand a pattern integer into its L ISI bits (element j -> tap lag j+1)."""
    if not 0 <= pattern_index < (1 << memory_length):
        raise ValueError(
            f"pattern index {pattern_index} out of range for memory length {memory_length}"
        )
    return tuple((pattern_index >> j) & 1 for j in range(memory_length))


def resolve_threshold(spec: ThresholdSpec, n_m: float, main_tap: float) -> float:
    """Concrete threshold concentration (1/m^3) for a given molecule budget.

    Fractional mode scales the no-ISI signal mean n_m * main_tap.  Either
    mode must resolve below the peak concentration, otherwise bit 1 could
    never be detected.
    """
    if spec.mode == "absolute":
        resolved = spec.value
    else:
        resolved = spec.value * n_m * main_tap
    if resolved >= n_m * main_tap:
        raise ConfigurationError(
            f"threshold {resolved:.6g} must stay below the peak concentration "
            f"{n_m * main_tap:.6g} (n_m={n_m:.6g})"
        )
    return resolved


def hypothesis_stats(
    taps: TapVector,
    n_m: float,
    isi_pattern: Sequence[int],
    current_bit: int,
    receiver_volume: float,
) -> HypothesisStats:
    """Gaussian moments of the received sample for one ISI pattern.

    current_bit selects the hypothesis: 1 adds the main-tap term n_m*taps[0],
    0 leaves only the ISI sum.  Variance is mean/V_R (counting noise).
    """
    if len(isi_pattern) != taps.memory_length:
        raise ValueError(
            f"ISI pattern has {len(isi_pattern)} bits, tap vector models "
            f"{taps.memory_length} lags"
        )
    if current_bit not in (0, 1):
        raise ValueError(f"current_bit must be 0 or 1, got {current_bit!r}")
    mean = current_bit * n_m * taps.taps[0]
    for j, bit in enumerate(isi_pattern):
        if bit not in (0, 1):
            raise ValueError(f"ISI pattern bits must be 0 or 1, got {bit!r}")
        mean += bit * n_m * taps.taps[j + 1]
    return HypothesisStats(mean=mean, variance=mean / receiver_volume)


def error_probabilities(taps: TapVector, link: LinkConfig, receiver_volume: float) -> BerResult:
    """Exact P_M / P_FA / P_e by enumeration over all 2^L ISI patterns."""
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

    miss_sum = 0.0
    alarm_sum = 0.0
    for pattern in range(1 << L):
        bits = pattern_bits(pattern, L)
        on = hypothesis_stats(taps, link.n_m, bits, 1, receiver_volume)
        # P(miss | pattern) = P(y < thr) = Q((mu - thr)/sigma); never degenerate
        # under bit 1 because the main tap contributes.
        miss_sum += q_function((on.mean - threshold) / on.sigma)
        off = hypothesis_stats(taps, link.n_m, bits, 0, receiver_volume)
        if off.degenerate:
            alarm_sum += 1.0 if off.mean >= threshold else 0.0
        else:
            alarm_sum += q_function((threshold - off.mean) / off.sigma)
    scale = 1.0 / (1 << L)
    return BerResult(p_miss=miss_sum * scale, p_false_alarm=alarm_sum * scale)
