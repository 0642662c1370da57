"""Diffusion-based molecular communication link analysis.

Closed-form channel and OOK detection under ISI, analytic BER derivatives,
a weighted molecule-budget/BER tradeoff optimizer, and two independent
simulation engines (Gaussian link Monte Carlo and Brownian particle walker)
for cross-validation.
"""

from .channel import ChannelParams, PeakMetrics, Snr, TapVector, channel_taps, impulse_response, peak_metrics, snr
from .detection import (
    BerResult,
    ConfigurationError,
    HypothesisStats,
    LinkConfig,
    ThresholdSpec,
    error_probabilities,
    hypothesis_stats,
    pattern_bits,
    q_function,
    resolve_threshold,
)
from .gradient import ErrorProbGradients, StatsGradient, error_prob_gradients, finite_difference_check, stats_gradients
from .simulate import (
    BerEstimate,
    MonteCarloConfig,
    ParticleSimConfig,
    SampleCheck,
    brownian_validate,
    simulate_link_ber,
    wilson_interval,
)
from .tradeoff import (
    AnalyticBerModel,
    BalanceEval,
    BalanceWeights,
    NormalizationContext,
    OptimizerConfig,
    TracePoint,
    TradeoffResult,
    balance_value_and_gradient,
    build_normalization,
    grid_search_oracle,
    normalize_series,
    optimize_tradeoff,
)

__all__ = [
    "AnalyticBerModel",
    "BalanceEval",
    "BalanceWeights",
    "BerEstimate",
    "BerResult",
    "ChannelParams",
    "ConfigurationError",
    "ErrorProbGradients",
    "HypothesisStats",
    "LinkConfig",
    "MonteCarloConfig",
    "NormalizationContext",
    "OptimizerConfig",
    "ParticleSimConfig",
    "PeakMetrics",
    "SampleCheck",
    "Snr",
    "StatsGradient",
    "TapVector",
    "ThresholdSpec",
    "TracePoint",
    "TradeoffResult",
    "balance_value_and_gradient",
    "brownian_validate",
    "build_normalization",
    "channel_taps",
    "error_prob_gradients",
    "error_probabilities",
    "finite_difference_check",
    "grid_search_oracle",
    "hypothesis_stats",
    "impulse_response",
    "normalize_series",
    "optimize_tradeoff",
    "pattern_bits",
    "peak_metrics",
    "q_function",
    "resolve_threshold",
    "simulate_link_ber",
    "snr",
    "stats_gradients",
    "wilson_interval",
]

__version__ = "0.1.0"
