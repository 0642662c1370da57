"""Weighted balance between molecule budget and error rate, and its optimizer.

The molecule count and the BER live on wildly different scales, so both are
min-max normalized against extrema frozen from a uniform evaluation grid
built once before optimization.  The balance objective is

    f(n) = w_n * (n - n_min)/(n_max - n_min)
         + w_p * (P_e(n) - pe_min)/(pe_max - pe_min)

minimized by projected gradient descent over n alone (P_e is a deterministic
function of n and is recomputed every step).  An exhaustive grid search
serves as the independent verification oracle.

Descent safeguards: steps are clamped to [n_min, n_max]; landing on the same
bound twice in a row terminates converged at that bound; five consecutive
steps that fail to improve f halve the learning rate and are flagged in the
iteration trace.  The |delta f| < tolerance stop applies only to unclamped
steps, because a projected step says nothing about stationarity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Protocol, Sequence

from .channel import TapVector
from .detection import LinkConfig, ThresholdSpec, error_probabilities
from .gradient import error_prob_gradients


class BerModel(Protocol):
    """Evaluator pairing P_e with its derivative in the molecule budget."""

    def p_error(self, n_m: float) -> float: ...

    def p_error_gradient(self, n_m: float) -> float: ...


@dataclass(frozen=True)
class AnalyticBerModel:
    """Closed-form BER model over a fixed channel, threshold and ISI memory."""

    taps: TapVector
    threshold: ThresholdSpec
    receiver_volume: float

    def _link(self, n_m: float) -> LinkConfig:
        return LinkConfig(n_m=n_m, memory_length=self.taps.memory_length, threshold=self.threshold)

    def p_error(self, n_m: float) -> float:
        return error_probabilities(self.taps, self._link(n_m), self.receiver_volume).p_error

    def p_error_gradient(self, n_m: float) -> float:
        return error_prob_gradients(self.taps, self._link(n_m), self.receiver_volume).d_p_error


@dataclass(frozen=True)
class NormalizationContext:
    """Frozen min-max extrema of the molecule grid and its BER series."""

    n_min: float
    n_max: float
    pe_min: float
    pe_max: float

    def __post_init__(self) -> None:
        if not self.n_min < self.n_max:
            raise ValueError(f"need n_min < n_max, got [{self.n_min}, {self.n_max}]")
        if not self.pe_min < self.pe_max:
            raise ValueError(f"need pe_min < pe_max, got [{self.pe_min}, {self.pe_max}]")


@dataclass(frozen=True)
class BalanceWeights:
    """Non-negative weights for the normalized molecule count and BER,
    renormalized to sum to one."""

    w_n: float
    w_p: float

    def __post_init__(self) -> None:
        if self.w_n < 0 or self.w_p < 0:
            raise ValueError(f"weights must be non-negative, got ({self.w_n}, {self.w_p})")
        total = self.w_n + self.w_p
        if total <= 0:
            raise ValueError("at least one weight must be positive")
        object.__setattr__(self, "w_n", self.w_n / total)
        object.__setattr__(self, "w_p", self.w_p / total)


@dataclass(frozen=True)
class OptimizerConfig:
    learning_rate: float  # molecules per unit gradient
    max_iterations: int
    tolerance: float  # balance-value delta
    initial_n_m: float

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate!r}")
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations!r}")
        if self.tolerance <= 0:
            raise ValueError(f"tolerance must be positive, got {self.tolerance!r}")


class TracePoint(NamedTuple):
    n_m: float
    f: float
    lr_halved: bool


class BalanceEval(NamedTuple):
    value: float
    gradient: float
    clamped: bool  # n_m fell outside the grid bounds and was evaluated at the edge


class GridNormalization(NamedTuple):
    context: NormalizationContext
    n_values: tuple[float, ...]
    p_errors: tuple[float, ...]


@dataclass
class TradeoffResult:
    n_star: float
    n_star_rounded: int
    p_e_star: float
    f_star: float
    iterations: int
    converged: bool
    trace: list[TracePoint]


def normalize_series(values: Sequence[float]) -> tuple[list[float], tuple[float, float]]:
    """Min-max normalize a series to [0, 1]; returns the series and extrema.

    The extrema map to exactly 0 and 1.  A constant series has no usable
    scale and is rejected.
    """
    if len(values) < 2:
        raise ValueError(f"need at least 2 values to normalize, got {len(values)}")
    lo = min(values)
    hi = max(values)
    if lo == hi:
        raise ValueError("degenerate normalization: series is constant")
    span = hi - lo
    return [(v - lo) / span for v in values], (lo, hi)


def build_normalization(
    model: BerModel, n_min: float, n_max: float, grid_points: int = 101
) -> GridNormalization:
    """Evaluate P_e on a uniform molecule grid and freeze the extrema."""
    if grid_points < 2:
        raise ValueError(f"grid needs at least 2 points, got {grid_points}")
    if not n_min < n_max:
        raise ValueError(f"need n_min < n_max, got [{n_min}, {n_max}]")
    step = (n_max - n_min) / (grid_points - 1)
    n_values = tuple(n_min + k * step for k in range(grid_points - 1)) + (n_max,)
    p_errors = tuple(model.p_error(n) for n in n_values)
    context = NormalizationContext(
        n_min=n_min, n_max=n_max, pe_min=min(p_errors), pe_max=max(p_errors)
    )
    return GridNormalization(context=context, n_values=n_values, p_errors=p_errors)


def balance_value_and_gradient(
    n_m: float,
    ctx: NormalizationContext,
    weights: BalanceWeights,
    model: BerModel,
) -> BalanceEval:
    """Balance objective and its derivative at n_m.

    Out-of-bounds arguments are evaluated at the nearest grid edge and
    flagged rather than rejected, so a projected descent step can always be
    scored.
    """
    clamped = n_m < ctx.n_min or n_m > ctx.n_max
    n = min(max(n_m, ctx.n_min), ctx.n_max)
    n_span = ctx.n_max - ctx.n_min
    pe_span = ctx.pe_max - ctx.pe_min
    value = (
        weights.w_n * (n - ctx.n_min) / n_span
        + weights.w_p * (model.p_error(n) - ctx.pe_min) / pe_span
    )
    gradient = weights.w_n / n_span + weights.w_p / pe_span * model.p_error_gradient(n)
    return BalanceEval(value=value, gradient=gradient, clamped=clamped)


def optimize_tradeoff(
    cfg: OptimizerConfig,
    ctx: NormalizationContext,
    weights: BalanceWeights,
    model: BerModel,
) -> TradeoffResult:
    """Projected gradient descent on the balance objective.

    Stops when an unclamped step changes f by less than the tolerance, when
    the iterate sticks to a bound for two consecutive steps, or at the
    iteration cap (converged=False).
    """
    if not ctx.n_min <= cfg.initial_n_m <= ctx.n_max:
        raise ValueError(
            f"initial_n_m {cfg.initial_n_m} outside the grid [{ctx.n_min}, {ctx.n_max}]"
        )
    lr = cfg.learning_rate
    n = cfg.initial_n_m
    current = balance_value_and_gradient(n, ctx, weights, model)
    trace = [TracePoint(n_m=n, f=current.value, lr_halved=False)]
    no_improvement = 0
    converged = False
    iterations = 0

    while iterations < cfg.max_iterations:
        iterations += 1
        if not math.isfinite(current.gradient):
            raise ValueError(
                f"non-finite balance gradient {current.gradient!r} at n_m={n!r}; aborting descent"
            )
        raw = n - lr * current.gradient
        new_n = min(max(raw, ctx.n_min), ctx.n_max)
        was_clamped = new_n != raw
        new = balance_value_and_gradient(new_n, ctx, weights, model)

        halved = False
        if new.value > current.value or (was_clamped and new.value >= current.value):
            no_improvement += 1
            if no_improvement >= 5:
                lr *= 0.5
                no_improvement = 0
                halved = True
        else:
            no_improvement = 0

        previous_n = trace[-1].n_m
        trace.append(TracePoint(n_m=new_n, f=new.value, lr_halved=halved))
        at_bound = new_n == ctx.n_min or new_n == ctx.n_max
        if at_bound and previous_n == new_n:
            n, current = new_n, new
            converged = True
            break
        if not was_clamped and abs(new.value - current.value) < cfg.tolerance:
            n, current = new_n, new
            converged = True
            break
        n, current = new_n, new

    return TradeoffResult(
        n_star=n,
        n_star_rounded=round(n),
        p_e_star=model.p_error(n),
        f_star=current.value,
        iterations=iterations,
        converged=converged,
        trace=trace,
    )


def grid_search_oracle(
    grid: Sequence[float],
    ctx: NormalizationContext,
    weights: BalanceWeights,
    model: BerModel,
) -> tuple[float, float]:
    """Exhaustive balance minimum over a molecule grid; ties take the
    smaller budget.  Verification oracle for the descent."""
    if len(grid) < 11:
        raise ValueError(f"oracle grid needs at least 11 points, got {len(grid)}")
    previous = None
    for n in grid:
        if not ctx.n_min <= n <= ctx.n_max:
            raise ValueError(f"grid point {n} outside [{ctx.n_min}, {ctx.n_max}]")
        if previous is not None and n <= previous:
            raise ValueError("oracle grid must be strictly increasing")
        previous = n
    best_n = grid[0]
    best_f = balance_value_and_gradient(grid[0], ctx, weights, model).value
    for n in grid[1:]:
        f = balance_value_and_gradient(n, ctx, weights, model).value
        if f < best_f:
            best_n, best_f = n, f
    return best_n, best_f
