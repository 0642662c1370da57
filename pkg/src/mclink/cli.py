"""Command-line front end: config loading, CSV sweeps, optimization, validation.

Subcommands
    sweep     --kind {snr, ber, ber-no-isi, balance}   write one CSV
    optimize                                            descend and write trace CSV
    validate  --kind {gradient, montecarlo, channel}    pass/fail report

Configs are flat `key = value` text files (SI base units throughout, `#`
comments allowed).  Geometry and timing keys default to the reference
parameter set (diffusion_coefficient 1e-9 m^2/s, distance 10 um, receiver
radius 4 um, bit interval 1 s, time step 100 us, memory length 4); the
threshold and the balance weights carry no defaults and must be explicit.
Unknown keys are rejected.

CSV numbers are written in scientific notation with 17 significant digits,
so files round-trip exactly and identical config + seed reproduces
byte-identical output.  Exit codes: 0 success, 1 config/usage error,
2 optimizer non-convergence, 3 validation failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from .channel import ChannelParams, channel_taps, snr
from .detection import ConfigurationError, LinkConfig, ThresholdSpec, error_probabilities
from .gradient import error_prob_gradients, finite_difference_check
from .simulate import MonteCarloConfig, ParticleSimConfig, brownian_validate, simulate_link_ber
from .tradeoff import (
    AnalyticBerModel,
    BalanceWeights,
    OptimizerConfig,
    build_normalization,
    grid_search_oracle,
    normalize_series,
    optimize_tradeoff,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NOT_CONVERGED = 2
EXIT_VALIDATION = 3

SWEEP_KINDS = ("snr", "ber", "ber-no-isi", "balance")
VALIDATE_KINDS = ("gradient", "montecarlo", "channel")

# Randomized gradient-validation menu: budgets within the configured grid,
# fractional thresholds and ISI memories drawn from fixed sets.
_GRADIENT_ALPHAS = (0.3, 0.5, 0.7)
_GRADIENT_MEMORIES = (0, 2, 4)
_GRADIENT_TRIALS = 20
_GRADIENT_TOLERANCE = 1e-6
_GRADIENT_FD_STEP = 1e-6

# Particle-validation sample grid in fractions of the peak time.  Boundary
# fractions snap toward the peak so quantization cannot push a sample out of
# the +-20% acceptance band.
_CHANNEL_SAMPLE_FRACTIONS = (
    0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.4, 1.6, 1.8, 2.0, 2.2, 2.4,
)
_CHANNEL_PEAK_TOLERANCE = 0.15
_CHANNEL_PEAK_TIME_TOLERANCE = 0.20


class ConfigFileError(ValueError):
    """Malformed, incomplete or inconsistent run configuration."""


@dataclass(frozen=True)
class RunConfig:
    channel: ChannelParams
    memory_length: int
    threshold: ThresholdSpec
    weights: BalanceWeights
    weight_pairs: tuple[tuple[float, float], ...]
    n_m: float
    nm_min: float
    nm_max: float
    grid_points: int
    learning_rate: float
    max_iterations: int
    tolerance: float
    initial_n_m: float
    seed: int
    bit_count: int
    chunk_size: int
    molecule_count: int
    delta_t: float
    horizon: float
    distances: tuple[float, ...]
    output_path: str | None

    def with_seed(self, seed: int) -> "RunConfig":
        return dataclasses.replace(self, seed=seed)


_FLOAT_KEYS = {
    "diffusion_coefficient": 1e-9,
    "distance": 1e-5,
    "receiver_radius": 4e-6,
    "bit_interval": 1.0,
    "delta_t": 1e-4,
    "threshold_value": None,
    "weight_n": None,
    "weight_p": None,
    "nm_min": 1e3,
    "nm_max": 1e5,
    "n_m": 1e4,
    "learning_rate": 1e8,
    "tolerance": 1e-10,
    "initial_n_m": None,  # defaults to nm_min
    "horizon": 0.05,
}
_INT_KEYS = {
    "memory_length": 4,
    "grid_points": 101,
    "max_iterations": 1000,
    "seed": 1,
    "bit_count": 1_000_000,
    "chunk_size": 65536,
    "molecule_count": 100_000,
}
_STR_KEYS = {
    "threshold_mode": None,
    "output_path": "",
}
_LIST_KEYS = ("distances", "weight_pairs")
_REQUIRED_KEYS = ("threshold_mode", "threshold_value", "weight_n", "weight_p")


def _parse_int(key: str, text: str) -> int:
    try:
        value = float(text)
    except ValueError:
        raise ConfigFileError(f"key '{key}': expected an integer, got {text!r}") from None
    if not value.is_integer():
        raise ConfigFileError(f"key '{key}': expected an integer, got {text!r}")
    return int(value)


def _parse_float(key: str, text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ConfigFileError(f"key '{key}': expected a number, got {text!r}") from None


def load_config(path: str) -> RunConfig:
    """Parse and fully validate a run configuration file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigFileError(f"cannot read config {path!r}: {exc}") from exc

    raw: dict[str, str] = {}
    for lineno, line in enumerate(lines, start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigFileError(f"{path}:{lineno}: expected 'key = value', got {line.rstrip()!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _FLOAT_KEYS and key not in _INT_KEYS and key not in _STR_KEYS and key not in _LIST_KEYS:
            raise ConfigFileError(f"{path}:{lineno}: unknown key '{key}'")
        if key in raw:
            raise ConfigFileError(f"{path}:{lineno}: duplicate key '{key}'")
        if not value:
            raise ConfigFileError(f"{path}:{lineno}: key '{key}' has no value")
        raw[key] = value

    for key in _REQUIRED_KEYS:
        if key not in raw:
            raise ConfigFileError(f"{path}: missing required key '{key}'")

    floats = {k: (_parse_float(k, raw[k]) if k in raw else default) for k, default in _FLOAT_KEYS.items()}
    ints = {k: (_parse_int(k, raw[k]) if k in raw else default) for k, default in _INT_KEYS.items()}

    try:
        channel = ChannelParams(
            diffusion_coefficient=floats["diffusion_coefficient"],
            distance=floats["distance"],
            receiver_radius=floats["receiver_radius"],
            bit_interval=floats["bit_interval"],
        )
        threshold = ThresholdSpec(mode=raw["threshold_mode"], value=floats["threshold_value"])
        weights = BalanceWeights(w_n=floats["weight_n"], w_p=floats["weight_p"])
    except ValueError as exc:
        raise ConfigFileError(f"{path}: {exc}") from exc

    if raw.get("weight_pairs"):
        pairs = []
        for item in raw["weight_pairs"].split(","):
            head, sep, tail = item.partition(":")
            if not sep:
                raise ConfigFileError(
                    f"{path}: key 'weight_pairs': expected 'w_n:w_p' entries, got {item.strip()!r}"
                )
            pairs.append((_parse_float("weight_pairs", head.strip()), _parse_float("weight_pairs", tail.strip())))
        weight_pairs = tuple(pairs)
    else:
        weight_pairs = ((floats["weight_n"], floats["weight_p"]),)

    if raw.get("distances"):
        distances = tuple(_parse_float("distances", item.strip()) for item in raw["distances"].split(","))
    else:
        distances = (floats["distance"],)

    nm_min, nm_max = floats["nm_min"], floats["nm_max"]
    if not 0 < nm_min < nm_max:
        raise ConfigFileError(f"{path}: need 0 < nm_min < nm_max, got [{nm_min}, {nm_max}]")
    if ints["grid_points"] < 2:
        raise ConfigFileError(f"{path}: key 'grid_points' must be >= 2, got {ints['grid_points']}")
    initial = floats["initial_n_m"] if floats["initial_n_m"] is not None else nm_min
    if not nm_min <= initial <= nm_max:
        raise ConfigFileError(
            f"{path}: key 'initial_n_m' must lie in [nm_min, nm_max], got {initial}"
        )
    if floats["n_m"] <= 0:
        raise ConfigFileError(f"{path}: key 'n_m' must be positive, got {floats['n_m']}")
    if ints["memory_length"] < 0:
        raise ConfigFileError(f"{path}: key 'memory_length' must be >= 0")
    if ints["seed"] < 0:
        raise ConfigFileError(f"{path}: key 'seed' must be a non-negative integer")
    try:
        OptimizerConfig(
            learning_rate=floats["learning_rate"],
            max_iterations=ints["max_iterations"],
            tolerance=floats["tolerance"],
            initial_n_m=initial,
        )
        MonteCarloConfig(bit_count=ints["bit_count"], seed=ints["seed"], chunk_size=ints["chunk_size"])
        ParticleSimConfig(
            molecule_count=ints["molecule_count"],
            time_step=floats["delta_t"],
            horizon=floats["horizon"],
            seed=ints["seed"],
        )
        for w_n, w_p in weight_pairs:
            BalanceWeights(w_n=w_n, w_p=w_p)
        for d in distances:
            ChannelParams(
                diffusion_coefficient=floats["diffusion_coefficient"],
                distance=d,
                receiver_radius=floats["receiver_radius"],
                bit_interval=floats["bit_interval"],
            )
    except ValueError as exc:
        raise ConfigFileError(f"{path}: {exc}") from exc

    return RunConfig(
        channel=channel,
        memory_length=ints["memory_length"],
        threshold=threshold,
        weights=weights,
        weight_pairs=weight_pairs,
        n_m=floats["n_m"],
        nm_min=nm_min,
        nm_max=nm_max,
        grid_points=ints["grid_points"],
        learning_rate=floats["learning_rate"],
        max_iterations=ints["max_iterations"],
        tolerance=floats["tolerance"],
        initial_n_m=initial,
        seed=ints["seed"],
        bit_count=ints["bit_count"],
        chunk_size=ints["chunk_size"],
        molecule_count=ints["molecule_count"],
        delta_t=floats["delta_t"],
        horizon=floats["horizon"],
        distances=distances,
        output_path=raw.get("output_path"),
    )


def _fmt(x: float) -> str:
    """17 significant digits: lossless float64 round trip."""
    return f"{x:.16e}"


def _write_csv(path: str, header: list[str], rows: list[list[str]]) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(row) + "\n")
    except BaseException:
        # Never leave a partial file behind.
        try:
            os.remove(path)
        except OSError:
            pass
        raise


def _molecule_grid(cfg: RunConfig) -> list[float]:
    step = (cfg.nm_max - cfg.nm_min) / (cfg.grid_points - 1)
    return [cfg.nm_min + k * step for k in range(cfg.grid_points - 1)] + [cfg.nm_max]


def _model(cfg: RunConfig, memory_length: int | None = None) -> AnalyticBerModel:
    L = cfg.memory_length if memory_length is None else memory_length
    return AnalyticBerModel(
        taps=channel_taps(cfg.channel, L),
        threshold=cfg.threshold,
        receiver_volume=cfg.channel.receiver_volume,
    )


def run_sweep(kind: str, cfg: RunConfig, out_path: str) -> None:
    """Evaluate one sweep and write its CSV (rows in grid order)."""
    grid = _molecule_grid(cfg)
    if kind == "snr":
        header = ["n_m", "snr_linear", "snr_db"]
        rows = []
        for d in cfg.distances:
            params = ChannelParams(
                diffusion_coefficient=cfg.channel.diffusion_coefficient,
                distance=d,
                receiver_radius=cfg.channel.receiver_radius,
                bit_interval=cfg.channel.bit_interval,
            )
            for n in grid:
                result = snr(params, n)
                rows.append([_fmt(n), _fmt(result.linear), _fmt(result.db)])
    elif kind in ("ber", "ber-no-isi"):
        L = 0 if kind == "ber-no-isi" else cfg.memory_length
        model = _model(cfg, memory_length=L)
        volume = cfg.channel.receiver_volume
        header = ["n_m", "p_miss", "p_false_alarm", "p_error"]
        rows = []
        for n in grid:
            link = LinkConfig(n_m=n, memory_length=L, threshold=cfg.threshold)
            ber = error_probabilities(model.taps, link, volume)
            rows.append([_fmt(n), _fmt(ber.p_miss), _fmt(ber.p_false_alarm), _fmt(ber.p_error)])
    elif kind == "balance":
        model = _model(cfg)
        norm = build_normalization(model, cfg.nm_min, cfg.nm_max, cfg.grid_points)
        n_hat, _ = normalize_series(list(norm.n_values))
        p_hat, _ = normalize_series(list(norm.p_errors))
        header = ["n_m", "p_error", "n_hat", "p_hat", "f"]
        rows = []
        for w_n, w_p in cfg.weight_pairs:
            w = BalanceWeights(w_n=w_n, w_p=w_p)
            for n, pe, nh, ph in zip(norm.n_values, norm.p_errors, n_hat, p_hat):
                rows.append([_fmt(n), _fmt(pe), _fmt(nh), _fmt(ph), _fmt(w.w_n * nh + w.w_p * ph)])
    else:
        raise ConfigFileError(f"unknown sweep kind {kind!r}")
    _write_csv(out_path, header, rows)


def run_optimize(cfg: RunConfig, out_path: str) -> int:
    """Descend the balance objective, print the report, write the trace CSV."""
    model = _model(cfg)
    norm = build_normalization(model, cfg.nm_min, cfg.nm_max, cfg.grid_points)
    optimizer = OptimizerConfig(
        learning_rate=cfg.learning_rate,
        max_iterations=cfg.max_iterations,
        tolerance=cfg.tolerance,
        initial_n_m=cfg.initial_n_m,
    )
    result = optimize_tradeoff(optimizer, norm.context, cfg.weights, model)

    header = ["iteration", "n_m", "f", "lr_halved"]
    rows = [
        [str(i), _fmt(point.n_m), _fmt(point.f), str(int(point.lr_halved))]
        for i, point in enumerate(result.trace)
    ]
    _write_csv(out_path, header, rows)

    oracle_n, _ = grid_search_oracle(_molecule_grid(cfg), norm.context, cfg.weights, model)
    print(f"n_star: {_fmt(result.n_star)} (rounded: {result.n_star_rounded})")
    print(f"p_error at n_star: {_fmt(result.p_e_star)}")
    print(f"balance value: {_fmt(result.f_star)}")
    print(f"iterations: {result.iterations}")
    print(f"converged: {str(result.converged).lower()}")
    print(f"grid-oracle n_star: {_fmt(oracle_n)}")
    print(f"trace: {out_path}")
    return EXIT_OK if result.converged else EXIT_NOT_CONVERGED


def _validate_gradient(cfg: RunConfig) -> bool:
    rng = np.random.default_rng(cfg.seed)
    worst = 0.0
    worst_label = ""
    volume = cfg.channel.receiver_volume
    for _ in range(_GRADIENT_TRIALS):
        n = float(rng.uniform(cfg.nm_min, cfg.nm_max))
        alpha = float(rng.choice(_GRADIENT_ALPHAS))
        memory = int(rng.choice(_GRADIENT_MEMORIES))
        taps = channel_taps(cfg.channel, memory)
        spec = ThresholdSpec(mode="fractional", value=alpha)
        link = LinkConfig(n_m=n, memory_length=memory, threshold=spec)
        analytic = error_prob_gradients(taps, link, volume).d_p_error

        def p_e(x: float) -> float:
            probe = LinkConfig(n_m=x, memory_length=memory, threshold=spec)
            return error_probabilities(taps, probe, volume).p_error

        rel = finite_difference_check(p_e, analytic, n, relative_step=_GRADIENT_FD_STEP)
        if rel > worst:
            worst = rel
            worst_label = f"n_m={n:.4g}, alpha={alpha}, L={memory}"
    passed = worst < _GRADIENT_TOLERANCE
    print(f"gradient: {_GRADIENT_TRIALS} random configs, max relative error {worst:.3e} ({worst_label})")
    print(f"gradient: {'PASS' if passed else 'FAIL'} (tolerance {_GRADIENT_TOLERANCE:.0e})")
    return passed


def _validate_montecarlo(cfg: RunConfig) -> bool:
    link = LinkConfig(n_m=cfg.n_m, memory_length=cfg.memory_length, threshold=cfg.threshold)
    taps = channel_taps(cfg.channel, cfg.memory_length)
    analytic = error_probabilities(taps, link, cfg.channel.receiver_volume).p_error
    mc = MonteCarloConfig(bit_count=cfg.bit_count, seed=cfg.seed, chunk_size=cfg.chunk_size)
    estimate = simulate_link_ber(cfg.channel, link, mc)
    passed = estimate.contains(analytic)
    print(
        f"montecarlo: analytic p_error {analytic:.6e}, simulated {estimate.p_hat:.6e} "
        f"({estimate.errors_observed} errors in {estimate.bit_count} bits)"
    )
    print(f"montecarlo: 95% Wilson CI [{estimate.ci_low:.6e}, {estimate.ci_high:.6e}]")
    print(f"montecarlo: {'PASS' if passed else 'FAIL'} (analytic inside CI)")
    return passed


def _channel_sample_times(cfg: RunConfig) -> list[float]:
    peak = cfg.channel.peak_time
    times = []
    for frac in _CHANNEL_SAMPLE_FRACTIONS:
        exact = frac * peak / cfg.delta_t
        if frac < 1.0:
            step = max(1, math.ceil(exact))
        elif frac > 1.0:
            step = max(1, math.floor(exact))
        else:
            step = max(1, round(exact))
        times.append(step * cfg.delta_t)
    return times


def _validate_channel(cfg: RunConfig) -> bool:
    sim = ParticleSimConfig(
        molecule_count=cfg.molecule_count,
        time_step=cfg.delta_t,
        horizon=cfg.horizon,
        seed=cfg.seed,
    )
    times = _channel_sample_times(cfg)
    if max(times) > cfg.horizon:
        raise ConfigFileError(
            f"key 'horizon' too small for the sample grid: need >= {max(times):.4g}"
        )
    checks = brownian_validate(cfg.channel, sim, times)
    peak = cfg.channel.peak_time
    for check in checks:
        print(
            f"channel: t={check.time:.4e} observed={check.observed_count:.0f} "
            f"expected={check.expected_count:.1f} deviation={check.relative_deviation:+.2%}"
        )
    peak_check = min(checks, key=lambda c: abs(c.time - peak))
    peak_ok = abs(peak_check.relative_deviation) < _CHANNEL_PEAK_TOLERANCE
    argmax = max(checks, key=lambda c: c.observed_count)
    time_ok = abs(argmax.time - peak) <= _CHANNEL_PEAK_TIME_TOLERANCE * peak
    print(
        f"channel: peak-sample deviation {peak_check.relative_deviation:+.2%} "
        f"({'PASS' if peak_ok else 'FAIL'}, limit {_CHANNEL_PEAK_TOLERANCE:.0%})"
    )
    print(
        f"channel: empirical peak at t={argmax.time:.4e} vs t_p={peak:.4e} "
        f"({'PASS' if time_ok else 'FAIL'}, limit {_CHANNEL_PEAK_TIME_TOLERANCE:.0%})"
    )
    return peak_ok and time_ok


def run_validate(kind: str, cfg: RunConfig) -> int:
    if kind == "gradient":
        passed = _validate_gradient(cfg)
    elif kind == "montecarlo":
        passed = _validate_montecarlo(cfg)
    elif kind == "channel":
        passed = _validate_channel(cfg)
    else:
        raise ConfigFileError(f"unknown validation kind {kind!r}")
    return EXIT_OK if passed else EXIT_VALIDATION


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mclink",
        description="Diffusion molecular-communication link: sweeps, tradeoff optimizer, validation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("sweep", help="evaluate a parameter sweep and write CSV")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--kind", required=True, choices=SWEEP_KINDS)
    sweep.add_argument("--out", default=None)
    sweep.add_argument("--seed", type=int, default=None)

    opt = sub.add_parser("optimize", help="find the tradeoff molecule budget")
    opt.add_argument("--config", required=True)
    opt.add_argument("--out", default=None)
    opt.add_argument("--seed", type=int, default=None)

    val = sub.add_parser("validate", help="cross-check analytics against independent oracles")
    val.add_argument("--config", required=True)
    val.add_argument("--kind", required=True, choices=VALIDATE_KINDS)
    val.add_argument("--seed", type=int, default=None)

    return parser


def _resolve_out(args, cfg: RunConfig) -> str:
    out = args.out or cfg.output_path
    if not out:
        raise ConfigFileError("no output path: pass --out or set 'output_path' in the config")
    return out


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK

    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigFileError("--seed must be non-negative")
            cfg = cfg.with_seed(args.seed)
        if args.command == "sweep":
            run_sweep(args.kind, cfg, _resolve_out(args, cfg))
            return EXIT_OK
        if args.command == "optimize":
            return run_optimize(cfg, _resolve_out(args, cfg))
        return run_validate(args.kind, cfg)
    except (ConfigFileError, ConfigurationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
