"""Reported quantities: per-run metric computation, aggregation across
repetitions, and the CSV/JSON emission formats.

Slippage/impact conventions follow the swap-local quote: slippage is the
executed price over the pre-swap spot rate minus one, price impact the post-
swap over pre-swap spot rate minus one.  Divergence loss compares the final
value of the pooled position (fees accrue inside the reserves) with passively
holding the initial deposit, both valued at the final external price.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np


def slippage(ep: float, spe_pre: float) -> float:
    """Executed price relative to the pre-swap spot rate, minus one."""
    if spe_pre <= 0:
        raise ValueError("pre-swap rate must be positive")
    return ep / spe_pre - 1.0


def price_impact(spe_post: float, spe_pre: float) -> float:
    """Post-swap spot rate relative to the pre-swap spot rate, minus one."""
    if spe_pre <= 0:
        raise ValueError("pre-swap rate must be positive")
    return spe_post / spe_pre - 1.0


def divergence_loss(final_pool_value: float, hold_value: float) -> float:
    """Pool-position value over buy-and-hold value, minus one (positive = gain)."""
    if hold_value <= 0:
        raise ValueError("hold value must be positive")
    return final_pool_value / hold_value - 1.0


def deviation_series(pool_rates: np.ndarray, ext_prices: np.ndarray) -> np.ndarray:
    """Relative absolute gap |rate - ext| / ext per sample."""
    pool_rates = np.asarray(pool_rates, dtype=float)
    ext_prices = np.asarray(ext_prices, dtype=float)
    return np.abs(pool_rates - ext_prices) / ext_prices


def moving_average(series, window: int = 30) -> np.ndarray:
    """Trailing mean over ``window`` samples, emitted from index window-1 on."""
    if window < 1:
        raise ValueError("window must be at least 1")
    values = np.asarray(series, dtype=float)
    if window > len(values):
        return np.empty(0)
    kernel = np.ones(window) / window
    return np.convolve(values, kernel, mode="valid")


@dataclass
class LPReturns:
    trading_fees_usdc: float = 0.0
    cam_bids_usdc: float = 0.0

    @property
    def total_usdc(self) -> float:
        return self.trading_fees_usdc + self.cam_bids_usdc


@dataclass
class RunMetrics:
    """Everything reported for one (variant, repetition) simulation run."""

    variant: str
    repetition: int
    deviation_times: np.ndarray = field(default_factory=lambda: np.empty(0))
    deviation_values: np.ndarray = field(default_factory=lambda: np.empty(0))
    slippage_samples: list[float] = field(default_factory=list)
    price_impact_samples: list[float] = field(default_factory=list)
    trading_volume_usdc: float = 0.0
    arb_profit_usdc: float = 0.0
    arb_fees_usdc: float = 0.0
    realized_count: int = 0
    unrealized_count: int = 0
    lp_returns: LPReturns = field(default_factory=LPReturns)
    divergence_loss: float = 0.0

    @property
    def mean_deviation(self) -> float:
        return float(np.mean(self.deviation_values)) if len(self.deviation_values) else 0.0

    @property
    def realized_fraction(self) -> float:
        total = self.realized_count + self.unrealized_count
        return self.realized_count / total if total else 0.0

    def deviation_percentile(self, q: float) -> float:
        return float(np.percentile(self.deviation_values, q)) if len(self.deviation_values) else 0.0

    def slippage_percentile(self, q: float) -> float:
        return float(np.percentile(self.slippage_samples, q)) if self.slippage_samples else 0.0

    def scalar_fields(self) -> dict[str, float]:
        return {
            "mean_deviation": self.mean_deviation,
            "deviation_p80": self.deviation_percentile(80),
            "slippage_p80": self.slippage_percentile(80),
            "mean_slippage": float(np.mean(self.slippage_samples)) if self.slippage_samples else 0.0,
            "mean_price_impact": float(np.mean(self.price_impact_samples)) if self.price_impact_samples else 0.0,
            "trading_volume_usdc": self.trading_volume_usdc,
            "arb_profit_usdc": self.arb_profit_usdc,
            "arb_fees_usdc": self.arb_fees_usdc,
            "realized_count": float(self.realized_count),
            "unrealized_count": float(self.unrealized_count),
            "realized_fraction": self.realized_fraction,
            "lp_returns_trading_fees_usdc": self.lp_returns.trading_fees_usdc,
            "lp_returns_cam_bids_usdc": self.lp_returns.cam_bids_usdc,
            "lp_returns_total_usdc": self.lp_returns.total_usdc,
            "divergence_loss": self.divergence_loss,
        }


@dataclass
class AggregateReport:
    """Per-variant means over repetitions plus pairwise win fractions."""

    repetitions: int
    means: dict[str, dict[str, float]]
    win_fractions: dict[str, float]

    def to_json(self) -> str:
        payload = {
            "repetitions": self.repetitions,
            "means": self.means,
            "win_fractions": self.win_fractions,
        }
        return json.dumps(payload, indent=2, sort_keys=True)


def aggregate(runs_by_variant: dict[str, list[RunMetrics]]) -> AggregateReport:
    """Arithmetic means per variant; win fraction = share of repetitions in
    which the row variant's mean deviation is strictly smaller than the
    column variant's."""
    if not runs_by_variant:
        raise ValueError("no runs to aggregate")
    reps = {len(v) for v in runs_by_variant.values()}
    if len(reps) != 1:
        raise ValueError("variants ran different repetition counts")
    n = reps.pop()
    if n == 0:
        raise ValueError("no repetitions")

    means: dict[str, dict[str, float]] = {}
    for variant, runs in runs_by_variant.items():
        keys = runs[0].scalar_fields().keys()
        means[variant] = {
            k: float(np.mean([r.scalar_fields()[k] for r in runs])) for k in keys
        }

    win_fractions: dict[str, float] = {}
    variants = sorted(runs_by_variant)
    for a in variants:
        for b in variants:
            if a == b:
                continue
            wins = sum(
                1 for ra, rb in zip(runs_by_variant[a], runs_by_variant[b])
                if ra.mean_deviation < rb.mean_deviation
            )
            win_fractions[f"{a}_vs_{b}"] = wins / n
    return AggregateReport(repetitions=n, means=means, win_fractions=win_fractions)


def write_run_metrics_csv(run: RunMetrics, file_path: str | Path) -> None:
    """Per-run scalar metrics as ``metric,value`` rows."""
    with open(file_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "value"])
        for key, value in run.scalar_fields().items():
            writer.writerow([key, repr(value)])


def write_series_csv(times, values, file_path: str | Path) -> None:
    """A time series as ``time_s,value`` rows."""
    with open(file_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time_s", "value"])
        for t, v in zip(times, values):
            writer.writerow([repr(float(t)), repr(float(v))])
