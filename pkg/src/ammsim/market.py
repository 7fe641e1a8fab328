"""Seeded geometric Brownian motion reference market.

Paths use the exact per-step exponential update, so prices stay strictly
positive and the per-step log returns are i.i.d. normal with mean
(mu - sigma^2/2)*dt and variance sigma^2*dt (drift and volatility are per
day, dt in days).  One named generator family (numpy PCG64) backs every
random draw in the artifact so that a (parameters, seed) pair pins a path
bit for bit.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

RNG_NAME = "numpy-pcg64"
SECONDS_PER_DAY = 86_400.0


class PriceRangeError(ValueError):
    """Queried time lies outside the generated path."""


@dataclass(frozen=True)
class PricePath:
    """Timestamped price series; times in seconds, uniformly spaced."""

    s0: float
    mu: float
    sigma: float
    points_per_day: int
    days: float
    times: np.ndarray
    prices: np.ndarray

    def __post_init__(self) -> None:
        if len(self.times) != len(self.prices):
            raise ValueError("times and prices must have equal length")
        if len(self.prices) == 0:
            raise ValueError("path must contain at least one point")

    @property
    def dt_seconds(self) -> float:
        return SECONDS_PER_DAY / self.points_per_day

    @property
    def end_time(self) -> float:
        return float(self.times[-1])

    def __len__(self) -> int:
        return len(self.prices)


def make_rng(seed) -> np.random.Generator:
    """The artifact-wide generator family (see RNG_NAME)."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def generate_gbm(s0: float, mu: float, sigma: float, n_points: int,
                 dt_days: float, seed) -> PricePath:
    """Generate an ``n_points``-long GBM path starting at ``s0``.

    S_k = S_{k-1} * exp((mu - sigma^2/2)*dt + sigma*sqrt(dt)*Z_k)
    """
    if s0 <= 0:
        raise ValueError("s0 must be positive")
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    if n_points < 1:
        raise ValueError("n_points must be at least 1")
    if dt_days <= 0:
        raise ValueError("dt_days must be positive")
    rng = make_rng(seed)
    drift = (mu - 0.5 * sigma * sigma) * dt_days
    vol = sigma * math.sqrt(dt_days)
    z = rng.standard_normal(n_points - 1)
    prices = np.empty(n_points)
    prices[0] = s0
    prices[1:] = s0 * np.exp(np.cumsum(drift + vol * z))
    dt_s = dt_days * SECONDS_PER_DAY
    times = np.arange(n_points, dtype=float) * dt_s
    return PricePath(
        s0=s0, mu=mu, sigma=sigma,
        points_per_day=int(round(1.0 / dt_days)),
        days=(n_points - 1) * dt_days,
        times=times, prices=prices,
    )


def price_at(path: PricePath, time_seconds: float) -> float:
    """Step-function lookup: price of the latest point at or before the time."""
    if time_seconds < 0 or time_seconds > path.end_time:
        raise PriceRangeError(
            f"time {time_seconds} outside path range [0, {path.end_time}]")
    idx = int(np.searchsorted(path.times, time_seconds, side="right")) - 1
    return float(path.prices[idx])


def generate_history_prefix(s0: float, mu: float, sigma: float,
                            points_per_day: int, history_days: float,
                            seed) -> PricePath:
    """A warm-up path whose final price lands exactly on ``s0``.

    The path is generated forward and then rescaled by s0/final, which
    shifts every price multiplicatively and therefore preserves the log
    return sequence exactly.
    """
    n_points = int(round(history_days * points_per_day)) + 1
    raw = generate_gbm(s0, mu, sigma, n_points, 1.0 / points_per_day, seed)
    scale = s0 / float(raw.prices[-1])
    prices = raw.prices * scale
    prices[-1] = s0
    return PricePath(
        s0=float(prices[0]), mu=mu, sigma=sigma,
        points_per_day=points_per_day, days=history_days,
        times=raw.times, prices=prices,
    )


def write_csv(path: PricePath, file_path: str | Path) -> None:
    """Persist as ``time_s,price`` rows at full decimal precision."""
    with open(file_path, "w", newline="") as fh:
        fh.write(f"# rng: {RNG_NAME}\n")
        writer = csv.writer(fh)
        writer.writerow(["time_s", "price"])
        for t, p in zip(path.times, path.prices):
            writer.writerow([repr(float(t)), repr(float(p))])


def read_csv(file_path: str | Path, *, s0: float | None = None, mu: float = 0.0,
             sigma: float = 0.0) -> PricePath:
    """Load a path written by :func:`write_csv` (comment lines are skipped)."""
    times: list[float] = []
    prices: list[float] = []
    with open(file_path, newline="") as fh:
        rows = (r for r in csv.reader(line for line in fh if not line.startswith("#")))
        header = next(rows)
        if header[:2] != ["time_s", "price"]:
            raise ValueError(f"unexpected market CSV header {header!r}")
        for row in rows:
            times.append(float(row[0]))
            prices.append(float(row[1]))
    if len(times) < 2:
        raise ValueError("market CSV must contain at least two points")
    dt = times[1] - times[0]
    points_per_day = int(round(SECONDS_PER_DAY / dt))
    return PricePath(
        s0=s0 if s0 is not None else prices[0],
        mu=mu, sigma=sigma, points_per_day=points_per_day,
        days=(len(times) - 1) * dt / SECONDS_PER_DAY,
        times=np.asarray(times), prices=np.asarray(prices),
    )
