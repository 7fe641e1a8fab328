"""Pool state and swap math for an equal-weight geometric-mean market maker.

At equal weights the conservation function collapses to the familiar
constant product ``reserve_a * reserve_b = C``, so the same math backs both
pool flavours simulated here; they differ only in chain parameters and in
whether the discounted-fee auction slot exists.

Conventions: token A is the volatile asset (ETH), token B the numeraire
(USDC).  A ``buy`` swap sends B in and takes A out; a ``sell`` swap is the
mirrored direction.  Rates are always quoted input-per-output for the swap
at hand, so the canonical B-per-A spot rate is the ``buy``-side quote.

All amounts are 64-bit floats; callers compare with relative tolerances.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

BUY = "buy"    # B in, A out
SELL = "sell"  # A in, B out

MAX_TRADING_FEE = 0.01


class DegeneratePoolError(ValueError):
    """Pool has an empty reserve and cannot quote a price."""


class InsufficientLiquidityError(ValueError):
    """Requested output meets or exceeds the available reserve."""


class StaleSwapError(RuntimeError):
    """A swap result was computed against a different pool state."""


@dataclass(frozen=True)
class Pool:
    """Reserves, weights, fee and outstanding LP tokens of one pool instance."""

    reserve_a: float
    reserve_b: float
    weight_a: float = 0.5
    weight_b: float = 0.5
    trading_fee: float = 0.0
    lptokens_outstanding: float = 0.0

    def __post_init__(self) -> None:
        if self.reserve_a < 0 or self.reserve_b < 0:
            raise ValueError("reserves must be nonnegative")
        if not (0 < self.weight_a < 1 and 0 < self.weight_b < 1):
            raise ValueError("weights must lie in (0, 1)")
        if abs(self.weight_a + self.weight_b - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1")
        if not (0 <= self.trading_fee <= MAX_TRADING_FEE):
            raise ValueError(f"trading fee must lie in [0, {MAX_TRADING_FEE}]")
        if self.lptokens_outstanding < 0:
            raise ValueError("lptokens_outstanding must be nonnegative")

    @property
    def active(self) -> bool:
        return self.reserve_a > 0 and self.reserve_b > 0


@dataclass(frozen=True)
class SwapResult:
    """Pure outcome of a swap quote; nothing is applied until `apply_swap`.

    ``effective_price``, ``spot_before`` and ``spot_after`` are quoted
    input-per-output for the swap's own direction, which is what the
    slippage and price-impact definitions divide.
    """

    side: str
    amount_in: float
    amount_out: float
    effective_price: float
    spot_before: float
    spot_after: float
    fee_paid: float
    fee: float
    # Snapshot of the reserves the quote was computed against, used by
    # apply_swap to reject stale results.
    reserve_a: float
    reserve_b: float


def _fee_factor(fee: float) -> float:
    if not (0 <= fee < 1):
        raise ValueError("fee must lie in [0, 1)")
    return 1.0 - fee


def spot_exchange_rate(pool: Pool, fee_override: float | None = None) -> float:
    """Canonical spot rate in B per A, including the fee factor 1/(1-fee).

    ``fee_override`` substitutes the pool's trading fee, e.g. 0 for the
    discounted-fee auction-slot holder.
    """
    if pool.reserve_a <= 0:
        raise DegeneratePoolError("reserve_a is empty")
    fee = pool.trading_fee if fee_override is None else fee_override
    keep = _fee_factor(fee)
    return (pool.reserve_b / pool.weight_b) / (pool.reserve_a / pool.weight_a) / keep


def quote_rate(pool: Pool, side: str, fee: float) -> float:
    """Direction-local spot rate: input token per output token."""
    if side == BUY:
        if pool.reserve_a <= 0:
            raise DegeneratePoolError("reserve_a is empty")
        return (pool.reserve_b / pool.weight_b) / (pool.reserve_a / pool.weight_a) / _fee_factor(fee)
    if side == SELL:
        if pool.reserve_b <= 0:
            raise DegeneratePoolError("reserve_b is empty")
        return (pool.reserve_a / pool.weight_a) / (pool.reserve_b / pool.weight_b) / _fee_factor(fee)
    raise ValueError(f"unknown swap side {side!r}")


def _oriented(pool: Pool, side: str) -> tuple[float, float, float, float]:
    """Return (reserve_in, reserve_out, weight_in, weight_out) for a side."""
    if side == BUY:
        return pool.reserve_b, pool.reserve_a, pool.weight_b, pool.weight_a
    if side == SELL:
        return pool.reserve_a, pool.reserve_b, pool.weight_a, pool.weight_b
    raise ValueError(f"unknown swap side {side!r}")


def _zero_result(pool: Pool, side: str, fee: float) -> SwapResult:
    rate = quote_rate(pool, side, fee)
    return SwapResult(
        side=side, amount_in=0.0, amount_out=0.0,
        effective_price=rate, spot_before=rate, spot_after=rate,
        fee_paid=0.0, fee=fee,
        reserve_a=pool.reserve_a, reserve_b=pool.reserve_b,
    )


def _result(pool: Pool, side: str, fee: float, amount_in: float, amount_out: float) -> SwapResult:
    spot_before = quote_rate(pool, side, fee)
    after = apply_to_reserves(pool, side, amount_in, amount_out)
    spot_after = quote_rate(after, side, fee)
    return SwapResult(
        side=side, amount_in=amount_in, amount_out=amount_out,
        effective_price=amount_in / amount_out,
        spot_before=spot_before, spot_after=spot_after,
        fee_paid=amount_in * fee, fee=fee,
        reserve_a=pool.reserve_a, reserve_b=pool.reserve_b,
    )


def swap_given_in(pool: Pool, amount_in: float, fee: float, side: str = BUY) -> SwapResult:
    """Quote a swap from an input amount.

    amount_out = R_out * (1 - (R_in / (R_in + in*(1-fee)))**(w_in/w_out))
    """
    if amount_in < 0:
        raise ValueError("amount_in must be nonnegative")
    if not pool.active:
        raise DegeneratePoolError("pool is not active")
    if amount_in == 0:
        return _zero_result(pool, side, fee)
    r_in, r_out, w_in, w_out = _oriented(pool, side)
    kept = amount_in * _fee_factor(fee)
    ratio = r_in / (r_in + kept)
    amount_out = r_out * (1.0 - ratio ** (w_in / w_out))
    return _result(pool, side, fee, amount_in, amount_out)


def swap_given_out(pool: Pool, amount_out: float, fee: float, side: str = BUY) -> SwapResult:
    """Quote a swap from a requested output amount.

    amount_in = R_in * ((R_out / (R_out - out))**(w_out/w_in) - 1) / (1-fee)
    """
    if amount_out < 0:
        raise ValueError("amount_out must be nonnegative")
    if not pool.active:
        raise DegeneratePoolError("pool is not active")
    r_in, r_out, w_in, w_out = _oriented(pool, side)
    if amount_out >= r_out:
        raise InsufficientLiquidityError(
            f"requested output {amount_out} >= reserve {r_out}")
    if amount_out == 0:
        return _zero_result(pool, side, fee)
    grow = r_out / (r_out - amount_out)
    amount_in = r_in * (grow ** (w_out / w_in) - 1.0) / _fee_factor(fee)
    return _result(pool, side, fee, amount_in, amount_out)


def amount_in_for_target_rate(pool: Pool, target_rate: float, fee: float,
                              side: str = BUY) -> float:
    """Input amount that moves the direction-local spot rate up to ``target_rate``.

    For the buy side the target is the canonical B-per-A rate; for the sell
    side it is the mirrored A-per-B rate.  Returns 0 when the target does
    not exceed the current rate (no-op signal).

    With the whole input credited to the reserve, the post-swap rate of an
    equal-weight pool satisfies (1+x)(1+x(1-fee)) = target/current with
    x = input/reserve_in; the positive quadratic root below solves it, and
    at zero fee it reduces to x = sqrt(target/current) - 1.
    """
    if target_rate <= 0:
        raise ValueError("target_rate must be positive")
    if not pool.active:
        raise DegeneratePoolError("pool is not active")
    current = quote_rate(pool, side, fee)
    ratio = target_rate / current
    if ratio <= 1.0:
        return 0.0
    r_in, _, w_in, w_out = _oriented(pool, side)
    keep = _fee_factor(fee)
    if abs(w_in - w_out) < 1e-12:
        b = 2.0 - fee
        x = (-b + math.sqrt(b * b + 4.0 * keep * (ratio - 1.0))) / (2.0 * keep)
        return r_in * x
    return _input_for_rate_bisect(pool, target_rate, fee, side)


def _input_for_rate_bisect(pool: Pool, target_rate: float, fee: float, side: str) -> float:
    """Bisection fallback for unequal weights (rate is monotone in input)."""
    r_in, _, _, _ = _oriented(pool, side)
    lo, hi = 0.0, r_in
    while quote_rate(apply_swap(pool, swap_given_in(pool, hi, fee, side)), side, fee) < target_rate:
        hi *= 2.0
        if hi > r_in * 1e12:
            raise ValueError("target rate unreachable")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        rate = quote_rate(apply_swap(pool, swap_given_in(pool, mid, fee, side)), side, fee)
        if rate < target_rate:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-12 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


def apply_to_reserves(pool: Pool, side: str, amount_in: float, amount_out: float) -> Pool:
    """New pool with the input (fee included) credited and the output debited."""
    if side == BUY:
        return replace(pool,
                       reserve_a=pool.reserve_a - amount_out,
                       reserve_b=pool.reserve_b + amount_in)
    if side == SELL:
        return replace(pool,
                       reserve_a=pool.reserve_a + amount_in,
                       reserve_b=pool.reserve_b - amount_out)
    raise ValueError(f"unknown swap side {side!r}")


def apply_swap(pool: Pool, result: SwapResult) -> Pool:
    """Apply a previously computed swap; rejects results from another state.

    The fee portion of the input stays in the reserves, which is why the
    product of reserves strictly grows on any fee-bearing swap.
    """
    if result.reserve_a != pool.reserve_a or result.reserve_b != pool.reserve_b:
        raise StaleSwapError("swap result was computed against different reserves")
    if result.amount_in == 0.0:
        return pool
    return apply_to_reserves(pool, result.side, result.amount_in, result.amount_out)


def initial_lptokens(reserve_a: float, reserve_b: float) -> float:
    """LP token issuance for the initial deposit: the geometric-mean constant."""
    if reserve_a <= 0 or reserve_b <= 0:
        raise ValueError("both reserves must be positive")
    return math.sqrt(reserve_a) * math.sqrt(reserve_b)


def make_pool(reserve_a: float, reserve_b: float, trading_fee: float) -> Pool:
    """Pool with freshly issued LP tokens for the given deposit."""
    return Pool(
        reserve_a=reserve_a,
        reserve_b=reserve_b,
        trading_fee=trading_fee,
        lptokens_outstanding=initial_lptokens(reserve_a, reserve_b),
    )
