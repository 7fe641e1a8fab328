"""Behavioral policies: random exchange users, price-balancing arbitrageurs,
and the two auction-slot bidding strategies.

Exchange users trade on herd behavior: an 80% chance to act, mimicking the
previous user's direction with probability 0.6, with order sizes uniform on
[0.01, 2] ETH.

Arbitrageurs compare the pool rate with the external market, size the trade
that realigns them, value the proceeds at the external price assuming
immediate resale, and submit only when the profit percentage clears their
safe margin.

Slot-bidding strategy A caps bids at an exponentially smoothed estimate of
daily profits and keeps outbidding until the floor price exceeds that cap;
strategy B takes the slot at the floor price whenever it is empty and then
sits on it for the full day.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import amm
from .amm import Pool
from .cam import AuctionSlot, min_slot_price, slot_price


@dataclass
class ExchangeUserState:
    """Herd-following random trader; one state drives the whole user stream."""

    last_action: str | None = None
    trade_probability: float = 0.8
    mimic_probability: float = 0.6
    order_min: float = 0.01
    order_max: float = 2.0


@dataclass(frozen=True)
class UserOrder:
    direction: str   # "buy" or "sell" of the volatile asset
    size: float      # volatile-asset units


def exchange_user_step(state: ExchangeUserState, rng: np.random.Generator) -> UserOrder | None:
    """One user decision; updates ``state.last_action`` when a trade happens."""
    if rng.random() >= state.trade_probability:
        return None
    if state.last_action is None:
        direction = "buy" if rng.random() < 0.5 else "sell"
    elif rng.random() < state.mimic_probability:
        direction = state.last_action
    else:
        direction = "sell" if state.last_action == "buy" else "buy"
    state.last_action = direction
    size = rng.uniform(state.order_min, state.order_max)
    return UserOrder(direction=direction, size=size)


@dataclass(frozen=True)
class TradePlan:
    """A sized arbitrage trade that realigns the pool with the external market."""

    side: str            # amm.BUY (pool rate below external) or amm.SELL
    amount_in: float
    expected_out: float
    quoted_rate: float   # direction-local spot rate at decision time
    profit: float        # USDC, after network fee, at the external price
    profit_percent: float


def find_arbitrage(pool: Pool, fee: float, ext_price: float, *,
                   network_fee: float = 0.0,
                   safe_profit_margin: float = 0.015) -> TradePlan | None:
    """Arbitrage check: trade toward the external price if it pays enough.

    Sizes the input that moves the pool's spot rate onto ``ext_price``,
    prices the output by immediate external resale, and accepts the plan
    only when profit/input exceeds the safe margin.  Absence of an
    opportunity returns None.
    """
    if ext_price <= 0:
        raise ValueError("ext_price must be positive")
    spe = amm.spot_exchange_rate(pool, fee_override=fee)
    if ext_price == spe:
        return None
    if ext_price > spe:
        side = amm.BUY
        amount_in = amm.amount_in_for_target_rate(pool, ext_price, fee, side)
    else:
        side = amm.SELL
        # Mirrored target: the sell-side rate is A per B.
        amount_in = amm.amount_in_for_target_rate(pool, 1.0 / ext_price, fee, side)
    if amount_in <= 0:
        return None
    result = amm.swap_given_in(pool, amount_in, fee, side)
    if side == amm.BUY:
        cost = amount_in
        proceeds = result.amount_out * ext_price
    else:
        cost = amount_in * ext_price
        proceeds = result.amount_out
    profit = proceeds - cost - network_fee
    if cost <= 0:
        return None
    profit_percent = profit / cost
    if profit_percent <= safe_profit_margin:
        return None
    return TradePlan(side=side, amount_in=amount_in,
                     expected_out=result.amount_out,
                     quoted_rate=result.spot_before,
                     profit=profit, profit_percent=profit_percent)


def lptoken_relative_price(pool: Pool) -> float:
    """Value of one LP token in USDC: (spot*reserve_a + reserve_b) / supply."""
    if pool.lptokens_outstanding <= 0:
        raise ValueError("no LP tokens outstanding")
    spe = amm.spot_exchange_rate(pool)
    return (spe * pool.reserve_a + pool.reserve_b) / pool.lptokens_outstanding


def smoothed_bid_limit(daily_profits: list[float] | np.ndarray, alpha: float) -> float:
    """Exponentially weighted average favouring recent entries.

    Weights are (1-alpha)^(n-1-i) for entry i, so alpha = 1 keeps only the
    latest value and a constant history returns that constant.
    """
    if len(daily_profits) == 0:
        raise ValueError("daily profit history is empty")
    if not (0 < alpha <= 1):
        raise ValueError("alpha must lie in (0, 1]")
    n = len(daily_profits)
    weights = np.power(1.0 - alpha, np.arange(n - 1, -1, -1, dtype=float))
    values = np.asarray(daily_profits, dtype=float)
    return float(np.dot(weights, values) / np.sum(weights))


@dataclass(frozen=True)
class SlotBid:
    agent: str
    amount: float    # LP tokens


@dataclass
class StrategyABidder:
    """Competitive bidders capping their bids at a smoothed profit estimate.

    The bid limit ``limit_usdc`` starts from a profit estimate over warm-up
    history and is adjusted once per day by the ratio of the latest daily
    profit to the smoothed average, clamped to [0.5, 2].  Identities only
    rotate attribution; bid times and amounts are identity-count invariant.
    """

    identities: list[str]
    limit_usdc: float
    smoothing_alpha: float = 0.5
    daily_profits: list[float] = field(default_factory=list)
    _next_identity: int = 0

    def step(self, slot: AuctionSlot, pool: Pool, now: float) -> SlotBid | None:
        bidder = self._next_bidder(slot)
        if bidder is None:
            return None
        lpt_price = lptoken_relative_price(pool)
        limit_lpt = self.limit_usdc / lpt_price
        if min_slot_price(pool) > limit_lpt:
            return None
        price = slot_price(slot, pool, min(slot.elapsed_fraction(now), 1.0))
        if price > limit_lpt:
            return None
        return SlotBid(agent=bidder, amount=price)

    def _next_bidder(self, slot: AuctionSlot) -> str | None:
        """Rotate to the first identity that is not the current holder.

        The rotation is attribution only, which is exactly why the bid
        sequence cannot depend on how many identities take part.
        """
        n = len(self.identities)
        for offset in range(n):
            idx = self._next_identity + offset
            candidate = self.identities[idx % n]
            if candidate != slot.holder:
                self._next_identity = idx + 1
                return candidate
        return None

    def on_day_close(self, profit_today: float) -> None:
        """Daily limit adjustment from the realized net-profit trend.

        The multiplicative ratio of today's profit to the smoothed history is
        clamped to [0.5, 2]; a non-positive day takes the clamp floor, since
        a bidder whose slot spending wiped out the day's take-home scales its
        cap down rather than freezing it.
        """
        self.daily_profits.append(profit_today)
        smoothed = smoothed_bid_limit(self.daily_profits, self.smoothing_alpha)
        if profit_today <= 0:
            ratio = 0.5
        elif smoothed <= 0:
            ratio = 2.0
        else:
            ratio = min(2.0, max(0.5, profit_today / smoothed))
        self.limit_usdc *= ratio


@dataclass
class StrategyBBidder:
    """Minimal-competition bidder: floor-price bid on an empty slot, held to expiry."""

    identities: list[str]
    _cycle: int = 0

    def step(self, slot: AuctionSlot, pool: Pool, now: float) -> SlotBid | None:
        if slot.held:
            return None
        bidder = self.identities[self._cycle % len(self.identities)]
        floor = min_slot_price(pool)
        if floor <= 0:
            return None
        return SlotBid(agent=bidder, amount=floor)

    def on_slot_won(self) -> None:
        self._cycle += 1
