"""Auction-slot mechanism: a daily slot granting its holder a 0% trading fee.

The slot is sold continuously for LP tokens.  Its price starts at the floor
price when empty, jumps 5% above the purchase price once bought, decays
exponentially over the 24-hour tenure, and collapses back to the floor in
the final interval.  An outbid holder receives a pro-rata refund except in
that final interval; every non-refunded LP token is burned, shrinking the
outstanding supply.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .amm import Pool

EMPTY = "empty"
OCCUPIED = "occupied"
TAILING = "tailing"

DEFAULT_SLOT_DURATION = 86_400.0
INTERVAL_COUNT = 20
INTERVAL_WIDTH = 1.0 / INTERVAL_COUNT
TAIL_START = 0.95
PRICE_MARKUP = 1.05
DECAY_POWER = 60
MIN_PRICE_DIVISOR = 25.0


class RejectedBidError(ValueError):
    """Bid below the current schedule price."""


@dataclass(frozen=True)
class AuctionSlot:
    state: str = EMPTY
    holder: str | None = None
    purchase_price: float = 0.0     # LP tokens paid by the current holder
    acquired_at: float = 0.0        # simulation seconds
    slot_duration: float = DEFAULT_SLOT_DURATION

    def elapsed_fraction(self, now: float) -> float:
        if self.holder is None:
            return 0.0
        return max(0.0, (now - self.acquired_at) / self.slot_duration)

    @property
    def held(self) -> bool:
        return self.holder is not None


@dataclass(frozen=True)
class BidOutcome:
    price_paid: float
    refund_to_previous: float
    burned: float
    previous_holder: str | None


def min_slot_price(pool: Pool) -> float:
    """Auction floor: outstanding LP tokens * trading_fee / 25."""
    return pool.lptokens_outstanding * pool.trading_fee / MIN_PRICE_DIVISOR


def interval_of(t: float) -> int:
    """1-based index of the 0.05-wide interval containing elapsed fraction t.

    A fraction sitting exactly on a boundary belongs to the closing
    interval, so interval 1 is (0, 0.05] and t = 0 clamps into it.
    """
    if t < 0.0 or t > 1.0:
        raise ValueError(f"elapsed fraction {t} outside [0, 1]")
    return min(INTERVAL_COUNT, max(1, math.ceil(t / INTERVAL_WIDTH)))


def slot_price(slot: AuctionSlot, pool: Pool, t: float) -> float:
    """Current price to take the slot at elapsed fraction t of its tenure."""
    floor = min_slot_price(pool)
    if slot.state in (EMPTY, TAILING):
        return floor
    if t <= INTERVAL_WIDTH:
        return slot.purchase_price * PRICE_MARKUP + floor
    return slot.purchase_price * PRICE_MARKUP * (1.0 - min(t, 1.0) ** DECAY_POWER) + floor


def refund_amount(purchase_price: float, t: float) -> float:
    """Pro-rata refund B*(1-t) to an outbid holder; zero in the final interval."""
    if interval_of(t) == INTERVAL_COUNT:
        return 0.0
    return purchase_price * (1.0 - t)


def process_bid(slot: AuctionSlot, pool: Pool, bidder: str, bid: float,
                now: float) -> tuple[BidOutcome, AuctionSlot, Pool]:
    """Settle a bid: refund the outbid holder pro rata, burn the rest.

    The bid is paid in LP tokens; the burned portion reduces
    ``lptokens_outstanding`` (and with it the floor price).  Returns the
    outcome plus the updated slot and pool.
    """
    t = min(slot.elapsed_fraction(now), 1.0)
    price = slot_price(slot, pool, t)
    if bid < price:
        raise RejectedBidError(f"bid {bid} below schedule price {price}")
    refund = refund_amount(slot.purchase_price, t) if slot.held else 0.0
    burned = bid - refund
    outcome = BidOutcome(price_paid=bid, refund_to_previous=refund,
                         burned=burned, previous_holder=slot.holder)
    new_pool = replace(pool, lptokens_outstanding=pool.lptokens_outstanding - burned)
    new_slot = AuctionSlot(state=OCCUPIED, holder=bidder, purchase_price=bid,
                           acquired_at=now, slot_duration=slot.slot_duration)
    return outcome, new_slot, new_pool


def advance_slot(slot: AuctionSlot, now: float) -> AuctionSlot:
    """Move the slot through occupied -> tailing -> empty as time passes."""
    if not slot.held:
        return slot
    t = slot.elapsed_fraction(now)
    if t >= 1.0:
        return AuctionSlot(slot_duration=slot.slot_duration)
    if t > TAIL_START:
        if slot.state != TAILING:
            return replace(slot, state=TAILING)
        return slot
    return slot
