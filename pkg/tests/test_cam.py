"""Auction-slot schedule and settlement tests."""
from __future__ import annotations

import numpy as np
import pytest

from ammsim import amm, cam

POOL = amm.make_pool(50_000.0, 49_850_000.0, 0.003)
# Oracle: sqrt(50,000 * 49,850,000) * 0.003 / 25.
ORACLE_MIN_PRICE = 189.45184084616332


def occupied_slot(price: float, acquired_at: float = 0.0,
                  duration: float = 86_400.0) -> cam.AuctionSlot:
    return cam.AuctionSlot(state=cam.OCCUPIED, holder="arb-0",
                           purchase_price=price, acquired_at=acquired_at,
                           slot_duration=duration)


class TestMinSlotPrice:
    def test_scenario_pool(self):
        value = cam.min_slot_price(POOL)
        assert abs(value - ORACLE_MIN_PRICE) / ORACLE_MIN_PRICE <= 1e-12

    def test_zero_fee_means_zero_floor(self):
        pool = amm.make_pool(50_000.0, 49_850_000.0, 0.0)
        assert cam.min_slot_price(pool) == 0.0

    def test_exact_cancellation(self):
        pool = amm.Pool(reserve_a=1.0, reserve_b=1.0, trading_fee=0.01,
                        lptokens_outstanding=25.0)
        assert cam.min_slot_price(pool) == 0.01


class TestIntervalOf:
    def test_first_interval(self):
        assert cam.interval_of(0.03) == 1

    def test_tail_is_last_interval(self):
        assert cam.interval_of(0.97) == 20

    def test_boundary_belongs_to_closing_interval(self):
        assert cam.interval_of(0.05) == 1
        assert cam.interval_of(0.95) == 19

    def test_domain(self):
        with pytest.raises(ValueError):
            cam.interval_of(-0.01)
        with pytest.raises(ValueError):
            cam.interval_of(1.01)


class TestSlotPrice:
    def test_empty_slot_costs_the_floor(self):
        slot = cam.AuctionSlot()
        assert cam.slot_price(slot, POOL, 0.0) == cam.min_slot_price(POOL)

    def test_first_interval_formula(self):
        pool = amm.Pool(reserve_a=1.0, reserve_b=1.0, trading_fee=0.01,
                        lptokens_outstanding=25_000.0)
        # floor = 10; occupied at t = 0.04 with purchase price 100 -> 115
        slot = occupied_slot(100.0)
        assert cam.slot_price(slot, pool, 0.04) == pytest.approx(115.0)

    def test_expiry_collapses_to_floor(self):
        pool = amm.Pool(reserve_a=1.0, reserve_b=1.0, trading_fee=0.01,
                        lptokens_outstanding=25_000.0)
        slot = occupied_slot(100.0)
        assert cam.slot_price(slot, pool, 1.0) == pytest.approx(10.0)

    def test_tailing_costs_the_floor(self):
        slot = cam.AuctionSlot(state=cam.TAILING, holder="arb-0",
                               purchase_price=500.0)
        assert cam.slot_price(slot, POOL, 0.97) == cam.min_slot_price(POOL)


class TestRefund:
    def test_full_refund_at_purchase_instant(self):
        assert cam.refund_amount(100.0, 0.0) == 100.0

    def test_pro_rata_midway(self):
        assert cam.refund_amount(100.0, 0.5) == 50.0

    def test_no_refund_in_final_interval(self):
        assert cam.refund_amount(100.0, 0.97) == 0.0


class TestProcessBid:
    def test_empty_slot_minimal_bid(self):
        slot = cam.AuctionSlot()
        floor = cam.min_slot_price(POOL)
        outcome, new_slot, new_pool = cam.process_bid(slot, POOL, "arb-1", floor, 0.0)
        assert new_slot.holder == "arb-1"
        assert new_slot.state == cam.OCCUPIED
        assert outcome.burned == floor
        assert outcome.refund_to_previous == 0.0
        assert new_pool.lptokens_outstanding == POOL.lptokens_outstanding - floor

    def test_outbid_midway_refunds_prorata(self):
        slot = occupied_slot(100.0)
        now = 0.5 * slot.slot_duration
        price = cam.slot_price(slot, POOL, 0.5)
        outcome, new_slot, _ = cam.process_bid(slot, POOL, "arb-2", price, now)
        assert outcome.refund_to_previous == pytest.approx(50.0)
        assert outcome.burned == pytest.approx(price - 50.0)
        assert outcome.previous_holder == "arb-0"
        assert new_slot.holder == "arb-2"

    def test_lowball_bid_rejected_without_state_change(self):
        slot = occupied_slot(100.0)
        price = cam.slot_price(slot, POOL, 0.0)
        with pytest.raises(cam.RejectedBidError):
            cam.process_bid(slot, POOL, "arb-2", price * 0.999, 0.0)


class TestAdvanceSlot:
    def test_crossing_95_percent_starts_tailing(self):
        slot = occupied_slot(100.0)
        advanced = cam.advance_slot(slot, 0.96 * slot.slot_duration)
        assert advanced.state == cam.TAILING
        assert advanced.holder == "arb-0"

    def test_expiry_empties_the_slot(self):
        slot = occupied_slot(100.0)
        advanced = cam.advance_slot(slot, slot.slot_duration)
        assert advanced.state == cam.EMPTY
        assert advanced.holder is None

    def test_midlife_is_unchanged(self):
        slot = occupied_slot(100.0)
        assert cam.advance_slot(slot, 0.5 * slot.slot_duration) == slot


def test_randomized_schedule_suite():
    """1,000 random (B, floor, t) cases: floor holds, decay is monotone,
    refund plus burn reproduces the bid, and f(1) lands on the floor."""
    rng = np.random.default_rng(1234)
    for _ in range(1_000):
        purchase = float(rng.uniform(0.001, 10_000.0))
        supply = float(rng.uniform(1.0, 1e7))
        fee = float(rng.uniform(0.0, 0.01))
        pool = amm.Pool(reserve_a=1.0, reserve_b=1.0, trading_fee=fee,
                        lptokens_outstanding=supply)
        floor = cam.min_slot_price(pool)
        slot = occupied_slot(purchase)
        t1, t2 = sorted(rng.uniform(0.05, 1.0, size=2))

        # Floor: price never drops below the minimum, and hits it at t = 1.
        assert cam.slot_price(slot, pool, t1) >= floor
        assert cam.slot_price(slot, pool, 1.0) == pytest.approx(floor)
        assert cam.slot_price(cam.AuctionSlot(), pool, t1) == floor

        # Monotone decay past the first interval.
        if t2 > t1:
            assert cam.slot_price(slot, pool, t2) <= cam.slot_price(slot, pool, t1)

        # Bid revenue conservation at a random admissible bid.
        t = float(rng.uniform(0.0, 1.0))
        price = cam.slot_price(slot, pool, t)
        bid = price * float(rng.uniform(1.0, 1.5))
        outcome, _, new_pool = cam.process_bid(
            slot, pool, "arb-9", bid, t * slot.slot_duration)
        assert outcome.refund_to_previous + outcome.burned == pytest.approx(bid, rel=1e-12)
        if outcome.burned > 0:
            assert new_pool.lptokens_outstanding < pool.lptokens_outstanding
            assert cam.min_slot_price(new_pool) <= floor


def test_near_continuity_at_first_interval_boundary():
    """Just past t = 0.05 the decay term is 1 - 0.05^60, within 1e-70 of one."""
    pool = amm.Pool(reserve_a=1.0, reserve_b=1.0, trading_fee=0.01,
                    lptokens_outstanding=25_000.0)
    slot = occupied_slot(1000.0)
    inside = cam.slot_price(slot, pool, 0.05)
    just_past = cam.slot_price(slot, pool, 0.05 + 1e-12)
    assert abs(just_past - inside) <= 1e-70 * slot.purchase_price
