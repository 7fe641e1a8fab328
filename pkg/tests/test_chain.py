"""Block execution tests: boundaries, ordering, the slippage gate, records."""
from __future__ import annotations

import numpy as np
import pytest

from ammsim import amm, cam, chain

PARAMS_4S = chain.ChainParams(block_interval=4.0, network_fee=1.0)


def make_pool(fee: float = 0.003) -> amm.Pool:
    return amm.make_pool(50_000.0, 49_850_000.0, fee)


def swap_tx(mempool: chain.Mempool, pool: amm.Pool, amount: float, *,
            side: str = amm.BUY, agent: str = "arb-0", submitted_at: float = 1.0,
            max_slippage: float = 0.04, quoted: float | None = None,
            discounted: bool = False) -> chain.PendingTransaction:
    if quoted is None:
        quoted = amm.quote_rate(pool, side, pool.trading_fee)
    return chain.PendingTransaction(
        tx_id=mempool.next_id(), agent=agent, kind=chain.SWAP_GIVEN_IN,
        side=side, amount=amount, quoted_spe=quoted, max_slippage=max_slippage,
        uses_discounted_fee=discounted, submitted_at=submitted_at)


class TestBlocksBetween:
    def test_three_boundaries(self):
        assert chain.blocks_between(0.0, 12.0, PARAMS_4S) == [4.0, 8.0, 12.0]

    def test_single_boundary(self):
        params = chain.ChainParams(block_interval=12.0, network_fee=0.0)
        assert chain.blocks_between(0.0, 12.0, params) == [12.0]

    def test_daily_count_at_8s(self):
        params = chain.ChainParams(block_interval=8.0, network_fee=0.0)
        assert len(chain.blocks_between(0.0, 86_400.0, params)) == 10_800

    def test_left_boundary_excluded(self):
        assert chain.blocks_between(4.0, 8.0, PARAMS_4S) == [8.0]


class TestMempool:
    def test_submission_waits_for_next_boundary(self):
        mp = chain.Mempool()
        mp.submit(swap_tx(mp, make_pool(), 100.0, submitted_at=1.0))
        assert mp.take(0.0) == []
        assert len(mp.take(4.0)) == 1
        assert len(mp) == 0

    def test_boundary_submission_joins_that_block(self):
        mp = chain.Mempool()
        mp.submit(swap_tx(mp, make_pool(), 100.0, submitted_at=4.0))
        assert len(mp.take(4.0)) == 1

    def test_same_block_grouping(self):
        mp = chain.Mempool()
        mp.submit(swap_tx(mp, make_pool(), 100.0, submitted_at=1.0))
        mp.submit(swap_tx(mp, make_pool(), 200.0, submitted_at=3.0))
        assert len(mp.take(4.0)) == 2


class TestExecuteBlock:
    def test_empty_block(self):
        mp = chain.Mempool()
        result = chain.execute_block(mp, make_pool(), None,
                                     np.random.default_rng(0), 4.0,
                                     params=PARAMS_4S, ext_price=1000.0)
        assert result.records == []

    def test_single_swap_realizes_with_solo_slippage(self):
        pool = make_pool()
        mp = chain.Mempool()
        mp.submit(swap_tx(mp, pool, 1_000_000.0))
        result = chain.execute_block(mp, pool, None, np.random.default_rng(0),
                                     4.0, params=PARAMS_4S, ext_price=1000.0)
        rec = result.records[0]
        expected = amm.swap_given_in(pool, 1_000_000.0, pool.trading_fee)
        assert rec.realized
        assert rec.slippage == pytest.approx(
            expected.effective_price / expected.spot_before - 1.0)
        assert rec.fee_paid_network == 1.0
        assert result.pool.reserve_b > pool.reserve_b

    def test_unrealized_swap_leaves_pool_untouched(self):
        pool = make_pool()
        mp = chain.Mempool()
        mp.submit(swap_tx(mp, pool, 1_000_000.0, max_slippage=0.001))
        result = chain.execute_block(mp, pool, None, np.random.default_rng(0),
                                     4.0, params=PARAMS_4S, ext_price=1000.0)
        rec = result.records[0]
        assert not rec.realized
        assert rec.rejection_reason == "max_slippage"
        assert rec.fee_paid_network == 0.0
        assert result.pool == pool

    def test_adversarial_ordering_pushes_follower_past_gate(self):
        """A large same-direction swap executed first spoils the second
        swap's quote beyond its 4% tolerance."""
        pool = make_pool()
        big = amm.amount_in_for_target_rate(pool, 1_080.0, pool.trading_fee)
        follower_amount = 1_000_000.0
        mp = chain.Mempool()
        first = swap_tx(mp, pool, big)
        second = swap_tx(mp, pool, follower_amount)
        mp.submit(first)
        mp.submit(second)
        # Find a shuffle seed that executes the big swap first.
        for seed in range(20):
            order = [first, second]
            np.random.default_rng(seed).shuffle(order)
            if order[0] is first:
                break
        result = chain.execute_block(mp, pool, None, np.random.default_rng(seed),
                                     4.0, params=PARAMS_4S, ext_price=1080.0)
        by_id = {r.tx_id: r for r in result.records}
        assert by_id[first.tx_id].realized
        assert not by_id[second.tx_id].realized
        # Oracle: the follower's price on the post-big-swap pool.
        moved = amm.apply_swap(pool, amm.swap_given_in(pool, big, pool.trading_fee))
        follow = amm.swap_given_in(moved, follower_amount, pool.trading_fee)
        expected_slip = follow.effective_price / second.quoted_spe - 1.0
        assert by_id[second.tx_id].slippage == pytest.approx(expected_slip)
        assert expected_slip > 0.04

    def test_count_conservation(self):
        pool = make_pool()
        mp = chain.Mempool()
        rng = np.random.default_rng(3)
        n = 50
        for _ in range(n):
            mp.submit(swap_tx(mp, pool, float(rng.uniform(1e3, 5e6)),
                              max_slippage=0.01))
        result = chain.execute_block(mp, pool, None, np.random.default_rng(0),
                                     4.0, params=PARAMS_4S, ext_price=1000.0)
        realized = sum(r.realized for r in result.records)
        unrealized = sum(not r.realized for r in result.records)
        assert realized + unrealized == n

    def test_realized_slippage_respects_gate(self):
        pool = make_pool()
        mp = chain.Mempool()
        rng = np.random.default_rng(4)
        for _ in range(100):
            mp.submit(swap_tx(mp, pool, float(rng.uniform(1e3, 2e6)),
                              side=rng.choice([amm.BUY, amm.SELL]),
                              max_slippage=0.02))
        result = chain.execute_block(mp, pool, None, np.random.default_rng(1),
                                     4.0, params=PARAMS_4S, ext_price=1000.0)
        for rec in result.records:
            if rec.realized:
                assert rec.slippage <= 0.02 + 1e-12

    def test_shuffle_determinism(self):
        def run(seed: int):
            pool = make_pool()
            mp = chain.Mempool()
            for amount in (1e5, 2e5, 3e5, 4e5):
                mp.submit(swap_tx(mp, pool, amount))
            return [r.tx_id for r in chain.execute_block(
                mp, pool, None, np.random.default_rng(seed), 4.0,
                params=PARAMS_4S, ext_price=1000.0).records]
        assert run(7) == run(7)


class TestDiscountedFee:
    def test_slot_holder_swaps_fee_free(self):
        pool = make_pool()
        slot = cam.AuctionSlot(state=cam.OCCUPIED, holder="arb-0",
                               purchase_price=100.0, acquired_at=0.0)
        mp = chain.Mempool()
        mp.submit(swap_tx(mp, pool, 1_000.0, discounted=True,
                          quoted=amm.quote_rate(pool, amm.BUY, 0.0)))
        result = chain.execute_block(mp, pool, slot, np.random.default_rng(0),
                                     4.0, params=PARAMS_4S, ext_price=1000.0)
        rec = result.records[0]
        assert rec.realized
        assert rec.fee_paid_pool == 0.0
        expected = amm.swap_given_in(pool, 1_000.0, 0.0)
        assert rec.amount_out == pytest.approx(expected.amount_out)

    def test_discount_ignored_for_non_holder(self):
        pool = make_pool()
        slot = cam.AuctionSlot(state=cam.OCCUPIED, holder="arb-9",
                               purchase_price=100.0, acquired_at=0.0)
        mp = chain.Mempool()
        mp.submit(swap_tx(mp, pool, 1_000.0, discounted=True))
        result = chain.execute_block(mp, pool, slot, np.random.default_rng(0),
                                     4.0, params=PARAMS_4S, ext_price=1000.0)
        assert result.records[0].fee_paid_pool == pytest.approx(1_000.0 * 0.003)


class TestBidExecution:
    def test_bid_routes_to_auction(self):
        pool = make_pool()
        slot = cam.AuctionSlot()
        floor = cam.min_slot_price(pool)
        mp = chain.Mempool()
        mp.submit(chain.PendingTransaction(
            tx_id=mp.next_id(), agent="arb-0", kind=chain.BID, side=amm.BUY,
            amount=floor, quoted_spe=1.0, max_slippage=0.0,
            uses_discounted_fee=False, submitted_at=1.0))
        result = chain.execute_block(mp, pool, slot, np.random.default_rng(0),
                                     4.0, params=PARAMS_4S, ext_price=1000.0)
        rec = result.records[0]
        assert rec.realized
        assert result.slot.holder == "arb-0"
        assert rec.bid_outcome.burned == pytest.approx(floor)
        assert rec.lptoken_price == pytest.approx(
            (1000.0 * 50_000 + 49_850_000) / pool.lptokens_outstanding)

    def test_underpriced_bid_unrealized(self):
        pool = make_pool()
        slot = cam.AuctionSlot(state=cam.OCCUPIED, holder="arb-1",
                               purchase_price=500.0, acquired_at=0.0)
        mp = chain.Mempool()
        mp.submit(chain.PendingTransaction(
            tx_id=mp.next_id(), agent="arb-0", kind=chain.BID, side=amm.BUY,
            amount=cam.min_slot_price(pool), quoted_spe=1.0, max_slippage=0.0,
            uses_discounted_fee=False, submitted_at=1.0))
        result = chain.execute_block(mp, pool, slot, np.random.default_rng(0),
                                     4.0, params=PARAMS_4S, ext_price=1000.0)
        assert not result.records[0].realized
        assert result.slot.holder == "arb-1"


def test_records_csv(tmp_path):
    pool = make_pool()
    mp = chain.Mempool()
    mp.submit(swap_tx(mp, pool, 1_000.0))
    result = chain.execute_block(mp, pool, None, np.random.default_rng(0),
                                 4.0, params=PARAMS_4S, ext_price=1000.0)
    out = tmp_path / "records.csv"
    chain.write_records_csv(result.records, out)
    lines = out.read_text().splitlines()
    assert lines[0] == ",".join(chain.RECORD_CSV_HEADER)
    assert len(lines) == 2
    assert lines[1].startswith("0,1,arb-0,swap_in_b,1,")
