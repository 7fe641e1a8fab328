"""Block-granular execution: mempool, random intra-block ordering, and the
maximum-slippage gate that separates realized from unrealized transactions.

A submitted transaction carries the spot rate its sender saw when deciding.
At execution the swap is recomputed against the then-current pool state; if
the effective price has drifted beyond the sender's slippage tolerance the
transaction is recorded unrealized and the pool is left untouched.  Network
fees are charged on realized transactions only.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import amm, cam

SWAP_GIVEN_IN = "swap_in_b"    # amount specifies the input token
SWAP_GIVEN_OUT = "swap_out_a"  # amount specifies the output token
BID = "bid"

SLIPPAGE_SLACK = 1e-12


@dataclass(frozen=True)
class ChainParams:
    block_interval: float        # seconds between ledger closes
    network_fee: float           # USDC per realized transaction

    def __post_init__(self) -> None:
        if self.block_interval <= 0:
            raise ValueError("block_interval must be positive")
        if self.network_fee < 0:
            raise ValueError("network_fee must be nonnegative")


@dataclass(frozen=True)
class PendingTransaction:
    tx_id: int
    agent: str
    kind: str                    # SWAP_GIVEN_IN | SWAP_GIVEN_OUT | BID
    side: str                    # amm.BUY | amm.SELL (ignored for bids)
    amount: float
    quoted_spe: float            # direction-local spot rate at decision time
    max_slippage: float
    uses_discounted_fee: bool
    submitted_at: float

    def __post_init__(self) -> None:
        if self.amount <= 0:
            raise ValueError("amount must be positive")
        if self.max_slippage < 0:
            raise ValueError("max_slippage must be nonnegative")


@dataclass(frozen=True)
class ExecutionRecord:
    tx_id: int
    agent: str
    kind: str
    side: str
    realized: bool
    block_index: int
    block_time: float
    ext_price: float
    amount_in: float = 0.0
    amount_out: float = 0.0
    slippage: float = float("nan")
    price_impact: float = float("nan")
    fee_paid_network: float = 0.0
    fee_paid_pool: float = 0.0
    rejection_reason: str | None = None
    bid_outcome: cam.BidOutcome | None = None
    lptoken_price: float = float("nan")


class Mempool:
    """FIFO queue of pending transactions, drained per block boundary."""

    def __init__(self) -> None:
        self._queue: list[PendingTransaction] = []
        self._next_id = 0

    def next_id(self) -> int:
        self._next_id += 1
        return self._next_id

    def submit(self, tx: PendingTransaction) -> None:
        self._queue.append(tx)

    def take(self, boundary: float) -> list[PendingTransaction]:
        """Remove and return every transaction submitted at or before ``boundary``."""
        due = [tx for tx in self._queue if tx.submitted_at <= boundary]
        self._queue = [tx for tx in self._queue if tx.submitted_at > boundary]
        return due

    def __len__(self) -> int:
        return len(self._queue)


def blocks_between(t0: float, t1: float, params: ChainParams) -> list[float]:
    """Block boundaries (multiples of the interval) in the half-open (t0, t1]."""
    if t1 < t0:
        raise ValueError("t1 must not precede t0")
    dt = params.block_interval
    first = math.floor(t0 / dt) + 1
    last = math.floor(t1 / dt)
    if abs(t1 / dt - round(t1 / dt)) < 1e-9:
        last = round(t1 / dt)
    if abs(t0 / dt - round(t0 / dt)) < 1e-9:
        first = round(t0 / dt) + 1
    return [k * dt for k in range(first, last + 1)]


@dataclass
class BlockResult:
    records: list[ExecutionRecord]
    pool: amm.Pool
    slot: cam.AuctionSlot | None
    network_fees: dict[str, float] = field(default_factory=dict)


def execute_block(mempool: Mempool, pool: amm.Pool, slot: cam.AuctionSlot | None,
                  rng: np.random.Generator, now: float, *,
                  params: ChainParams, ext_price: float,
                  block_index: int = 0,
                  discount_group: frozenset[str] | None = None) -> BlockResult:
    """Shuffle this boundary's transactions and apply them sequentially.

    Failures (slippage breaches, exhausted liquidity, underpriced bids)
    become unrealized records; the pool state they saw is left untouched.

    ``discount_group`` names identities that share the auction slot among
    themselves (slot rotation is attribution, not a change of beneficiary):
    a member's discounted swap stays discounted when another member just
    took the slot earlier in the same block.
    """
    txs = mempool.take(now)
    order = list(txs)
    rng.shuffle(order)
    records: list[ExecutionRecord] = []
    fees: dict[str, float] = {}

    for tx in order:
        if tx.kind == BID:
            record, pool, slot = _execute_bid(tx, pool, slot, now, block_index, ext_price)
        else:
            record, pool = _execute_swap(tx, pool, slot, now, block_index,
                                         ext_price, discount_group)
        if record.realized and params.network_fee > 0:
            record = _with_network_fee(record, params.network_fee)
            fees[tx.agent] = fees.get(tx.agent, 0.0) + params.network_fee
        records.append(record)
    return BlockResult(records=records, pool=pool, slot=slot, network_fees=fees)


def _with_network_fee(record: ExecutionRecord, fee: float) -> ExecutionRecord:
    return replace(record, fee_paid_network=fee)


def _effective_fee(tx: PendingTransaction, pool: amm.Pool,
                   slot: cam.AuctionSlot | None,
                   discount_group: frozenset[str] | None) -> float:
    if not tx.uses_discounted_fee or slot is None or slot.holder is None:
        return pool.trading_fee
    if slot.holder == tx.agent:
        return 0.0
    if (discount_group is not None and slot.holder in discount_group
            and tx.agent in discount_group):
        return 0.0
    return pool.trading_fee


def _execute_swap(tx: PendingTransaction, pool: amm.Pool,
                  slot: cam.AuctionSlot | None, now: float, block_index: int,
                  ext_price: float,
                  discount_group: frozenset[str] | None = None
                  ) -> tuple[ExecutionRecord, amm.Pool]:
    fee = _effective_fee(tx, pool, slot, discount_group)
    try:
        if tx.kind == SWAP_GIVEN_IN:
            result = amm.swap_given_in(pool, tx.amount, fee, tx.side)
        elif tx.kind == SWAP_GIVEN_OUT:
            result = amm.swap_given_out(pool, tx.amount, fee, tx.side)
        else:
            raise ValueError(f"unknown transaction kind {tx.kind!r}")
    except (amm.InsufficientLiquidityError, amm.DegeneratePoolError) as exc:
        record = ExecutionRecord(
            tx_id=tx.tx_id, agent=tx.agent, kind=tx.kind, side=tx.side,
            realized=False, block_index=block_index, block_time=now,
            ext_price=ext_price, rejection_reason=type(exc).__name__)
        return record, pool

    slippage = result.effective_price / tx.quoted_spe - 1.0
    if slippage > tx.max_slippage + SLIPPAGE_SLACK:
        record = ExecutionRecord(
            tx_id=tx.tx_id, agent=tx.agent, kind=tx.kind, side=tx.side,
            realized=False, block_index=block_index, block_time=now,
            ext_price=ext_price, amount_in=result.amount_in,
            amount_out=result.amount_out, slippage=slippage,
            rejection_reason="max_slippage")
        return record, pool

    pool = amm.apply_swap(pool, result)
    record = ExecutionRecord(
        tx_id=tx.tx_id, agent=tx.agent, kind=tx.kind, side=tx.side,
        realized=True, block_index=block_index, block_time=now,
        ext_price=ext_price, amount_in=result.amount_in,
        amount_out=result.amount_out, slippage=slippage,
        price_impact=result.spot_after / result.spot_before - 1.0,
        fee_paid_pool=result.fee_paid)
    return record, pool


def _execute_bid(tx: PendingTransaction, pool: amm.Pool,
                 slot: cam.AuctionSlot | None, now: float, block_index: int,
                 ext_price: float) -> tuple[ExecutionRecord, amm.Pool, cam.AuctionSlot | None]:
    if slot is None:
        record = ExecutionRecord(
            tx_id=tx.tx_id, agent=tx.agent, kind=tx.kind, side=tx.side,
            realized=False, block_index=block_index, block_time=now,
            ext_price=ext_price, rejection_reason="no_auction_slot")
        return record, pool, slot
    # LP-token valuation for settlement uses the pre-burn supply.
    spe = amm.spot_exchange_rate(pool)
    lpt_price = (spe * pool.reserve_a + pool.reserve_b) / pool.lptokens_outstanding
    try:
        outcome, slot, pool = cam.process_bid(slot, pool, tx.agent, tx.amount, now)
    except cam.RejectedBidError:
        record = ExecutionRecord(
            tx_id=tx.tx_id, agent=tx.agent, kind=tx.kind, side=tx.side,
            realized=False, block_index=block_index, block_time=now,
            ext_price=ext_price, amount_in=tx.amount,
            rejection_reason="bid_below_schedule")
        return record, pool, slot
    record = ExecutionRecord(
        tx_id=tx.tx_id, agent=tx.agent, kind=tx.kind, side=tx.side,
        realized=True, block_index=block_index, block_time=now,
        ext_price=ext_price, amount_in=tx.amount, bid_outcome=outcome,
        lptoken_price=lpt_price)
    return record, pool, slot


RECORD_CSV_HEADER = ["block", "tx_id", "agent", "kind", "realized", "amount_in",
                     "amount_out", "slippage", "fee_paid_network", "side", "ext_price"]


def write_records_csv(records: list[ExecutionRecord], file_path: str | Path) -> None:
    with open(file_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RECORD_CSV_HEADER)
        for r in records:
            writer.writerow([
                r.block_index, r.tx_id, r.agent, r.kind, int(r.realized),
                repr(r.amount_in), repr(r.amount_out),
                "" if math.isnan(r.slippage) else repr(r.slippage),
                repr(r.fee_paid_network), r.side, repr(r.ext_price),
            ])
