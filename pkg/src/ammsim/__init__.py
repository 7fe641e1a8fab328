"""ammsim: seeded agent-based simulator for protocol-level vs generic
constant-product pools on a shared GBM reference market."""

from .amm import (
    BUY,
    SELL,
    Pool,
    SwapResult,
    amount_in_for_target_rate,
    apply_swap,
    initial_lptokens,
    make_pool,
    spot_exchange_rate,
    swap_given_in,
    swap_given_out,
)
from .cam import (
    AuctionSlot,
    BidOutcome,
    advance_slot,
    interval_of,
    min_slot_price,
    process_bid,
    refund_amount,
    slot_price,
)
from .chain import ChainParams, ExecutionRecord, Mempool, PendingTransaction, blocks_between, execute_block
from .market import PricePath, generate_gbm, generate_history_prefix, price_at
from .metrics import AggregateReport, RunMetrics, aggregate, divergence_loss, moving_average, price_impact, slippage
from .scenario import ScenarioConfig, load_scenario
from .engine import run_repetition, run_scenario

__version__ = "0.1.0"
