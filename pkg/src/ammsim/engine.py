"""Simulation engine: drives the shared reference market, the per-variant
chains, and the agent population through one or more repetitions.

Timeline.  The market path is played back one point per
``market_tick_seconds`` on the simulation clock; each variant's chain closes
a block every ``block_interval_s`` of that same clock.  Agents observe the
public chain state (the pool as of the last closed block) plus the current
external price, and their submissions join the next block.  Nobody sees the
mempool: an arbitrageur that keeps observing an uncorrected gap keeps
submitting, and once the first correction lands the leftover duplicates die
on the slippage gate.  That fire-and-forget pipeline is what makes realized
transaction shares, slippage and price synchronization respond to block
cadence.

Within a repetition every variant consumes the same exchange-user order
stream, so user flow is identical across pools and the comparison isolates
chain parameters and the auction slot.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import agents, amm, cam, chain, market, metrics
from .scenario import CAM_VARIANTS, ScenarioConfig, build_manifest, write_manifest


@dataclass
class VariantRun:
    """Mutable per-variant state over one repetition."""

    name: str
    params: chain.ChainParams
    pool: amm.Pool
    slot: cam.AuctionSlot | None
    mempool: chain.Mempool
    rng_shuffle: np.random.Generator
    bidder: agents.StrategyABidder | agents.StrategyBBidder | None
    arb_ids: frozenset[str]
    max_slippage: float
    safe_profit_margin: float

    block_count: int = 0
    records: list[chain.ExecutionRecord] = field(default_factory=list)
    dev_values: list[float] = field(default_factory=list)
    dev_times: list[float] = field(default_factory=list)
    slippage_samples: list[float] = field(default_factory=list)
    impact_samples: list[float] = field(default_factory=list)
    volume_usdc: float = 0.0
    arb_trade_profit: float = 0.0
    arb_total_profit: float = 0.0
    arb_fees: float = 0.0
    realized: int = 0
    unrealized: int = 0
    lp_fee_returns: float = 0.0
    lp_cam_returns: float = 0.0
    day_profit_anchor: float = 0.0

    def holder_is_arb(self) -> bool:
        return (self.slot is not None and self.slot.holder is not None
                and self.slot.holder in self.arb_ids)


def _arb_identity(run: VariantRun) -> str:
    """Submitting identity for an arbitrage trade: the slot holder when the
    collective owns the slot, a fixed identity otherwise."""
    if run.holder_is_arb():
        return run.slot.holder
    return next(iter(sorted(run.arb_ids)))


def _make_variant(name: str, cfg: ScenarioConfig, seed,
                  strategy_a_limit: float) -> VariantRun:
    pool = amm.make_pool(cfg.reserve_a_eth, cfg.reserve_b_usdc, cfg.trading_fee)
    ids = [f"arb-{i}" for i in range(cfg.arb_identities)]
    slot = None
    bidder: agents.StrategyABidder | agents.StrategyBBidder | None = None
    if name in CAM_VARIANTS:
        slot = cam.AuctionSlot(slot_duration=cfg.day_seconds)
        if name == "xrpl_cam_a":
            bidder = agents.StrategyABidder(
                identities=ids, limit_usdc=strategy_a_limit,
                smoothing_alpha=cfg.agents.smoothing_alpha)
        else:
            bidder = agents.StrategyBBidder(identities=ids)
    chain_cfg = cfg.chains[name]
    return VariantRun(
        name=name,
        params=chain.ChainParams(block_interval=chain_cfg.block_interval_s,
                                 network_fee=chain_cfg.network_fee_usdc),
        pool=pool, slot=slot, mempool=chain.Mempool(),
        rng_shuffle=market.make_rng(seed),
        bidder=bidder, arb_ids=frozenset(ids),
        max_slippage=cfg.agents.max_slippage,
        safe_profit_margin=cfg.agents.safe_profit_margin,
    )


def _ingest_records(run: VariantRun, result: chain.BlockResult) -> None:
    """Fold one block's execution records into the run accumulators."""
    for rec in result.records:
        run.records.append(rec)
        is_arb = rec.agent in run.arb_ids
        if rec.kind == chain.BID:
            if rec.realized and rec.bid_outcome is not None:
                lpt_price = rec.lptoken_price
                run.lp_cam_returns += rec.bid_outcome.burned * lpt_price
                run.arb_total_profit -= rec.bid_outcome.price_paid * lpt_price
                run.arb_total_profit += rec.bid_outcome.refund_to_previous * lpt_price
                if isinstance(run.bidder, agents.StrategyBBidder):
                    run.bidder.on_slot_won()
            if rec.realized and is_arb:
                run.arb_fees += rec.fee_paid_network
                run.arb_total_profit -= rec.fee_paid_network
            continue
        # Swap record.
        if is_arb:
            if rec.realized:
                run.realized += 1
                run.slippage_samples.append(rec.slippage)
                run.impact_samples.append(rec.price_impact)
            else:
                run.unrealized += 1
        if not rec.realized:
            continue
        usd_in = rec.amount_in if rec.side == amm.BUY else rec.amount_in * rec.ext_price
        run.volume_usdc += usd_in
        fee_pool_usdc = (rec.fee_paid_pool if rec.side == amm.BUY
                         else rec.fee_paid_pool * rec.ext_price)
        run.lp_fee_returns += fee_pool_usdc
        if is_arb:
            if rec.side == amm.BUY:
                profit = rec.amount_out * rec.ext_price - rec.amount_in
            else:
                profit = rec.amount_out - rec.amount_in * rec.ext_price
            profit -= rec.fee_paid_network
            run.arb_trade_profit += profit
            run.arb_total_profit += profit
            run.arb_fees += rec.fee_paid_network


def _submit_user_order(run: VariantRun, order: agents.UserOrder, now: float) -> None:
    if order.direction == "buy":
        side, kind = amm.BUY, chain.SWAP_GIVEN_OUT
        if order.size >= run.pool.reserve_a:
            return
    else:
        side, kind = amm.SELL, chain.SWAP_GIVEN_IN
    quoted = amm.quote_rate(run.pool, side, run.pool.trading_fee)
    run.mempool.submit(chain.PendingTransaction(
        tx_id=run.mempool.next_id(), agent="user", kind=kind, side=side,
        amount=order.size, quoted_spe=quoted, max_slippage=run.max_slippage,
        uses_discounted_fee=False, submitted_at=now))


def _submit_arbitrage(run: VariantRun, ext_price: float, now: float) -> None:
    fee = 0.0 if run.holder_is_arb() else run.pool.trading_fee
    plan = agents.find_arbitrage(
        run.pool, fee, ext_price,
        network_fee=run.params.network_fee,
        safe_profit_margin=run.safe_profit_margin)
    if plan is None:
        return
    run.mempool.submit(chain.PendingTransaction(
        tx_id=run.mempool.next_id(), agent=_arb_identity(run),
        kind=chain.SWAP_GIVEN_IN, side=plan.side, amount=plan.amount_in,
        quoted_spe=plan.quoted_rate, max_slippage=run.max_slippage,
        uses_discounted_fee=(fee == 0.0), submitted_at=now))


def _submit_bid(run: VariantRun, now: float) -> None:
    if run.bidder is None or run.slot is None:
        return
    bid = run.bidder.step(run.slot, run.pool, now)
    if bid is None:
        return
    run.mempool.submit(chain.PendingTransaction(
        tx_id=run.mempool.next_id(), agent=bid.agent, kind=chain.BID,
        side=amm.BUY, amount=bid.amount, quoted_spe=1.0, max_slippage=0.0,
        uses_discounted_fee=False, submitted_at=now))


def estimate_history_daily_profits(cfg: ScenarioConfig,
                                   history: market.PricePath) -> list[float]:
    """Idealized warm-up backtest for the strategy-A bid limit.

    Replays the history path against a fresh pool with the discounted (zero)
    trading fee and immediate execution, and returns the profit earned in
    each history day.  This is a planning estimate, not a chain simulation.
    """
    pool = amm.make_pool(cfg.reserve_a_eth, cfg.reserve_b_usdc, cfg.trading_fee)
    cam_fees = [cfg.chains[v].network_fee_usdc for v in cfg.variants if v in CAM_VARIANTS]
    network_fee = cam_fees[0] if cam_fees else 0.0
    daily = [0.0] * cfg.gbm.history_days
    ppd = cfg.gbm.points_per_day
    for k in range(len(history)):
        ext = float(history.prices[k])
        plan = agents.find_arbitrage(pool, 0.0, ext, network_fee=network_fee,
                                     safe_profit_margin=cfg.agents.safe_profit_margin)
        if plan is None:
            continue
        result = amm.swap_given_in(pool, plan.amount_in, 0.0, plan.side)
        pool = amm.apply_swap(pool, result)
        day = min(cfg.gbm.history_days - 1, k // ppd)
        daily[day] += plan.profit
    return daily


def run_repetition(cfg: ScenarioConfig, path: market.PricePath, rep_index: int,
                   rep_seed: int, strategy_a_limit: float,
                   variants: tuple[str, ...] | None = None
                   ) -> tuple[dict[str, metrics.RunMetrics],
                              dict[str, list[chain.ExecutionRecord]]]:
    """One repetition: every requested variant driven over the shared path."""
    names = variants if variants is not None else cfg.variants
    rng_users = market.make_rng(np.random.SeedSequence((rep_seed, 0)))
    runs = [
        _make_variant(name, cfg, np.random.SeedSequence((rep_seed, 1 + i)),
                      strategy_a_limit)
        for i, name in enumerate(names)
    ]
    user_state = agents.ExchangeUserState()
    tick = cfg.market_tick_seconds
    user_every = max(1, round(cfg.user_decision_interval_s / tick))
    day_s = cfg.day_seconds
    n_points = len(path)

    for k in range(n_points):
        now = k * tick
        ext = float(path.prices[k])

        for run in runs:
            interval = run.params.block_interval
            ratio = now / interval
            on_boundary = now > 0 and abs(ratio - round(ratio)) < 1e-9
            if on_boundary:
                run.block_count += 1
                result = chain.execute_block(
                    run.mempool, run.pool, run.slot, run.rng_shuffle, now,
                    params=run.params, ext_price=ext, block_index=run.block_count,
                    discount_group=run.arb_ids)
                run.pool, run.slot = result.pool, result.slot
                _ingest_records(run, result)
            if run.slot is not None:
                run.slot = cam.advance_slot(run.slot, now)
            spe = amm.spot_exchange_rate(run.pool)
            run.dev_times.append(now)
            run.dev_values.append(abs(spe - ext) / ext)

        if k % user_every == 0:
            order = agents.exchange_user_step(user_state, rng_users)
            if order is not None:
                for run in runs:
                    _submit_user_order(run, order, now)

        for run in runs:
            _submit_arbitrage(run, ext, now)
            _submit_bid(run, now)

        if now > 0 and abs(now / day_s - round(now / day_s)) < 1e-9:
            for run in runs:
                if isinstance(run.bidder, agents.StrategyABidder):
                    # The trend input is the day's trading profit (net of
                    # network fees, gross of slot spending): the bid limit
                    # tracks what holding the slot is worth, and feeding the
                    # post-bid take-home back in would collapse the war.
                    profit_today = run.arb_trade_profit - run.day_profit_anchor
                    run.bidder.on_day_close(profit_today)
                    run.day_profit_anchor = run.arb_trade_profit

    ext_end = float(path.prices[-1])
    hold_value = cfg.reserve_a_eth * ext_end + cfg.reserve_b_usdc
    out: dict[str, metrics.RunMetrics] = {}
    for run in runs:
        pool_value = run.pool.reserve_a * ext_end + run.pool.reserve_b
        out[run.name] = metrics.RunMetrics(
            variant=run.name, repetition=rep_index,
            deviation_times=np.asarray(run.dev_times),
            deviation_values=np.asarray(run.dev_values),
            slippage_samples=run.slippage_samples,
            price_impact_samples=run.impact_samples,
            trading_volume_usdc=run.volume_usdc,
            arb_profit_usdc=run.arb_total_profit,
            arb_fees_usdc=run.arb_fees,
            realized_count=run.realized,
            unrealized_count=run.unrealized,
            lp_returns=metrics.LPReturns(
                trading_fees_usdc=run.lp_fee_returns,
                cam_bids_usdc=run.lp_cam_returns),
            divergence_loss=metrics.divergence_loss(pool_value, hold_value),
        )
    out_records = {run.name: run.records for run in runs}
    return out, out_records


def derive_seeds(cfg: ScenarioConfig) -> tuple[int, int, list[int]]:
    """(path_seed, history_seed, per-repetition seeds) from the master seed."""
    words = np.random.SeedSequence(cfg.master_seed).generate_state(
        2 + cfg.repetitions, dtype=np.uint64)
    return int(words[0]), int(words[1]), [int(w) for w in words[2:]]


def build_market(cfg: ScenarioConfig,
                 path: market.PricePath | None = None
                 ) -> tuple[market.PricePath, market.PricePath | None]:
    """The shared reference path plus the warm-up prefix when required."""
    path_seed, history_seed, _ = derive_seeds(cfg)
    if path is None:
        n_points = cfg.gbm.points_per_day * cfg.gbm.days + 1
        path = market.generate_gbm(cfg.gbm.s0, cfg.gbm.mu, cfg.gbm.sigma,
                                   n_points, 1.0 / cfg.gbm.points_per_day,
                                   path_seed)
    history = None
    if cfg.gbm.history_days > 0:
        history = market.generate_history_prefix(
            cfg.gbm.s0, cfg.gbm.mu, cfg.gbm.sigma, cfg.gbm.points_per_day,
            cfg.gbm.history_days, history_seed)
    return path, history


def _run_repetition_job(args):
    cfg, path, rep_index, rep_seed, limit = args
    return rep_index, run_repetition(cfg, path, rep_index, rep_seed, limit)


def run_scenario(cfg: ScenarioConfig, out_dir: str | Path | None = None, *,
                 workers: int = 1,
                 path: market.PricePath | None = None
                 ) -> metrics.AggregateReport:
    """Run every repetition, aggregate, and (optionally) emit result files."""
    path, history = build_market(cfg, path)
    _, _, rep_seeds = derive_seeds(cfg)

    strategy_a_limit = 0.0
    if any(v == "xrpl_cam_a" for v in cfg.variants):
        daily = estimate_history_daily_profits(cfg, history)
        strategy_a_limit = agents.smoothed_bid_limit(daily, cfg.agents.smoothing_alpha)

    jobs = [(cfg, path, i, rep_seeds[i], strategy_a_limit)
            for i in range(cfg.repetitions)]
    results: list[tuple[int, tuple[dict, dict]]] = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool_exec:
            results = list(pool_exec.map(_run_repetition_job, jobs))
    else:
        results = [_run_repetition_job(job) for job in jobs]
    results.sort(key=lambda item: item[0])

    runs_by_variant: dict[str, list[metrics.RunMetrics]] = {v: [] for v in cfg.variants}
    records_by_run: dict[tuple[str, int], list] = {}
    for rep_index, (run_metrics, run_records) in results:
        for variant, rm in run_metrics.items():
            runs_by_variant[variant].append(rm)
            records_by_run[(variant, rep_index)] = run_records[variant]

    report = metrics.aggregate(runs_by_variant)
    if out_dir is not None:
        _emit_outputs(cfg, path, rep_seeds, runs_by_variant, records_by_run,
                      report, Path(out_dir))
    return report


def _emit_outputs(cfg: ScenarioConfig, path: market.PricePath,
                  rep_seeds: list[int],
                  runs_by_variant: dict[str, list[metrics.RunMetrics]],
                  records_by_run: dict[tuple[str, int], list],
                  report: metrics.AggregateReport, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    files: list[str] = []

    market_file = out_dir / f"{cfg.name}_market.csv"
    market.write_csv(path, market_file)
    files.append(market_file.name)

    for variant, runs in runs_by_variant.items():
        for rm in runs:
            stem = f"{cfg.name}_{variant}_{rm.repetition}"
            metrics.write_run_metrics_csv(rm, out_dir / f"{stem}.csv")
            metrics.write_series_csv(rm.deviation_times, rm.deviation_values,
                                     out_dir / f"{stem}_deviation.csv")
            chain.write_records_csv(records_by_run[(variant, rm.repetition)],
                                    out_dir / f"{stem}_records.csv")
            files.extend([f"{stem}.csv", f"{stem}_deviation.csv", f"{stem}_records.csv"])

    agg_file = out_dir / f"{cfg.name}_aggregate.json"
    agg_file.write_text(report.to_json() + "\n")
    files.append(agg_file.name)

    manifest = build_manifest(cfg, rep_seeds, market.RNG_NAME, files)
    write_manifest(manifest, out_dir / f"{cfg.name}_manifest.json")
