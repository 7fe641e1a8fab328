"""Scenario configuration: schema, validation, preset catalog, manifests.

Scenario files are flat ``key = value`` text; dotted keys group related
settings.  Presets ship as golden files inside the package so a loaded
preset byte-compares to its committed source.
"""
from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

VALID_VARIANTS = ("xrpl_amm", "xrpl_cam_a", "xrpl_cam_b", "g_amm")
CAM_VARIANTS = ("xrpl_cam_a", "xrpl_cam_b")

PRESET_NAMES = [
    "test1", "test2",
    "cam-vol-5", "cam-vol-12.5", "cam-vol-20",
    "cam-test1", "cam-test2",
]

SOFTWARE_VERSION = "0.1.0"


class ScenarioError(ValueError):
    """Malformed, incomplete or out-of-range scenario configuration."""


@dataclass(frozen=True)
class GbmConfig:
    s0: float
    mu: float
    sigma: float
    points_per_day: int
    days: int
    history_days: int


@dataclass(frozen=True)
class AgentConfig:
    safe_profit_margin: float
    max_slippage: float
    smoothing_alpha: float


@dataclass(frozen=True)
class VariantChainConfig:
    block_interval_s: float
    network_fee_usdc: float


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    variants: tuple[str, ...]
    repetitions: int
    master_seed: int
    reserve_a_eth: float
    reserve_b_usdc: float
    trading_fee: float
    market_tick_seconds: float
    user_decision_interval_s: float
    arb_identities: int
    gbm: GbmConfig
    agents: AgentConfig
    chains: dict[str, VariantChainConfig] = field(default_factory=dict)

    @property
    def day_seconds(self) -> float:
        """One trading day on the simulation clock (one full market cycle)."""
        return self.gbm.points_per_day * self.market_tick_seconds

    def digest(self) -> str:
        return hashlib.sha256(canonical_text(self).encode()).hexdigest()


_REQUIRED_KEYS = [
    "name", "variants", "repetitions", "master_seed",
    "reserve_a_eth", "reserve_b_usdc", "trading_fee",
    "market_tick_seconds", "user_decision_interval_s", "arb_identities",
    "gbm.s0", "gbm.mu", "gbm.sigma", "gbm.points_per_day", "gbm.days",
    "gbm.history_days",
    "agents.safe_profit_margin", "agents.max_slippage", "agents.smoothing_alpha",
]


def parse_key_values(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; '#' starts a comment, blanks are skipped."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ScenarioError(f"line {lineno}: empty key")
        if key in out:
            raise ScenarioError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def _to_float(key: str, value: str) -> float:
    try:
        return float(value)
    except ValueError as exc:
        raise ScenarioError(f"{key}: not a number: {value!r}") from exc


def _to_int(key: str, value: str) -> int:
    try:
        return int(value)
    except ValueError as exc:
        raise ScenarioError(f"{key}: not an integer: {value!r}") from exc


def scenario_from_mapping(kv: dict[str, str]) -> ScenarioConfig:
    missing = [k for k in _REQUIRED_KEYS if k not in kv]
    if missing:
        raise ScenarioError(f"missing required fields: {', '.join(missing)}")

    variants = tuple(v.strip() for v in kv["variants"].split(",") if v.strip())
    if not variants:
        raise ScenarioError("variants: at least one variant required")
    for v in variants:
        if v not in VALID_VARIANTS:
            raise ScenarioError(
                f"variants: unknown variant {v!r}; valid: {', '.join(VALID_VARIANTS)}")
    if len(set(variants)) != len(variants):
        raise ScenarioError("variants: duplicates not allowed")

    chain_keys = {k for k in kv if k.startswith("chain.")}
    expected_chain_keys = set()
    chains: dict[str, VariantChainConfig] = {}
    for v in variants:
        bi_key = f"chain.{v}.block_interval_s"
        fee_key = f"chain.{v}.network_fee_usdc"
        expected_chain_keys.update((bi_key, fee_key))
        if bi_key not in kv or fee_key not in kv:
            raise ScenarioError(f"missing chain parameters for variant {v!r}")
        chains[v] = VariantChainConfig(
            block_interval_s=_to_float(bi_key, kv[bi_key]),
            network_fee_usdc=_to_float(fee_key, kv[fee_key]),
        )
    unknown_chain = chain_keys - expected_chain_keys
    known = set(_REQUIRED_KEYS) | expected_chain_keys
    unknown = (set(kv) - known) | unknown_chain
    if unknown:
        raise ScenarioError(f"unknown fields: {', '.join(sorted(unknown))}")

    cfg = ScenarioConfig(
        name=kv["name"],
        variants=variants,
        repetitions=_to_int("repetitions", kv["repetitions"]),
        master_seed=_to_int("master_seed", kv["master_seed"]),
        reserve_a_eth=_to_float("reserve_a_eth", kv["reserve_a_eth"]),
        reserve_b_usdc=_to_float("reserve_b_usdc", kv["reserve_b_usdc"]),
        trading_fee=_to_float("trading_fee", kv["trading_fee"]),
        market_tick_seconds=_to_float("market_tick_seconds", kv["market_tick_seconds"]),
        user_decision_interval_s=_to_float(
            "user_decision_interval_s", kv["user_decision_interval_s"]),
        arb_identities=_to_int("arb_identities", kv["arb_identities"]),
        gbm=GbmConfig(
            s0=_to_float("gbm.s0", kv["gbm.s0"]),
            mu=_to_float("gbm.mu", kv["gbm.mu"]),
            sigma=_to_float("gbm.sigma", kv["gbm.sigma"]),
            points_per_day=_to_int("gbm.points_per_day", kv["gbm.points_per_day"]),
            days=_to_int("gbm.days", kv["gbm.days"]),
            history_days=_to_int("gbm.history_days", kv["gbm.history_days"]),
        ),
        agents=AgentConfig(
            safe_profit_margin=_to_float(
                "agents.safe_profit_margin", kv["agents.safe_profit_margin"]),
            max_slippage=_to_float("agents.max_slippage", kv["agents.max_slippage"]),
            smoothing_alpha=_to_float(
                "agents.smoothing_alpha", kv["agents.smoothing_alpha"]),
        ),
        chains=chains,
    )
    _validate(cfg)
    return cfg


def _validate(cfg: ScenarioConfig) -> None:
    errors: list[str] = []
    if cfg.repetitions < 1:
        errors.append("repetitions must be >= 1")
    if cfg.reserve_a_eth <= 0 or cfg.reserve_b_usdc <= 0:
        errors.append("initial reserves must be positive")
    if not (0 <= cfg.trading_fee <= 0.01):
        errors.append("trading_fee must lie in [0, 0.01]")
    if cfg.market_tick_seconds <= 0:
        errors.append("market_tick_seconds must be positive")
    if cfg.arb_identities < 1:
        errors.append("arb_identities must be >= 1")
    if cfg.gbm.s0 <= 0:
        errors.append("gbm.s0 must be positive")
    if cfg.gbm.sigma < 0:
        errors.append("gbm.sigma must be nonnegative")
    if cfg.gbm.points_per_day < 1 or cfg.gbm.days < 1:
        errors.append("gbm.points_per_day and gbm.days must be >= 1")
    if cfg.gbm.history_days < 0:
        errors.append("gbm.history_days must be >= 0")
    if not (0 <= cfg.agents.safe_profit_margin < 1):
        errors.append("agents.safe_profit_margin must lie in [0, 1)")
    if cfg.agents.max_slippage < 0:
        errors.append("agents.max_slippage must be nonnegative")
    if not (0 < cfg.agents.smoothing_alpha <= 1):
        errors.append("agents.smoothing_alpha must lie in (0, 1]")
    tick = cfg.market_tick_seconds
    if _off_grid(cfg.user_decision_interval_s, tick):
        errors.append("user_decision_interval_s must be a multiple of market_tick_seconds")
    for name, chain in cfg.chains.items():
        if chain.block_interval_s <= 0:
            errors.append(f"chain.{name}.block_interval_s must be positive")
        elif _off_grid(chain.block_interval_s, tick):
            errors.append(
                f"chain.{name}.block_interval_s must be a multiple of market_tick_seconds")
        if chain.network_fee_usdc < 0:
            errors.append(f"chain.{name}.network_fee_usdc must be nonnegative")
    needs_history = any(v in CAM_VARIANTS for v in cfg.variants)
    if needs_history and cfg.gbm.history_days < 1:
        errors.append("auction-slot strategies need gbm.history_days >= 1")
    if errors:
        raise ScenarioError("; ".join(errors))


def _off_grid(value: float, tick: float) -> bool:
    ratio = value / tick
    return abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1


def canonical_text(cfg: ScenarioConfig) -> str:
    """Stable serialization used for digests and golden comparisons."""
    kv: dict[str, str] = {
        "name": cfg.name,
        "variants": ", ".join(cfg.variants),
        "repetitions": str(cfg.repetitions),
        "master_seed": str(cfg.master_seed),
        "reserve_a_eth": repr(cfg.reserve_a_eth),
        "reserve_b_usdc": repr(cfg.reserve_b_usdc),
        "trading_fee": repr(cfg.trading_fee),
        "market_tick_seconds": repr(cfg.market_tick_seconds),
        "user_decision_interval_s": repr(cfg.user_decision_interval_s),
        "arb_identities": str(cfg.arb_identities),
        "gbm.s0": repr(cfg.gbm.s0),
        "gbm.mu": repr(cfg.gbm.mu),
        "gbm.sigma": repr(cfg.gbm.sigma),
        "gbm.points_per_day": str(cfg.gbm.points_per_day),
        "gbm.days": str(cfg.gbm.days),
        "gbm.history_days": str(cfg.gbm.history_days),
        "agents.safe_profit_margin": repr(cfg.agents.safe_profit_margin),
        "agents.max_slippage": repr(cfg.agents.max_slippage),
        "agents.smoothing_alpha": repr(cfg.agents.smoothing_alpha),
    }
    for v in cfg.variants:
        kv[f"chain.{v}.block_interval_s"] = repr(cfg.chains[v].block_interval_s)
        kv[f"chain.{v}.network_fee_usdc"] = repr(cfg.chains[v].network_fee_usdc)
    return "\n".join(f"{k} = {kv[k]}" for k in sorted(kv)) + "\n"


def preset_text(name: str) -> str:
    """Raw bytes of a committed preset file (golden copy)."""
    if name not in PRESET_NAMES:
        raise ScenarioError(
            f"unknown preset {name!r}; available: {', '.join(PRESET_NAMES)}")
    return resources.files("ammsim.presets").joinpath(f"{name}.cfg").read_text()


def load_scenario(name_or_path: str | Path) -> ScenarioConfig:
    """Load a scenario from the preset catalog or a config file path."""
    name = str(name_or_path)
    if name in PRESET_NAMES:
        return scenario_from_mapping(parse_key_values(preset_text(name)))
    path = Path(name_or_path)
    if path.exists():
        return scenario_from_mapping(parse_key_values(path.read_text()))
    raise ScenarioError(
        f"{name!r} is neither a preset ({', '.join(PRESET_NAMES)}) nor a config file")


def build_manifest(cfg: ScenarioConfig, rep_seeds: list[int], rng_name: str,
                   files: list[str]) -> dict:
    return {
        "scenario": cfg.name,
        "config_digest": cfg.digest(),
        "rng": rng_name,
        "repetition_seeds": rep_seeds,
        "software_version": SOFTWARE_VERSION,
        "files": sorted(files),
        "created_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }


def write_manifest(manifest: dict, file_path: str | Path) -> None:
    with open(file_path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
