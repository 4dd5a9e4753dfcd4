"""Ground-truth-known synthetic scenario generation.

Generates trades, per-offset pool snapshots, and a baseline quote cache
that exercise every pipeline branch. Classic-like trades are produced by
executing the synthetic router itself, so their self-baseline price
improvement is centered on zero; OFA-path trades (X, Fusion) settle with
internalized gas and receive a configurable extra-output bonus that
models access to off-chain liquidity, optionally gated by trade size.

Randomness comes from MT19937 (random.Random) consuming only .random()
draws, with inverse-transform / Box-Muller sampling implemented here, so
a seed fully determines every output byte.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from decimal import Decimal
from pathlib import Path

from swapmeter.errors import InvalidSpec
from swapmeter.ingest import (
    QUOTE_COLUMNS,
    SNAPSHOT_COLUMNS,
    TRADE_COLUMNS,
    quote_to_row,
    snapshot_to_rows,
    trade_to_row,
)
from swapmeter.model import Direction, GasTerms, Pool, Quote, TokenAmount, TradeRecord
from swapmeter.output import write_csv
from swapmeter.router import route_optimal_split

OFA_PATHS = frozenset({"X", "Fusion"})
_PATH_INTERFACE = {"Classic": "Uniswap", "X": "Uniswap", "Aggregator": "1inch", "Fusion": "1inch"}

PROVIDER_ID = "synthetic-router"

_DEFAULT_POOLS = (
    {"pool_id": "CP-30", "reserve_weth": "20000", "reserve_token": "60000000",
     "token_decimals": 6, "fee_bps": 30, "gas_per_hop": 120000},
    {"pool_id": "CP-05", "reserve_weth": "8000", "reserve_token": "24000000",
     "token_decimals": 6, "fee_bps": 5, "gas_per_hop": 120000},
    {"pool_id": "CP-100", "reserve_weth": "600", "reserve_token": "1800000",
     "token_decimals": 6, "fee_bps": 100, "gas_per_hop": 90000},
)

_DEFAULT_PROFILE = {"gas_noise_rel": "0.03", "priority_fee_gwei": ["0.05", "0.15"]}


class PortableRng:
    """Deterministic sampler over MT19937 uniform draws only."""

    def __init__(self, seed: int):
        self._r = random.Random(seed)

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self._r.random()

    def log_uniform(self, lo: float, hi: float) -> float:
        return math.exp(self.uniform(math.log(lo), math.log(hi)))

    def normal(self, mu: float, sigma: float) -> float:
        u1 = 1.0 - self._r.random()  # (0, 1]
        u2 = self._r.random()
        return mu + sigma * math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def pick(self, items: list, weights: list[float]):
        u = self._r.random() * sum(weights)
        acc = 0.0
        for item, w in zip(items, weights):
            acc += w
            if u < acc:
                return item
        return items[-1]


@dataclass(frozen=True, slots=True)
class GasProfile:
    gas_noise_rel: float
    priority_fee_gwei: tuple[float, float]


@dataclass(frozen=True, slots=True)
class ScenarioSpec:
    seed: int
    n_trades: int
    size_min_usd: float
    size_max_usd: float
    path_mix: tuple[tuple[str, float], ...]
    ofa_liquidity_bonus: Decimal
    bonus_min_usd: Decimal | None
    weth_in_fraction: float
    execution_noise_bps: float
    base_fee_gwei: tuple[float, float]
    gas_profiles: dict[str, GasProfile]
    pools: tuple[Pool, ...]
    offsets: tuple[int, ...]
    f_prime_wei: Decimal
    overhead_gas: int


@dataclass(frozen=True, slots=True)
class GeneratedScenario:
    trades_path: Path
    pools_path: Path
    quotes_path: Path


def _pool_from_dict(d: dict) -> Pool:
    weth = Decimal(str(d["reserve_weth"])).scaleb(18)
    token_decimals = int(d["token_decimals"])
    token = Decimal(str(d["reserve_token"])).scaleb(token_decimals)
    if weth != weth.to_integral_value() or token != token.to_integral_value():
        raise InvalidSpec(f"pool {d.get('pool_id')}: reserves must be integral in base units")
    return Pool(
        pool_id=str(d["pool_id"]),
        reserve_weth=TokenAmount(int(weth), 18),
        reserve_token=TokenAmount(int(token), token_decimals),
        fee_bps=int(d["fee_bps"]),
        gas_per_hop=int(d["gas_per_hop"]),
    )


def load_scenario(source: dict | str | Path) -> ScenarioSpec:
    """Build a validated ScenarioSpec from a dict or a JSON file."""
    if isinstance(source, (str, Path)):
        try:
            with open(source, "r", encoding="utf-8") as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidSpec(f"cannot read scenario file: {exc}") from exc
    else:
        raw = dict(source)
    if not isinstance(raw, dict):
        raise InvalidSpec("scenario spec must be a JSON object")

    try:
        seed = int(raw.get("seed", 0))
        n_trades = int(raw.get("n_trades", 100))
        dist = raw.get("size_distribution", {})
        if dist.get("type", "log_uniform") != "log_uniform":
            raise InvalidSpec(f"unsupported size distribution {dist.get('type')!r}")
        size_min = float(dist.get("min_usd", 500))
        size_max = float(dist.get("max_usd", 250_000))
        mix_raw = raw.get("path_mix", {"Classic": 1.0})
        path_mix = tuple((str(k), float(v)) for k, v in mix_raw.items())
        bonus_bps = Decimal(str(raw.get("ofa_liquidity_bonus_bps", "0")))
        gate = raw.get("bonus_min_usd")
        bonus_min = None if gate in (None, "") else Decimal(str(gate))
        weth_in_fraction = float(raw.get("weth_in_fraction", 0.5))
        noise_bps = float(raw.get("execution_noise_bps", 0.5))
        bf_lo, bf_hi = (float(x) for x in raw.get("base_fee_gwei", ["15", "25"]))
        profiles = {}
        prof_raw = raw.get("gas_profiles", {})
        for path, _ in path_mix:
            p = {**_DEFAULT_PROFILE, **prof_raw.get(path, {})}
            lo, hi = (float(x) for x in p["priority_fee_gwei"])
            profiles[path] = GasProfile(float(p["gas_noise_rel"]), (lo, hi))
        pools = tuple(_pool_from_dict(d) for d in raw.get("pools", _DEFAULT_POOLS))
        offsets = tuple(int(x) for x in raw.get("offsets", range(-4, 4)))
        f_prime = Decimal(str(raw.get("f_prime_wei", 100_000_000)))
        overhead = int(raw.get("overhead_gas", 80_000))
    except InvalidSpec:
        raise
    except (KeyError, TypeError, ValueError, ArithmeticError) as exc:
        raise InvalidSpec(f"bad scenario field: {exc}") from exc

    if n_trades <= 0:
        raise InvalidSpec("n_trades must be positive")
    if not 0 < size_min <= size_max:
        raise InvalidSpec("size range must satisfy 0 < min <= max")
    if not path_mix or any(w < 0 for _, w in path_mix):
        raise InvalidSpec("path_mix weights must be nonnegative and nonempty")
    if abs(sum(w for _, w in path_mix) - 1.0) > 1e-9:
        raise InvalidSpec("path_mix weights must sum to 1")
    if bonus_bps < 0:
        raise InvalidSpec("ofa_liquidity_bonus_bps must be nonnegative")
    if not pools:
        raise InvalidSpec("pool universe must be nonempty")
    if len({p.reserve_token.decimals for p in pools}) != 1:
        raise InvalidSpec("all pools must share the token's decimals")
    if not offsets:
        raise InvalidSpec("offsets must be nonempty")
    if not 0.0 <= weth_in_fraction <= 1.0:
        raise InvalidSpec("weth_in_fraction must be in [0, 1]")
    if f_prime < 0:
        raise InvalidSpec("f_prime_wei must be nonnegative")

    return ScenarioSpec(
        seed=seed,
        n_trades=n_trades,
        size_min_usd=size_min,
        size_max_usd=size_max,
        path_mix=path_mix,
        ofa_liquidity_bonus=bonus_bps.scaleb(-4),
        bonus_min_usd=bonus_min,
        weth_in_fraction=weth_in_fraction,
        execution_noise_bps=noise_bps,
        base_fee_gwei=(bf_lo, bf_hi),
        gas_profiles=profiles,
        pools=pools,
        offsets=offsets,
        f_prime_wei=f_prime,
        overhead_gas=overhead,
    )


def _implied_eth_usd(pools: tuple[Pool, ...]) -> Decimal:
    anchor = max(pools, key=lambda p: (p.reserve_weth.raw, p.pool_id))
    return anchor.reserve_token.normalized / anchor.reserve_weth.normalized


def generate(spec: ScenarioSpec, out_dir: str | Path) -> GeneratedScenario:
    """Write trades.csv, pools.csv, and quotes.csv for the scenario."""
    out = Path(out_dir)
    rng = PortableRng(spec.seed)
    eth_usd = _implied_eth_usd(spec.pools)
    token_decimals = spec.pools[0].reserve_token.decimals
    bonus_factor = Decimal(1) + spec.ofa_liquidity_bonus

    trades: list[TradeRecord] = []
    quotes: list[Quote] = []
    paths = [p for p, _ in spec.path_mix]
    weights = [w for _, w in spec.path_mix]

    for idx in range(spec.n_trades):
        trade_id = f"T{idx:06d}"
        usd = Decimal(f"{rng.log_uniform(spec.size_min_usd, spec.size_max_usd):.2f}")
        path = rng.pick(paths, weights)
        direction = (
            Direction.WETH_IN if rng.uniform(0, 1) < spec.weth_in_fraction else Direction.WETH_OUT
        )
        base_fee = int(rng.uniform(*spec.base_fee_gwei) * 1e9)
        profile = spec.gas_profiles[path]
        priority_fee = int(rng.uniform(*profile.priority_fee_gwei) * 1e9)
        gas_noise = rng.uniform(-profile.gas_noise_rel, profile.gas_noise_rel)
        exec_noise = Decimal(1) + Decimal(
            f"{rng.normal(0.0, spec.execution_noise_bps):.9f}"
        ).scaleb(-4)

        if direction is Direction.WETH_IN:
            amount_in = TokenAmount(int(usd / eth_usd * Decimal(10) ** 18), 18)
        else:
            amount_in = TokenAmount(int(usd.scaleb(token_decimals)), token_decimals)
        if amount_in.raw <= 0:
            raise InvalidSpec(f"trade {trade_id}: USD size {usd} maps to zero input")

        gas_price = Decimal(base_fee) + spec.f_prime_wei
        base_route = route_optimal_split(spec.pools, amount_in, direction, gas_price)
        gas_estimate = base_route.total_gas + spec.overhead_gas
        gas_used = max(21_000, int(gas_estimate * (1.0 + gas_noise)))
        gas = GasTerms(gas_used, base_fee, priority_fee)

        bonus_on = path in OFA_PATHS and (
            spec.bonus_min_usd is None or usd >= spec.bonus_min_usd
        )
        factor = (bonus_factor if bonus_on else Decimal(1)) * exec_noise

        if path in OFA_PATHS:
            internalized = True
            if direction is Direction.WETH_IN:
                routed_raw = amount_in.raw - gas.cost_wei
                if routed_raw <= 0:
                    raise InvalidSpec(
                        f"trade {trade_id}: gas cost exceeds input; raise size_min_usd"
                    )
                fill = route_optimal_split(
                    spec.pools, TokenAmount(routed_raw, 18), direction, gas_price
                )
                out_raw = int(Decimal(fill.total_out.raw) * factor)
            else:
                gross_raw = int(Decimal(base_route.total_out.raw) * factor)
                out_raw = gross_raw - gas.cost_wei
                if out_raw <= 0:
                    raise InvalidSpec(
                        f"trade {trade_id}: gas cost exceeds output; raise size_min_usd"
                    )
        else:
            internalized = False
            out_raw = int(Decimal(base_route.total_out.raw) * factor)
        if out_raw <= 0:
            raise InvalidSpec(f"trade {trade_id}: generated output is non-positive")

        out_decimals = token_decimals if direction is Direction.WETH_IN else 18
        trades.append(
            TradeRecord(
                trade_id=trade_id,
                interface=_PATH_INTERFACE.get(path, "Synthetic"),
                path=path,
                block_number=18_000_000 + idx,
                direction=direction,
                gas_internalized=internalized,
                amount_in=amount_in,
                amount_out=TokenAmount(out_raw, out_decimals),
                gas=gas,
                usd_value=usd,
                timestamp=1_700_000_000 + 12 * idx,
            )
        )

        # Pool state is held constant across offsets, so every offset's
        # quote equals the settlement-block route.
        for offset in spec.offsets:
            quotes.append(
                Quote(
                    trade_id=trade_id,
                    offset=offset,
                    out_estimate=base_route.total_out,
                    gas_estimate=Decimal(gas_estimate),
                    provider_id=PROVIDER_ID,
                )
            )

    snapshots = {offset: list(spec.pools) for offset in spec.offsets}
    comment = f"swapmeter synth seed={spec.seed} n_trades={spec.n_trades}"
    trades_path = out / "trades.csv"
    pools_path = out / "pools.csv"
    quotes_path = out / "quotes.csv"
    write_csv(trades_path, TRADE_COLUMNS, [trade_to_row(t) for t in trades], comment)
    write_csv(pools_path, SNAPSHOT_COLUMNS, snapshot_to_rows(snapshots), comment)
    write_csv(quotes_path, QUOTE_COLUMNS, [quote_to_row(q) for q in quotes], comment)
    return GeneratedScenario(trades_path, pools_path, quotes_path)
