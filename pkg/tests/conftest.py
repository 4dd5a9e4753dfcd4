"""Shared fixture builders."""

from decimal import Decimal

import pytest

from swapmeter.ingest import QuoteSet
from swapmeter.baseline import ReplayProvider
from swapmeter.model import Direction, GasTerms, Pool, Quote, TokenAmount, TradeRecord

GWEI = 10**9
WETH = 10**18
USDC = 10**6


def make_trade(
    trade_id="T1",
    interface="Uniswap",
    path="Classic",
    direction=Direction.WETH_IN,
    gas_internalized=False,
    amount_in=None,
    amount_out=None,
    gas_used=150_000,
    base_fee=20 * GWEI,
    priority_fee=1 * GWEI,
    usd_value=Decimal(3000),
    block_number=18_000_000,
    timestamp=1_700_000_000,
) -> TradeRecord:
    if amount_in is None:
        amount_in = (
            TokenAmount(WETH, 18)
            if direction is Direction.WETH_IN
            else TokenAmount(3000 * USDC, 6)
        )
    if amount_out is None:
        amount_out = (
            TokenAmount(3000 * USDC, 6)
            if direction is Direction.WETH_IN
            else TokenAmount(WETH, 18)
        )
    return TradeRecord(
        trade_id=trade_id,
        interface=interface,
        path=path,
        block_number=block_number,
        direction=direction,
        gas_internalized=gas_internalized,
        amount_in=amount_in,
        amount_out=amount_out,
        gas=GasTerms(gas_used, base_fee, priority_fee),
        usd_value=usd_value,
        timestamp=timestamp,
    )


def make_pool(
    pool_id="P1",
    weth=1000,
    token=3_000_000,
    token_decimals=6,
    fee_bps=30,
    gas_per_hop=120_000,
) -> Pool:
    return Pool(
        pool_id=pool_id,
        reserve_weth=TokenAmount(weth * WETH, 18),
        reserve_token=TokenAmount(token * 10**token_decimals, token_decimals),
        fee_bps=fee_bps,
        gas_per_hop=gas_per_hop,
    )


def replay_for(trade_id, offset, out_raw, out_decimals, gas_estimate, provider_id="prov"):
    quote = Quote(
        trade_id=trade_id,
        offset=offset,
        out_estimate=TokenAmount(out_raw, out_decimals),
        gas_estimate=Decimal(gas_estimate),
        provider_id=provider_id,
    )
    return ReplayProvider(QuoteSet([quote]))


@pytest.fixture
def usdc_weth_pool():
    return make_pool()
