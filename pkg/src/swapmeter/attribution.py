"""Price improvement and its first-order decomposition.

Price improvement is pi = (p - p') / p'. Expanding the price function
around the baseline decision vector x' = (o', g', f') splits pi into a
routing term (output difference), a gas term (gas-units difference), a
fee term (priority-fee difference), and a remainder:

    pi = dp/do * (o-o')/p' + dp/dg * (g-g')/p' + dp/df * (f-f')/p' + rem

The remainder is computed as the exact residual, so the four components
always sum to pi to arithmetic precision. The partials use the
external-gas price forms; gas-internalized trades are first converted
via the gross reconstruction in `prices.realized_decision_vector`.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal

from swapmeter.baseline import BaselineProvider
from swapmeter.errors import (
    NonPositiveAdjustedInput,
    NonPositiveBaseline,
    QuoteUnavailable,
    SnapshotUnavailable,
)
from swapmeter.model import Direction, TradeRecord
from swapmeter.prices import (
    DecisionVector,
    Price,
    counterfactual_price,
    realized_decision_vector,
    realized_price,
)

WEI_IN_ETH = Decimal(10) ** -18


@dataclass(frozen=True, slots=True)
class AttributionResult:
    """pi and its components for one trade at one offset.

    Invariant: pi == pi_routing + pi_gas + pi_fee + pi_remainder exactly
    (the remainder is defined as the residual).
    """

    trade_id: str
    offset: int
    pi: Decimal
    pi_routing: Decimal
    pi_gas: Decimal
    pi_fee: Decimal
    pi_remainder: Decimal
    x: DecisionVector
    x_prime: DecisionVector
    p: Price
    p_prime: Price


def price_improvement(p: Price, p_prime: Price) -> Decimal:
    """Relative difference (p - p')/p'; requires a positive baseline."""
    if p_prime.value <= 0:
        raise NonPositiveBaseline(f"baseline price {p_prime.value} is not positive")
    return (p.value - p_prime.value) / p_prime.value


def pi_curve(
    trade: TradeRecord,
    baseline: BaselineProvider,
    offsets: list[int] | tuple[int, ...],
    f_prime: Decimal,
) -> tuple[list[tuple[int, Decimal]], list[tuple[int, str]]]:
    """Price improvement across block offsets; unavailable offsets become gaps."""
    p = realized_price(trade)
    points: list[tuple[int, Decimal]] = []
    gaps: list[tuple[int, str]] = []
    for offset in offsets:
        try:
            p_prime, _ = counterfactual_price(trade, baseline, offset, f_prime)
            points.append((offset, price_improvement(p, p_prime)))
        except (
            QuoteUnavailable,
            SnapshotUnavailable,
            NonPositiveAdjustedInput,
            NonPositiveBaseline,
        ) as exc:
            gaps.append((offset, type(exc).__name__))
    return points, gaps


def partials_at_baseline(
    trade: TradeRecord, x_prime: DecisionVector, f_prime: Decimal
) -> tuple[Decimal, Decimal, Decimal]:
    """(dp/do, dp/dg, dp/df) of the external-gas price form, evaluated at x'.

    WETH in:  D = i + g'(b+f')*1e-18
              dp/do = 1/D, dp/dg = -o'(b+f')*1e-18/D^2, dp/df = -o'g'*1e-18/D^2
    WETH out: dp/do = 1/i, dp/dg = -(b+f')*1e-18/i,     dp/df = -g'*1e-18/i
    """
    i = trade.amount_in.normalized
    per_gas = (Decimal(trade.gas.base_fee) + f_prime) * WEI_IN_ETH
    if trade.direction is Direction.WETH_OUT:
        return (
            Decimal(1) / i,
            -per_gas / i,
            -x_prime.g * WEI_IN_ETH / i,
        )
    o_prime = x_prime.o.normalized
    d = i + x_prime.g * per_gas
    return (
        Decimal(1) / d,
        -o_prime * per_gas / (d * d),
        -o_prime * x_prime.g * WEI_IN_ETH / (d * d),
    )


def attribute(
    trade: TradeRecord,
    x: DecisionVector,
    x_prime: DecisionVector,
    p: Price,
    p_prime: Price,
    offset: int = 0,
) -> AttributionResult:
    """Decompose pi into routing / gas / fee contributions plus the residual."""
    pi = price_improvement(p, p_prime)
    dp_do, dp_dg, dp_df = partials_at_baseline(trade, x_prime, x_prime.f)
    pv = p_prime.value
    pi_routing = dp_do * (x.o.normalized - x_prime.o.normalized) / pv
    pi_gas = dp_dg * (x.g - x_prime.g) / pv
    pi_fee = dp_df * (x.f - x_prime.f) / pv
    pi_remainder = pi - (pi_routing + pi_gas + pi_fee)
    return AttributionResult(
        trade_id=trade.trade_id,
        offset=offset,
        pi=pi,
        pi_routing=pi_routing,
        pi_gas=pi_gas,
        pi_fee=pi_fee,
        pi_remainder=pi_remainder,
        x=x,
        x_prime=x_prime,
        p=p,
        p_prime=p_prime,
    )


def attribute_trade(
    trade: TradeRecord, baseline: BaselineProvider, offset: int, f_prime: Decimal
) -> AttributionResult:
    """Full per-trade attribution against a baseline provider at one offset."""
    p = realized_price(trade)
    x = realized_decision_vector(trade)
    p_prime, x_prime = counterfactual_price(trade, baseline, offset, f_prime)
    return attribute(trade, x, x_prime, p, p_prime, offset=offset)
