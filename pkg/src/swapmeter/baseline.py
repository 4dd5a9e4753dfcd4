"""Baseline quote providers: replay of recorded quotes and a synthetic router.

A provider maps (trade, block offset) to a counterfactual quote
(o', g'). Providers are deterministic and read-only after construction,
so they may be shared across parallel workers.
"""

from __future__ import annotations

import abc
from decimal import Decimal
from typing import Mapping, Sequence

from swapmeter.errors import QuoteUnavailable, SnapshotUnavailable
from swapmeter.ingest import QuoteSet
from swapmeter.model import Pool, Quote, TokenAmount, TradeRecord
from swapmeter.router import route_optimal_split

DEFAULT_OVERHEAD_GAS = 80_000


class BaselineProvider(abc.ABC):
    """Contract for the baseline function mapping (input, offset) -> (o', g')."""

    provider_id: str

    @abc.abstractmethod
    def quote(
        self, trade: TradeRecord, offset: int, amount_in: TokenAmount | None = None
    ) -> Quote:
        """Quote the trade at the given offset.

        amount_in overrides the trade's input (used for the gas-adjusted
        re-quote of gas-internalized WETH-in trades); None means the
        trade's own amount.
        """

    @abc.abstractmethod
    def supported_offsets(self) -> tuple[int, ...]:
        ...


class ReplayProvider(BaselineProvider):
    """Serves quotes recorded in a quote file.

    Re-quotes at an adjusted input are served by linear rescaling of the
    stored output (o'' = o' * i''/i, gas unchanged): the replay curve is
    exactly linear through the recorded point.
    """

    def __init__(self, quotes: QuoteSet, provider_id: str | None = None):
        providers = quotes.providers()
        if provider_id is None:
            if len(providers) != 1:
                raise ValueError(
                    f"quote set has providers {providers}; pass provider_id explicitly"
                )
            provider_id = providers[0]
        self.provider_id = provider_id
        self._quotes = quotes

    def supported_offsets(self) -> tuple[int, ...]:
        return tuple(self._quotes.offsets(self.provider_id))

    def quote(
        self, trade: TradeRecord, offset: int, amount_in: TokenAmount | None = None
    ) -> Quote:
        stored = self._quotes.get(trade.trade_id, offset, self.provider_id)
        if stored is None:
            raise QuoteUnavailable(trade.trade_id, offset, f"provider {self.provider_id!r}")
        if amount_in is None or amount_in.raw == trade.amount_in.raw:
            return stored
        scaled_raw = stored.out_estimate.raw * amount_in.raw // trade.amount_in.raw
        return Quote(
            trade_id=stored.trade_id,
            offset=stored.offset,
            out_estimate=TokenAmount(scaled_raw, stored.out_estimate.decimals),
            gas_estimate=stored.gas_estimate,
            provider_id=stored.provider_id,
            corrected=stored.corrected,
        )


class SyntheticRouterProvider(BaselineProvider):
    """Optimal-split CPMM routing over per-offset pool snapshots.

    Gas estimates are the route's hop gas plus a fixed per-transaction
    overhead. The routing objective prices gas at the trade's base fee
    plus the configured baseline priority fee.
    """

    def __init__(
        self,
        snapshots: Mapping[int, Sequence[Pool]],
        f_prime_wei: Decimal,
        *,
        overhead_gas: int = DEFAULT_OVERHEAD_GAS,
        provider_id: str = "synthetic-router",
    ):
        self._snapshots = {k: tuple(v) for k, v in snapshots.items()}
        self._f_prime = Decimal(f_prime_wei)
        self._overhead = overhead_gas
        self.provider_id = provider_id

    def supported_offsets(self) -> tuple[int, ...]:
        return tuple(sorted(self._snapshots))

    def quote(
        self, trade: TradeRecord, offset: int, amount_in: TokenAmount | None = None
    ) -> Quote:
        pools = self._snapshots.get(offset)
        if pools is None:
            raise SnapshotUnavailable(offset)
        amount = trade.amount_in if amount_in is None else amount_in
        gas_price = Decimal(trade.gas.base_fee) + self._f_prime
        route = route_optimal_split(pools, amount, trade.direction, gas_price)
        return Quote(
            trade_id=trade.trade_id,
            offset=offset,
            out_estimate=route.total_out,
            gas_estimate=Decimal(route.total_gas + self._overhead),
            provider_id=self.provider_id,
        )


class CalibratedProvider(BaselineProvider):
    """Wraps a provider and bias-corrects every served gas estimate."""

    def __init__(self, inner: BaselineProvider, calibration):
        from swapmeter.calibration import correct_gas

        self._inner = inner
        self._calibration = calibration
        self._correct = correct_gas
        self.provider_id = inner.provider_id

    def supported_offsets(self) -> tuple[int, ...]:
        return self._inner.supported_offsets()

    def quote(
        self, trade: TradeRecord, offset: int, amount_in: TokenAmount | None = None
    ) -> Quote:
        return self._correct(self._inner.quote(trade, offset, amount_in), self._calibration)
