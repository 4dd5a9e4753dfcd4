"""Gas-estimate bias calibration.

Baseline gas estimates g' carry a systematic bias relative to realized
gas g. A through-origin regression g' ~ beta1 * g estimates the bias;
corrected estimates are g'/beta1. The slope's standard error feeds the
systematic uncertainty band downstream.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from decimal import Decimal
from typing import Iterable

from swapmeter.errors import AlreadyCorrected, DegenerateRegressor, InsufficientData
from swapmeter.ingest import QuoteSet
from swapmeter.model import Quote


@dataclass(frozen=True, slots=True)
class GasCalibration:
    """Fitted bias slope beta1 with its standard error and fit summary."""

    beta1: Decimal
    beta1_se: Decimal
    n_points: int
    residual_mean: Decimal
    residual_stddev: Decimal

    def __post_init__(self):
        if self.beta1 <= 0:
            raise ValueError("beta1 must be positive")
        if self.beta1_se < 0:
            raise ValueError("beta1_se must be nonnegative")

    def as_dict(self) -> dict:
        return {
            "beta1": str(self.beta1),
            "beta1_se": str(self.beta1_se),
            "n_points": self.n_points,
            "residual_mean": str(self.residual_mean),
            "residual_stddev": str(self.residual_stddev),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GasCalibration":
        return cls(
            beta1=Decimal(d["beta1"]),
            beta1_se=Decimal(d["beta1_se"]),
            n_points=int(d["n_points"]),
            residual_mean=Decimal(d["residual_mean"]),
            residual_stddev=Decimal(d["residual_stddev"]),
        )


def fit_gas_bias(pairs: Iterable[tuple[int | Decimal, Decimal]]) -> GasCalibration:
    """Through-origin least squares of estimates g' on realized gas g.

    beta1 = sum(g*g') / sum(g^2)
    se    = sqrt( sum((g' - beta1*g)^2) / ((n-1) * sum(g^2)) )
    """
    data = [(Decimal(g), Decimal(g_est)) for g, g_est in pairs]
    if len(data) < 2:
        raise InsufficientData(f"gas calibration needs >= 2 pairs, got {len(data)}")
    if any(g <= 0 for g, _ in data):
        raise DegenerateRegressor("all realized gas values must be positive")

    n = len(data)
    sum_gg = sum(g * g for g, _ in data)
    sum_gq = sum(g * q for g, q in data)
    beta1 = sum_gq / sum_gg
    if beta1 <= 0:
        raise DegenerateRegressor("fitted beta1 is non-positive")
    ss_resid = sum((q - beta1 * g) ** 2 for g, q in data)
    se = (ss_resid / ((n - 1) * sum_gg)).sqrt()

    ratios = [q / g for g, q in data]
    mean = sum(ratios) / n
    var = sum((r - mean) ** 2 for r in ratios) / (n - 1)
    return GasCalibration(
        beta1=beta1,
        beta1_se=se,
        n_points=n,
        residual_mean=mean,
        residual_stddev=var.sqrt(),
    )


def correct_gas(quote: Quote, cal: GasCalibration) -> Quote:
    """Replace g' by g'/beta1. Must be applied exactly once per quote."""
    if quote.corrected:
        raise AlreadyCorrected(f"quote {quote.key} was already corrected")
    return replace(quote, gas_estimate=quote.gas_estimate / cal.beta1, corrected=True)


def correct_quote_set(quotes: QuoteSet, cal: GasCalibration) -> QuoteSet:
    """Correct every quote in a set; the set-level flag guards re-application."""
    if quotes.corrected:
        raise AlreadyCorrected("quote set was already corrected")
    return QuoteSet((correct_gas(q, cal) for q in quotes), corrected=True)


def perturbed_calibrations(
    cal: GasCalibration, multiplier: Decimal | int = 1
) -> tuple[GasCalibration, GasCalibration]:
    """Calibrations at beta1 +/- multiplier*beta1_se for systematic bands.

    A non-positive lower slope cannot divide gas estimates; it is clamped
    to beta1/2 with a warning.
    """
    delta = Decimal(multiplier) * cal.beta1_se
    upper = replace(cal, beta1=cal.beta1 + delta)
    low = cal.beta1 - delta
    if low <= 0:
        warnings.warn(
            f"beta1 - {multiplier}*se = {low} is non-positive; clamping lower "
            f"calibration to beta1/2",
            stacklevel=2,
        )
        low = cal.beta1 / 2
    lower = replace(cal, beta1=low)
    return upper, lower
