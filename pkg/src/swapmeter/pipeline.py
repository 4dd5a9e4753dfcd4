"""End-to-end analysis passes: per-trade attribution and aggregation.

A pass walks every (trade, offset) pair, attributes price improvement,
and records exclusions instead of failing. Aggregation runs the pass up
to three times — nominal, and with the gas-calibration slope shifted up
and down — to obtain systematic bands.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Sequence

from swapmeter.attribution import AttributionResult, attribute_trade
from swapmeter.baseline import BaselineProvider, CalibratedProvider
from swapmeter.calibration import GasCalibration, perturbed_calibrations
from swapmeter.errors import (
    NonPositiveAdjustedInput,
    NonPositiveBaseline,
    QuoteUnavailable,
    SnapshotUnavailable,
)
from swapmeter.model import TradeRecord
from swapmeter.numeric import format_bps
from swapmeter.stats import WeightedEstimate, weighted_mean_with_stat

EXCLUSION_NON_POSITIVE_BASELINE = "non_positive_baseline"
EXCLUSION_QUOTE_UNAVAILABLE = "quote_unavailable"
EXCLUSION_SNAPSHOT_UNAVAILABLE = "snapshot_unavailable"
EXCLUSION_ADJUSTED_INPUT = "non_positive_adjusted_input"

_EXCLUSIONS = {
    NonPositiveBaseline: EXCLUSION_NON_POSITIVE_BASELINE,
    QuoteUnavailable: EXCLUSION_QUOTE_UNAVAILABLE,
    SnapshotUnavailable: EXCLUSION_SNAPSHOT_UNAVAILABLE,
    NonPositiveAdjustedInput: EXCLUSION_ADJUSTED_INPUT,
}

ATTRIBUTION_COLUMNS = [
    "trade_id",
    "offset",
    "pi_bps",
    "pi_routing_bps",
    "pi_gas_bps",
    "pi_fee_bps",
    "pi_remainder_bps",
    "excluded_flag",
    "exclusion_reason",
]

CURVE_COLUMNS = [
    "group",
    "offset",
    "mean_bps",
    "stat_sigma_bps",
    "sys_upper_bps",
    "sys_lower_bps",
    "n",
    "total_weight_usd",
]

ROLLING_COLUMNS = [
    "median_usd",
    "mean_bps",
    "stat_sigma_bps",
    "sys_upper_bps",
    "sys_lower_bps",
    "window_n",
]


@dataclass(frozen=True, slots=True)
class AnalysisRow:
    """One (trade, offset) outcome: an attribution or an exclusion reason."""

    trade: TradeRecord
    offset: int
    result: AttributionResult | None
    exclusion_reason: str | None

    @property
    def excluded(self) -> bool:
        return self.result is None


def analyze_trades(
    trades: Sequence[TradeRecord],
    provider: BaselineProvider,
    offsets: Sequence[int],
    f_prime: Decimal,
) -> list[AnalysisRow]:
    """Attribute every trade at every offset, ordered by (trade_id, offset)."""
    rows: list[AnalysisRow] = []
    for trade in trades:
        for offset in offsets:
            try:
                result = attribute_trade(trade, provider, offset, f_prime)
                rows.append(AnalysisRow(trade, offset, result, None))
            except tuple(_EXCLUSIONS) as exc:
                rows.append(AnalysisRow(trade, offset, None, _EXCLUSIONS[type(exc)]))
    rows.sort(key=lambda r: (r.trade.trade_id, r.offset))
    return rows


def attribution_csv_rows(rows: Sequence[AnalysisRow]) -> list[list[str]]:
    out = []
    for row in rows:
        if row.result is None:
            out.append(
                [row.trade.trade_id, str(row.offset), "", "", "", "", "", "true", row.exclusion_reason]
            )
        else:
            r = row.result
            out.append(
                [
                    r.trade_id,
                    str(r.offset),
                    format_bps(r.pi),
                    format_bps(r.pi_routing),
                    format_bps(r.pi_gas),
                    format_bps(r.pi_fee),
                    format_bps(r.pi_remainder),
                    "false",
                    "",
                ]
            )
    return out


def exclusion_counts(rows: Sequence[AnalysisRow]) -> dict[str, int]:
    counts: dict[str, int] = {}
    for row in rows:
        if row.exclusion_reason is not None:
            counts[row.exclusion_reason] = counts.get(row.exclusion_reason, 0) + 1
    return dict(sorted(counts.items()))


@dataclass(frozen=True, slots=True)
class CurvePoint:
    group: str
    offset: int
    estimate: WeightedEstimate


@dataclass(slots=True)
class AggregateReport:
    """Curves, rolling series, and per-path attribution summary."""

    curves: list[CurvePoint] = field(default_factory=list)
    rolling: list[tuple[Decimal, WeightedEstimate]] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    exclusions: dict[str, int] = field(default_factory=dict)
    anchor_offset: int = 0


def _weighted_rows(rows: Sequence[AnalysisRow]) -> list[AnalysisRow]:
    return [r for r in rows if not r.excluded and r.trade.usd_value is not None]


def _group_key(row: AnalysisRow, level: str) -> str:
    return row.trade.path if level == "path" else row.trade.interface


def _group_mean(rows: Sequence[AnalysisRow], metric) -> dict[tuple[str, str, int], tuple]:
    """(level, group, offset) -> (mean, sigma, n, total_w); thin groups dropped."""
    buckets: dict[tuple[str, str, int], list[tuple[Decimal, Decimal]]] = {}
    for row in _weighted_rows(rows):
        for level in ("path", "interface"):
            key = (level, _group_key(row, level), row.offset)
            buckets.setdefault(key, []).append((metric(row.result), row.trade.usd_value))
    out = {}
    for key, values in buckets.items():
        if len(values) < 2:
            warnings.warn(f"skipping group {key}: fewer than 2 weighted trades")
            continue
        mean, sigma = weighted_mean_with_stat(values)
        out[key] = (mean, sigma, len(values), sum(w for _, w in values))
    return out


def run_aggregate(
    trades: Sequence[TradeRecord],
    raw_provider: BaselineProvider,
    calibration: GasCalibration | None,
    offsets: Sequence[int],
    f_prime: Decimal,
    window: int,
    stride: int = 1,
    sys_multiplier: Decimal | int = 1,
) -> AggregateReport:
    """Three-pass aggregation with statistical and systematic uncertainty."""

    def pass_rows(cal: GasCalibration | None) -> list[AnalysisRow]:
        provider = raw_provider if cal is None else CalibratedProvider(raw_provider, cal)
        return analyze_trades(trades, provider, offsets, f_prime)

    nominal = pass_rows(calibration)
    if calibration is not None and calibration.beta1_se > 0:
        upper_cal, lower_cal = perturbed_calibrations(calibration, sys_multiplier)
        upper = pass_rows(upper_cal)
        lower = pass_rows(lower_cal)
    else:
        upper = lower = None

    def pi(res: AttributionResult) -> Decimal:
        return res.pi

    base_means = _group_mean(nominal, pi)
    up_means = _group_mean(upper, pi) if upper is not None else {}
    low_means = _group_mean(lower, pi) if lower is not None else {}

    report = AggregateReport(exclusions=exclusion_counts(nominal))
    sorted_offsets = sorted(set(offsets))
    report.anchor_offset = 0 if 0 in sorted_offsets else sorted(
        sorted_offsets, key=lambda t: (abs(t), t)
    )[0]

    for (level, group, offset), (mean, sigma, n, total_w) in sorted(base_means.items()):
        sys_up = abs(up_means[(level, group, offset)][0] - mean) if (level, group, offset) in up_means else Decimal(0)
        sys_low = abs(mean - low_means[(level, group, offset)][0]) if (level, group, offset) in low_means else Decimal(0)
        report.curves.append(
            CurvePoint(
                group=f"{level}:{group}",
                offset=offset,
                estimate=WeightedEstimate(mean, sigma, sys_up, sys_low, n, total_w),
            )
        )

    # Rolling-by-size series at the anchor offset, all groups pooled.
    anchor = report.anchor_offset
    nominal_anchor = [r for r in _weighted_rows(nominal) if r.offset == anchor]
    if len(nominal_anchor) >= 2:
        eff_window = min(window, len(nominal_anchor))
        if eff_window < window:
            warnings.warn(
                f"rolling window {window} exceeds {len(nominal_anchor)} trades; "
                f"using {eff_window}"
            )
        perturbed_pi = {}
        for tag, rows in (("up", upper), ("low", lower)):
            if rows is None:
                continue
            perturbed_pi[tag] = {
                r.trade.trade_id: r.result.pi
                for r in _weighted_rows(rows)
                if r.offset == anchor
            }
        report.rolling = _rolling_with_bands(nominal_anchor, eff_window, stride, perturbed_pi)

    report.summary = _summary(nominal, up_means, low_means, base_means, anchor)
    return report


def _rolling_with_bands(
    anchor_rows: Sequence[AnalysisRow],
    window: int,
    stride: int,
    perturbed_pi: dict[str, dict[str, Decimal]],
) -> list[tuple[Decimal, WeightedEstimate]]:
    """Rolling series where each window also gets systematic half-widths.

    Window membership is fixed by the nominal pass; perturbed means are
    taken over the same members (those still valued under perturbation).
    """
    ordered = sorted(anchor_rows, key=lambda r: (r.trade.usd_value, r.trade.trade_id))
    out = []
    for start in range(0, len(ordered) - window + 1, stride):
        chunk = ordered[start : start + window]
        sizes = [r.trade.usd_value for r in chunk]
        mid = window // 2
        median = sizes[mid] if window % 2 else (sizes[mid - 1] + sizes[mid]) / 2
        mean, sigma = weighted_mean_with_stat(
            [(r.result.pi, r.trade.usd_value) for r in chunk]
        )
        bands = {"up": Decimal(0), "low": Decimal(0)}
        for tag, values in perturbed_pi.items():
            member = [
                (values[r.trade.trade_id], r.trade.usd_value)
                for r in chunk
                if r.trade.trade_id in values
            ]
            if len(member) >= 2:
                p_mean, _ = weighted_mean_with_stat(member)
                bands[tag] = abs(p_mean - mean)
        out.append(
            (
                median,
                WeightedEstimate(mean, sigma, bands["up"], bands["low"], window, sum(sizes)),
            )
        )
    return out


def _summary(nominal, up_means, low_means, base_means, anchor: int) -> dict:
    """Per-path and per-interface attribution decomposition at the anchor offset."""
    metrics = {
        "pi": lambda r: r.pi,
        "routing": lambda r: r.pi_routing,
        "gas": lambda r: r.pi_gas,
        "fee": lambda r: r.pi_fee,
        "remainder": lambda r: r.pi_remainder,
    }
    summary: dict = {"by_path": {}, "by_interface": {}, "anchor_offset": anchor}
    anchor_rows = [r for r in _weighted_rows(nominal) if r.offset == anchor]
    for level, bucket in (("path", "by_path"), ("interface", "by_interface")):
        groups = sorted({_group_key(r, level) for r in anchor_rows})
        for group in groups:
            rows = [r for r in anchor_rows if _group_key(r, level) == group]
            if len(rows) < 2:
                continue
            entry: dict = {}
            for name, metric in metrics.items():
                mean, sigma = weighted_mean_with_stat(
                    [(metric(r.result), r.trade.usd_value) for r in rows]
                )
                entry[f"{name}_bps"] = format_bps(mean)
                if name == "pi":
                    entry["pi_stat_sigma_bps"] = format_bps(sigma)
            key = (level, group, anchor)
            if key in base_means and key in up_means:
                base = base_means[key][0]
                entry["pi_sys_upper_bps"] = format_bps(abs(up_means[key][0] - base))
                entry["pi_sys_lower_bps"] = format_bps(abs(base - low_means[key][0]))
            entry["n"] = len(rows)
            entry["total_weight_usd"] = str(sum(r.trade.usd_value for r in rows))
            summary[bucket][group] = entry
    return summary


def curve_csv_rows(report: AggregateReport) -> list[list[str]]:
    rows = []
    for point in report.curves:
        e = point.estimate
        rows.append(
            [
                point.group,
                str(point.offset),
                format_bps(e.mean),
                format_bps(e.stat_sigma),
                format_bps(e.sys_upper),
                format_bps(e.sys_lower),
                str(e.n),
                str(e.total_weight),
            ]
        )
    return rows


def rolling_csv_rows(report: AggregateReport) -> list[list[str]]:
    rows = []
    for median, est in report.rolling:
        rows.append(
            [
                str(median),
                format_bps(est.mean),
                format_bps(est.stat_sigma),
                format_bps(est.sys_upper),
                format_bps(est.sys_lower),
                str(est.n),
            ]
        )
    return rows
