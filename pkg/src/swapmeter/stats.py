"""USD-weighted means with statistical and systematic uncertainty.

The statistical part is the weighted standard error on the weighted
mean,

    sigma_stat^2 = sum_i w_i (xbar - x_i)^2 / (n * sum_j w_j)

and the systematic part comes from re-evaluating the pipeline with the
gas-calibration slope shifted by +/- its standard error, one side at a
time.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from decimal import Decimal
from typing import Callable, Iterable, Sequence

from swapmeter.calibration import GasCalibration, perturbed_calibrations
from swapmeter.errors import InsufficientData, WindowTooLarge, ZeroTotalWeight

ZERO = Decimal(0)


@dataclass(frozen=True, slots=True)
class WeightedEstimate:
    """A weighted mean with statistical and asymmetric systematic errors."""

    mean: Decimal
    stat_sigma: Decimal
    sys_upper: Decimal
    sys_lower: Decimal
    n: int
    total_weight: Decimal

    @property
    def band_upper(self) -> Decimal:
        """Half-width of the upper band: sqrt(stat^2 + sys_upper^2)."""
        return (self.stat_sigma**2 + self.sys_upper**2).sqrt()

    @property
    def band_lower(self) -> Decimal:
        return (self.stat_sigma**2 + self.sys_lower**2).sqrt()


def weighted_mean_with_stat(
    values: Sequence[tuple[Decimal, Decimal]],
) -> tuple[Decimal, Decimal]:
    """Weighted mean of (x_i, w_i) pairs and its weighted standard error.

    n counts every supplied point, zero-weight ones included, exactly as
    the formula is written.
    """
    n = len(values)
    if n < 2:
        raise InsufficientData(f"weighted mean needs >= 2 points, got {n}")
    if any(w < 0 for _, w in values):
        raise ValueError("weights must be nonnegative")
    total_w = sum(w for _, w in values)
    if total_w == 0:
        raise ZeroTotalWeight("all weights are zero")
    mean = sum(x * w for x, w in values) / total_w
    var = sum(w * (mean - x) ** 2 for x, w in values) / (n * total_w)
    return mean, var.sqrt()


def systematic_band(
    reevaluate: Callable[[GasCalibration], Decimal],
    cal: GasCalibration,
    multiplier: Decimal | int = 1,
) -> tuple[Decimal, Decimal]:
    """(sys_upper, sys_lower) from re-running the pipeline at beta1 +/- se.

    `reevaluate` must return the weighted mean computed under the given
    calibration. Differences are folded to nonnegative half-widths with
    sides preserved.
    """
    base = reevaluate(cal)
    upper_cal, lower_cal = perturbed_calibrations(cal, multiplier)
    up = reevaluate(upper_cal) - base
    down = base - reevaluate(lower_cal)
    return abs(up), abs(down)


def rolling_by_size(
    points: Sequence[tuple[Decimal, Decimal]],
    window: int,
    stride: int = 1,
) -> list[tuple[Decimal, WeightedEstimate]]:
    """Rolling weighted estimates over trades sorted by USD size.

    points are (usd_weight, value) pairs; each window of `window`
    consecutive trades (after the ascending sort) yields its median USD
    size and weighted estimate. Systematic fields are zero; callers
    layer them on via perturbed re-evaluation.
    """
    if window < 2:
        raise InsufficientData("rolling window must be >= 2")
    if window > len(points):
        raise WindowTooLarge(f"window {window} exceeds {len(points)} points")
    ordered = sorted(points, key=lambda p: p[0])
    out = []
    for start in range(0, len(ordered) - window + 1, stride):
        chunk = ordered[start : start + window]
        sizes = [w for w, _ in chunk]
        mid = window // 2
        if window % 2:
            median = sizes[mid]
        else:
            median = (sizes[mid - 1] + sizes[mid]) / 2
        mean, sigma = weighted_mean_with_stat([(x, w) for w, x in chunk])
        out.append(
            (
                median,
                WeightedEstimate(
                    mean=mean,
                    stat_sigma=sigma,
                    sys_upper=ZERO,
                    sys_lower=ZERO,
                    n=window,
                    total_weight=sum(sizes),
                ),
            )
        )
    return out


def grouped_estimates(
    samples: Iterable[tuple[str, Decimal, Decimal]],
) -> dict[str, WeightedEstimate]:
    """Weighted estimate per group from (group, value, weight) triples.

    Groups with fewer than two members are skipped with a warning.
    """
    by_group: dict[str, list[tuple[Decimal, Decimal]]] = {}
    for group, x, w in samples:
        by_group.setdefault(group, []).append((x, w))
    out: dict[str, WeightedEstimate] = {}
    for group in sorted(by_group):
        values = by_group[group]
        try:
            mean, sigma = weighted_mean_with_stat(values)
        except (InsufficientData, ZeroTotalWeight) as exc:
            warnings.warn(f"skipping group {group!r}: {exc}", stacklevel=2)
            continue
        out[group] = WeightedEstimate(
            mean=mean,
            stat_sigma=sigma,
            sys_upper=ZERO,
            sys_lower=ZERO,
            n=len(values),
            total_weight=sum(w for _, w in values),
        )
    return out
