"""Gas-bias regression, correction, and perturbed calibrations."""

import random
from decimal import Decimal

import pytest

from swapmeter.calibration import (
    GasCalibration,
    correct_gas,
    correct_quote_set,
    fit_gas_bias,
    perturbed_calibrations,
)
from swapmeter.errors import AlreadyCorrected, DegenerateRegressor, InsufficientData
from swapmeter.ingest import QuoteSet
from swapmeter.model import Quote, TokenAmount


def noisy_pairs(seed, n, slope=0.95, sigma=5000.0):
    rng = random.Random(seed)
    pairs = []
    for _ in range(n):
        g = rng.uniform(50_000, 500_000)
        gp = slope * g + rng.gauss(0, sigma)
        pairs.append((Decimal(f"{g:.6f}"), Decimal(f"{gp:.6f}")))
    return pairs


def quote(gas_estimate, corrected=False):
    return Quote("T1", 0, TokenAmount(1000, 6), Decimal(gas_estimate), "prov", corrected)


class TestFit:
    def test_perfect_estimator(self):
        cal = fit_gas_bias([(100_000, Decimal(100_000)), (250_000, Decimal(250_000))])
        assert cal.beta1 == 1
        assert cal.beta1_se == 0
        assert cal.residual_mean == 1
        assert cal.residual_stddev == 0

    def test_exact_proportionality(self):
        pairs = [(g, Decimal(g) * Decimal("0.9")) for g in (100_000, 150_000, 900_000)]
        cal = fit_gas_bias(pairs)
        assert cal.beta1 == Decimal("0.9")
        assert cal.beta1_se == 0

    def test_monte_carlo_recovery(self):
        # beta1 = 0.95 with N(0, 5000) noise, n = 500: the fitted slope is
        # within 2 standard errors of truth in >= 95 of 100 seeded runs.
        hits = 0
        for seed in range(4000, 4100):
            cal = fit_gas_bias(noisy_pairs(seed, 500))
            if abs(cal.beta1 - Decimal("0.95")) <= 2 * cal.beta1_se:
                hits += 1
        assert hits >= 95

    def test_insufficient_data(self):
        with pytest.raises(InsufficientData):
            fit_gas_bias([(100_000, Decimal(95_000))])

    def test_degenerate_regressor(self):
        with pytest.raises(DegenerateRegressor):
            fit_gas_bias([(0, Decimal(0)), (0, Decimal(0))])

    def test_scale_equivariance(self):
        pairs = noisy_pairs(1, 50)
        scaled = [(g * 7, q * 7) for g, q in pairs]
        a = fit_gas_bias(pairs)
        b = fit_gas_bias(scaled)
        assert abs(a.beta1 - b.beta1) < Decimal("1e-45")

    def test_refit_after_correction_is_unity(self):
        pairs = [(g, Decimal(g) * Decimal("0.85")) for g in (90_000, 140_000, 600_000)]
        cal = fit_gas_bias(pairs)
        corrected = [(g, q / cal.beta1) for g, q in pairs]
        assert abs(fit_gas_bias(corrected).beta1 - 1) < Decimal("1e-10")

    def test_se_shrinks_like_sqrt_n(self):
        ses = {}
        for n in (100, 400, 1600):
            cal = fit_gas_bias(noisy_pairs(123, n))
            ses[n] = cal.beta1_se
        # each 4x in n should roughly halve the SE (within a factor of 2)
        for small, large in ((100, 400), (400, 1600)):
            ratio = ses[small] / ses[large]
            assert Decimal(1) < ratio < Decimal(4)


class TestCorrection:
    def test_correct_gas_arithmetic(self):
        cal = fit_gas_bias([(g, Decimal(g) * Decimal("0.95")) for g in (100_000, 300_000)])
        fixed = correct_gas(quote(95_000), cal)
        assert fixed.gas_estimate == Decimal(100_000)
        assert fixed.corrected

    def test_identity_calibration_is_noop(self):
        cal = fit_gas_bias([(100_000, Decimal(100_000)), (200_000, Decimal(200_000))])
        fixed = correct_gas(quote(123_456), cal)
        assert fixed.gas_estimate == Decimal(123_456)

    def test_double_correction_guarded(self):
        cal = fit_gas_bias([(100_000, Decimal(95_000)), (200_000, Decimal(190_000))])
        once = correct_gas(quote(95_000), cal)
        with pytest.raises(AlreadyCorrected):
            correct_gas(once, cal)

    def test_quote_set_correction_and_guard(self):
        cal = fit_gas_bias([(100_000, Decimal(50_000)), (200_000, Decimal(100_000))])
        qs = QuoteSet([quote(50_000)])
        fixed = correct_quote_set(qs, cal)
        assert fixed.corrected
        assert next(iter(fixed)).gas_estimate == Decimal(100_000)
        with pytest.raises(AlreadyCorrected):
            correct_quote_set(fixed, cal)


class TestPerturbed:
    def test_zero_se_returns_original(self):
        cal = GasCalibration(Decimal(1), Decimal(0), 5, Decimal(1), Decimal(0))
        upper, lower = perturbed_calibrations(cal)
        assert upper.beta1 == lower.beta1 == Decimal(1)

    def test_plain_shift(self):
        cal = GasCalibration(Decimal("0.9"), Decimal("0.05"), 5, Decimal(1), Decimal(0))
        upper, lower = perturbed_calibrations(cal)
        assert (upper.beta1, lower.beta1) == (Decimal("0.95"), Decimal("0.85"))

    def test_lower_clamped_with_warning(self):
        cal = GasCalibration(Decimal("0.1"), Decimal("0.2"), 5, Decimal(1), Decimal(0))
        with pytest.warns(UserWarning, match="clamping"):
            upper, lower = perturbed_calibrations(cal)
        assert upper.beta1 == Decimal("0.3")
        assert lower.beta1 == Decimal("0.05")

    def test_multiplier_scales_shift(self):
        cal = GasCalibration(Decimal("0.9"), Decimal("0.02"), 5, Decimal(1), Decimal(0))
        upper, _ = perturbed_calibrations(cal, 2)
        assert upper.beta1 == Decimal("0.94")
