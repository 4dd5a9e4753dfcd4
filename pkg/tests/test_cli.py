"""CLI subcommands: flows, exit codes, determinism."""

import json
from decimal import Decimal
from pathlib import Path

import pytest

from swapmeter.cli import main
from swapmeter.ingest import TRADE_COLUMNS

VALID_HEADER = ",".join(TRADE_COLUMNS)
ROW = "T1,Uniswap,Classic,18000000,WETH_IN,false,1000000000000000000,18,3000000000,6,150000,20000000000,1000000000,3000,1700000000"
QUOTE_HEADER = "trade_id,offset,out_estimate_raw,out_estimate_decimals,gas_estimate,provider_id"


@pytest.fixture
def scenario_files(tmp_path):
    spec = {
        "seed": 5,
        "n_trades": 60,
        "size_distribution": {"min_usd": "1000", "max_usd": "80000"},
        "path_mix": {"Classic": 0.5, "X": 0.5},
        "ofa_liquidity_bonus_bps": "5",
        "offsets": [-1, 0, 1],
    }
    spec_path = tmp_path / "scenario.json"
    spec_path.write_text(json.dumps(spec))
    data = tmp_path / "data"
    assert main(["synth", str(spec_path), "--out", str(data)]) == 0
    return data


def run_all(data: Path, out: Path, extra=()):
    base = [
        "--trades", str(data / "trades.csv"),
        "--quotes", str(data / "quotes.csv"),
        "--out", str(out),
        "--offsets=-1..1",
    ]
    rc_cal = main(["calibrate", *base])
    rc_an = main(["analyze", *base, *extra])
    rc_ag = main(["aggregate", *base, "--window", "20", *extra])
    return rc_cal, rc_an, rc_ag


class TestFlows:
    def test_full_pipeline_exit_codes_and_files(self, scenario_files, tmp_path):
        out = tmp_path / "out"
        rc_cal, rc_an, rc_ag = run_all(scenario_files, out)
        assert (rc_cal, rc_an, rc_ag) == (0, 0, 0)
        for name in ("calibration.json", "attribution.csv", "curve.csv", "rolling.csv", "summary.json"):
            assert (out / name).exists()
        first = (out / "attribution.csv").read_text().splitlines()[0]
        assert first.startswith("# swapmeter=")

    def test_synthetic_router_baseline_route(self, scenario_files, tmp_path):
        out = tmp_path / "out"
        base = [
            "--trades", str(scenario_files / "trades.csv"),
            "--pools", str(scenario_files / "pools.csv"),
            "--out", str(out),
            "--offsets=0",
        ]
        assert main(["calibrate", *base]) == 0
        assert main(["analyze", *base]) == 0
        report = json.loads((out / "calibration.json").read_text())
        assert Decimal(report["beta1"]) == pytest.approx(Decimal(1), abs=Decimal("0.02"))

    def test_report_writes_markdown(self, scenario_files, tmp_path):
        out = tmp_path / "out"
        base = [
            "--trades", str(scenario_files / "trades.csv"),
            "--quotes", str(scenario_files / "quotes.csv"),
            "--out", str(out),
            "--offsets=0",
            "--no-correction",
        ]
        assert main(["report", *base, "--window", "20"]) == 0
        text = (out / "report.md").read_text()
        assert "path:X" in text and "by path" in text

    def test_perfect_estimator_calibration(self, tmp_path):
        # quotes whose gas equals realized gas: beta1 = 1 exactly
        trades = tmp_path / "trades.csv"
        trades.write_text(
            f"{VALID_HEADER}\n{ROW}\n{ROW.replace('T1,', 'T2,').replace(',150000,', ',250000,')}\n".replace(
                "T2,Uniswap,Classic,18000000,WETH_IN,false,1000000000000000000,18,3000000000,6,150000",
                "T2,Uniswap,Classic,18000000,WETH_IN,false,1000000000000000000,18,3000000000,6,250000",
            )
        )
        quotes = tmp_path / "quotes.csv"
        quotes.write_text(
            f"{QUOTE_HEADER}\nT1,0,2995000000,6,150000,prov\nT2,0,2995000000,6,250000,prov\n"
        )
        out = tmp_path / "out"
        rc = main(
            ["calibrate", "--trades", str(trades), "--quotes", str(quotes), "--out", str(out)]
        )
        assert rc == 0
        report = json.loads((out / "calibration.json").read_text())
        assert report["beta1"] == "1"

    def test_no_correction_equals_identity_calibration(self, scenario_files, tmp_path):
        # beta1 fitted on self-consistent quotes is 1, so corrected and
        # uncorrected analyses coincide when the estimator is perfect
        trades = tmp_path / "trades.csv"
        trades.write_text(f"{VALID_HEADER}\n{ROW}\n{ROW.replace('T1,', 'T2,')}\n")
        quotes = tmp_path / "quotes.csv"
        quotes.write_text(
            f"{QUOTE_HEADER}\nT1,0,2995000000,6,150000,prov\nT2,0,2995000000,6,150000,prov\n"
        )
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        base = ["--trades", str(trades), "--quotes", str(quotes), "--offsets=0"]
        assert main(["calibrate", *base, "--out", str(out_a)]) == 0
        assert main(["analyze", *base, "--out", str(out_a)]) == 0
        assert main(["analyze", *base, "--out", str(out_b), "--no-correction"]) == 0
        strip = lambda p: [  # noqa: E731
            line for line in (p / "attribution.csv").read_text().splitlines() if not line.startswith("#")
        ]
        assert strip(out_a) == strip(out_b)


class TestExitCodes:
    def test_empty_trades_fatal(self, tmp_path):
        trades = tmp_path / "trades.csv"
        trades.write_text(VALID_HEADER + "\n")
        quotes = tmp_path / "quotes.csv"
        quotes.write_text(f"{QUOTE_HEADER}\nT1,0,1,6,100,prov\n")
        rc = main(
            ["analyze", "--trades", str(trades), "--quotes", str(quotes),
             "--out", str(tmp_path / "o"), "--no-correction"]
        )
        assert rc == 2

    def test_calibrate_empty_filter_fatal(self, tmp_path):
        trades = tmp_path / "trades.csv"
        trades.write_text(f"{VALID_HEADER}\n{ROW.replace('Classic', 'X')}\n")
        quotes = tmp_path / "quotes.csv"
        quotes.write_text(f"{QUOTE_HEADER}\nT1,0,1,6,100,prov\n")
        rc = main(
            ["calibrate", "--trades", str(trades), "--quotes", str(quotes), "--out", str(tmp_path / "o")]
        )
        assert rc == 2

    def test_single_trade_aggregate_fatal(self, tmp_path):
        trades = tmp_path / "trades.csv"
        trades.write_text(f"{VALID_HEADER}\n{ROW}\n")
        quotes = tmp_path / "quotes.csv"
        quotes.write_text(f"{QUOTE_HEADER}\nT1,0,2995000000,6,150000,prov\n")
        rc = main(
            ["aggregate", "--trades", str(trades), "--quotes", str(quotes),
             "--out", str(tmp_path / "o"), "--offsets=0", "--no-correction", "--window", "2"]
        )
        assert rc == 2

    def test_missing_calibration_fatal(self, tmp_path):
        trades = tmp_path / "trades.csv"
        trades.write_text(f"{VALID_HEADER}\n{ROW}\n")
        quotes = tmp_path / "quotes.csv"
        quotes.write_text(f"{QUOTE_HEADER}\nT1,0,2995000000,6,150000,prov\n")
        rc = main(
            ["analyze", "--trades", str(trades), "--quotes", str(quotes), "--out", str(tmp_path / "o")]
        )
        assert rc == 2

    def test_both_provider_sources_fatal(self, tmp_path):
        trades = tmp_path / "trades.csv"
        trades.write_text(f"{VALID_HEADER}\n{ROW}\n")
        rc = main(
            ["analyze", "--trades", str(trades), "--quotes", "q.csv", "--pools", "p.csv",
             "--out", str(tmp_path / "o"), "--no-correction"]
        )
        assert rc == 2

    def test_partial_exit_on_missing_quotes(self, tmp_path):
        trades = tmp_path / "trades.csv"
        trades.write_text(f"{VALID_HEADER}\n{ROW}\n{ROW.replace('T1,', 'T2,')}\n")
        quotes = tmp_path / "quotes.csv"
        quotes.write_text(f"{QUOTE_HEADER}\nT1,0,2995000000,6,150000,prov\n")
        rc = main(
            ["analyze", "--trades", str(trades), "--quotes", str(quotes),
             "--out", str(tmp_path / "o"), "--offsets=0", "--no-correction"]
        )
        assert rc == 1
        body = (tmp_path / "o" / "attribution.csv").read_text()
        assert "quote_unavailable" in body

    def test_invalid_scenario_fatal(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"path_mix": {"Classic": 0.4}}')
        assert main(["synth", str(bad), "--out", str(tmp_path / "d")]) == 2


class TestGoldenValues:
    def test_analyze_file_carries_attribution_values(self, tmp_path):
        """Engine-level results appear verbatim (bps, 4 dp) in the output file."""
        from swapmeter.attribution import attribute_trade
        from swapmeter.ingest import ingest_trades as ingest
        from swapmeter.numeric import format_bps
        from conftest import replay_for

        trades = tmp_path / "trades.csv"
        trades.write_text(f"{VALID_HEADER}\n{ROW}\n")
        quotes = tmp_path / "quotes.csv"
        quotes.write_text(f"{QUOTE_HEADER}\nT1,0,2995000000,6,140000,prov\n")
        out = tmp_path / "out"
        rc = main(
            ["analyze", "--trades", str(trades), "--quotes", str(quotes),
             "--out", str(out), "--offsets=0", "--no-correction"]
        )
        assert rc == 0

        trade = ingest(str(trades)).records[0]
        provider = replay_for("T1", 0, 2995000000, 6, 140000)
        res = attribute_trade(trade, provider, 0, Decimal(100_000_000))
        lines = [
            line for line in (out / "attribution.csv").read_text().splitlines()
            if line.startswith("T1,")
        ]
        fields = lines[0].split(",")
        assert fields[2] == format_bps(res.pi)
        assert fields[3] == format_bps(res.pi_routing)
        assert fields[4] == format_bps(res.pi_gas)
        assert fields[5] == format_bps(res.pi_fee)
        assert fields[6] == format_bps(res.pi_remainder)

    def test_095_bias_fixture_recovers_beta(self, tmp_path):
        import random

        rng = random.Random(44)
        trade_rows, quote_rows = [], []
        for k in range(300):
            g = rng.randrange(80_000, 500_000)
            gp = max(1, round(0.95 * g + rng.gauss(0, 4000)))
            trade_rows.append(
                ROW.replace("T1,", f"G{k:04d},").replace(",150000,", f",{g},")
            )
            quote_rows.append(f"G{k:04d},0,2995000000,6,{gp},prov")
        trades = tmp_path / "trades.csv"
        trades.write_text("\n".join([VALID_HEADER, *trade_rows]) + "\n")
        quotes = tmp_path / "quotes.csv"
        quotes.write_text("\n".join([QUOTE_HEADER, *quote_rows]) + "\n")
        out = tmp_path / "out"
        rc = main(
            ["calibrate", "--trades", str(trades), "--quotes", str(quotes), "--out", str(out)]
        )
        assert rc == 0
        report = json.loads((out / "calibration.json").read_text())
        assert abs(Decimal(report["beta1"]) - Decimal("0.95")) < Decimal("0.01")

    def test_non_positive_baseline_excluded(self, tmp_path):
        # WETH-out trade whose baseline gas cost swamps the quoted output
        row = (
            "T1,Uniswap,Classic,18000000,WETH_OUT,false,"
            "3000000000,6,1000000000000000000,18,150000,20000000000,1000000000,3000,1700000000"
        )
        trades = tmp_path / "trades.csv"
        trades.write_text(f"{VALID_HEADER}\n{row}\n")
        quotes = tmp_path / "quotes.csv"
        # o' = 0.001 ETH, g' = 200000 at 20.1 gwei -> negative p'
        quotes.write_text(f"{QUOTE_HEADER}\nT1,0,1000000000000000,18,200000,prov\n")
        out = tmp_path / "out"
        rc = main(
            ["analyze", "--trades", str(trades), "--quotes", str(quotes),
             "--out", str(out), "--offsets=0", "--no-correction"]
        )
        assert rc == 1
        body = (out / "attribution.csv").read_text()
        assert "true,non_positive_baseline" in body


class TestDeterminism:
    def test_pipeline_reruns_byte_identical(self, tmp_path, monkeypatch):
        # identical config means identical paths: run each pass in its own
        # working directory with the same relative layout
        spec = {
            "seed": 99,
            "n_trades": 50,
            "path_mix": {"Classic": 0.5, "Fusion": 0.5},
            "ofa_liquidity_bonus_bps": "4",
            "offsets": [0],
        }
        outputs = []
        for tag in ("one", "two"):
            root = tmp_path / tag
            root.mkdir()
            monkeypatch.chdir(root)
            Path("s.json").write_text(json.dumps(spec))
            assert main(["synth", "s.json", "--out", "data"]) == 0
            base = [
                "--trades", "data/trades.csv",
                "--quotes", "data/quotes.csv",
                "--out", "out",
                "--offsets=0",
            ]
            assert main(["calibrate", *base]) == 0
            assert main(["analyze", *base]) == 0
            assert main(["aggregate", *base, "--window", "10"]) == 0
            outputs.append(
                {
                    name: (root / "out" / name).read_bytes()
                    for name in ("calibration.json", "attribution.csv", "curve.csv",
                                 "rolling.csv", "summary.json")
                }
            )
        assert outputs[0] == outputs[1]

    def test_config_file_and_cli_override(self, tmp_path, scenario_files):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "\n".join(
                [
                    f"trades = {scenario_files / 'trades.csv'}",
                    f"quotes = {scenario_files / 'quotes.csv'}",
                    "offsets = 0",
                    "no_correction = true",
                    f"out = {tmp_path / 'from_file'}",
                ]
            )
        )
        assert main(["analyze", "--config", str(cfg)]) == 0
        assert (tmp_path / "from_file" / "attribution.csv").exists()
        # CLI --out wins over the file value
        assert main(["analyze", "--config", str(cfg), "--out", str(tmp_path / "cli")]) == 0
        assert (tmp_path / "cli" / "attribution.csv").exists()
