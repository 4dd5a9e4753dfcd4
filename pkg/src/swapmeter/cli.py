"""Command-line entry points.

Subcommands: calibrate, analyze, aggregate, synth, report. Exit codes:
0 success, 1 partial (exclusions or rejected rows present), 2 fatal.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from swapmeter import pipeline
from swapmeter.baseline import (
    BaselineProvider,
    CalibratedProvider,
    ReplayProvider,
    SyntheticRouterProvider,
)
from swapmeter.calibration import GasCalibration, fit_gas_bias
from swapmeter.config import RunConfig, build_config, config_hash, parse_config_file
from swapmeter.errors import (
    InsufficientData,
    QuoteUnavailable,
    SnapshotUnavailable,
    SwapmeterError,
)
from swapmeter.ingest import ingest_pool_snapshots, ingest_quotes, ingest_trades
from swapmeter.model import TradeRecord
from swapmeter.numeric import format_bps
from swapmeter.output import provenance, write_csv, write_json, write_text
from swapmeter.synth import generate, load_scenario

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_FATAL = 2


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key = value config file")
    parser.add_argument("--trades", help="trade CSV/JSONL path")
    parser.add_argument("--quotes", help="recorded quote file (replay baseline)")
    parser.add_argument("--pools", help="pool snapshot file (synthetic router baseline)")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--offsets", help="block offsets, e.g. -4..3 or 0,1")
    parser.add_argument("--f-prime-wei", dest="f_prime_wei", help="baseline priority fee (wei/gas)")
    parser.add_argument("--window", type=int, help="rolling window size")
    parser.add_argument("--strict", action="store_const", const=True, help="fail on first bad row")
    parser.add_argument(
        "--no-correction",
        dest="no_correction",
        action="store_const",
        const=True,
        help="skip gas-bias correction",
    )
    parser.add_argument("--sys-multiplier", dest="sys_multiplier", help="multiple of beta1 SE")
    parser.add_argument("--calibration", help="calibration report to apply")
    parser.add_argument(
        "--calibration-filter",
        dest="calibration_filter",
        help="settlement path used as the calibration sample",
    )


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    file_values = parse_config_file(args.config) if args.config else None
    keys = (
        "trades",
        "quotes",
        "pools",
        "out",
        "offsets",
        "f_prime_wei",
        "window",
        "strict",
        "no_correction",
        "sys_multiplier",
        "calibration",
        "calibration_filter",
    )
    cli_values = {k: getattr(args, k, None) for k in keys}
    return build_config(file_values, cli_values)


def _load_trades(cfg: RunConfig, require_usd: bool) -> tuple[list[TradeRecord], int]:
    if not cfg.trades_path:
        raise SwapmeterError("no trade file configured (--trades)")
    fmt = "jsonl" if str(cfg.trades_path).endswith(".jsonl") else "csv"
    result = ingest_trades(cfg.trades_path, fmt, strict=cfg.strict, require_usd=require_usd)
    for reject in result.rejects:
        print(f"reject line {reject.line}: {reject.reason}", file=sys.stderr)
    return result.records, len(result.rejects)


def _build_provider(cfg: RunConfig, trades) -> BaselineProvider:
    cfg.require_provider()
    if cfg.quotes_path:
        quotes, rejects = ingest_quotes(cfg.quotes_path, strict=cfg.strict)
        for reject in rejects:
            print(f"reject quote line {reject.line}: {reject.reason}", file=sys.stderr)
        orphans = quotes.orphans(trades)
        if orphans:
            print(f"{len(orphans)} quotes reference unknown trades", file=sys.stderr)
        return ReplayProvider(quotes)
    snapshots, rejects = ingest_pool_snapshots(cfg.pools_path, strict=cfg.strict)
    for reject in rejects:
        print(f"reject pool line {reject.line}: {reject.reason}", file=sys.stderr)
    return SyntheticRouterProvider(
        snapshots, cfg.f_prime_wei, overhead_gas=cfg.overhead_gas
    )


def _load_calibration(cfg: RunConfig) -> GasCalibration | None:
    if cfg.no_correction:
        return None
    path = cfg.effective_calibration_path()
    if not path.exists():
        raise SwapmeterError(
            f"calibration report {path} not found; run `swapmeter calibrate` or pass --no-correction"
        )
    with open(path, "r", encoding="utf-8") as fh:
        return GasCalibration.from_dict(json.load(fh))


def cmd_calibrate(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    trades, _ = _load_trades(cfg, require_usd=False)
    provider = _build_provider(cfg, trades)
    sample = [t for t in trades if t.path == cfg.calibration_filter]
    pairs = []
    skipped = 0
    for trade in sample:
        try:
            quote = provider.quote(trade, 0)
        except (QuoteUnavailable, SnapshotUnavailable):
            skipped += 1
            continue
        pairs.append((trade.gas.gas_used, quote.gas_estimate))
    if len(pairs) < 2:
        raise InsufficientData(
            f"calibration needs >= 2 {cfg.calibration_filter!r} trades with offset-0 "
            f"quotes, found {len(pairs)}"
        )
    cal = fit_gas_bias(pairs)
    payload = dict(cal.as_dict())
    payload["calibration_filter"] = cfg.calibration_filter
    payload["skipped_unquoted"] = skipped
    write_json(
        cfg.effective_calibration_path(), payload, comment=provenance(config_hash(cfg))
    )
    print(f"beta1={cal.beta1} beta1_se={cal.beta1_se} n={cal.n_points}")
    return EXIT_OK


def cmd_analyze(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    trades, n_rejects = _load_trades(cfg, require_usd=False)
    provider = _build_provider(cfg, trades)
    calibration = _load_calibration(cfg)
    if calibration is not None:
        provider = CalibratedProvider(provider, calibration)
    rows = pipeline.analyze_trades(trades, provider, cfg.offsets, cfg.f_prime_wei)
    write_csv(
        Path(cfg.out_dir) / "attribution.csv",
        pipeline.ATTRIBUTION_COLUMNS,
        pipeline.attribution_csv_rows(rows),
        comment=provenance(config_hash(cfg)),
    )
    exclusions = pipeline.exclusion_counts(rows)
    for reason, count in exclusions.items():
        print(f"excluded {count} rows: {reason}", file=sys.stderr)
    return EXIT_PARTIAL if exclusions or n_rejects else EXIT_OK


def cmd_aggregate(args: argparse.Namespace, write_markdown: bool = False) -> int:
    cfg = _config_from_args(args)
    trades, n_rejects = _load_trades(cfg, require_usd=True)
    if not trades:
        raise SwapmeterError("no valid weighted trades to aggregate")
    provider = _build_provider(cfg, trades)
    calibration = _load_calibration(cfg)
    report = pipeline.run_aggregate(
        trades,
        provider,
        calibration,
        cfg.offsets,
        cfg.f_prime_wei,
        cfg.window,
        cfg.stride,
        cfg.sys_multiplier,
    )
    if not report.curves:
        raise SwapmeterError("all groups are empty; nothing to aggregate")
    stamp = provenance(config_hash(cfg))
    out = Path(cfg.out_dir)
    write_csv(out / "curve.csv", pipeline.CURVE_COLUMNS, pipeline.curve_csv_rows(report), stamp)
    write_csv(
        out / "rolling.csv", pipeline.ROLLING_COLUMNS, pipeline.rolling_csv_rows(report), stamp
    )
    summary = {
        "summary": report.summary,
        "exclusions": report.exclusions,
        "calibration": None if calibration is None else calibration.as_dict(),
    }
    write_json(out / "summary.json", summary, comment=stamp)
    if write_markdown:
        write_text(out / "report.md", _render_markdown(report, stamp))
    return EXIT_PARTIAL if report.exclusions or n_rejects else EXIT_OK


def cmd_synth(args: argparse.Namespace) -> int:
    spec = load_scenario(args.spec)
    out_dir = args.out or "out"
    files = generate(spec, out_dir)
    print(f"wrote {files.trades_path}, {files.pools_path}, {files.quotes_path}")
    return EXIT_OK


def _render_markdown(report, stamp: str) -> str:
    lines = [
        "# Price improvement report",
        "",
        f"`{stamp}`",
        "",
        f"Anchor offset: {report.anchor_offset}",
        "",
        "## Weighted PI by group and offset",
        "",
        "| group | offset | mean (bps) | stat sigma | sys +/- | n |",
        "|---|---|---|---|---|---|",
    ]
    for point in report.curves:
        e = point.estimate
        lines.append(
            f"| {point.group} | {point.offset} | {format_bps(e.mean)} | "
            f"{format_bps(e.stat_sigma)} | +{format_bps(e.sys_upper)}/-{format_bps(e.sys_lower)} "
            f"| {e.n} |"
        )
    lines += ["", "## Attribution at the anchor offset", ""]
    for level in ("by_path", "by_interface"):
        lines.append(f"### {level.replace('_', ' ')}")
        lines.append("")
        lines.append("| group | pi | routing | gas | fee | remainder | n |")
        lines.append("|---|---|---|---|---|---|---|")
        for group, entry in report.summary.get(level, {}).items():
            lines.append(
                f"| {group} | {entry['pi_bps']} | {entry['routing_bps']} | "
                f"{entry['gas_bps']} | {entry['fee_bps']} | {entry['remainder_bps']} "
                f"| {entry['n']} |"
            )
        lines.append("")
    if report.exclusions:
        lines.append("## Exclusions")
        lines.append("")
        for reason, count in report.exclusions.items():
            lines.append(f"- {reason}: {count}")
        lines.append("")
    return "\n".join(lines) + "\n"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swapmeter",
        description="Price-improvement analytics for onchain swaps",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_cal = sub.add_parser("calibrate", help="fit the gas-estimate bias slope")
    _add_common(p_cal)
    p_cal.set_defaults(func=cmd_calibrate)

    p_an = sub.add_parser("analyze", help="per-trade attribution across offsets")
    _add_common(p_an)
    p_an.set_defaults(func=cmd_analyze)

    p_ag = sub.add_parser("aggregate", help="weighted curves, rolling series, summary")
    _add_common(p_ag)
    p_ag.set_defaults(func=cmd_aggregate)

    p_rep = sub.add_parser("report", help="aggregate plus a markdown summary")
    _add_common(p_rep)
    p_rep.set_defaults(func=lambda a: cmd_aggregate(a, write_markdown=True))

    p_syn = sub.add_parser("synth", help="generate a synthetic scenario")
    p_syn.add_argument("spec", help="scenario spec JSON file")
    p_syn.add_argument("--out", help="output directory")
    p_syn.set_defaults(func=cmd_synth)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SwapmeterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
