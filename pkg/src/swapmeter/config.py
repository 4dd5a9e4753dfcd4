"""Run configuration: flat key=value config files, CLI overrides, hashing."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, fields
from decimal import Decimal, InvalidOperation
from pathlib import Path

from swapmeter.errors import ConfigError

DEFAULT_F_PRIME_WEI = Decimal(100_000_000)  # 0.1 Gwei baseline priority fee
DEFAULT_OFFSETS = tuple(range(-4, 4))
DEFAULT_WINDOW = 200
DEFAULT_CALIBRATION_FILTER = "Classic"


@dataclass(frozen=True, slots=True)
class RunConfig:
    trades_path: str | None = None
    quotes_path: str | None = None
    pools_path: str | None = None
    out_dir: str = "out"
    offsets: tuple[int, ...] = DEFAULT_OFFSETS
    f_prime_wei: Decimal = DEFAULT_F_PRIME_WEI
    window: int = DEFAULT_WINDOW
    stride: int = 1
    strict: bool = False
    no_correction: bool = False
    sys_multiplier: Decimal = Decimal(1)
    calibration_filter: str = DEFAULT_CALIBRATION_FILTER
    calibration_path: str | None = None
    overhead_gas: int = 80_000

    def __post_init__(self):
        if self.f_prime_wei < 0:
            raise ConfigError("f_prime_wei must be nonnegative")
        if self.window < 2:
            raise ConfigError("window must be >= 2")
        if self.stride < 1:
            raise ConfigError("stride must be >= 1")
        if self.sys_multiplier <= 0:
            raise ConfigError("sys_multiplier must be positive")

    def require_provider(self) -> None:
        have = [p for p in (self.quotes_path, self.pools_path) if p]
        if len(have) != 1:
            raise ConfigError(
                "exactly one baseline source must be configured (--quotes or --pools)"
            )

    def effective_calibration_path(self) -> Path:
        if self.calibration_path:
            return Path(self.calibration_path)
        return Path(self.out_dir) / "calibration.json"


def parse_offsets(text: str) -> tuple[int, ...]:
    """Parse 'a..b' (inclusive) or a comma-separated list of offsets."""
    text = text.strip()
    try:
        if ".." in text:
            lo_s, hi_s = text.split("..", 1)
            lo, hi = int(lo_s), int(hi_s)
            if hi < lo:
                raise ConfigError(f"bad offset range {text!r}: end before start")
            return tuple(range(lo, hi + 1))
        return tuple(int(part) for part in text.split(","))
    except ValueError:
        raise ConfigError(f"cannot parse offsets {text!r}") from None


def parse_config_file(path: str | Path) -> dict[str, str]:
    """Flat `key = value` lines; '#' starts a comment."""
    values: dict[str, str] = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"config line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in stripped.split("=", 1))
        values[key] = value
    return values


_BOOL_KEYS = {"strict", "no_correction"}
_INT_KEYS = {"window", "stride", "overhead_gas"}
_DECIMAL_KEYS = {"f_prime_wei", "sys_multiplier"}
_PATH_KEYS = {"trades_path", "quotes_path", "pools_path", "out_dir", "calibration_path"}
_STR_KEYS = _PATH_KEYS | {"calibration_filter"}

# CLI/file spellings -> RunConfig field names
_ALIASES = {
    "trades": "trades_path",
    "quotes": "quotes_path",
    "pools": "pools_path",
    "out": "out_dir",
    "calibration": "calibration_path",
}


def _coerce(key: str, value) -> object:
    if key == "offsets":
        return parse_offsets(value) if isinstance(value, str) else tuple(value)
    if key in _BOOL_KEYS:
        if isinstance(value, bool):
            return value
        v = str(value).strip().lower()
        if v in ("true", "1", "yes"):
            return True
        if v in ("false", "0", "no"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {value!r}")
    if key in _INT_KEYS:
        try:
            return int(str(value))
        except ValueError:
            raise ConfigError(f"{key}: expected an integer, got {value!r}") from None
    if key in _DECIMAL_KEYS:
        try:
            return Decimal(str(value))
        except InvalidOperation:
            raise ConfigError(f"{key}: expected a decimal, got {value!r}") from None
    if key in _STR_KEYS:
        return str(value)
    raise ConfigError(f"unknown config key {key!r}")


def build_config(file_values: dict | None = None, cli_values: dict | None = None) -> RunConfig:
    """Merge defaults <- config file <- CLI flags (CLI wins)."""
    merged: dict[str, object] = {}
    for source in (file_values or {}, cli_values or {}):
        for raw_key, value in source.items():
            if value is None:
                continue
            key = _ALIASES.get(raw_key, raw_key)
            merged[key] = _coerce(key, value)
    return RunConfig(**merged)


def config_hash(cfg: RunConfig) -> str:
    """Short content hash of the effective configuration."""
    lines = []
    for f in sorted(fields(RunConfig), key=lambda f: f.name):
        value = getattr(cfg, f.name)
        if isinstance(value, tuple):
            value = ",".join(str(v) for v in value)
        lines.append(f"{f.name}={value}")
    digest = hashlib.sha256("\n".join(lines).encode("utf-8")).hexdigest()
    return digest[:12]
