"""Decimal arithmetic policy shared by the whole toolkit.

Onchain quantities (token amounts, gas, wei fees) stay exact integers in
base units; division only happens at price computation, in decimal
arithmetic with 60 significant digits and half-even rounding. The policy
is installed once at import time so every module computes in the same
context and results are bit-reproducible.
"""

import decimal
from decimal import Decimal

PRECISION = 60

decimal.DefaultContext.prec = PRECISION
decimal.DefaultContext.rounding = decimal.ROUND_HALF_EVEN
decimal.setcontext(decimal.DefaultContext.copy())

BPS_FACTOR = Decimal(10) ** 4

# Reports quantize bps values to 4 decimal places; internal values are
# never rounded.
_BPS_QUANTUM = Decimal("0.0001")


def wei_to_eth(wei: int | Decimal) -> Decimal:
    """Exact wei -> ETH conversion (divide by 10^18, no float intermediate)."""
    return Decimal(wei).scaleb(-18)


def format_bps(x: Decimal) -> str:
    """Render a dimensionless ratio as basis points, half-even at 4 dp."""
    return str((x * BPS_FACTOR).quantize(_BPS_QUANTUM))
