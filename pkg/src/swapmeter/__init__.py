"""Execution-quality analytics for onchain swaps.

Computes gas-internalized realized and counterfactual prices, price
improvement and its routing/gas/fee attribution, and USD-weighted
aggregates with statistical and systematic uncertainty. Ships a replay
baseline and a synthetic optimal-split CPMM router so the whole pipeline
runs without live blockchain infrastructure.
"""

from swapmeter import numeric as _numeric  # noqa: F401  installs the decimal policy

__version__ = "0.1.0"
