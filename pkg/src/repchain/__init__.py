"""Analytic simulator and optimizer for first-generation quantum repeater chains.

The package computes waiting-time and entanglement-quality distributions
for swap/distill protocol trees over heterogeneous hardware chains, and
searches the protocol space for the maximum secret-key rate with
Bayesian optimization, random search, or exhaustive enumeration.
"""

from repchain.evaluator import HardwareChain, Metrics, evaluate, monte_carlo, skr_of
from repchain.protocol import ProtocolTree, parse, serialize

__all__ = [
    "HardwareChain",
    "Metrics",
    "ProtocolTree",
    "evaluate",
    "monte_carlo",
    "parse",
    "serialize",
    "skr_of",
]

__version__ = "0.1.0"
