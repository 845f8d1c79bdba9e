"""Scalar Werner-parameter algebra for repeater-chain links.

Every link state is a Werner state parameterized by a single scalar
``w`` in [0, 1].  All state transformations used by the chain simulator
(memory decoherence, entanglement swapping, one round of BBPSW
distillation) and the BB84 secret fraction are functions of ``w`` alone,
so this module is the complete "physics" surface of the package.
"""

from __future__ import annotations

import math

__all__ = [
    "fidelity_from_werner",
    "decay",
    "swap_output",
    "dist_success",
    "dist_output",
    "binary_entropy",
    "secret_fraction",
    "positive_rate_threshold",
]


def _check_werner(w: float, name: str = "w") -> None:
    if not 0.0 <= w <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {w!r}")


def fidelity_from_werner(w: float) -> float:
    """Fidelity with the target Bell state, ``F = (1 + 3w) / 4``."""
    _check_werner(w)
    return (1.0 + 3.0 * w) / 4.0


def decay(w: float, dt: float, tcoh_a: float, tcoh_b: float) -> float:
    """Werner parameter after waiting ``dt`` in two imperfect memories.

    Parameters
    ----------
    w : float
        Werner parameter at the start of the wait.
    dt : float
        Waiting time in time units; must be non-negative.
    tcoh_a, tcoh_b : float
        Coherence times of the two memories holding the link.  Either
        may be ``math.inf`` for a perfect memory.

    Returns
    -------
    float
        ``w * exp(-dt/tcoh_a) * exp(-dt/tcoh_b)``.
    """
    _check_werner(w)
    if dt < 0:
        raise ValueError(f"dt must be non-negative, got {dt!r}")
    if tcoh_a <= 0 or tcoh_b <= 0:
        raise ValueError("coherence times must be positive")
    return w * math.exp(-dt / tcoh_a) * math.exp(-dt / tcoh_b)


def swap_output(wa: float, wb: float) -> float:
    """Werner parameter of the link produced by entanglement swapping.

    Inputs are assumed to carry any waiting decay already.
    """
    _check_werner(wa, "wa")
    _check_werner(wb, "wb")
    return wa * wb


def dist_success(wa: float, wb: float) -> float:
    """Success probability of one BBPSW distillation attempt."""
    _check_werner(wa, "wa")
    _check_werner(wb, "wb")
    return (1.0 + wa * wb) / 2.0


def dist_output(wa: float, wb: float) -> float:
    """Werner parameter of a successful BBPSW distillation output.

    ``(wa + wb + 4*wa*wb) / (6 * dist_success(wa, wb))``; the
    denominator is at least 3, so the division is always safe.
    """
    _check_werner(wa, "wa")
    _check_werner(wb, "wb")
    return (wa + wb + 4.0 * wa * wb) / (6.0 * dist_success(wa, wb))


def binary_entropy(q: float) -> float:
    """Binary entropy in bits; ``h(0) = h(1) = 0`` by continuity."""
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q must lie in [0, 1], got {q!r}")
    if q == 0.0 or q == 1.0:
        return 0.0
    return -q * math.log2(q) - (1.0 - q) * math.log2(1.0 - q)


def secret_fraction(w: float) -> float:
    """BB84 secret fraction of a Werner link, clamped at zero.

    The quantum bit error rate is symmetric in both bases,
    ``Q = (1 - w) / 2``, giving ``max(0, 1 - 2 h(Q))``.  The clamp lives
    here so that downstream rates are never negative.
    """
    _check_werner(w)
    q = (1.0 - w) / 2.0
    return max(0.0, 1.0 - 2.0 * binary_entropy(q))


def positive_rate_threshold(tol: float = 1e-9) -> float:
    """Smallest Werner parameter with a strictly positive secret fraction.

    Root of ``1 = 2 h((1 - w) / 2)`` found by bisection; roughly 0.77994.
    Links whose Werner parameter cannot exceed this value yield zero
    secret-key rate no matter how fast they are produced.
    """
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = (lo + hi) / 2.0
        if 1.0 - 2.0 * binary_entropy((1.0 - mid) / 2.0) > 0.0:
            hi = mid
        else:
            lo = mid
    return (lo + hi) / 2.0
