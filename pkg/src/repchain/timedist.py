"""Discrete-time distribution engine for repeater links.

A (sub)protocol's output link is represented by two arrays indexed by
time ``t = 1 .. t_trunc``: the probability ``p(t)`` that the link becomes
ready exactly at ``t``, and the Werner mass ``v(t) = E[W * 1{ready at t}]``.
Tracking only the conditional Werner mean is exact here because swap
output, distillation success, and distillation success times output are
all bilinear in the two input Werner parameters, so expectations
propagate across independent branches without approximation.

Distributions are sub-normalized under truncation: the tail mass beyond
``t_trunc`` is simply absent, and summary statistics condition on
success within the horizon.  No renormalization is ever applied.
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve, lfilter

__all__ = [
    "TimeDistribution",
    "LinkEndpoints",
    "AttemptProfiles",
    "TruncationCapError",
    "geometric_generation",
    "attempt_profiles",
    "compound_restarts",
    "ensure_coverage",
    "summarize",
    "write_distribution_csv",
]

# Entries more negative than this are treated as genuine errors; anything
# in (NEGATIVE_FLOOR, 0) is rounding noise from fast convolution.
NEGATIVE_FLOOR = -1e-14

# Stop compounding the failure series once its remaining mass is below
# this; the neglected tail is orders of magnitude under test tolerances.
_SERIES_TAIL = 1e-30


class TruncationCapError(RuntimeError):
    """Raised when the coverage target is unreachable within the time cap."""

    def __init__(self, coverage: float, t_trunc: int, t_cap: int):
        self.coverage = coverage
        self.t_trunc = t_trunc
        self.t_cap = t_cap
        super().__init__(
            f"truncation cap exceeded: coverage {coverage:.6g} at "
            f"t_trunc={t_trunc} with cap {t_cap}"
        )


def _clamp_nonnegative(arr: np.ndarray, what: str) -> np.ndarray:
    low = arr.min() if arr.size else 0.0
    if low < NEGATIVE_FLOOR:
        raise ValueError(f"{what} has negative entry {low:.3e} below the numerical floor")
    if low < 0.0:
        arr = np.where(arr < 0.0, 0.0, arr)
    return arr


@dataclass(frozen=True)
class TimeDistribution:
    """Readiness probabilities and Werner masses of one link.

    Arrays are indexed directly by time; entry 0 is always zero (every
    process takes at least one time unit).  ``v(t) <= p(t)`` everywhere,
    so the conditional Werner mean ``v(t)/p(t)`` lies in [0, 1].
    """

    p: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        v = np.asarray(self.v, dtype=float)
        if p.shape != v.shape or p.ndim != 1 or p.shape[0] < 2:
            raise ValueError("p and v must be equal-length 1-d arrays covering t <= t_trunc")
        if p[0] != 0.0 or v[0] != 0.0:
            raise ValueError("entry 0 is before any process can finish and must be zero")
        p = _clamp_nonnegative(p, "p")
        v = _clamp_nonnegative(v, "v")
        excess = (v - p).max()
        if excess > 1e-12:
            raise ValueError(f"werner mass exceeds probability mass by {excess:.3e}")
        v = np.minimum(v, p)
        total = p.sum()
        if total > 1.0 + 1e-9:
            raise ValueError(f"total probability mass {total} exceeds 1")
        p.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "v", v)

    @property
    def t_trunc(self) -> int:
        return self.p.shape[0] - 1

    @property
    def coverage(self) -> float:
        """Probability of readiness within the truncation horizon."""
        return float(self.p.sum())

    def truncated(self, t_trunc: int) -> "TimeDistribution":
        """View of the same distribution on a shorter horizon."""
        if t_trunc > self.t_trunc:
            raise ValueError("cannot extend a distribution by truncation")
        return TimeDistribution(self.p[: t_trunc + 1].copy(), self.v[: t_trunc + 1].copy())


@dataclass(frozen=True)
class LinkEndpoints:
    """Outermost chain nodes whose memories hold a (possibly merged) link."""

    left_node: int
    right_node: int

    def __post_init__(self):
        if self.left_node < 0 or self.left_node >= self.right_node:
            raise ValueError(
                f"endpoints must satisfy 0 <= left < right, got "
                f"({self.left_node}, {self.right_node})"
            )


@dataclass(frozen=True)
class AttemptProfiles:
    """Per-duration outcome masses of one swap or distillation attempt.

    ``fail_mass(tau) + succ_mass(tau)`` equals the probability that the
    attempt ends (either way) at duration ``tau``; on failure all links
    involved are lost, so no state accompanies the failure mass.
    """

    fail_mass: np.ndarray
    succ_mass: np.ndarray
    succ_werner_mass: np.ndarray

    @property
    def t_trunc(self) -> int:
        return self.fail_mass.shape[0] - 1


def geometric_generation(p_gen: float, w0: float, t_trunc: int) -> TimeDistribution:
    """Elementary-link generation: i.i.d. heralded attempts, one per unit.

    ``p(t) = p_gen (1-p_gen)^(t-1)`` and ``v = w0 * p``; the Werner
    parameter is constant at birth, aging is applied at merge time.
    """
    if not 0.0 < p_gen <= 1.0:
        raise ValueError(f"p_gen must lie in (0, 1], got {p_gen!r}")
    if not 0.0 <= w0 <= 1.0:
        raise ValueError(f"w0 must lie in [0, 1], got {w0!r}")
    if t_trunc < 1:
        raise ValueError("t_trunc must be at least 1")
    t = np.arange(t_trunc + 1, dtype=float)
    with np.errstate(divide="ignore"):
        # (1-p)^(t-1) via exp/log keeps very small p_gen accurate
        if p_gen < 1.0:
            p = p_gen * np.exp((t - 1.0) * math.log1p(-p_gen))
        else:
            p = np.zeros(t_trunc + 1)
            p[1] = 1.0
    p[0] = 0.0
    return TimeDistribution(p, w0 * p)


def _discounted_prefix(v: np.ndarray, rate: float) -> np.ndarray:
    """``out[tau] = sum_{t < tau} v[t] * exp(-(tau - t) * rate)``.

    Computed by the stable one-pole recurrence
    ``out[tau] = (out[tau-1] + v[tau-1]) * exp(-rate)`` so no growing
    exponential is ever formed.
    """
    d = math.exp(-rate)
    shifted = np.concatenate(([0.0], v[:-1]))
    if d == 1.0:
        return np.cumsum(shifted)
    return lfilter([d], [1.0, -d], shifted)


def attempt_profiles(
    a: TimeDistribution,
    a_ends: LinkEndpoints,
    b: TimeDistribution,
    b_ends: LinkEndpoints,
    op: str,
    chain,
    method: str = "prefix",
) -> AttemptProfiles:
    """Outcome profile of one swap or distillation attempt merging two links.

    The attempt lasts ``tau = max(t1, t2)``; the earlier-ready link decays
    over the gap with its own endpoints' memories before the operation is
    applied.  ``chain`` supplies per-link decay rates (``decay_rate``) and
    the swap success probability.

    ``method="prefix"`` evaluates the double sum over (t1, t2) with
    running discounted prefix sums in O(t_trunc); ``method="reference"``
    is the direct O(t_trunc^2) aggregation kept for cross-checking.
    """
    if a.t_trunc != b.t_trunc:
        raise ValueError(f"mismatched horizons: {a.t_trunc} vs {b.t_trunc}")
    if op not in ("swap", "distill"):
        raise ValueError(f"op must be 'swap' or 'distill', got {op!r}")
    rate_a = chain.decay_rate(a_ends)
    rate_b = chain.decay_rate(b_ends)

    if method == "prefix":
        mass, w2, w1a, w1b = _pair_masses_prefix(a, b, rate_a, rate_b)
    elif method == "reference":
        mass, w2, w1a, w1b = _pair_masses_reference(a, b, rate_a, rate_b)
    else:
        raise ValueError(f"unknown method {method!r}")

    if op == "swap":
        p_swap = chain.p_swap
        succ = p_swap * mass
        succ_w = p_swap * w2
        fail = (1.0 - p_swap) * mass
    else:
        succ = 0.5 * (mass + w2)
        succ_w = (w1a + w1b + 4.0 * w2) / 6.0
        fail = mass - succ
    return AttemptProfiles(
        fail_mass=_clamp_nonnegative(fail, "fail_mass"),
        succ_mass=_clamp_nonnegative(succ, "succ_mass"),
        succ_werner_mass=_clamp_nonnegative(succ_w, "succ_werner_mass"),
    )


def _pair_masses_prefix(a, b, rate_a, rate_b):
    """Aggregate pair masses over max(t1, t2) = tau with O(T) prefix sums."""
    pa, va, pb, vb = a.p, a.v, b.p, b.v
    # sum_{t < tau} of the other link's mass, undecayed (p) and decayed (v)
    cum_pa = np.concatenate(([0.0], np.cumsum(pa)[:-1]))
    cum_pb = np.concatenate(([0.0], np.cumsum(pb)[:-1]))
    dva = _discounted_prefix(va, rate_a)
    dvb = _discounted_prefix(vb, rate_b)

    # three disjoint pair sets: t1 < t2 = tau, t2 < t1 = tau, t1 = t2 = tau
    mass = pb * cum_pa + pa * cum_pb + pa * pb
    w2 = vb * dva + va * dvb + va * vb
    w1a = pb * dva + va * cum_pb + va * pb
    w1b = pa * dvb + vb * cum_pa + vb * pa
    return mass, w2, w1a, w1b


def _pair_masses_reference(a, b, rate_a, rate_b):
    """Direct double-sum aggregation; O(T^2) memory and time."""
    pa, va, pb, vb = a.p, a.v, b.p, b.v
    n = a.t_trunc + 1
    t = np.arange(n)
    gap = t[None, :] - t[:, None]  # t2 - t1
    decay_a = np.exp(-rate_a * np.maximum(gap, 0))  # a earlier when t1 < t2
    decay_b = np.exp(-rate_b * np.maximum(-gap, 0))  # b earlier when t2 < t1
    va_eff = va[:, None] * decay_a
    vb_eff = vb[None, :] * decay_b
    pair = pa[:, None] * pb[None, :]
    tau = np.maximum(t[:, None], t[None, :]).ravel()

    def by_tau(m):
        return np.bincount(tau, weights=m.ravel(), minlength=n)

    mass = by_tau(pair)
    w2 = by_tau(va_eff * vb_eff)
    w1a = by_tau(va_eff * pb[None, :])
    w1b = by_tau(pa[:, None] * vb_eff)
    return mass, w2, w1a, w1b


def _conv_trunc(x: np.ndarray, y: np.ndarray, n: int) -> np.ndarray:
    out = fftconvolve(x, y)[:n]
    if out.shape[0] < n:
        out = np.concatenate([out, np.zeros(n - out.shape[0])])
    return out


def compound_restarts(profiles: AttemptProfiles, backend: str = "doubling") -> TimeDistribution:
    """Solve the restart-from-scratch renewal equation for one merge.

    Failed attempts destroy every link involved, so the merged link's
    readiness time is a sum of failed-attempt durations plus one success:
    ``P_out = Ps + Pf * P_out`` and ``V_out = Vs + Pf * V_out`` (discrete
    convolutions), truncated at the shared horizon.

    ``backend="renewal"`` runs the direct O(T^2) recursion;
    ``backend="doubling"`` sums the geometric series
    ``(sum_k Pf^(*k)) * Ps`` by repeated squaring with fast convolution.
    """
    pf, ps, vs = profiles.fail_mass, profiles.succ_mass, profiles.succ_werner_mass
    n = pf.shape[0]
    if backend == "renewal":
        p_out = np.zeros(n)
        v_out = np.zeros(n)
        for t in range(1, n):
            acc_p = ps[t]
            acc_v = vs[t]
            if t > 1:
                tail_p = p_out[t - 1 : 0 : -1]
                tail_v = v_out[t - 1 : 0 : -1]
                head = pf[1:t]
                acc_p += head @ tail_p
                acc_v += head @ tail_v
            p_out[t] = acc_p
            v_out[t] = acc_v
    elif backend == "doubling":
        series = np.zeros(n)
        series[0] = 1.0  # k = 0 term of sum_k Pf^(*k)
        power = pf.copy()
        span = 1
        while span < n and power.sum() > _SERIES_TAIL:
            series = series + _conv_trunc(power, series, n)
            span *= 2
            if span >= n:
                break
            power = _conv_trunc(power, power, n)
        p_out = _conv_trunc(series, ps, n)
        v_out = _conv_trunc(series, vs, n)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    p_out[0] = 0.0
    v_out[0] = 0.0
    return TimeDistribution(
        _clamp_nonnegative(p_out, "p"), _clamp_nonnegative(v_out, "v")
    )


def ensure_coverage(
    build: Callable[[int], TimeDistribution],
    eps_target: float,
    t_cap: int,
    t_init: int = 1,
) -> TimeDistribution:
    """Grow the truncation horizon until the tail mass is small enough.

    Doubles ``t_trunc`` starting from ``t_init`` until the built
    distribution covers at least ``1 - eps_target``, or raises
    :class:`TruncationCapError` (carrying the best coverage achieved)
    once the next horizon would exceed ``t_cap``.
    """
    if not 0.0 < eps_target < 1.0:
        raise ValueError(f"eps_target must lie in (0, 1), got {eps_target!r}")
    if t_init < 1 or t_cap < t_init:
        raise ValueError("need 1 <= t_init <= t_cap")
    t_trunc = t_init
    while True:
        dist = build(t_trunc)
        if dist.coverage >= 1.0 - eps_target:
            return dist
        if 2 * t_trunc > t_cap:
            raise TruncationCapError(dist.coverage, t_trunc, t_cap)
        t_trunc *= 2


def summarize(d: TimeDistribution) -> tuple[float, float, float]:
    """Mean readiness time, mean Werner parameter, and coverage.

    Both means condition on readiness within the truncation horizon.
    """
    cov = d.coverage
    if cov <= 0.0:
        raise ValueError("cannot summarize a distribution with zero coverage")
    t = np.arange(d.t_trunc + 1)
    mean_time = float((t * d.p).sum() / cov)
    mean_werner = float(d.v.sum() / cov)
    return mean_time, mean_werner, cov


def write_distribution_csv(d: TimeDistribution, path) -> None:
    """Dump readiness/Werner-mass rows as CSV with columns t, p, v."""
    rows = np.column_stack([np.arange(1, d.t_trunc + 1), d.p[1:], d.v[1:]])
    np.savetxt(path, rows, fmt=["%d", "%.17g", "%.17g"], delimiter=",",
               header="t,p,v", comments="")
