"""Protocol evaluation over a hardware chain, plus a Monte Carlo oracle.

``evaluate`` recursively builds the end-to-end waiting-time/Werner
distribution of a protocol tree with the analytic engine in
:mod:`repchain.timedist`; ``monte_carlo`` samples the same stochastic
process directly and serves as an independent cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from repchain import kernels
from repchain.protocol import Branch, Leaf, ProtocolTree, serialize, span, validate_tree
from repchain.timedist import (
    LinkEndpoints,
    TimeDistribution,
    attempt_profiles,
    compound_restarts,
    ensure_coverage,
    geometric_generation,
    summarize,
)

__all__ = [
    "NodeSpec",
    "LinkSpec",
    "HardwareChain",
    "Metrics",
    "MonteCarloEstimate",
    "EvalCache",
    "evaluate",
    "skr_of",
    "monte_carlo",
    "DEFAULT_T_CAP",
]

DEFAULT_T_CAP = 2**22


@dataclass(frozen=True)
class NodeSpec:
    """One chain node; ``t_coh`` may be ``math.inf`` for a perfect memory."""

    t_coh: float = math.inf


@dataclass(frozen=True)
class LinkSpec:
    """One elementary link; ``t_coh`` is the joint coherence time of the
    two end memories, used only in per-link-joint mode."""

    p_gen: float
    w0: float
    t_coh: float | None = None


@dataclass(frozen=True)
class HardwareChain:
    """Hardware parameters of an N-node repeater chain.

    ``coherence_mode`` selects how waiting links decohere:

    * ``"per-node"`` -- each endpoint memory decays with its node's
      coherence time (the heterogeneous model).
    * ``"per-link-joint"`` -- each elementary link carries the joint
      coherence time of its two end memories; each memory contributes
      half the joint rate, so a merged span decays with half the rate of
      its outermost elementary link on each side.

    ``t_unit_seconds`` is the duration of one time unit (internode
    distance over signal velocity) and is only needed for per-second
    rates.
    """

    nodes: tuple[NodeSpec, ...]
    links: tuple[LinkSpec, ...]
    p_swap: float
    coherence_mode: str = "per-node"
    t_unit_seconds: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "links", tuple(self.links))
        if len(self.links) != len(self.nodes) - 1:
            raise ValueError(
                f"a chain with {len(self.nodes)} nodes needs {len(self.nodes) - 1} "
                f"links, got {len(self.links)}"
            )
        if not 0.0 < self.p_swap <= 1.0:
            raise ValueError(f"p_swap must lie in (0, 1], got {self.p_swap!r}")
        if self.coherence_mode not in ("per-node", "per-link-joint"):
            raise ValueError(f"unknown coherence_mode {self.coherence_mode!r}")
        for i, link in enumerate(self.links):
            if not 0.0 < link.p_gen <= 1.0:
                raise ValueError(f"link {i}: p_gen must lie in (0, 1], got {link.p_gen!r}")
            if not 0.0 <= link.w0 <= 1.0:
                raise ValueError(f"link {i}: w0 must lie in [0, 1], got {link.w0!r}")
            if link.t_coh is not None and link.t_coh <= 0:
                raise ValueError(f"link {i}: t_coh must be positive")
            if self.coherence_mode == "per-link-joint" and link.t_coh is None:
                raise ValueError(f"link {i}: per-link-joint mode needs a link t_coh")
        for j, node in enumerate(self.nodes):
            if node.t_coh <= 0:
                raise ValueError(f"node {j}: t_coh must be positive")
        if self.t_unit_seconds is not None and self.t_unit_seconds <= 0:
            raise ValueError("t_unit_seconds must be positive")

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_links(self) -> int:
        return len(self.links)

    def decay_rate(self, ends: LinkEndpoints) -> float:
        """Total memory-decay rate (per time unit) of a waiting link."""
        if ends.right_node >= self.n_nodes:
            raise ValueError(f"endpoints {ends} outside a {self.n_nodes}-node chain")
        if self.coherence_mode == "per-node":
            return 1.0 / self.nodes[ends.left_node].t_coh + 1.0 / self.nodes[ends.right_node].t_coh
        left_link = self.links[ends.left_node]
        right_link = self.links[ends.right_node - 1]
        return 0.5 / left_link.t_coh + 0.5 / right_link.t_coh


@dataclass(frozen=True)
class Metrics:
    """Summary of one protocol evaluation; rates are per time unit."""

    mean_time: float
    mean_werner: float
    secret_fraction: float
    skr: float
    coverage: float
    t_trunc_used: int

    def to_json_dict(self, chain: HardwareChain | None = None) -> dict:
        out = {
            "mean_time": self.mean_time,
            "mean_werner": self.mean_werner,
            "secret_fraction": self.secret_fraction,
            "skr_per_unit": self.skr,
            "coverage": self.coverage,
            "t_trunc_used": self.t_trunc_used,
        }
        if chain is not None and chain.t_unit_seconds is not None:
            out["mean_time_seconds"] = self.mean_time * chain.t_unit_seconds
            out["skr_per_second"] = self.skr / chain.t_unit_seconds
        return out


class EvalCache:
    """Memo for repeated identical subtrees.

    Keys combine the subtree structure (links relative to the span) with
    the hardware parameters along the span and the horizon, so entries
    are shareable across protocols and across whole searches on the same
    chain.  Read-mostly; safe for concurrent use under the GIL.
    """

    def __init__(self):
        self._store: dict = {}

    def get(self, key):
        return self._store.get(key)

    def put(self, key, value) -> None:
        self._store[key] = value

    def __len__(self) -> int:
        return len(self._store)


def _shift_links(tree: ProtocolTree, offset: int) -> ProtocolTree:
    if isinstance(tree, Leaf):
        return Leaf(link=tree.link - offset, rounds=tree.rounds)
    return Branch(_shift_links(tree.left, offset), _shift_links(tree.right, offset), tree.rounds)


def _subtree_key(tree: ProtocolTree, chain: HardwareChain):
    left, right = span(tree)
    structure = serialize(_shift_links(tree, left))
    links = tuple(
        (chain.links[i].p_gen, chain.links[i].w0, chain.links[i].t_coh)
        for i in range(left, right)
    )
    if chain.coherence_mode == "per-node":
        nodes = tuple(chain.nodes[j].t_coh for j in range(left, right + 1))
    else:
        nodes = ()
    return structure, links, nodes


def _build_distribution(
    tree: ProtocolTree,
    chain: HardwareChain,
    t_trunc: int,
    cache: EvalCache | None,
) -> TimeDistribution:
    key = (_subtree_key(tree, chain), t_trunc) if cache is not None else None
    if key is not None:
        hit = cache.get(key)
        if hit is not None:
            return hit

    left_node, right_node = span(tree)
    ends = LinkEndpoints(left_node, right_node)
    if isinstance(tree, Leaf):
        link = chain.links[tree.link]
        dist = geometric_generation(link.p_gen, link.w0, t_trunc)
    else:
        dist_a = _build_distribution(tree.left, chain, t_trunc, cache)
        dist_b = _build_distribution(tree.right, chain, t_trunc, cache)
        ends_a = LinkEndpoints(*span(tree.left))
        ends_b = LinkEndpoints(*span(tree.right))
        dist = compound_restarts(attempt_profiles(dist_a, ends_a, dist_b, ends_b, "swap", chain))
    for _ in range(tree.rounds):
        dist = compound_restarts(attempt_profiles(dist, ends, dist, ends, "distill", chain))

    if key is not None:
        cache.put(key, dist)
    return dist


def default_t_init(chain: HardwareChain) -> int:
    """Initial truncation horizon: a few mean generation times, as a power
    of two so successive doublings land on friendly FFT sizes."""
    slowest = min(link.p_gen for link in chain.links)
    target = max(64.0, 4.0 / slowest)
    return 1 << max(6, math.ceil(math.log2(target)))


def evaluate(
    tree: ProtocolTree,
    chain: HardwareChain,
    eps_target: float = 0.01,
    t_cap: int = DEFAULT_T_CAP,
    t_init: int | None = None,
    cache: EvalCache | None = None,
    return_distribution: bool = False,
):
    """Analytically evaluate a protocol tree over a chain.

    Recursion: a leaf with ``k`` rounds starts from geometric generation
    and applies ``k`` nested distillation self-merges (round ``r``
    consumes two independent copies of the round ``r-1`` link); an
    internal vertex swap-merges its children, then applies its own
    distillation rounds.  The whole build is wrapped in horizon doubling
    until the end-to-end distribution covers ``1 - eps_target``.

    Returns :class:`Metrics`, or ``(Metrics, TimeDistribution)`` when
    ``return_distribution`` is set.  Raises
    :class:`~repchain.timedist.TruncationCapError` if the coverage
    target is unreachable within ``t_cap``.
    """
    validate_tree(tree, n_links=chain.n_links)
    if t_init is None:
        t_init = default_t_init(chain)
    t_init = min(t_init, t_cap)

    dist = ensure_coverage(
        lambda t: _build_distribution(tree, chain, t, cache), eps_target, t_cap, t_init
    )
    mean_time, mean_werner, coverage = summarize(dist)
    frac = kernels.secret_fraction(mean_werner)
    metrics = Metrics(
        mean_time=mean_time,
        mean_werner=mean_werner,
        secret_fraction=frac,
        skr=frac / mean_time,
        coverage=coverage,
        t_trunc_used=dist.t_trunc,
    )
    if return_distribution:
        return metrics, dist
    return metrics


def skr_of(metrics: Metrics, units: str = "unit", chain: HardwareChain | None = None) -> float:
    """Secret-key rate in the requested unit convention.

    ``"unit"`` divides the secret fraction by the mean waiting time in
    time units; ``"second"`` additionally divides by the configured
    duration of one time unit.
    """
    if units == "unit":
        return metrics.skr
    if units == "second":
        if chain is None or chain.t_unit_seconds is None:
            raise ValueError("per-second rate requested but t_unit_seconds is not configured")
        return metrics.skr / chain.t_unit_seconds
    raise ValueError(f"unknown units {units!r}")


@dataclass(frozen=True)
class MonteCarloEstimate:
    """Sample means of waiting time and Werner parameter, with standard errors."""

    mean_time: float
    stderr_time: float
    mean_werner: float
    stderr_werner: float
    n_samples: int
    seed: int

    @property
    def skr(self) -> float:
        return kernels.secret_fraction(self.mean_werner) / self.mean_time

    def to_json_dict(self) -> dict:
        return {
            "mean_time": self.mean_time,
            "stderr_time": self.stderr_time,
            "mean_werner": self.mean_werner,
            "stderr_werner": self.stderr_werner,
            "skr_per_unit": self.skr,
            "n_samples": self.n_samples,
            "seed": self.seed,
        }


def _mc_merge(
    draw_a: Callable[[int], tuple[np.ndarray, np.ndarray]],
    draw_b: Callable[[int], tuple[np.ndarray, np.ndarray]],
    op: str,
    rate_a: float,
    rate_b: float,
    p_swap: float,
    rng: np.random.Generator,
    count: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Sample one merge with restart-from-scratch failure semantics."""
    total_t = np.zeros(count, dtype=np.int64)
    out_w = np.empty(count)
    pending = np.arange(count)
    while pending.size:
        k = pending.size
        ta, wa = draw_a(k)
        tb, wb = draw_b(k)
        duration = np.maximum(ta, tb)
        gap = np.abs(ta - tb).astype(float)
        wa = np.where(ta < tb, wa * np.exp(-gap * rate_a), wa)
        wb = np.where(tb < ta, wb * np.exp(-gap * rate_b), wb)
        total_t[pending] += duration
        if op == "swap":
            p_succ = np.full(k, p_swap)
            w_out = wa * wb
        else:
            p_succ = 0.5 * (1.0 + wa * wb)
            w_out = (wa + wb + 4.0 * wa * wb) / (6.0 * p_succ)
        ok = rng.random(k) < p_succ
        out_w[pending[ok]] = w_out[ok]
        pending = pending[~ok]
    return total_t, out_w


def monte_carlo(
    tree: ProtocolTree,
    chain: HardwareChain,
    n_samples: int,
    seed: int = 0,
) -> MonteCarloEstimate:
    """Sample the full stochastic process of a protocol directly.

    Geometric generation attempts, waiting for the later link, decay of
    the earlier link over the gap, Bernoulli operation outcomes
    (state-dependent for distillation), and restart-from-scratch on
    failure.  Vectorized over samples; deterministic given the seed.
    """
    validate_tree(tree, n_links=chain.n_links)
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    rng = np.random.default_rng(seed)

    def sampler(vertex: ProtocolTree, rounds_left: int) -> Callable[[int], tuple]:
        ends = LinkEndpoints(*span(vertex))
        rate = chain.decay_rate(ends)
        if rounds_left == 0:
            if isinstance(vertex, Leaf):
                link = chain.links[vertex.link]

                def draw(k: int):
                    return rng.geometric(link.p_gen, size=k).astype(np.int64), np.full(k, link.w0)

                return draw
            draw_a = sampler(vertex.left, vertex.left.rounds)
            draw_b = sampler(vertex.right, vertex.right.rounds)
            rate_a = chain.decay_rate(LinkEndpoints(*span(vertex.left)))
            rate_b = chain.decay_rate(LinkEndpoints(*span(vertex.right)))

            def draw(k: int):
                return _mc_merge(draw_a, draw_b, "swap", rate_a, rate_b, chain.p_swap, rng, k)

            return draw
        inner = sampler(vertex, rounds_left - 1)

        def draw(k: int):
            return _mc_merge(inner, inner, "distill", rate, rate, chain.p_swap, rng, k)

        return draw

    t_samples, w_samples = sampler(tree, tree.rounds)(n_samples)
    t_samples = t_samples.astype(float)
    return MonteCarloEstimate(
        mean_time=float(t_samples.mean()),
        stderr_time=float(t_samples.std(ddof=1) / math.sqrt(n_samples)) if n_samples > 1 else 0.0,
        mean_werner=float(w_samples.mean()),
        stderr_werner=float(w_samples.std(ddof=1) / math.sqrt(n_samples)) if n_samples > 1 else 0.0,
        n_samples=n_samples,
        seed=seed,
    )
