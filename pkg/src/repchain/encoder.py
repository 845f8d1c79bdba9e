"""Encoding of optimizer points into sampled protocol trees.

A point ``(gamma, K, eta, tau)`` describes a probability distribution
over protocols: ``gamma`` picks the swap-tree shape along the
symmetricity ordering, ``K`` is the total number of distillation rounds,
and ``(eta, tau)`` set the mean and spread of the normal distribution
from which the rounds' vertex positions are drawn.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from repchain.protocol import ProtocolTree, ShapeId, shapes_by_symmetricity, with_labels

__all__ = ["EncoderParams", "select_shape", "assign_distillation", "encode"]


@dataclass(frozen=True)
class EncoderParams:
    """One optimizer point; bounds are hard and checked on use."""

    gamma: float
    K: int
    eta: float
    tau: float

    def validate(self, n_nodes: int, beta: int) -> None:
        v = 2 * n_nodes - 3
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma!r}")
        if not -1.0 <= self.eta <= 1.0:
            raise ValueError(f"eta must lie in [-1, 1], got {self.eta!r}")
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError(f"tau must lie in [0, 1], got {self.tau!r}")
        if not 0 <= self.K <= v * beta:
            raise ValueError(f"K must lie in [0, {v * beta}] for N={n_nodes}, beta={beta}")

    def to_json_dict(self) -> dict:
        return {"gamma": self.gamma, "K": self.K, "eta": self.eta, "tau": self.tau}


def select_shape(gamma: float, n_nodes: int) -> ShapeId:
    """Shape at the fraction ``gamma`` of the symmetricity ordering.

    Shapes are sorted ascending by symmetricity (ties by enumeration
    index) and the entry at ``round(gamma * (M - 1))`` is returned, so
    ``gamma = 0`` gives the least symmetric tree and ``gamma = 1`` a
    maximally symmetric one.
    """
    if n_nodes < 2:
        raise ValueError("a chain needs at least 2 nodes")
    ordered = shapes_by_symmetricity(n_nodes - 1)
    idx = int(round(gamma * (len(ordered) - 1)))
    return ordered[idx]


def assign_distillation(
    v: int,
    K: int,
    eta: float,
    tau: float,
    beta: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Distribute ``K`` distillation rounds over ``v`` vertex positions.

    Each round draws a position from Normal(mu, sigma) with
    ``mu = (eta + 1) v / 2`` and ``sigma = tau v`` (sigma = 0 is the
    point mass at mu), rounded and clamped into 1..v.  Position 1 is the
    first leaf and position v the root.  A full vertex (already at
    ``beta`` rounds) deterministically overflows to the nearest position
    with spare capacity, ties toward the lower index.
    """
    if K > v * beta:
        raise ValueError(f"K={K} exceeds capacity v*beta={v * beta}")
    labels = np.zeros(v, dtype=int)
    mu = (eta + 1.0) * v / 2.0
    sigma = tau * v
    for _ in range(K):
        x = mu if sigma == 0.0 else rng.normal(mu, sigma)
        pos = min(max(int(round(x)), 1), v)
        if labels[pos - 1] >= beta:
            pos = _nearest_free(labels, pos, beta)
        labels[pos - 1] += 1
    return labels


def _nearest_free(labels: np.ndarray, pos: int, beta: int) -> int:
    v = len(labels)
    for d in range(1, v):
        lo = pos - d
        if lo >= 1 and labels[lo - 1] < beta:
            return lo
        hi = pos + d
        if hi <= v and labels[hi - 1] < beta:
            return hi
    raise AssertionError("no spare capacity; K <= v*beta should prevent this")


def encode(
    params: EncoderParams,
    n_nodes: int,
    beta: int,
    rng: np.random.Generator | int,
) -> ProtocolTree:
    """Sample a protocol from the distribution described by ``params``."""
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(int(rng))
    params.validate(n_nodes, beta)
    shape = select_shape(params.gamma, n_nodes)
    v = 2 * n_nodes - 3
    labels = assign_distillation(v, params.K, params.eta, params.tau, beta, rng)
    return with_labels(shape.shape, labels)
