import numpy as np
import pytest

from repchain.evaluator import HardwareChain, LinkSpec, NodeSpec


@pytest.fixture
def perfect_link_chain():
    """Single deterministic perfect link (N=2)."""
    return HardwareChain(
        nodes=(NodeSpec(), NodeSpec()),
        links=(LinkSpec(p_gen=1.0, w0=1.0),),
        p_swap=0.85,
    )


@pytest.fixture
def small_noisy_chain():
    """N=3 chain with every stochastic ingredient switched on."""
    return HardwareChain(
        nodes=(NodeSpec(100.0), NodeSpec(80.0), NodeSpec(120.0)),
        links=(LinkSpec(p_gen=0.5, w0=0.9), LinkSpec(p_gen=0.4, w0=0.85)),
        p_swap=0.8,
    )


def random_distribution(rng: np.random.Generator, t_trunc: int):
    """Random sub-normalized TimeDistribution for property tests."""
    from repchain.timedist import TimeDistribution

    p = rng.random(t_trunc + 1)
    p[0] = 0.0
    p *= rng.uniform(0.2, 1.0) / p.sum()
    v = p * rng.random(t_trunc + 1)
    return TimeDistribution(p, v)


def random_chain(rng: np.random.Generator, n_nodes: int, p_gen_min: float = 0.2):
    """Random heterogeneous chain with moderately fast generation."""
    mode = "per-node" if rng.random() < 0.5 else "per-link-joint"
    nodes = tuple(NodeSpec(t_coh=float(rng.uniform(50, 500))) for _ in range(n_nodes))
    links = tuple(
        LinkSpec(
            p_gen=float(rng.uniform(p_gen_min, 1.0)),
            w0=float(rng.uniform(0.7, 1.0)),
            t_coh=float(rng.uniform(50, 500)),
        )
        for _ in range(n_nodes - 1)
    )
    return HardwareChain(
        nodes=nodes,
        links=links,
        p_swap=float(rng.uniform(0.5, 1.0)),
        coherence_mode=mode,
    )
