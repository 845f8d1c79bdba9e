"""Search drivers over the protocol-encoding space.

Three ways to look for the protocol with the highest secret-key rate:
a Gaussian-process Bayesian optimizer with an ask/tell interface, a
uniform random-search baseline, and exhaustive brute force over the
whole protocol space.  All three produce the same reproducible trial
ledger.
"""

from __future__ import annotations

import csv
import json
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm, qmc
from sklearn.gaussian_process import GaussianProcessRegressor
from sklearn.gaussian_process.kernels import ConstantKernel, Matern, WhiteKernel

from repchain.encoder import EncoderParams, encode
from repchain.evaluator import (
    DEFAULT_T_CAP,
    EvalCache,
    HardwareChain,
    Metrics,
    evaluate,
)
from repchain.protocol import ProtocolTree, count_space, enumerate_protocols, serialize
from repchain.timedist import TruncationCapError

__all__ = [
    "SearchSpace",
    "TrialRecord",
    "BayesianOptimizer",
    "OversizedSpaceError",
    "bayesian_optimize",
    "random_search",
    "brute_force",
    "write_ledger",
    "write_summary",
    "DEFAULT_ENUM_LIMIT",
]

DEFAULT_ENUM_LIMIT = 100_000


@dataclass(frozen=True)
class SearchSpace:
    """Bounds of the encoder tuple for a given chain size and beta."""

    n_nodes: int
    beta: int

    @property
    def v(self) -> int:
        return 2 * self.n_nodes - 3

    @property
    def k_max(self) -> int:
        return self.v * self.beta


@dataclass(frozen=True)
class TrialRecord:
    """One optimizer evaluation; the reproducibility ledger row.

    ``params`` is None for brute-force rows (nothing was sampled), and
    ``metrics`` is None when the evaluation failed on the truncation cap
    (such trials score 0).  ``wall_time`` is kept in memory only; the
    serialized ledger omits it so identical runs produce identical files.
    """

    trial_index: int
    params: EncoderParams | None
    protocol_text: str
    metrics: Metrics | None
    objective: float
    seed: int
    wall_time: float

    def to_json_dict(self) -> dict:
        return {
            "trial_index": self.trial_index,
            "params": self.params.to_json_dict() if self.params is not None else None,
            "protocol": self.protocol_text,
            "objective": self.objective,
            "seed": self.seed,
            "metrics": self.metrics.to_json_dict() if self.metrics is not None else None,
        }


class OversizedSpaceError(RuntimeError):
    """Brute force refused because the space exceeds the enumeration limit."""

    def __init__(self, cardinality: int, limit: int):
        self.cardinality = cardinality
        self.limit = limit
        super().__init__(
            f"protocol space holds {cardinality} protocols, above the "
            f"enumeration limit {limit}"
        )


class BayesianOptimizer:
    """Ask/tell Gaussian-process optimizer on the unit-cube encoding.

    The first ``n_init`` asks come from a Latin-hypercube design; after
    that a GP surrogate (Matern-5/2, constant mean, fitted noise term)
    is refit on all observations and the next point maximizes expected
    improvement over a pool of random candidates.  ``K`` is relaxed to a
    continuous coordinate and rounded on the way out.
    """

    def __init__(
        self,
        space: SearchSpace,
        seed: int = 0,
        n_init: int = 10,
        candidate_pool: int = 1024,
    ):
        if n_init < 2:
            raise ValueError("n_init must be at least 2")
        self.space = space
        self.n_init = n_init
        self.candidate_pool = candidate_pool
        self._seed = seed
        self._rng = np.random.default_rng(seed)
        self._design = qmc.LatinHypercube(d=4, seed=seed).random(n_init)
        self._x: list[np.ndarray] = []
        self._y: list[float] = []
        self._pending: np.ndarray | None = None
        self._gp: GaussianProcessRegressor | None = None

    def _to_params(self, x: np.ndarray) -> EncoderParams:
        return EncoderParams(
            gamma=float(x[0]),
            K=int(round(x[1] * self.space.k_max)),
            eta=float(2.0 * x[2] - 1.0),
            tau=float(x[3]),
        )

    def _fit(self) -> GaussianProcessRegressor:
        kernel = ConstantKernel(1.0, (1e-3, 1e3)) * Matern(
            length_scale=[0.3] * 4, length_scale_bounds=(1e-2, 1e2), nu=2.5
        ) + WhiteKernel(noise_level=1e-4, noise_level_bounds=(1e-10, 1e-1))
        gp = GaussianProcessRegressor(
            kernel=kernel,
            normalize_y=True,
            n_restarts_optimizer=1,
            random_state=self._seed,
        )
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            gp.fit(np.array(self._x), np.array(self._y))
        return gp

    def ask(self) -> EncoderParams:
        if self._pending is not None:
            raise RuntimeError("tell() the previous point before asking again")
        if len(self._x) < self.n_init:
            x = self._design[len(self._x)]
        else:
            self._gp = self._fit()
            candidates = self._rng.random((self.candidate_pool, 4))
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                mean, std = self._gp.predict(candidates, return_std=True)
            best = max(self._y)
            std = np.maximum(std, 1e-12)
            z = (mean - best) / std
            ei = (mean - best) * norm.cdf(z) + std * norm.pdf(z)
            x = candidates[int(np.argmax(ei))]
        self._pending = x
        return self._to_params(x)

    def tell(self, params: EncoderParams, objective: float) -> None:
        if self._pending is None:
            raise RuntimeError("ask() before tell()")
        self._x.append(self._pending)
        self._y.append(float(objective))
        self._pending = None

    def surrogate_residuals(self) -> tuple[np.ndarray, float]:
        """Posterior-mean residuals at observed points and the fitted
        observation-noise standard deviation; used as a sanity check."""
        gp = self._fit()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            mean = gp.predict(np.array(self._x))
        noise = float(gp.kernel_.k2.noise_level)
        y = np.array(self._y)
        scale = y.std() if y.std() > 0 else 1.0
        return np.abs(mean - y), float(np.sqrt(noise) * scale)


def _run_protocol(
    tree: ProtocolTree,
    chain: HardwareChain,
    eps_target: float,
    t_cap: int,
    cache: EvalCache | None,
) -> tuple[Metrics | None, float]:
    try:
        metrics = evaluate(tree, chain, eps_target=eps_target, t_cap=t_cap, cache=cache)
        return metrics, metrics.skr
    except TruncationCapError:
        return None, 0.0


def _search_loop(
    ask,
    tell,
    chain: HardwareChain,
    beta: int,
    shots: int,
    seed: int,
    eps_target: float,
    t_cap: int,
    cache: EvalCache | None,
) -> tuple[TrialRecord, list[TrialRecord]]:
    history: list[TrialRecord] = []
    for i in range(shots):
        start = time.perf_counter()
        params = ask()
        trial_seed = seed + i
        tree = encode(params, chain.n_nodes, beta, rng=trial_seed)
        metrics, objective = _run_protocol(tree, chain, eps_target, t_cap, cache)
        if tell is not None:
            tell(params, objective)
        history.append(
            TrialRecord(
                trial_index=i,
                params=params,
                protocol_text=serialize(tree),
                metrics=metrics,
                objective=objective,
                seed=trial_seed,
                wall_time=time.perf_counter() - start,
            )
        )
    best = max(history, key=lambda r: r.objective)
    return best, history


def bayesian_optimize(
    chain: HardwareChain,
    beta: int,
    shots: int,
    n_init: int = 10,
    seed: int = 0,
    eps_target: float = 0.01,
    t_cap: int = DEFAULT_T_CAP,
    cache: EvalCache | None = None,
    candidate_pool: int = 1024,
) -> tuple[TrialRecord, list[TrialRecord]]:
    """Sequential GP search for the maximum secret-key rate.

    Each shot decodes its point with a per-trial seed (base seed plus
    trial index) and evaluates the sampled protocol; failed evaluations
    score 0 and the loop continues.  Returns the best trial and the full
    history.  Deterministic given the seed.
    """
    if shots < n_init:
        raise ValueError("shots must be at least n_init")
    space = SearchSpace(chain.n_nodes, beta)
    optimizer = BayesianOptimizer(space, seed=seed, n_init=n_init, candidate_pool=candidate_pool)
    return _search_loop(
        optimizer.ask, optimizer.tell, chain, beta, shots, seed, eps_target, t_cap, cache
    )


def random_search(
    chain: HardwareChain,
    beta: int,
    shots: int,
    seed: int = 0,
    eps_target: float = 0.01,
    t_cap: int = DEFAULT_T_CAP,
    cache: EvalCache | None = None,
) -> tuple[TrialRecord, list[TrialRecord]]:
    """Uniform-draw baseline over the same space and ledger format."""
    if shots < 1:
        raise ValueError("shots must be at least 1")
    space = SearchSpace(chain.n_nodes, beta)
    rng = np.random.default_rng(seed)

    def propose() -> EncoderParams:
        return EncoderParams(
            gamma=float(rng.uniform(0.0, 1.0)),
            K=int(rng.integers(0, space.k_max + 1)),
            eta=float(rng.uniform(-1.0, 1.0)),
            tau=float(rng.uniform(0.0, 1.0)),
        )

    return _search_loop(propose, None, chain, beta, shots, seed, eps_target, t_cap, cache)


def brute_force(
    chain: HardwareChain,
    beta: int,
    eps_target: float = 0.01,
    t_cap: int = DEFAULT_T_CAP,
    limit: int = DEFAULT_ENUM_LIMIT,
    cache: EvalCache | None = None,
    threads: int = 1,
) -> tuple[TrialRecord, list[TrialRecord]]:
    """Evaluate every protocol in the space; the validation baseline.

    Refuses spaces larger than ``limit``.  Ties at the maximum go to the
    earliest protocol in enumeration order.  A shared evaluation cache
    (created here if not supplied) makes the common subtrees across
    protocols nearly free.
    """
    cardinality = count_space(chain.n_nodes, beta)
    if cardinality > limit:
        raise OversizedSpaceError(cardinality, limit)
    if cache is None:
        cache = EvalCache()
    protocols = list(enumerate_protocols(chain.n_nodes, beta))

    def run(indexed: tuple[int, ProtocolTree]) -> TrialRecord:
        i, tree = indexed
        start = time.perf_counter()
        metrics, objective = _run_protocol(tree, chain, eps_target, t_cap, cache)
        return TrialRecord(
            trial_index=i,
            params=None,
            protocol_text=serialize(tree),
            metrics=metrics,
            objective=objective,
            seed=0,
            wall_time=time.perf_counter() - start,
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            table = list(pool.map(run, enumerate(protocols)))
    else:
        table = [run(item) for item in enumerate(protocols)]
    best = max(table, key=lambda r: r.objective)
    return best, table


def write_ledger(history: list[TrialRecord], path) -> None:
    """JSON-lines ledger, one trial per line, in trial order."""
    with open(path, "w") as fh:
        for record in history:
            fh.write(json.dumps(record.to_json_dict()) + "\n")


def write_summary(history: list[TrialRecord], path) -> None:
    """CSV summary with the running best objective."""
    best = -np.inf
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["trial_index", "gamma", "K", "eta", "tau", "skr", "best_so_far"])
        for record in history:
            best = max(best, record.objective)
            p = record.params
            writer.writerow(
                [
                    record.trial_index,
                    "" if p is None else repr(p.gamma),
                    "" if p is None else p.K,
                    "" if p is None else repr(p.eta),
                    "" if p is None else repr(p.tau),
                    repr(record.objective),
                    repr(best),
                ]
            )
