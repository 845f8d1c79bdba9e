"""Run configuration: JSON ingestion, validation, and bundled scenarios.

A config file has three sections: ``chain`` (the hardware), ``run``
(search and evaluation parameters), and ``output`` (file paths).  Every
physical quantity carries its unit in the key name.  Unknown keys are
rejected so typos fail loudly instead of silently using defaults.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from repchain.evaluator import DEFAULT_T_CAP, HardwareChain, LinkSpec, NodeSpec
from repchain.optimizer import DEFAULT_ENUM_LIMIT

__all__ = ["ConfigError", "RunConfig", "load_config", "bundled_config_path", "bundled_configs"]

_MODES = ("count", "evaluate", "brute-force", "optimize", "random", "oracle")


class ConfigError(ValueError):
    """Invalid or malformed run configuration."""


@dataclass
class RunConfig:
    chain: HardwareChain
    mode: str | None = None
    beta: int = 0
    shots: int = 100
    n_init: int = 10
    seed: int = 0
    eps_target: float = 0.01
    t_cap: int = DEFAULT_T_CAP
    t_init: int | None = None
    units: str = "unit"
    enumeration_limit: int = DEFAULT_ENUM_LIMIT
    threads: int = 1
    ledger_path: str | None = None
    summary_path: str | None = None
    dump_dist_path: str | None = None
    plots: bool = True


def _reject_unknown(obj: dict, allowed: set[str], where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in {where}")


def _parse_chain(obj: dict) -> HardwareChain:
    _reject_unknown(
        obj,
        {"nodes", "links", "p_swap", "coherence_mode", "L0_km", "c_m_per_s"},
        "chain",
    )
    for required in ("nodes", "links", "p_swap"):
        if required not in obj:
            raise ConfigError(f"chain is missing required key {required!r}")

    nodes = []
    for j, node_obj in enumerate(obj["nodes"]):
        _reject_unknown(node_obj, {"t_coh"}, f"chain.nodes[{j}]")
        t_coh = node_obj.get("t_coh")
        nodes.append(NodeSpec(t_coh=math.inf if t_coh is None else float(t_coh)))

    links = []
    for i, link_obj in enumerate(obj["links"]):
        _reject_unknown(link_obj, {"p_gen", "w0", "t_coh"}, f"chain.links[{i}]")
        for required in ("p_gen", "w0"):
            if required not in link_obj:
                raise ConfigError(f"chain.links[{i}] is missing {required!r}")
        t_coh = link_obj.get("t_coh")
        links.append(
            LinkSpec(
                p_gen=float(link_obj["p_gen"]),
                w0=float(link_obj["w0"]),
                t_coh=None if t_coh is None else float(t_coh),
            )
        )

    t_unit_seconds = None
    if "L0_km" in obj:
        c = float(obj.get("c_m_per_s", 2e8))
        t_unit_seconds = float(obj["L0_km"]) * 1000.0 / c

    try:
        return HardwareChain(
            nodes=tuple(nodes),
            links=tuple(links),
            p_swap=float(obj["p_swap"]),
            coherence_mode=obj.get("coherence_mode", "per-node"),
            t_unit_seconds=t_unit_seconds,
        )
    except ValueError as exc:
        raise ConfigError(f"invalid chain: {exc}") from exc


def _parse_config(obj: dict, where: str) -> RunConfig:
    _reject_unknown(obj, {"chain", "run", "output"}, where)
    if "chain" not in obj:
        raise ConfigError(f"{where} is missing the 'chain' section")
    chain = _parse_chain(obj["chain"])
    cfg = RunConfig(chain=chain)

    run = obj.get("run", {})
    _reject_unknown(
        run,
        {
            "mode", "beta", "shots", "n_init", "seed", "epsilon", "t_cap",
            "t_init", "units", "enumeration_limit", "threads",
        },
        "run",
    )
    if "mode" in run:
        if run["mode"] not in _MODES:
            raise ConfigError(f"run.mode must be one of {_MODES}, got {run['mode']!r}")
        cfg.mode = run["mode"]
    cfg.beta = int(run.get("beta", cfg.beta))
    cfg.shots = int(run.get("shots", cfg.shots))
    cfg.n_init = int(run.get("n_init", cfg.n_init))
    cfg.seed = int(run.get("seed", cfg.seed))
    cfg.eps_target = float(run.get("epsilon", cfg.eps_target))
    cfg.t_cap = int(run.get("t_cap", cfg.t_cap))
    if "t_init" in run:
        cfg.t_init = int(run["t_init"])
    cfg.units = run.get("units", cfg.units)
    cfg.enumeration_limit = int(run.get("enumeration_limit", cfg.enumeration_limit))
    cfg.threads = int(run.get("threads", cfg.threads))

    output = obj.get("output", {})
    _reject_unknown(output, {"ledger", "summary", "dump_dist", "plots"}, "output")
    cfg.ledger_path = output.get("ledger")
    cfg.summary_path = output.get("summary")
    cfg.dump_dist_path = output.get("dump_dist")
    cfg.plots = bool(output.get("plots", cfg.plots))

    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    if cfg.beta < 0:
        raise ConfigError("beta must be non-negative")
    if not 0.0 < cfg.eps_target < 1.0:
        raise ConfigError("epsilon must lie strictly between 0 and 1")
    if cfg.t_cap < 1:
        raise ConfigError("t_cap must be positive")
    if cfg.t_init is not None and not 1 <= cfg.t_init <= cfg.t_cap:
        raise ConfigError("t_init must lie in [1, t_cap]")
    if cfg.units not in ("unit", "second"):
        raise ConfigError(f"units must be 'unit' or 'second', got {cfg.units!r}")
    if cfg.units == "second" and cfg.chain.t_unit_seconds is None:
        raise ConfigError("units='second' needs chain.L0_km (and optionally c_m_per_s)")
    if cfg.threads < 1:
        raise ConfigError("threads must be at least 1")


def bundled_configs() -> list[str]:
    """Names of the example configs shipped with the package."""
    pkg = resources.files("repchain").joinpath("configs")
    return sorted(p.name[: -len(".json")] for p in pkg.iterdir() if p.name.endswith(".json"))


def bundled_config_path(name: str) -> Path:
    path = resources.files("repchain").joinpath("configs", f"{name}.json")
    if not path.is_file():
        raise ConfigError(f"no bundled config named {name!r}; available: {bundled_configs()}")
    return Path(str(path))


def load_config(path_or_name: str) -> RunConfig:
    """Load a config from a file path or a bundled scenario name."""
    path = Path(path_or_name)
    if not path.is_file():
        path = bundled_config_path(path_or_name)
    try:
        obj = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return _parse_config(obj, str(path))
