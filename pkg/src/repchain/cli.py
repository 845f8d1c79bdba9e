"""Command-line front end.

Subcommands: count, evaluate, brute-force, optimize, random, oracle.
All runs are driven by a JSON config (a file path or a bundled scenario
name such as ``scenario_c``); individual flags override config values.
Exit codes: 0 success, 2 validation error, 3 truncation cap exceeded,
4 oversized brute-force space.
"""

from __future__ import annotations

import argparse
import json
import sys

from repchain import optimizer as opt
from repchain.config import ConfigError, RunConfig, load_config
from repchain.evaluator import evaluate, monte_carlo, skr_of
from repchain.protocol import ProtocolParseError, catalan, count_space, parse
from repchain.timedist import TruncationCapError, write_distribution_csv

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_TRUNCATION = 3
EXIT_OVERSIZED = 4


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", required=True, help="config file path or bundled scenario name")
    sub.add_argument("--seed", type=int, default=None)
    sub.add_argument("--shots", type=int, default=None)
    sub.add_argument("--n-init", type=int, default=None)
    sub.add_argument("--beta", type=int, default=None)
    sub.add_argument("--epsilon", type=float, default=None)
    sub.add_argument("--t-cap", type=int, default=None)
    sub.add_argument("--units", choices=["unit", "second"], default=None)
    sub.add_argument("--threads", type=int, default=None)
    sub.add_argument("--dump-dist", default=None, help="write the end-to-end distribution CSV here")
    sub.add_argument("--ledger", default=None, help="JSON-lines trial ledger path")
    sub.add_argument("--summary", default=None, help="CSV summary path")
    sub.add_argument("--no-plots", action="store_true", help="skip rendering figures next to reports")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="repchain", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("count", help="protocol-space cardinality")
    _add_common(p)

    p = subs.add_parser("evaluate", help="evaluate one protocol")
    p.add_argument("protocol", help="protocol text, e.g. (((L0:1)(L1:1):0)((L2:1)(L3:1):0):0)")
    _add_common(p)

    p = subs.add_parser("brute-force", help="evaluate every protocol in the space")
    _add_common(p)

    p = subs.add_parser("optimize", help="Bayesian optimization over the space")
    _add_common(p)

    p = subs.add_parser("random", help="random-search baseline")
    _add_common(p)

    p = subs.add_parser("oracle", help="Monte Carlo cross-check of the analytic engine")
    p.add_argument("protocol")
    p.add_argument("--samples", type=int, default=100_000)
    _add_common(p)

    return parser


def _apply_overrides(cfg: RunConfig, args: argparse.Namespace) -> RunConfig:
    for attr, key in [
        ("seed", "seed"),
        ("shots", "shots"),
        ("n_init", "n_init"),
        ("beta", "beta"),
        ("epsilon", "eps_target"),
        ("t_cap", "t_cap"),
        ("units", "units"),
        ("threads", "threads"),
        ("ledger", "ledger_path"),
        ("summary", "summary_path"),
        ("dump_dist", "dump_dist_path"),
    ]:
        value = getattr(args, attr, None)
        if value is not None:
            setattr(cfg, key, value)
    if getattr(args, "no_plots", False):
        cfg.plots = False
    if cfg.units == "second" and cfg.chain.t_unit_seconds is None:
        raise ConfigError("units='second' needs chain.L0_km in the config")
    if cfg.beta < 0:
        raise ConfigError("beta must be non-negative")
    return cfg


def _rate_line(skr_per_unit: float, cfg: RunConfig) -> str:
    if cfg.units == "second":
        return f"{skr_per_unit / cfg.chain.t_unit_seconds:.6g} per second"
    return f"{skr_per_unit:.6g} per unit"


def cmd_count(cfg: RunConfig) -> int:
    n = cfg.chain.n_nodes
    v = 2 * n - 3
    total = count_space(n, cfg.beta)
    print(
        f"N={n} beta={cfg.beta}: |P| = C({n - 2}) * {cfg.beta + 1}^{v} "
        f"= {catalan(n - 2)} * {(cfg.beta + 1) ** v} = {total} (~{float(total):.3g})"
    )
    return EXIT_OK


def _dump_outputs(cfg: RunConfig, dist) -> None:
    if cfg.dump_dist_path:
        write_distribution_csv(dist, cfg.dump_dist_path)
        if cfg.plots:
            from repchain import plotting

            plotting.plot_distribution(
                dist, plotting.figure_path_for(cfg.dump_dist_path)
            )


def cmd_evaluate(cfg: RunConfig, protocol_text: str) -> int:
    tree = parse(protocol_text)
    metrics, dist = evaluate(
        tree,
        cfg.chain,
        eps_target=cfg.eps_target,
        t_cap=cfg.t_cap,
        t_init=cfg.t_init,
        return_distribution=True,
    )
    print(json.dumps({"protocol": protocol_text, **metrics.to_json_dict(cfg.chain)}))
    _dump_outputs(cfg, dist)
    return EXIT_OK


def _report_search(cfg: RunConfig, best, history, label: str) -> int:
    if cfg.ledger_path:
        opt.write_ledger(history, cfg.ledger_path)
    if cfg.summary_path:
        opt.write_summary(history, cfg.summary_path)
        if cfg.plots:
            from repchain import plotting

            plotting.plot_search_history(
                history, plotting.figure_path_for(cfg.summary_path), title=label
            )
    print(f"best protocol: {best.protocol_text}")
    print(f"best SKR: {_rate_line(best.objective, cfg)}")
    return EXIT_OK


def cmd_bruteforce(cfg: RunConfig) -> int:
    best, table = opt.brute_force(
        cfg.chain,
        cfg.beta,
        eps_target=cfg.eps_target,
        t_cap=cfg.t_cap,
        limit=cfg.enumeration_limit,
        threads=cfg.threads,
    )
    return _report_search(cfg, best, table, f"brute force, beta={cfg.beta}")


def cmd_optimize(cfg: RunConfig) -> int:
    if cfg.shots < 1:
        raise ConfigError("shots must be at least 1")
    best, history = opt.bayesian_optimize(
        cfg.chain,
        cfg.beta,
        shots=cfg.shots,
        n_init=cfg.n_init,
        seed=cfg.seed,
        eps_target=cfg.eps_target,
        t_cap=cfg.t_cap,
    )
    return _report_search(cfg, best, history, f"Bayesian optimization, beta={cfg.beta}")


def cmd_random(cfg: RunConfig) -> int:
    if cfg.shots < 1:
        raise ConfigError("shots must be at least 1")
    best, history = opt.random_search(
        cfg.chain,
        cfg.beta,
        shots=cfg.shots,
        seed=cfg.seed,
        eps_target=cfg.eps_target,
        t_cap=cfg.t_cap,
    )
    return _report_search(cfg, best, history, f"random search, beta={cfg.beta}")


def cmd_oracle(cfg: RunConfig, protocol_text: str, n_samples: int) -> int:
    if n_samples < 1:
        raise ConfigError("oracle needs at least one sample")
    tree = parse(protocol_text)
    analytic = evaluate(
        tree, cfg.chain, eps_target=cfg.eps_target, t_cap=cfg.t_cap, t_init=cfg.t_init
    )
    mc = monte_carlo(tree, cfg.chain, n_samples, seed=cfg.seed)
    dev_t = abs(analytic.mean_time - mc.mean_time)
    dev_w = abs(analytic.mean_werner - mc.mean_werner)
    # the absolute slack only forgives float rounding when a quantity is
    # deterministic and the sample standard error collapses to ~0
    ok_t = dev_t <= 4.0 * mc.stderr_time + 1e-12 * max(1.0, analytic.mean_time)
    ok_w = dev_w <= 4.0 * mc.stderr_werner + 1e-12
    print(json.dumps({
        "protocol": protocol_text,
        "analytic": analytic.to_json_dict(cfg.chain),
        "monte_carlo": mc.to_json_dict(),
        "mean_time_within_4_sigma": ok_t,
        "mean_werner_within_4_sigma": ok_w,
    }))
    print("PASS" if (ok_t and ok_w) else "FAIL")
    return EXIT_OK if (ok_t and ok_w) else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _apply_overrides(load_config(args.config), args)
        if args.command == "count":
            return cmd_count(cfg)
        if args.command == "evaluate":
            return cmd_evaluate(cfg, args.protocol)
        if args.command == "brute-force":
            return cmd_bruteforce(cfg)
        if args.command == "optimize":
            return cmd_optimize(cfg)
        if args.command == "random":
            return cmd_random(cfg)
        if args.command == "oracle":
            return cmd_oracle(cfg, args.protocol, args.samples)
        raise AssertionError(f"unhandled command {args.command}")
    except (ConfigError, ProtocolParseError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except TruncationCapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TRUNCATION
    except opt.OversizedSpaceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OVERSIZED


if __name__ == "__main__":
    sys.exit(main())
