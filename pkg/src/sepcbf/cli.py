"""Command-line entry point.

Commands::

    sepcbf run <cfg> [--out DIR]
    sepcbf init-plane <cfg>
    sepcbf bench [--agents N] [--trials K] [--seed S]
    sepcbf check [--level fast|full]
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .config import ConfigError, load_config
from .opt.cbfqp import ClassKappa, safety_filter
from .opt.margin import SeparationFailure, max_margin_hyperplane
from .sim import BarrierViolation, QpFailure, initial_world, nominal_inputs, random_scenario, run_scenario, step
from .world import ConfigurationError

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_BARRIER = 2
EXIT_QP = 3

log = logging.getLogger("sepcbf")


def _err(msg: str) -> None:
    print(f"sepcbf: {msg}", file=sys.stderr)


def _clean(x: float) -> float:
    x = float(x)
    return 0.0 if abs(x) < 1e-12 else x


# ---------------------------------------------------------------------------
# run


def cmd_run(config_path, out_dir=".") -> int:
    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        _err(f"{config_path}: {exc}")
        return EXIT_CONFIG
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    status, code, message, trace = "ok", EXIT_OK, "", None
    try:
        trace = run_scenario(cfg)
    except (SeparationFailure, ConfigurationError) as exc:
        _err(f"initial state rejected: {exc}")
        return EXIT_CONFIG
    except BarrierViolation as exc:
        status, code, message, trace = "barrier_violation", EXIT_BARRIER, str(exc), exc.log
    except QpFailure as exc:
        status, code, message, trace = "qp_infeasible", EXIT_QP, str(exc), exc.log
    trace.to_csv(out / "trajectory.csv")
    summary = trace.summary([a.target for a in cfg.agents])
    summary.update(status=status, message=message, config=str(config_path))
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    if code != EXIT_OK:
        _err(message)
    print(json.dumps(summary, indent=2))
    return code


# ---------------------------------------------------------------------------
# init-plane


def cmd_init_plane(config_path) -> int:
    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        _err(f"{config_path}: {exc}")
        return EXIT_CONFIG
    if len(cfg.agents) != 2:
        _err(f"init-plane needs exactly two bodies, the config has {len(cfg.agents)}")
        return EXIT_CONFIG
    a, b = cfg.agent_states()
    try:
        res = max_margin_hyperplane(a.shape, a.pose, b.shape, b.pose)
    except SeparationFailure as exc:
        _err(str(exc))
        return 2
    out = {
        "n": [_clean(v) for v in res.plane.n],
        "gamma": _clean(res.plane.gamma),
        "distance_lower_bound": float(res.distance_lower_bound),
    }
    print(json.dumps(out))
    return EXIT_OK


# ---------------------------------------------------------------------------
# bench


def expected_dimensions(n_agents: int, d: int = 2) -> tuple[int, int]:
    """Decision and constraint counts for fully actuated bodies and all pairs."""
    r = d * (d - 1) // 2
    pairs = n_agents * (n_agents - 1) // 2
    return n_agents * (r + d) + pairs * (d + 1), 2 * pairs


def bench_trial(n_agents: int, seed: int, steps: int) -> dict:
    """Closed-loop solves on one random layout; returns dimensions and solve times in ms."""
    cfg = random_scenario(n_agents, seed)
    world = initial_world(cfg.agent_states())
    alpha = ClassKappa(cfg.alpha_gain)
    times, n, m = [], 0, 0
    for _ in range(steps):
        res = safety_filter(world, nominal_inputs(world, cfg.k_rho), alpha, cfg.virtual_weight)
        n, m = res.problem.n, res.problem.m
        times.append(1e3 * res.solve_time)
        world = step(world, res.inputs, res.virtual, cfg.dt)
    return {"seed": seed, "n": n, "m": m, "times_ms": times}


def cmd_bench(n_agents=10, n_trials=10, seed=0, steps=20, jobs=1) -> int:
    if n_agents < 2:
        _err("bench needs at least two agents")
        return EXIT_CONFIG
    want_n, want_m = expected_dimensions(n_agents)
    seeds = [seed + k for k in range(n_trials)]
    args = ([n_agents] * n_trials, seeds, [steps] * n_trials)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(bench_trial, *args))
    else:
        results = list(map(bench_trial, *args))
    print(f"agents={n_agents} trials={n_trials} steps/trial={steps} expected dim={want_n} constraints={want_m}")
    for r in results:
        t = np.array(r["times_ms"])
        print(f"trial seed={r['seed']:<5d} dim={r['n']} constraints={r['m']} mean={t.mean():.3f} ms max={t.max():.3f} ms")
        if (r["n"], r["m"]) != (want_n, want_m):
            _err(f"dimension mismatch: got {r['n']}x{r['m']}, expected {want_n}x{want_m}")
            return EXIT_CONFIG
    all_t = np.concatenate([r["times_ms"] for r in results])
    p50, p95, p99 = np.percentile(all_t, [50, 95, 99])
    print(
        f"aggregate dim={want_n} constraints={want_m} solves={all_t.size} mean={all_t.mean():.3f} ms "
        f"p50={p50:.3f} ms p95={p95:.3f} ms p99={p99:.3f} ms max={all_t.max():.3f} ms"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# check


def cmd_check(level="fast", seed=0) -> int:
    from .checks import run_checks

    results = run_checks(level, seed, out=print)
    failed = [rep.quantity for reports, _ in results.values() for rep in reports if not rep.passed]
    total = sum(len(r) for r, _ in results.values())
    if failed:
        print(f"{len(failed)} of {total} checks failed: " + "; ".join(failed))
        return 1
    print(f"all {total} checks passed")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sepcbf", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate a scenario and write trajectory.csv and summary.json")
    p.add_argument("config")
    p.add_argument("--out", default=".", help="output directory (default: current directory)")

    p = sub.add_parser("init-plane", help="max-margin plane between the two bodies of a config")
    p.add_argument("config")

    p = sub.add_parser("bench", help="time the CBF-QP on random fully actuated layouts")
    p.add_argument("--agents", type=int, default=10)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--steps", type=int, default=20, help="closed-loop solves per trial")
    p.add_argument("--jobs", type=int, default=1, help="trials run in parallel processes")

    p = sub.add_parser("check", help="run the oracle property suites")
    p.add_argument("--level", choices=("fast", "full"), default="fast")
    p.add_argument("--seed", type=int, default=0)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    if args.command == "run":
        return cmd_run(args.config, args.out)
    if args.command == "init-plane":
        return cmd_init_plane(args.config)
    if args.command == "bench":
        return cmd_bench(args.agents, args.trials, args.seed, args.steps, args.jobs)
    return cmd_check(args.level, args.seed)


if __name__ == "__main__":
    sys.exit(main())
