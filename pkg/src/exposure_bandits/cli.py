"""Command-line front end.

Subcommands
-----------
solve       plan on a known instance and report commitment + value
learn       run a learning policy with sampled feedback
experiment  sweep (algorithm, T, seed) cells into a CSV of regrets
match       show the shaved aggregate and its optimal matching
oracle      brute-force optimum vs the committed planner on tiny instances
gamma       feasibility margin of the exploration schedule

Instance files are plain text, one ``key = value`` per line, lists
space-separated, ``mu`` row-major::

    n = 2
    k = 2
    tau = 100
    T = 1000
    P = 0.5 0.5
    delta = 40 40
    mu = 1 0 0 1
    reward_kind = bernoulli
    seed = 0

Exit codes: 0 ok, 2 config error, 3 infeasible instance, 4 resource
guard tripped.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
import time
from dataclasses import replace

from .core import (
    NEG_INF,
    Instance,
    InfeasibleError,
    ResourceGuardError,
    compute_gamma,
    validate,
)
from .dp import DpPolicy, dp_star, planned_total_value
from .env import Policy, run_episode
from .lcb import AlcbPolicy, LcbPolicy, lcb_star
from .learn import EesConfig, EesPolicy, Observables, baseline_policy
from .lmatch import LlcbPolicy
from .matching import build_lcb_aggregate, doalg

__all__ = ["main", "entry", "load_instance", "save_instance", "make_policy"]

SOLVERS = ("dp-star", "lcb-star", "a-lcb-star", "l-lcb")
BASELINES = ("myopic", "never-subsidize", "blind")
LEARNERS = ("ees-dp-star", "ees-lcb-star", "ees-a-lcb-star", "ees-l-lcb",
            "greedy-bandit")
ALGORITHMS = SOLVERS + BASELINES + LEARNERS

_EES_SSO = {
    "ees-dp-star": "dp_star",
    "ees-lcb-star": "lcb_star",
    "ees-a-lcb-star": "alcb_star",
    "ees-l-lcb": "llcb",
}

_INT_KEYS = ("n", "k", "tau", "T", "seed")
_LIST_KEYS = ("P", "delta", "mu")


def load_instance(path) -> tuple[Instance, int]:
    """Parse the key-value instance format; returns (instance, seed)."""
    fields: dict[str, object] = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if key in _INT_KEYS:
                fields[key] = int(value)
            elif key in _LIST_KEYS:
                fields[key] = [float(x) for x in value.replace(",", " ").split()]
            elif key == "reward_kind":
                fields[key] = value
            else:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
    for key in ("n", "k", "tau", "T", "P", "delta", "mu"):
        if key not in fields:
            raise ValueError(f"{path}: missing required key {key!r}")
    n, k = fields["n"], fields["k"]
    flat = fields["mu"]
    if len(flat) != n * k:
        raise ValueError(f"{path}: mu needs n*k={n * k} entries, got {len(flat)}")
    instance = Instance(
        n=n,
        k=k,
        tau=fields["tau"],
        T=fields["T"],
        P=tuple(fields["P"]),
        delta=tuple(int(d) for d in fields["delta"]),
        mu=tuple(tuple(flat[u * k : (u + 1) * k]) for u in range(n)),
        reward_kind=fields.get("reward_kind", "bernoulli"),
    )
    validate(instance)
    return instance, int(fields.get("seed", 0))


def save_instance(instance: Instance, path, seed: int = 0) -> None:
    with open(path, "w") as fh:
        fh.write(f"n = {instance.n}\n")
        fh.write(f"k = {instance.k}\n")
        fh.write(f"tau = {instance.tau}\n")
        fh.write(f"T = {instance.T}\n")
        fh.write("P = " + " ".join(_fmt(p) for p in instance.P) + "\n")
        fh.write("delta = " + " ".join(str(d) for d in instance.delta) + "\n")
        fh.write(
            "mu = " + " ".join(_fmt(v) for row in instance.mu for v in row) + "\n"
        )
        fh.write(f"reward_kind = {instance.reward_kind}\n")
        fh.write(f"seed = {seed}\n")


def _fmt(x) -> str:
    if x is NEG_INF:
        return "NEG_INF"
    return format(float(x), ".12g")


def make_policy(algo: str, instance: Instance, explore_override: int | None = None) -> tuple[Policy, str]:
    """Build the policy for an algorithm id.

    Returns (policy, default reward mode): planners and informed
    baselines are scored in expectation, learners on sampled feedback.
    """
    if algo == "dp-star":
        return DpPolicy(instance), "expected"
    if algo == "lcb-star":
        return LcbPolicy(instance), "expected"
    if algo == "a-lcb-star":
        return AlcbPolicy(instance), "expected"
    if algo == "l-lcb":
        return LlcbPolicy(instance), "expected"
    if algo == "myopic":
        return baseline_policy("myopic", instance), "expected"
    if algo == "never-subsidize":
        return baseline_policy("never_subsidize", instance), "expected"
    if algo == "blind":
        return baseline_policy("blind_subsidize", instance), "expected"
    if algo == "greedy-bandit":
        return baseline_policy("greedy_bandit", instance), "sampled"
    if algo in _EES_SSO:
        config = EesConfig(
            sso=_EES_SSO[algo], exploration_phases=explore_override
        )
        return EesPolicy(Observables.from_instance(instance), config), "sampled"
    raise ValueError(f"unknown algorithm {algo!r}; choose from {ALGORITHMS}")


def _resolve_mode(mode: str, default: str) -> str:
    return default if mode == "auto" else mode


def _mean_stderr(xs):
    m = sum(xs) / len(xs)
    if len(xs) < 2:
        return m, 0.0
    var = sum((x - m) ** 2 for x in xs) / (len(xs) - 1)
    return m, math.sqrt(var / len(xs))


def _policy_diag(policy: Policy):
    """(commitment, per-phase value) when the policy exposes them."""
    if isinstance(policy, DpPolicy):
        return sorted(policy.Z), policy.table.root_value
    if isinstance(policy, LcbPolicy):  # covers AlcbPolicy
        return sorted(policy.Z), policy.template.value
    if isinstance(policy, LlcbPolicy):
        chain = "->".join(
            "{" + ",".join(map(str, sorted(z))) + "}" for z in policy.plan.chain
        )
        return chain, policy.plan.total_value / policy.instance.phases
    return None, None


def cmd_solve(args) -> int:
    instance, file_seed = load_instance(args.instance)
    policy, default_mode = make_policy(args.algo, instance, args.explore_override)
    mode = _resolve_mode(args.reward_mode, default_mode)
    commitment, per_phase = _policy_diag(policy)
    print(f"algorithm: {args.algo}")
    if commitment is not None:
        print(f"commitment: {commitment}")
        print(f"per-phase value: {_fmt(per_phase)}")
    base = args.seed_base if args.seed_base is not None else file_seed
    rewards = []
    departures = []
    for i in range(args.seeds):
        record = run_episode(instance, policy, base + i, reward_mode=mode)
        rewards.append(record.expected_reward)
        departures.append(len(record.departure_events))
    m, se = _mean_stderr(rewards)
    print(f"episodes: {args.seeds} (seeds {base}..{base + args.seeds - 1}, "
          f"reward_mode={mode})")
    print(f"expected reward: {_fmt(m)} +- {_fmt(se)}")
    print(f"mean departures: {_fmt(sum(departures) / len(departures))}")
    return 0


def cmd_learn(args) -> int:
    instance, file_seed = load_instance(args.instance)
    policy, default_mode = make_policy(args.algo, instance, args.explore_override)
    mode = _resolve_mode(args.reward_mode, default_mode)
    if isinstance(policy, EesPolicy):
        print(f"exploration phases: {policy.exploration_phases}")
        print(f"exploration rounds: {policy.T0}")
    base = args.seed_base if args.seed_base is not None else file_seed
    rewards = []
    bad = []
    for i in range(args.seeds):
        record = run_episode(instance, policy, base + i, reward_mode=mode)
        rewards.append(record.expected_reward)
        bad.append(len(getattr(policy, "bad_event_phases", ())))
    m, se = _mean_stderr(rewards)
    print(f"algorithm: {args.algo}")
    print(f"episodes: {args.seeds} (seeds {base}..{base + args.seeds - 1}, "
          f"reward_mode={mode})")
    print(f"expected reward: {_fmt(m)} +- {_fmt(se)}")
    if any(bad):
        print(f"mean bad-event phases: {_fmt(sum(bad) / len(bad))}")
    return 0


def _benchmark_value(kind: str, instance: Instance) -> float:
    if kind == "pico":
        _, table = dp_star(instance)
        return planned_total_value(instance, table)
    if kind == "oracle-opt":
        from .oracle import exact_opt

        return exact_opt(instance).value
    raise ValueError(f"unknown benchmark {kind!r}")


def _run_cell(instance: Instance, algo: str, seed: int, mode: str,
              explore_override: int | None):
    policy, default_mode = make_policy(algo, instance, explore_override)
    t0 = time.perf_counter()
    record = run_episode(instance, policy, seed, _resolve_mode(mode, default_mode))
    wall = time.perf_counter() - t0
    return (
        record.expected_reward,
        len(record.departure_events),
        len(getattr(policy, "bad_event_phases", ())),
        wall,
    )


def cmd_experiment(args) -> int:
    instance, file_seed = load_instance(args.instance)
    algos = [a.strip() for a in args.algo.split(",") if a.strip()]
    if not algos:
        raise ValueError("no algorithms given")
    for a in algos:
        if a not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {a!r}; choose from {ALGORITHMS}")
    if args.sweep:
        sweep = [int(x) for x in args.sweep.replace(",", " ").split()]
        if not sweep:
            raise ValueError("empty sweep")
        for T in sweep:
            if T <= 0 or T % instance.tau:
                raise ValueError(f"sweep value {T} is not a positive multiple of tau")
    else:
        sweep = [instance.T]
    if args.seeds < 1:
        raise ValueError("seeds must be >= 1")
    base = args.seed_base if args.seed_base is not None else file_seed

    benchmarks = {}
    for T in sweep:
        benchmarks[T] = _benchmark_value(args.benchmark, replace(instance, T=T))

    cells = [
        (algo, T, base + i)
        for algo in sorted(algos)
        for T in sorted(sweep)
        for i in range(args.seeds)
    ]
    results = {}
    if args.workers and args.workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            futs = {
                (algo, T, seed): pool.submit(
                    _run_cell, replace(instance, T=T), algo, seed,
                    args.reward_mode, args.explore_override,
                )
                for algo, T, seed in cells
            }
            for key, fut in futs.items():
                results[key] = fut.result()
    else:
        current = None  # (algo, T) -> policy, rebuilt per group
        policy = default_mode = None
        for algo, T, seed in cells:
            if current != (algo, T):
                current = (algo, T)
                policy, default_mode = make_policy(
                    algo, replace(instance, T=T), args.explore_override
                )
            t0 = time.perf_counter()
            record = run_episode(
                replace(instance, T=T), policy, seed,
                _resolve_mode(args.reward_mode, default_mode),
            )
            wall = time.perf_counter() - t0
            results[(algo, T, seed)] = (
                record.expected_reward,
                len(record.departure_events),
                len(getattr(policy, "bad_event_phases", ())),
                wall,
            )

    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(out)
        w.writerow(["algorithm", "T", "seed", "reward", "benchmark", "regret",
                    "departures", "bad_events", "wall_time_s"])
        for algo in sorted(algos):
            for T in sorted(sweep):
                rows = []
                for i in range(args.seeds):
                    seed = base + i
                    reward, deps, bad, wall = results[(algo, T, seed)]
                    bench = benchmarks[T]
                    rows.append((reward, bench, bench - reward, deps, bad, wall))
                    w.writerow([algo, T, seed] + [_fmt(x) for x in rows[-1][:3]]
                               + [deps, bad, format(wall, ".6f")])
                cols = list(zip(*rows))
                means = [_mean_stderr(c) for c in cols]
                w.writerow([algo, T, "mean"] + [_fmt(m) for m, _ in means[:5]]
                           + [format(means[5][0], ".6f")])
                w.writerow([algo, T, "stderr"] + [_fmt(s) for _, s in means[:5]]
                           + [format(means[5][1], ".6f")])
    finally:
        if args.out:
            out.close()
    return 0


def cmd_match(args) -> int:
    instance, _ = load_instance(args.instance)
    agg = build_lcb_aggregate(instance.P, instance.tau)
    counts = agg.counts[:-1]
    print(f"confidence floors: {list(counts)} slack: {agg.counts[-1]}")
    Z, matching = lcb_star(instance)
    print(f"commitment: {sorted(Z)}")
    print(f"value: {_fmt(matching.value)}")
    print("matching (rows = types + slack, columns = arms):")
    for row in matching.M:
        print("\t".join(str(x) for x in row))
    return 0


def cmd_oracle(args) -> int:
    from .oracle import exact_opt

    instance, _ = load_instance(args.instance)
    opt = exact_opt(instance)
    Z, table = dp_star(instance)
    committed = planned_total_value(instance, table)
    print(f"exact optimum: {_fmt(opt.value)}")
    print(f"committed planner: {_fmt(committed)} (commitment {sorted(Z)})")
    gap = opt.value - committed
    print(f"gap: {_fmt(gap)} (bound {instance.k * instance.tau})")
    return 0


def cmd_gamma(args) -> int:
    instance, _ = load_instance(args.instance)
    g = compute_gamma(instance)
    print(f"feasible: {g.feasible}")
    print(f"gamma: {g.gamma if g.gamma is not None else 'none'}")
    print(f"quota: {g.quota}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="exposure-bandits",
        description="Bandit simulation with per-phase exposure constraints",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, algo_default=None, algo_help="algorithm id"):
        sp.add_argument("--instance", required=True, help="instance file path")
        if algo_default is not None:
            sp.add_argument("--algo", default=algo_default, help=algo_help)
        sp.add_argument("--seeds", type=int, default=20,
                        help="number of replications")
        sp.add_argument("--seed-base", type=int, default=None,
                        help="first seed (default: instance file seed)")
        sp.add_argument("--reward-mode", default="auto",
                        choices=["auto", "expected", "sampled"])
        sp.add_argument("--explore-override", type=int, default=None,
                        help="exploration phases for ees-* algorithms")

    sp = sub.add_parser("solve", help="plan on a known instance")
    common(sp, algo_default="dp-star",
           algo_help=f"one of {SOLVERS + BASELINES}")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("learn", help="run a learning policy")
    common(sp, algo_default="ees-dp-star", algo_help=f"one of {LEARNERS}")
    sp.set_defaults(func=cmd_learn)

    sp = sub.add_parser("experiment", help="sweep cells into a CSV")
    common(sp, algo_default="ees-dp-star,never-subsidize",
           algo_help="comma-separated algorithm ids")
    sp.add_argument("--sweep", default=None,
                    help="comma-separated horizon values (default: file T)")
    sp.add_argument("--benchmark", default="pico",
                    choices=["pico", "oracle-opt"])
    sp.add_argument("--out", default=None, help="CSV output path")
    sp.add_argument("--workers", type=int, default=1)
    sp.set_defaults(func=cmd_experiment)

    sp = sub.add_parser("match", help="aggregate + optimal matching")
    sp.add_argument("--instance", required=True)
    sp.set_defaults(func=cmd_match)

    sp = sub.add_parser("oracle", help="brute-force optimum on tiny instances")
    sp.add_argument("--instance", required=True)
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("gamma", help="exploration feasibility margin")
    sp.add_argument("--instance", required=True)
    sp.set_defaults(func=cmd_gamma)
    return p


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "seeds", 1) < 1:
            raise ValueError("--seeds must be at least 1")
        if getattr(args, "workers", 1) < 1:
            raise ValueError("--workers must be at least 1")
        return args.func(args)
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 3
    except ResourceGuardError as exc:
        print(f"resource guard: {exc}", file=sys.stderr)
        return 4
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
