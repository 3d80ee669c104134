"""Command-line interface.

Subcommands: simulate, redqueen, oracle, cheshire, fit, kronecker,
metrics.  Exit codes: 0 on success, 2 on a configuration problem, 3 on
a numerical failure (Riccati escape or an exploding simulation).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .cheshire import (
    CheshirePolicy,
    ClampStats,
    ControlWeights,
    RiccatiEscapeError,
    solve_riccati,
    tune_budget,
)
from .estimation import fit as fit_params
from .experiment import ConfigError, ExperimentConfig, run_experiment
from .io import (
    read_csv_records,
    read_events_csv,
    read_events_jsonl,
    write_csv,
    write_events_jsonl,
)
from .metrics import (
    MetricsRow,
    aggregate_rows,
    build_rank_trajectory,
    position_over_time,
    time_at_top,
)
from .network import kronecker_generate, load_edges, save_edges
from .oracle import oracle_schedule
from .point import EventSeq, ExplosionError
from .redqueen import Significance, run_posting_policy, tune_q
from .simulate import simulate_controlled, simulate_uncontrolled
from .streams import stream


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    p.add_argument("--config", help="experiment config JSON (overrides other flags)")
    p.add_argument("--out", default=".", help="output directory")


def _load_significance(arg: str | None, n_followers: int, q: float,
                       period: float) -> Significance:
    if arg in (None, "none"):
        return Significance.constant(n_followers, q=q)
    rows = []
    with open(arg) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rows.append([float(x) for x in line.split(",")])
    return Significance(np.asarray(rows), period=period, q=q)


def cmd_simulate(args) -> int:
    if args.config:
        cfg = ExperimentConfig.from_file(args.config)
        if args.out:
            cfg.out_dir = args.out
        run_experiment(cfg)
        return 0
    adjacency, influence = load_edges(args.graph)
    if influence is None:
        raise ConfigError(["--graph: edge weights required when no config is given"])
    lam0 = np.full(adjacency.n, args.lam0)
    seq = simulate_uncontrolled(influence.weights, lam0, args.omega, 0.0, args.tf,
                                stream(args.seed, "simulate"))
    os.makedirs(args.out, exist_ok=True)
    out = os.path.join(args.out, "events.jsonl")
    write_events_jsonl(out, seq)
    print(f"{len(seq)} events -> {out}")
    return 0


def cmd_redqueen(args) -> int:
    feed = read_events_jsonl(args.feeds)
    sig = _load_significance(args.sig, feed.m, 1.0, args.sig_period)
    if args.q is None and args.budget is None:
        raise ConfigError(["redqueen: one of --q or --budget is required"])
    if args.q is not None:
        q = args.q
    else:
        q = tune_q(args.budget, args.tolerance, [feed], sig,
                   stream(args.seed, "redqueen", "tuning"), 0.0, args.tf)
    sig = sig.with_q(q)
    posts = run_posting_policy(feed, sig, 0.0, args.tf, stream(args.seed, "redqueen", 0))
    os.makedirs(args.out, exist_ok=True)
    posts_path = os.path.join(args.out, "posts.jsonl")
    write_events_jsonl(posts_path, EventSeq(1, posts, np.zeros(len(posts), int),
                                            ["incentivized"] * len(posts)))
    traj = build_rank_trajectory(feed.times, feed.dims, posts, feed.m, 0.0, args.tf)
    row = MetricsRow("redqueen", 0, position_over_time(traj, 0.0, args.tf),
                     time_at_top(traj, 0.0, args.tf), len(feed), len(posts))
    write_csv(os.path.join(args.out, "metrics.csv"), MetricsRow.COLUMNS,
              [row.as_record()])
    print(f"q={q!r} posts={len(posts)} -> {posts_path}")
    return 0


def cmd_oracle(args) -> int:
    feed = read_events_jsonl(args.feeds)
    if feed.m != 1:
        raise ConfigError(["oracle: feeds must be single-follower"])
    cost, decisions = oracle_schedule(args.r0, feed.times, args.q, args.s, 0.0, args.tf)
    knots = np.concatenate([[0.0], feed.times])
    posts = knots[decisions.astype(bool)]
    os.makedirs(args.out, exist_ok=True)
    posts_path = os.path.join(args.out, "posts.jsonl")
    write_events_jsonl(posts_path, EventSeq(1, posts, np.zeros(len(posts), int),
                                            ["incentivized"] * len(posts)))
    print(f"cost={cost!r} posts={len(posts)} -> {posts_path}")
    return 0


def cmd_cheshire(args) -> int:
    rng_net = stream(args.seed, "network")
    if args.graph:
        adjacency, influence = load_edges(args.graph)
        if influence is None:
            raise ConfigError(["--graph: weighted edges required"])
    elif args.kronecker:
        parts = args.kronecker.split(":")
        seed_matrix = np.array([float(x) for x in parts[0].split(",")]).reshape(2, 2)
        k = int(parts[1])
        adjacency = kronecker_generate(seed_matrix, k, rng_net)
        from .network import random_influence

        influence = random_influence(adjacency, 0.0, args.bmax, rng_net)
    else:
        raise ConfigError(["cheshire: one of --graph or --kronecker is required"])
    n = adjacency.n
    lam0 = rng_net.uniform(0.0, args.lam0max, size=n)
    B = influence.weights
    weights = ControlWeights.uniform(n, args.qf, 1.0, args.qf)

    def run_fn(w, rng):
        sol = solve_riccati(B, args.omega, w, lam0, 0.0, args.tf,
                            steps=args.steps, store_every=args.store_every)
        _, inc = simulate_controlled(B, lam0, args.omega, CheshirePolicy(sol),
                                     0.0, args.tf, rng, warn_explosive=False)
        return len(inc)

    if args.budget:
        weights = tune_budget(weights, args.budget, 0.15, run_fn,
                              stream(args.seed, "cheshire", "tuning"),
                              runs_per_probe=5)
    sol = solve_riccati(B, args.omega, weights, lam0, 0.0, args.tf,
                        steps=args.steps, store_every=args.store_every)
    clamp = ClampStats()
    rows = []
    os.makedirs(os.path.join(args.out, "events"), exist_ok=True)
    for r in range(args.replicas):
        organic, incentivized = simulate_controlled(
            B, lam0, args.omega, CheshirePolicy(sol, stats=clamp), 0.0, args.tf,
            stream(args.seed, "cheshire", r), warn_explosive=(r == 0))
        merged = EventSeq.merge(organic, incentivized)
        write_events_jsonl(os.path.join(args.out, "events", f"replica_{r:04d}.jsonl"),
                           merged)
        rows.append(MetricsRow("cheshire", r, 0.0, 0.0,
                               len(organic), len(incentivized)))
    write_csv(os.path.join(args.out, "metrics.csv"), MetricsRow.COLUMNS,
              [row.as_record() for row in rows])
    aggs = aggregate_rows(rows)
    columns = list(aggs[0].keys())
    write_csv(os.path.join(args.out, "summary.csv"), columns,
              [[a[c] for c in columns] for a in aggs])
    print(f"{args.replicas} replicas -> {args.out} "
          f"(clamp rate {clamp.rate():.2e})")
    return 0


def cmd_fit(args) -> int:
    if args.events.endswith(".csv"):
        events = read_events_csv(args.events)
    else:
        events = read_events_jsonl(args.events)
    support = None
    if args.support:
        support, _ = load_edges(args.support)
    result = fit_params(events, args.omega, support=support, max_iters=args.max_iters)
    os.makedirs(args.out, exist_ok=True)
    out = os.path.join(args.out, "fit.json")
    with open(out, "w") as fh:
        json.dump({"omega": args.omega, "loglik": result.loglik,
                   "lam0": result.lam0.tolist(), "B": result.B.tolist()},
                  fh, sort_keys=True, indent=2)
        fh.write("\n")
    print(f"loglik={result.loglik!r} -> {out}")
    return 0


def cmd_kronecker(args) -> int:
    seed_matrix = np.array([float(x) for x in args.seed_matrix.split(",")]).reshape(2, 2)
    adjacency = kronecker_generate(seed_matrix, args.k, stream(args.seed, "network"))
    os.makedirs(args.out, exist_ok=True)
    out = os.path.join(args.out, "graph.txt")
    save_edges(out, adjacency)
    print(f"{adjacency.n} nodes, {int(adjacency.edges.sum())} edges -> {out}")
    return 0


def cmd_metrics(args) -> int:
    """Recompute metrics from event logs (the independent re-reader)."""
    rows = []
    if args.feeds and args.posts:
        feed = read_events_jsonl(args.feeds)
        posts = read_events_jsonl(args.posts, m=1)
        tf = args.tf if args.tf else float(max(feed.times[-1], posts.times[-1] if len(posts) else 0))
        traj = build_rank_trajectory(feed.times, feed.dims, posts.times, feed.m, 0.0, tf)
        rows.append(MetricsRow(args.policy, 0, position_over_time(traj, 0.0, tf),
                               time_at_top(traj, 0.0, tf), len(feed), len(posts)))
    elif args.events:
        seq = read_events_jsonl(args.events)
        organic = seq.subset("organic")
        incentivized = seq.subset("incentivized")
        milestone_time = None
        if args.milestone and len(organic) >= args.milestone:
            milestone_time = float(organic.times[args.milestone - 1])
        rows.append(MetricsRow(args.policy, 0, 0.0, 0.0, len(organic),
                               len(incentivized), milestone_time))
    else:
        raise ConfigError(["metrics: need --events or both --feeds and --posts"])
    os.makedirs(args.out, exist_ok=True)
    out = os.path.join(args.out, "metrics.csv")
    write_csv(out, MetricsRow.COLUMNS, [row.as_record() for row in rows])
    print(f"-> {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hawksteer",
        description="Simulate mutually exciting event dynamics and steer them "
                    "with feedback posting/incentive policies.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="uncontrolled dynamics or a full config run")
    _add_common(p)
    p.add_argument("--graph", help="weighted edge-list file")
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--lam0", type=float, default=1.0)
    p.add_argument("--tf", type=float, default=10.0)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("redqueen", help="feedback when-to-post policy over a feed log")
    _add_common(p)
    p.add_argument("--feeds", required=True, help="feed events JSONL")
    p.add_argument("--q", type=float, help="posting cost weight")
    p.add_argument("--budget", type=int, help="target post count (tunes q)")
    p.add_argument("--tolerance", type=float, default=0.1)
    p.add_argument("--sig", default="none", help="significance CSV or 'none'")
    p.add_argument("--sig-period", type=float, default=7.0)
    p.add_argument("--tf", type=float, required=True)
    p.set_defaults(func=cmd_redqueen)

    p = sub.add_parser("oracle", help="optimal schedule against a known feed")
    _add_common(p)
    p.add_argument("--feeds", required=True)
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--s", type=float, default=1.0)
    p.add_argument("--r0", type=int, default=0)
    p.add_argument("--tf", type=float, required=True)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("cheshire", help="network incentive policy")
    _add_common(p)
    p.add_argument("--graph", help="weighted edge-list file")
    p.add_argument("--kronecker", help="seed spec 'a,b,c,d:k'")
    p.add_argument("--bmax", type=float, default=1.0, help="U(0,bmax) edge weights")
    p.add_argument("--lam0max", type=float, default=1.0, help="U(0,lam0max) baselines")
    p.add_argument("--omega", type=float, required=True)
    p.add_argument("--qf", type=float, default=1.0, help="diagonal of Q and F")
    p.add_argument("--budget", type=int, help="target incentivized count (tunes S)")
    p.add_argument("--tf", type=float, required=True)
    p.add_argument("--replicas", type=int, default=1)
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--store-every", type=int, default=1)
    p.set_defaults(func=cmd_cheshire)

    p = sub.add_parser("fit", help="maximum-likelihood dynamics fit from a log")
    _add_common(p)
    p.add_argument("--events", required=True, help="JSONL or CSV (t,dim) event log")
    p.add_argument("--omega", type=float, required=True)
    p.add_argument("--support", help="edge-list constraining the influence support")
    p.add_argument("--max-iters", type=int, default=500)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("kronecker", help="sample a synthetic follow graph")
    _add_common(p)
    p.add_argument("--seed-matrix", required=True, help="'a,b,c,d' row-major")
    p.add_argument("--k", type=int, required=True)
    p.set_defaults(func=cmd_kronecker)

    p = sub.add_parser("metrics", help="recompute metrics from event logs")
    _add_common(p)
    p.add_argument("--events", help="merged event JSONL (network runs)")
    p.add_argument("--feeds", help="feed JSONL (broadcaster runs)")
    p.add_argument("--posts", help="posts JSONL (broadcaster runs)")
    p.add_argument("--policy", default="unknown")
    p.add_argument("--tf", type=float)
    p.add_argument("--milestone", type=int)
    p.set_defaults(func=cmd_metrics)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (RiccatiEscapeError, ExplosionError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
