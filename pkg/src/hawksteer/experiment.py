"""Declarative experiment orchestration.

A config names one policy, a network (or a set of follower feeds), the
dynamics parameters, a horizon, a seed and a replica count; running it
produces per-replica event logs, a metrics table, aggregates and a
manifest, all byte-identical on rerun with the same seed.

Stream derivation: the network draw uses (seed, "network"), follower
feeds use (seed, "feeds", replica) so different policies under the same
seed are coupled through identical feeds, and each policy's own
randomness uses (seed, policy-id, replica) so distinct policies are
independent.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import __version__
from .cheshire import (
    CheshirePolicy,
    ClampStats,
    ConstantPolicy,
    ControlWeights,
    RiccatiEscapeError,
    baseline_allocation,
    solve_riccati,
    tune_budget,
)
from .io import write_csv, write_events_jsonl
from .metrics import (
    MetricsRow,
    aggregate_rows,
    build_rank_trajectory,
    position_over_time,
    time_at_top,
)
from .network import Adjacency, Influence, kronecker_generate, load_edges, random_influence
from .oracle import oracle_schedule
from .point import (
    EventSeq,
    ExplosionError,
    PiecewiseConstantRate,
    sample_piecewise_poisson,
)
from .redqueen import Significance, run_posting_policy, tune_q, uniform_posts
from .simulate import simulate_controlled, simulate_uncontrolled
from .streams import stream


class ConfigError(ValueError):
    """Invalid experiment configuration; lists every offending path."""

    def __init__(self, problems: list[str]):
        super().__init__("invalid config:\n  " + "\n  ".join(problems))
        self.problems = problems


_NETWORK_KINDS = {"kronecker", "file", "followers"}
_POLICY_KINDS = {"none", "cheshire", "baseline", "redqueen", "oracle", "uniform"}


@dataclass
class ExperimentConfig:
    seed: int
    t0: float
    tf: float
    replicas: int
    network: dict
    dynamics: dict
    policy: dict
    out_dir: Optional[str] = None
    milestone: Optional[int] = None

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        problems: list[str] = []

        def need(path, cond, msg):
            if not cond:
                problems.append(f"{path}: {msg}")

        seed = raw.get("seed")
        need("seed", isinstance(seed, int) and seed >= 0, "nonnegative integer required")
        horizon = raw.get("horizon", {})
        t0 = horizon.get("t0", 0.0)
        tf = horizon.get("tf")
        need("horizon.tf", isinstance(tf, (int, float)), "number required")
        if isinstance(tf, (int, float)):
            need("horizon", tf > t0, "tf must exceed t0")
        replicas = raw.get("replicas", 1)
        need("replicas", isinstance(replicas, int) and replicas >= 1, ">= 1 required")

        network = raw.get("network", {})
        kind = network.get("kind")
        need("network.kind", kind in _NETWORK_KINDS, f"one of {sorted(_NETWORK_KINDS)}")
        if kind == "kronecker":
            need("network.k", isinstance(network.get("k"), int) and network["k"] >= 1,
                 "integer >= 1 required")
            seed_matrix = network.get("seed_matrix")
            ok = (isinstance(seed_matrix, list) and len(seed_matrix) == 2
                  and all(isinstance(r, list) and len(r) == 2 for r in seed_matrix))
            need("network.seed_matrix", ok, "2x2 matrix of probabilities required")
        elif kind == "file":
            need("network.path", isinstance(network.get("path"), str), "path required")
        elif kind == "followers":
            need("network.count",
                 isinstance(network.get("count"), int) and network["count"] >= 1,
                 "integer >= 1 required")
            feed = network.get("feed", {})
            need("network.feed.kind", feed.get("kind") in {"hawkes", "piecewise_sinusoid"},
                 "one of ['hawkes', 'piecewise_sinusoid']")

        dynamics = raw.get("dynamics", {})
        if kind in {"kronecker", "file"}:
            need("dynamics.omega",
                 isinstance(dynamics.get("omega"), (int, float)) and dynamics["omega"] > 0,
                 "positive number required")

        policy = raw.get("policy", {})
        pk = policy.get("kind")
        need("policy.kind", pk in _POLICY_KINDS, f"one of {sorted(_POLICY_KINDS)}")
        if pk == "baseline":
            need("policy.which", policy.get("which") in {"PRK", "DEG", "UNC"},
                 "one of ['PRK', 'DEG', 'UNC']")
        if pk in {"redqueen", "oracle"}:
            need("policy", ("q" in policy) != ("budget" in policy),
                 "exactly one of q or budget required")
        if pk == "uniform":
            need("policy.budget", isinstance(policy.get("budget"), int), "budget required")
        broadcaster = kind == "followers"
        if pk in {"redqueen", "oracle", "uniform"}:
            need("policy.kind", broadcaster, f"{pk} requires a followers network")
        if pk in {"cheshire", "baseline"}:
            need("policy.kind", not broadcaster, f"{pk} requires a graph network")

        milestone = raw.get("milestone")
        if milestone is not None:
            need("milestone", isinstance(milestone, int) and milestone >= 1,
                 "integer >= 1 required")

        if problems:
            raise ConfigError(problems)
        return cls(
            seed=seed, t0=float(t0), tf=float(tf), replicas=replicas,
            network=network, dynamics=dynamics, policy=policy,
            out_dir=raw.get("out"), milestone=milestone,
        )

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError([f"<file>: not valid JSON: {exc}"])
        return cls.from_dict(raw)

    def policy_id(self) -> str:
        pk = self.policy["kind"]
        if pk == "baseline":
            return f"baseline-{self.policy['which']}"
        return pk

    def canonical_json(self) -> str:
        payload = {
            "seed": self.seed,
            "horizon": {"t0": self.t0, "tf": self.tf},
            "replicas": self.replicas,
            "network": self.network,
            "dynamics": self.dynamics,
            "policy": self.policy,
            "milestone": self.milestone,
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))


@dataclass
class ExperimentResult:
    rows: list[MetricsRow]
    aggregates: list[dict]
    event_logs: dict = field(default_factory=dict)   # (policy, replica) -> EventSeq
    feed_logs: dict = field(default_factory=dict)    # replica -> EventSeq
    post_logs: dict = field(default_factory=dict)    # (policy, replica) -> np.ndarray
    clamp_stats: Optional[ClampStats] = None
    out_dir: Optional[str] = None


def _draw_vector(spec, n: int, rng: np.random.Generator) -> np.ndarray:
    if isinstance(spec, (int, float)):
        return np.full(n, float(spec))
    if isinstance(spec, list):
        vec = np.asarray(spec, dtype=float)
        if vec.shape != (n,):
            raise ConfigError([f"dynamics.lam0: expected {n} entries"])
        return vec
    kind = spec.get("kind")
    if kind == "uniform":
        vec = rng.uniform(spec.get("low", 0.0), spec.get("high", 1.0), size=n)
        frac = spec.get("active_fraction")
        if frac is not None:
            active = rng.permutation(n)[: max(1, int(round(frac * n)))]
            mask = np.zeros(n, bool)
            mask[active] = True
            vec = np.where(mask, vec, 0.0)
        return vec
    if kind == "constant":
        return np.full(n, float(spec["value"]))
    raise ConfigError([f"dynamics.lam0: unknown spec {spec!r}"])


def build_network(config: ExperimentConfig):
    """(adjacency, influence weights, lam0) drawn from the network stream."""
    rng = stream(config.seed, "network")
    net = config.network
    if net["kind"] == "kronecker":
        adjacency = kronecker_generate(net["seed_matrix"], net["k"], rng)
    elif net["kind"] == "file":
        adjacency, influence = load_edges(net["path"])
        lam0 = _draw_vector(config.dynamics.get("lam0", 0.0), adjacency.n, rng)
        if influence is None:
            influence = _draw_influence(config.dynamics, adjacency, rng)
        return adjacency, influence, lam0
    else:
        raise ConfigError(["network.kind: not a graph network"])
    influence = _draw_influence(config.dynamics, adjacency, rng)
    lam0 = _draw_vector(config.dynamics.get("lam0", 0.0), adjacency.n, rng)
    return adjacency, influence, lam0


def _draw_influence(dynamics: dict, adjacency: Adjacency, rng) -> Influence:
    spec = dynamics.get("influence", {"kind": "uniform", "low": 0.0, "high": 1.0})
    if spec.get("kind") == "uniform":
        return random_influence(adjacency, spec.get("low", 0.0), spec.get("high", 1.0), rng)
    raise ConfigError([f"dynamics.influence: unknown spec {spec!r}"])


def generate_feed(config: ExperimentConfig, replica: int) -> EventSeq:
    """Follower feed trace for one replica (policy-independent stream)."""
    rng = stream(config.seed, "feeds", replica)
    net = config.network
    count = net["count"]
    feed_spec = net["feed"]
    t0, tf = config.t0, config.tf
    if feed_spec["kind"] == "hawkes":
        gamma0 = float(feed_spec.get("gamma0", 10.0))
        alpha = float(feed_spec.get("alpha", 1.0))
        omega = float(feed_spec.get("omega", 10.0))
        seqs = []
        for j in range(count):
            seq = simulate_uncontrolled(
                np.array([[alpha]]), np.array([gamma0]), omega, t0, tf,
                stream(config.seed, "feeds", replica, j),
            )
            seqs.append(seq)
        merged_times = np.concatenate([s.times for s in seqs])
        merged_dims = np.concatenate([np.full(len(s), j) for j, s in enumerate(seqs)])
        order = np.argsort(merged_times, kind="stable")
        times, dims = merged_times[order], merged_dims[order]
        keep = np.concatenate([[True], np.diff(times) > 0]) if len(times) else []
        return EventSeq(count, times[keep], dims[keep])
    if feed_spec["kind"] == "piecewise_sinusoid":
        segments = int(feed_spec.get("segments", 24))
        peak = float(feed_spec.get("peak", 10.0))
        edges = np.linspace(t0, tf, segments + 1)
        times_all, dims_all = [], []
        for j in range(count):
            phase = rng.uniform(0, np.pi)
            values = peak * np.abs(np.sin(np.linspace(0, np.pi, segments) + phase))
            rate = PiecewiseConstantRate(edges, values)
            tj = sample_piecewise_poisson(rate, t0, tf, stream(config.seed, "feeds", replica, j))
            times_all.append(tj)
            dims_all.append(np.full(len(tj), j))
        times = np.concatenate(times_all) if times_all else np.array([])
        dims = np.concatenate(dims_all) if dims_all else np.array([], dtype=int)
        order = np.argsort(times, kind="stable")
        times, dims = times[order], dims[order]
        keep = np.concatenate([[True], np.diff(times) > 0]) if len(times) else []
        return EventSeq(count, times[keep], dims[keep])
    raise ConfigError([f"network.feed.kind: unknown {feed_spec!r}"])


def _significance_from_spec(spec, n_followers: int, q: float) -> Significance:
    if spec is None or spec.get("kind") in (None, "constant"):
        return Significance.constant(n_followers, q=q)
    if spec["kind"] == "bins":
        return Significance(spec["values"], period=spec.get("period", 7.0), q=q)
    raise ConfigError([f"policy.significance: unknown {spec!r}"])


def _run_broadcaster(config: ExperimentConfig) -> ExperimentResult:
    policy = config.policy
    pk = policy["kind"]
    t0, tf = config.t0, config.tf
    n_followers = config.network["count"]
    feeds = [generate_feed(config, r) for r in range(config.replicas)]

    sig = _significance_from_spec(policy.get("significance"), n_followers, 1.0)
    q = policy.get("q")
    if pk in {"redqueen", "oracle"} and q is None:
        q = tune_q(policy["budget"], policy.get("tolerance", 0.1), feeds,
                   sig, stream(config.seed, pk, "tuning"), t0, tf)
    if q is not None:
        sig = sig.with_q(float(q))

    rows: list[MetricsRow] = []
    result = ExperimentResult(rows=rows, aggregates=[])
    for r, feed in enumerate(feeds):
        result.feed_logs[r] = feed
        rng = stream(config.seed, config.policy_id(), r)
        if pk == "redqueen":
            posts = run_posting_policy(feed, sig, t0, tf, rng)
        elif pk == "oracle":
            if n_followers != 1:
                raise ConfigError(["policy.kind: oracle supports a single follower"])
            _, decisions = oracle_schedule(0, feed.times, sig.q, float(sig.values[0, 0]),
                                           t0, tf)
            knots = np.concatenate([[t0], feed.times])
            posts = knots[decisions.astype(bool)]
        elif pk == "uniform":
            posts = uniform_posts(policy["budget"], t0, tf, rng)
        else:
            raise ConfigError([f"policy.kind: {pk} is not a broadcaster policy"])
        traj = build_rank_trajectory(feed.times, feed.dims, posts, n_followers, t0, tf)
        row = MetricsRow(
            policy=config.policy_id(),
            replica=r,
            position_over_time=position_over_time(traj, t0, tf),
            time_at_top=time_at_top(traj, t0, tf),
            organic_count=len(feed),
            incentivized_count=len(posts),
        )
        row.validate(t0, tf)
        rows.append(row)
        result.post_logs[(config.policy_id(), r)] = posts
    result.aggregates = aggregate_rows(rows)
    return result


def _cheshire_weights(policy: dict, n: int) -> ControlWeights:
    return ControlWeights.uniform(
        n,
        float(policy.get("q", 1.0)),
        float(policy.get("s", 1.0)),
        float(policy.get("f", policy.get("q", 1.0))),
    )


def _run_network(config: ExperimentConfig) -> ExperimentResult:
    policy = config.policy
    pk = policy["kind"]
    t0, tf = config.t0, config.tf
    adjacency, influence, lam0 = build_network(config)
    omega = float(config.dynamics["omega"])
    B = influence.weights
    n = adjacency.n
    clamp = ClampStats()

    def make_policy():
        if pk == "none":
            return None
        if pk == "baseline":
            rate = float(policy.get("budget_rate", 0.0))
            return ConstantPolicy(baseline_allocation(policy["which"], adjacency, rate))
        if pk == "cheshire":
            weights = _cheshire_weights(policy, n)
            steps = int(policy.get("steps", 1000))
            store_every = int(policy.get("store_every", 1))
            if "budget" in policy:
                probe_cap = int(policy.get("probe_event_cap", 200_000))

                def run_fn(w, rng):
                    # too-cheap control escapes the Riccati flow or explodes
                    # the closed loop; both mean "count above any target"
                    try:
                        sol_probe = solve_riccati(B, omega, w, lam0, t0, tf,
                                                  steps=steps, store_every=store_every)
                        _, inc = simulate_controlled(
                            B, lam0, omega, CheshirePolicy(sol_probe), t0, tf, rng,
                            event_cap=probe_cap, warn_explosive=False,
                        )
                    except (RiccatiEscapeError, ExplosionError):
                        return float("inf")
                    return len(inc)
                weights = tune_budget(
                    weights, policy["budget"], policy.get("tolerance", 0.15),
                    run_fn, stream(config.seed, "cheshire", "tuning"),
                    runs_per_probe=int(policy.get("runs_per_probe", 10)),
                )
            sol = solve_riccati(B, omega, weights, lam0, t0, tf,
                                steps=steps, store_every=store_every)
            return CheshirePolicy(sol, stats=clamp)
        raise ConfigError([f"policy.kind: {pk} is not a network policy"])

    shared_policy = make_policy()
    rows: list[MetricsRow] = []
    result = ExperimentResult(rows=rows, aggregates=[], clamp_stats=clamp)
    for r in range(config.replicas):
        rng = stream(config.seed, config.policy_id(), r)
        organic, incentivized = simulate_controlled(
            B, lam0, omega, shared_policy, t0, tf, rng,
            warn_explosive=(r == 0),
        )
        merged = EventSeq.merge(organic, incentivized)
        milestone_time = None
        if config.milestone is not None and len(organic) >= config.milestone:
            milestone_time = float(organic.times[config.milestone - 1])
        row = MetricsRow(
            policy=config.policy_id(),
            replica=r,
            position_over_time=0.0,
            time_at_top=0.0,
            organic_count=len(organic),
            incentivized_count=len(incentivized),
            milestone_time=milestone_time,
        )
        row.validate(t0, tf)
        rows.append(row)
        result.event_logs[(config.policy_id(), r)] = merged
    result.aggregates = aggregate_rows(rows)
    return result


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Run every replica of the configured policy and (optionally) write
    the metrics table, aggregates, event logs and manifest to disk."""
    if config.network["kind"] == "followers":
        result = _run_broadcaster(config)
    else:
        result = _run_network(config)
    if config.out_dir:
        _write_outputs(config, result)
        result.out_dir = config.out_dir
    return result


def _write_outputs(config: ExperimentConfig, result: ExperimentResult):
    out = config.out_dir
    os.makedirs(out, exist_ok=True)
    write_csv(
        os.path.join(out, "metrics.csv"),
        MetricsRow.COLUMNS,
        [row.as_record() for row in result.rows],
    )
    if result.aggregates:
        columns = list(result.aggregates[0].keys())
        write_csv(os.path.join(out, "summary.csv"), columns,
                  [[agg[c] for c in columns] for agg in result.aggregates])
    for (policy, replica), seq in sorted(result.event_logs.items()):
        d = os.path.join(out, "events", policy)
        os.makedirs(d, exist_ok=True)
        write_events_jsonl(os.path.join(d, f"replica_{replica:04d}.jsonl"), seq)
    for replica, seq in sorted(result.feed_logs.items()):
        d = os.path.join(out, "feeds")
        os.makedirs(d, exist_ok=True)
        write_events_jsonl(os.path.join(d, f"replica_{replica:04d}.jsonl"), seq)
    for (policy, replica), posts in sorted(result.post_logs.items()):
        d = os.path.join(out, "posts", policy)
        os.makedirs(d, exist_ok=True)
        seq = EventSeq(1, posts, np.zeros(len(posts), dtype=int),
                       ["incentivized"] * len(posts))
        write_events_jsonl(os.path.join(d, f"replica_{replica:04d}.jsonl"), seq)
    manifest = {
        "config_sha256": hashlib.sha256(config.canonical_json().encode()).hexdigest(),
        "seed": config.seed,
        "policy": config.policy_id(),
        "replicas": config.replicas,
        "version": __version__,
    }
    with open(os.path.join(out, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")
