"""The broadcaster-side controller.

Rank (feed position) bookkeeping, the square-root feedback posting
intensity, the event-driven sampler that races one exponential candidate
per follower, posting-budget calibration, and empirical significance
estimation from follower activity logs.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .point import EventSeq

BROADCASTER = "broadcaster"


@dataclass(frozen=True)
class Significance:
    """Per-follower attention weights on a repeating schedule, plus the
    posting-cost weight q.

    ``values`` has shape (n_followers, n_bins); bin b covers
    ``[b, b+1) * period / n_bins`` of every period.  The policy only
    depends on ``values / q``, so scaling both leaves it unchanged.
    """

    values: np.ndarray
    period: float
    q: float

    def __init__(self, values, period: float = 7.0, q: float = 1.0):
        values = np.atleast_2d(np.asarray(values, dtype=float))
        if np.any(values < 0):
            raise ValueError("significance must be nonnegative")
        if not (period > 0):
            raise ValueError("period must be positive")
        if not (q > 0):
            raise ValueError("q must be positive")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "period", float(period))
        object.__setattr__(self, "q", float(q))

    @classmethod
    def constant(cls, n_followers: int, s: float = 1.0, q: float = 1.0) -> "Significance":
        return cls(np.full((n_followers, 1), s), period=1.0, q=q)

    @property
    def n_followers(self) -> int:
        return self.values.shape[0]

    @property
    def n_bins(self) -> int:
        return self.values.shape[1]

    def with_q(self, q: float) -> "Significance":
        return Significance(self.values, self.period, q)

    def _bin(self, t: float) -> int:
        frac = (t % self.period) / self.period
        return min(int(frac * self.n_bins), self.n_bins - 1)

    def at(self, t: float) -> np.ndarray:
        """Significance vector s(t)."""
        return self.values[:, self._bin(t)]

    def next_boundary(self, t: float) -> float:
        """First bin boundary strictly after t (inf for a single bin)."""
        if self.n_bins == 1:
            return np.inf
        width = self.period / self.n_bins
        k = np.floor(t / width)
        boundary = (k + 1) * width
        if boundary <= t:  # guard against floating roundoff
            boundary = (k + 2) * width
        return float(boundary)

    def rates(self, t: float) -> np.ndarray:
        """Per-rank-unit posting rate sqrt(s_i(t) / q) for each follower."""
        return np.sqrt(self.at(t) / self.q)


@dataclass
class RankState:
    """Feed position of the broadcaster's latest post, per follower."""

    r: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.r = np.atleast_1d(np.asarray(self.r, dtype=np.int64)).copy()
        if np.any(self.r < 0):
            raise ValueError("ranks must be nonnegative")

    @property
    def n_followers(self) -> int:
        return len(self.r)

    def copy(self) -> "RankState":
        return RankState(self.r, self.t)


def rank_update(state: RankState, who, t: Optional[float] = None) -> RankState:
    """Apply one event: the broadcaster posting resets every rank to zero,
    a feed arrival for follower j pushes that follower's rank down by one.

    ``who`` is either the string ``"broadcaster"`` or a follower index.
    """
    if t is not None and t < state.t:
        raise ValueError("event time precedes the state's clock")
    out = state.copy()
    if t is not None:
        out.t = t
    if who == BROADCASTER:
        out.r = np.zeros_like(state.r)
        return out
    j = int(who)
    if not 0 <= j < state.n_followers:
        raise ValueError(f"unknown follower id {who}")
    out.r[j] += 1
    return out


def optimal_intensity(state: RankState, sig: Significance, t: float) -> float:
    """Feedback posting intensity: sum_i sqrt(s_i(t) / q) * r_i(t)."""
    if sig.n_followers != state.n_followers:
        raise ValueError("significance/follower count mismatch")
    return float(np.dot(sig.rates(t), state.r))


class FeedCursor:
    """Peekable reader over a pre-generated feed trace.

    Yields (time, follower) pairs in order; the sampler peeks to decide
    whether the next feed arrival happens before its own candidate post.
    """

    def __init__(self, times, followers=None):
        self.times = np.asarray(times, dtype=float)
        if followers is None:
            followers = np.zeros(len(self.times), dtype=np.int64)
        self.followers = np.asarray(followers, dtype=np.int64)
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("feed times must be strictly increasing")
        self.pos = 0

    @classmethod
    def from_eventseq(cls, seq: EventSeq) -> "FeedCursor":
        return cls(seq.times, seq.dims)

    def peek(self) -> Optional[tuple[float, int]]:
        if self.pos >= len(self.times):
            return None
        return float(self.times[self.pos]), int(self.followers[self.pos])

    def advance(self):
        self.pos += 1


def next_post_time(
    state: RankState,
    sig: Significance,
    feed_stream: FeedCursor,
    t: float,
    rng: np.random.Generator,
    t_end: float = np.inf,
) -> Optional[float]:
    """Sample the next posting time of the square-root feedback policy.

    Races one exponential candidate per follower at rate
    sqrt(s_j(t) / q) * r_j; candidates refresh whenever a feed arrival
    bumps a rank or a significance bin boundary changes the rates
    (memorylessness makes either restart exact).  Mutates ``state`` with
    the feed arrivals it consumes and advances ``feed_stream`` past them.
    Returns None when no post happens before ``t_end``.
    """
    n = state.n_followers
    now = max(t, state.t)
    rates = sig.rates(now) * state.r
    candidates = np.full(n, np.inf)
    alive = rates > 0
    if alive.any():
        candidates[alive] = now + rng.exponential(size=int(alive.sum())) / rates[alive]

    while True:
        cand = candidates.min() if n else np.inf
        boundary = sig.next_boundary(now)
        nxt = feed_stream.peek()
        feed_t = nxt[0] if nxt is not None else np.inf

        if cand <= min(feed_t, boundary):
            if cand > t_end:
                state.t = t_end
                return None
            state.t = cand
            return float(cand)
        if min(feed_t, boundary) > t_end:
            state.t = t_end
            return None
        if feed_t <= boundary:
            feed_stream.advance()
            j = nxt[1]
            state.r[j] += 1
            state.t = now = feed_t
            rate_j = sig.rates(now)[j] * state.r[j]
            candidates[j] = (
                now + rng.exponential() / rate_j if rate_j > 0 else np.inf
            )
        else:
            now = boundary
            state.t = now
            rates = sig.rates(now) * state.r
            candidates = np.full(n, np.inf)
            alive = rates > 0
            if alive.any():
                candidates[alive] = (
                    now + rng.exponential(size=int(alive.sum())) / rates[alive]
                )


def run_posting_policy(
    feed: EventSeq,
    sig: Significance,
    t0: float,
    tf: float,
    rng: np.random.Generator,
    r0=None,
) -> np.ndarray:
    """Run the feedback poster over a whole feed trace; returns post times."""
    state = RankState(np.zeros(feed.m, dtype=np.int64) if r0 is None else r0, t0)
    cursor = FeedCursor.from_eventseq(feed)
    posts: list[float] = []
    t = t0
    while True:
        when = next_post_time(state, sig, cursor, t, rng, t_end=tf)
        if when is None:
            break
        posts.append(when)
        state.r[:] = 0
        t = when
    return np.asarray(posts)


def uniform_posts(
    n_posts: int,
    t0: float,
    tf: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """A rate-uniform poster with an exactly realized budget.

    Conditioned on its count, a homogeneous Poisson process is a sorted
    sample of uniforms, so this is the budget-matched uniform baseline.
    """
    return np.sort(rng.uniform(t0, tf, size=int(n_posts)))


def tune_q(
    target_posts: int,
    tolerance: float,
    feed_traces: Sequence[EventSeq],
    sig: Significance,
    rng: np.random.Generator,
    t0: float,
    tf: float,
    runs_per_probe: int = 10,
    q_range: tuple[float, float] = (1e-12, 1e12),
    max_probes: int = 80,
) -> float:
    """Binary-search q so the mean post count hits the target budget.

    The expected count is non-increasing in q.  Each probe averages
    ``runs_per_probe`` simulated runs across the given feed traces.
    Raises RuntimeError when the target cannot be bracketed in
    ``q_range``.
    """
    if target_posts < 1:
        raise ValueError("target_posts must be >= 1")
    if not feed_traces:
        raise ValueError("need at least one feed trace")

    probes = 0

    def mean_count(q: float) -> float:
        nonlocal probes
        probes += 1
        counts = []
        for i, sub in enumerate(rng.spawn(runs_per_probe)):
            feed = feed_traces[i % len(feed_traces)]
            counts.append(len(run_posting_policy(feed, sig.with_q(q), t0, tf, sub)))
        return float(np.mean(counts))

    lo, hi = 1.0, 1.0  # lo: q with count >= target, hi: q with count <= target
    c = mean_count(1.0)
    if c > target_posts:
        hi = 1.0
        while mean_count(hi * 16) > target_posts:
            hi *= 16
            if hi > q_range[1] or probes > max_probes:
                raise RuntimeError(
                    f"failed to bracket target {target_posts} below q={hi}"
                )
        lo, hi = hi, hi * 16
    elif c < target_posts:
        lo = 1.0
        while mean_count(lo / 16) < target_posts:
            lo /= 16
            if lo < q_range[0] or probes > max_probes:
                raise RuntimeError(
                    f"failed to bracket target {target_posts} above q={lo}"
                )
        lo, hi = lo / 16, lo
    else:
        return 1.0

    best_q, best_err = 1.0, np.inf
    while probes < max_probes:
        mid = np.sqrt(lo * hi)
        c = mean_count(mid)
        err = abs(c - target_posts)
        if err < best_err:
            best_q, best_err = mid, err
        if err <= tolerance * target_posts:
            return float(mid)
        if c > target_posts:
            lo = mid
        else:
            hi = mid
    if best_err <= tolerance * target_posts:
        return float(best_q)
    raise RuntimeError(
        f"budget search did not converge: best |mean - target| = {best_err:.1f}"
    )


def filter_followers(follow_counts, threshold: int = 500) -> np.ndarray:
    """Mask of followers to keep: those following at most ``threshold``
    accounts.  Heavy followers see so much traffic that they would
    dominate the posting policy, so harnesses may drop or down-weight
    them before building a Significance profile."""
    follow_counts = np.asarray(follow_counts)
    if threshold < 1:
        raise ValueError("threshold must be positive")
    return follow_counts <= threshold


def estimate_significance(
    follower_logs: Sequence,
    n_bins: int = 7,
    period: float = 7.0,
    q: float = 1.0,
) -> Significance:
    """Empirical attention profile: the fraction of each follower's events
    landing in each schedule bin (rows sum to one).

    Followers with no events fall back to a uniform profile and are
    reported via a warning.
    """
    if not len(follower_logs):
        raise ValueError("need at least one follower log")
    values = np.zeros((len(follower_logs), n_bins))
    empty: list[int] = []
    width = period / n_bins
    for i, log in enumerate(follower_logs):
        times = log.times if isinstance(log, EventSeq) else np.asarray(log, dtype=float)
        if len(times) == 0:
            values[i] = 1.0 / n_bins
            empty.append(i)
            continue
        bins = np.minimum((times % period) / width, n_bins - 1e-9).astype(int)
        counts = np.bincount(bins, minlength=n_bins)
        values[i] = counts / counts.sum()
    if empty:
        warnings.warn(f"followers with no events got uniform significance: {empty}")
    return Significance(values, period=period, q=q)
