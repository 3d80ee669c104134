"""Quality measures computed from piecewise-constant rank trajectories.

Both integrals are exact sums of level * segment-width terms; there is
no quadrature error.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class RankTrajectory:
    """Per-follower feed positions as a right-continuous step function.

    ``times`` are the breakpoints (first entry is the start of the
    window); ``values[k]`` holds the (n_followers,) rank vector on
    ``[times[k], times[k+1])`` and ``values[-1]`` from ``times[-1]`` to
    the end of the window ``t_end``.
    """

    times: np.ndarray
    values: np.ndarray
    t_end: float

    def __init__(self, times, values, t_end: float):
        times = np.asarray(times, dtype=float)
        values = np.atleast_2d(np.asarray(values, dtype=float))
        if values.shape[0] != len(times):
            raise ValueError("one value row per breakpoint required")
        if len(times) == 0:
            raise ValueError("trajectory must cover the window (gap)")
        if np.any(np.diff(times) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if t_end < times[-1]:
            raise ValueError("t_end precedes the last breakpoint")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "t_end", float(t_end))

    @property
    def t_start(self) -> float:
        return float(self.times[0])

    @property
    def n_followers(self) -> int:
        return self.values.shape[1]

    def _widths(self) -> np.ndarray:
        return np.diff(np.append(self.times, self.t_end))


def build_rank_trajectory(
    feed_times,
    feed_followers,
    post_times,
    n_followers: int,
    t0: float,
    tf: float,
    r0=None,
) -> RankTrajectory:
    """Replay feed arrivals and broadcaster posts into rank values.

    A feed arrival for follower j pushes that follower's rank down by
    one; a broadcaster post resets every rank to zero.
    """
    feed_times = np.asarray(feed_times, dtype=float)
    feed_followers = np.asarray(feed_followers, dtype=np.int64)
    post_times = np.asarray(post_times, dtype=float)
    r = np.zeros(n_followers) if r0 is None else np.asarray(r0, dtype=float).copy()
    # a post at a feed arrival's timestamp lands just after it (feeds first)
    events = [(t, 0, int(j)) for t, j in zip(feed_times, feed_followers)]
    events += [(t, 1, -1) for t in post_times]
    events.sort()
    times = [t0]
    values = [r.copy()]
    for t, is_post, j in events:
        if t < t0 or t > tf:
            continue
        if is_post:
            r = np.zeros(n_followers)
        else:
            r = r.copy()
            r[j] += 1
        if t == times[-1]:
            values[-1] = r
        else:
            times.append(t)
            values.append(r)
    return RankTrajectory(np.array(times), np.array(values), tf)


def position_over_time(ranks: RankTrajectory, t0: float, tf: float) -> float:
    """Integral of the summed rank over [t0, tf]."""
    _check_window(ranks, t0, tf)
    return float((ranks.values.sum(axis=1) * ranks._widths()).sum())


def time_at_top(ranks: RankTrajectory, t0: float, tf: float) -> float:
    """Integral of the fraction of followers whose rank is below one."""
    _check_window(ranks, t0, tf)
    at_top = (ranks.values < 1).mean(axis=1)
    return float((at_top * ranks._widths()).sum())


def _check_window(ranks: RankTrajectory, t0: float, tf: float):
    if abs(ranks.t_start - t0) > 1e-12 or abs(ranks.t_end - tf) > 1e-12:
        raise ValueError("trajectory does not cover the requested window (gap)")


@dataclass
class MetricsRow:
    """One replica's worth of quality measures."""

    policy: str
    replica: int
    position_over_time: float
    time_at_top: float
    organic_count: int
    incentivized_count: int
    milestone_time: Optional[float] = None

    COLUMNS = (
        "policy",
        "replica",
        "position_over_time",
        "time_at_top",
        "organic_count",
        "incentivized_count",
        "milestone_time",
    )

    def validate(self, t0: float, tf: float):
        if self.time_at_top > tf - t0 + 1e-9:
            raise ValueError("time_at_top exceeds the window length")
        if self.organic_count < 0 or self.incentivized_count < 0:
            raise ValueError("counts must be nonnegative")

    def as_record(self) -> list:
        return [getattr(self, c) for c in self.COLUMNS]


def aggregate_rows(rows: list[MetricsRow]) -> list[dict]:
    """Per-policy mean and standard error of every numeric metric."""
    numeric = ("position_over_time", "time_at_top", "organic_count",
               "incentivized_count", "milestone_time")
    policies = sorted({r.policy for r in rows})
    out = []
    for policy in policies:
        group = [r for r in rows if r.policy == policy]
        record = {"policy": policy, "replicas": len(group)}
        for name in numeric:
            vals = np.array([getattr(r, name) for r in group
                             if getattr(r, name) is not None], dtype=float)
            if len(vals) == 0:
                record[f"{name}_mean"] = None
                record[f"{name}_se"] = None
                continue
            record[f"{name}_mean"] = float(vals.mean())
            record[f"{name}_se"] = (
                float(vals.std(ddof=1) / np.sqrt(len(vals))) if len(vals) > 1 else 0.0
            )
        out.append(record)
    return out
