"""Clairvoyant posting schedules when the feed times are known a priori.

Posting only ever pays off immediately after a feed arrival (or right at
the window start), so the problem discretizes onto the m feed times plus
the start: a decision vector of length m + 1, decisions[0] being a post
at t0 and decisions[k] a post at feed time t_k.

Cost model for a schedule: each post costs q/2; holding rank rho over an
interval of width w costs s * w * rho**2 / 2; finishing at rank rho adds
rho**2 / 2.  The dynamic program and the brute-force enumerator fold
these stage costs in the identical backward order, so optimal costs agree
bit-for-bit (floating-point addition is monotone, hence min distributes
exactly over the shared tail sums).
"""

from __future__ import annotations

import numpy as np


def _check_inputs(feed_times, q, s, t0, tf):
    feed_times = np.asarray(feed_times, dtype=float)
    if feed_times.ndim != 1:
        raise ValueError("feed_times must be 1-d")
    if len(feed_times) and (np.any(np.diff(feed_times) <= 0)):
        raise ValueError("feed times must be strictly increasing")
    if len(feed_times) and (feed_times[0] <= t0 or feed_times[-1] > tf):
        raise ValueError("feed times must lie inside (t0, tf]")
    if q < 0 or s < 0:
        raise ValueError("q and s must be nonnegative")
    if tf <= t0:
        raise ValueError("empty window")
    return feed_times


def oracle_schedule(
    r0: int,
    feed_times,
    q: float,
    s: float,
    t0: float,
    tf: float,
) -> tuple[float, np.ndarray]:
    """Optimal posting decisions against a known feed, in O(m^2).

    Returns (cost, decisions) where decisions has length m + 1; ties
    resolve to not posting.
    """
    feed_times = _check_inputs(feed_times, q, s, t0, tf)
    if r0 < 0:
        raise ValueError("r0 must be nonnegative")
    m = len(feed_times)
    widths = np.diff(np.concatenate([[t0], feed_times, [tf]]))  # w_1 .. w_{m+1}
    rmax = r0 + m
    ranks = np.arange(rmax + 1, dtype=float)

    # value[rho] = min cost from just before the arrival at stage k+1,
    # starting at terminal stage m+1 where it is the final penalty.
    value = 0.5 * ranks**2
    post_val = np.empty(m + 1)  # value of the post branch at stages m..1
    wait_val = np.empty((m, rmax + 1))
    for k in range(m, 0, -1):
        wait = 0.5 * s * widths[k] * (ranks + 1.0) ** 2 + np.append(value[1:], np.inf)
        post = 0.5 * q + value[0]
        post_val[k] = post
        wait_val[k - 1] = wait
        value = np.minimum(wait, post)

    # stage 0 at t0: no arrival, rank r0 either kept or cleared by a post
    start_wait = 0.5 * s * widths[0] * r0**2 + value[r0]
    start_post = 0.5 * q + value[0]
    cost = min(start_wait, start_post)

    # forward pass to recover decisions (prefer waiting on exact ties)
    decisions = np.zeros(m + 1, dtype=np.int8)
    if start_post < start_wait:
        decisions[0] = 1
        rho = 0
    else:
        rho = r0
    for k in range(1, m + 1):
        if post_val[k] < wait_val[k - 1][rho]:
            decisions[k] = 1
            rho = 0
        else:
            rho += 1
    return float(cost), decisions


def brute_force_schedule(
    r0: int,
    feed_times,
    q: float,
    s: float,
    t0: float,
    tf: float,
    max_m: int = 20,
) -> tuple[float, np.ndarray]:
    """Exhaustive minimum over all 2**(m+1) decision vectors.

    Deterministic tie-break: the lexicographically smallest decision
    vector (with decisions[0] most significant) among the minima.
    """
    feed_times = _check_inputs(feed_times, q, s, t0, tf)
    m = len(feed_times)
    if m > max_m:
        raise ValueError(f"m={m} too large to enumerate (max {max_m})")
    widths = np.diff(np.concatenate([[t0], feed_times, [tf]]))
    count = 1 << (m + 1)
    idx = np.arange(count)
    # u[:, k]: decision at stage k; bit order makes row order lexicographic
    u = ((idx[:, None] >> (m - np.arange(m + 1))) & 1).astype(np.int8)

    # forward rank-after-decision per stage
    rank_after = np.empty((m + 1, count), dtype=np.int64)
    rho = np.where(u[:, 0] == 1, 0, r0)
    rank_after[0] = rho
    for k in range(1, m + 1):
        rho = np.where(u[:, k] == 1, 0, rank_after[k - 1] + 1)
        rank_after[k] = rho

    # backward fold with the same stage arithmetic as the DP
    cost = 0.5 * rank_after[m].astype(float) ** 2
    for k in range(m, 0, -1):
        stage = np.where(
            u[:, k] == 1,
            0.5 * q,
            0.5 * s * widths[k] * (rank_after[k - 1] + 1.0) ** 2,
        )
        cost = stage + cost
    stage0 = np.where(u[:, 0] == 1, 0.5 * q, 0.5 * s * widths[0] * float(r0) ** 2)
    cost = stage0 + cost
    best = int(np.argmin(cost))
    return float(cost[best]), u[best].copy()


def schedule_cost(
    feed_times,
    post_times,
    q: float,
    s: float,
    t0: float,
    tf: float,
    r0: int = 0,
) -> float:
    """Realized quadratic objective of an arbitrary posting schedule.

    Evaluates s/2 * integral of rank^2 plus q/2 per post plus the
    terminal rank penalty, replaying arrivals and posts in time order.
    Lets oracle output, sampled policies and fixed-rate posters be
    compared on an identical footing.
    """
    feed_times = _check_inputs(feed_times, q, s, t0, tf)
    post_times = np.asarray(post_times, dtype=float)
    # posts at a feed time land just after the arrival, so feeds sort first
    events = [(float(t), 0) for t in feed_times]
    events += [(float(t), 1) for t in post_times if t0 <= t <= tf]
    events.sort()
    rho = float(r0)
    t = t0
    cost = 0.5 * q * sum(1 for tt in post_times if t0 <= tt <= tf)
    for when, is_post in events:
        cost += 0.5 * s * (when - t) * rho**2
        rho = 0.0 if is_post else rho + 1
        t = when
    cost += 0.5 * s * (tf - t) * rho**2
    cost += 0.5 * rho**2
    return cost
