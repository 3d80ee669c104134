"""When should a single broadcaster post to stay visible?

Compares three schedules against the same simulated follower feed:
the rank-feedback poster (rate proportional to how far the last post
has slipped down the feed), the clairvoyant optimum computed by dynamic
programming over the known feed times, and a uniform-rate poster with
the same budget.

Run:  python demos/02_when_to_post.py
"""

import numpy as np

import hawksteer as hs

t0, tf = 0.0, 90.0
q = 2.0  # posting-cost weight; higher means fewer posts
sig = hs.Significance.constant(1, 1.0, q)

pos = {"feedback": [], "oracle": [], "uniform": []}
top = {"feedback": [], "oracle": [], "uniform": []}
budgets = []
for r in range(10):
    feed = hs.simulate_uncontrolled([[1.0]], [10.0], 10.0, t0, tf,
                                    hs.stream(2024, "feeds", r))

    posts = hs.run_posting_policy(feed, sig, t0, tf, hs.stream(2024, "rq", r))
    budgets.append(len(posts))

    _, decisions = hs.oracle_schedule(0, feed.times, q, 1.0, t0, tf)
    knots = np.concatenate([[t0], feed.times])
    oracle_posts = knots[decisions.astype(bool)]

    uniform = hs.uniform_posts(len(posts), t0, tf, hs.stream(2024, "uni", r))

    for name, schedule in [("feedback", posts), ("oracle", oracle_posts),
                           ("uniform", uniform)]:
        traj = hs.build_rank_trajectory(feed.times, feed.dims, schedule, 1, t0, tf)
        pos[name].append(hs.position_over_time(traj, t0, tf))
        top[name].append(hs.time_at_top(traj, t0, tf))

print(f"feed size ~1000 events, posts per run ~{np.mean(budgets):.0f}")
print(f"{'schedule':>10} {'position-over-time':>20} {'time-at-top':>14}")
for name in ("oracle", "feedback", "uniform"):
    print(f"{name:>10} {np.mean(pos[name]):>20.0f} {np.mean(top[name]):>14.1f}")
print("\nThe feedback poster lands within a small factor of the clairvoyant")
print("optimum and far ahead of the uniform poster at the same budget.")
