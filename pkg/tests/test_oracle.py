import numpy as np
import pytest

import hawksteer as hs


def random_instance(rng, m_max=14):
    m = int(rng.integers(0, m_max + 1))
    t0, tf = 0.0, float(rng.uniform(3, 10))
    fts = np.sort(rng.uniform(t0 + 1e-6, tf, m))
    if m > 1:
        fts = fts[np.concatenate([[True], np.diff(fts) > 0])]
    q = float(rng.uniform(0.01, 5))
    s = float(rng.uniform(0.1, 3))
    r0 = int(rng.integers(0, 4))
    return r0, fts, q, s, t0, tf


def test_dp_equals_brute_force_exactly():
    """100 random instances, m <= 14: exact float equality of the optima."""
    rng = np.random.default_rng(0)
    for _ in range(100):
        r0, fts, q, s, t0, tf = random_instance(rng)
        c_dp, _ = hs.oracle_schedule(r0, fts, q, s, t0, tf)
        c_bf, _ = hs.brute_force_schedule(r0, fts, q, s, t0, tf)
        assert c_dp == c_bf


def test_dp_cost_equals_direct_objective_of_schedule():
    rng = np.random.default_rng(1)
    for _ in range(30):
        r0, fts, q, s, t0, tf = random_instance(rng, m_max=12)
        cost, decisions = hs.oracle_schedule(r0, fts, q, s, t0, tf)
        knots = np.concatenate([[t0], fts])
        posts = knots[decisions.astype(bool)]
        direct = hs.schedule_cost(fts, posts, q, s, t0, tf, r0=r0)
        assert direct == pytest.approx(cost, rel=1e-12, abs=1e-12)


def test_no_feed_events_never_post_when_posting_cannot_pay():
    # with r0 = 0 a post can only add cost
    cost, decisions = hs.oracle_schedule(0, [], 1.0, 1.0, 0.0, 2.0)
    assert cost == 0.0 and decisions.tolist() == [0]
    # with r0 > 0 but q too expensive, waiting is optimal:
    # cost = s/2 * r0^2 * T + r0^2 / 2
    cost, decisions = hs.oracle_schedule(2, [], 100.0, 1.0, 0.0, 1.0)
    assert decisions.tolist() == [0]
    assert cost == pytest.approx(0.5 * 4 * 1.0 + 0.5 * 4)


def test_free_posts_fire_at_every_feed_event():
    cost, decisions = hs.oracle_schedule(0, [0.2, 0.5, 0.9], 0.0, 1.0, 0.0, 1.0)
    assert decisions[1:].tolist() == [1, 1, 1]
    assert cost == 0.0


def test_single_event_extremes():
    _, d = hs.brute_force_schedule(0, [0.5], 1e6, 1.0, 0.0, 1.0)
    assert d[1] == 0
    cost, d = hs.brute_force_schedule(1, [0.5], 0.0, 1.0, 0.0, 1.0)
    assert d[1] == 1 and cost == 0.0


def test_brute_force_rejects_large_m():
    with pytest.raises(ValueError):
        hs.brute_force_schedule(0, np.linspace(0.1, 0.9, 25), 1.0, 1.0, 0.0, 1.0)


def test_rejects_unsorted_feed_times():
    with pytest.raises(ValueError):
        hs.oracle_schedule(0, [0.5, 0.2], 1.0, 1.0, 0.0, 1.0)


def test_cost_monotone_in_initial_rank():
    fts = [0.3, 0.6, 1.4]
    costs = [hs.oracle_schedule(r0, fts, 1.0, 1.0, 0.0, 2.0)[0] for r0 in range(6)]
    assert all(a <= b + 1e-15 for a, b in zip(costs, costs[1:]))


def test_brute_force_tie_break_is_lexicographic():
    # with free posts and no rank cost, [0,1] and [1,1] both clear the
    # terminal penalty at zero cost; the lexicographically smaller wins
    cost, d = hs.brute_force_schedule(0, [0.5], 0.0, 0.0, 0.0, 1.0)
    assert cost == 0.0 and d.tolist() == [0, 1]


def test_oracle_dominates_sampled_policies_on_cost():
    """The DP optimum lower-bounds any realized schedule on the same feed,
    and the feedback poster beats a budget-matched uniform poster in mean."""
    t0, tf, q = 0.0, 30.0, 2.0
    sig = hs.Significance.constant(1, 1.0, q)
    rq_costs, uni_costs, oracle_costs = [], [], []
    for r in range(50):
        feed = hs.simulate_uncontrolled([[1.0]], [10.0], 10.0, t0, tf,
                                        hs.stream(101, "feeds", r))
        oc, od = hs.oracle_schedule(0, feed.times, q, 1.0, t0, tf)
        posts = hs.run_posting_policy(feed, sig, t0, tf, hs.stream(101, "rq", r))
        rc = hs.schedule_cost(feed.times, posts, q, 1.0, t0, tf)
        uposts = hs.uniform_posts(int(od.sum()), t0, tf, hs.stream(101, "uni", r))
        uc = hs.schedule_cost(feed.times, uposts, q, 1.0, t0, tf)
        assert oc <= rc + 1e-9
        oracle_costs.append(oc)
        rq_costs.append(rc)
        uni_costs.append(uc)
    assert np.mean(oracle_costs) < np.mean(rq_costs) < np.mean(uni_costs)
