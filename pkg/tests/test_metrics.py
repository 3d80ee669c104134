import numpy as np
import pytest

import hawksteer as hs
from hawksteer.metrics import RankTrajectory, aggregate_rows


def make_traj(times, values, t_end):
    return RankTrajectory(np.asarray(times), np.asarray(values, float), t_end)


def test_position_zero_everywhere():
    traj = make_traj([0.0], [[0.0]], 3.0)
    assert hs.position_over_time(traj, 0.0, 3.0) == 0.0


def test_position_constant_one():
    traj = make_traj([0.0], [[1.0]], 2.0)
    assert hs.position_over_time(traj, 0.0, 2.0) == 2.0


def test_position_staircase_hand_sum():
    # 0 on [0,1), 1 on [1,1.5), 0 on [1.5,3] -> integral 0.5
    traj = make_traj([0.0, 1.0, 1.5], [[0.0], [1.0], [0.0]], 3.0)
    assert hs.position_over_time(traj, 0.0, 3.0) == pytest.approx(0.5)
    assert hs.time_at_top(traj, 0.0, 3.0) == pytest.approx(2.5)


def test_time_at_top_extremes():
    always = make_traj([0.0], [[0.0]], 4.0)
    assert hs.time_at_top(always, 0.0, 4.0) == 4.0
    never = make_traj([0.0], [[3.0]], 4.0)
    assert hs.time_at_top(never, 0.0, 4.0) == 0.0


def test_multi_follower_time_at_top_is_averaged():
    # one follower at the top, one not: indicator average is 0.5
    traj = make_traj([0.0], [[0.0, 2.0]], 2.0)
    assert hs.time_at_top(traj, 0.0, 2.0) == pytest.approx(1.0)


def test_window_gap_rejected():
    traj = make_traj([0.0], [[1.0]], 2.0)
    with pytest.raises(ValueError):
        hs.position_over_time(traj, 0.0, 3.0)


def test_build_rank_trajectory_replays_events():
    feed_t = [1.0, 2.0, 4.0]
    feed_j = [0, 1, 0]
    posts = [3.0]
    traj = hs.build_rank_trajectory(feed_t, feed_j, posts, 2, 0.0, 5.0)
    # ranks: [0,0] on [0,1), [1,0] on [1,2), [1,1] on [2,3), [0,0] on [3,4), [1,0] on [4,5]
    assert hs.position_over_time(traj, 0.0, 5.0) == pytest.approx(1 + 2 + 0 + 1)
    # fraction at top per segment: 1, 0.5, 0, 1, 0.5
    assert hs.time_at_top(traj, 0.0, 5.0) == pytest.approx(1 + 0.5 + 0 + 1 + 0.5)


def test_post_at_feed_time_lands_after_the_arrival():
    traj = hs.build_rank_trajectory([1.0], [0], [1.0], 1, 0.0, 2.0)
    assert hs.position_over_time(traj, 0.0, 2.0) == 0.0


def test_metrics_row_validation():
    row = hs.MetricsRow("p", 0, 1.0, 5.0, 3, 1)
    with pytest.raises(ValueError):
        row.validate(0.0, 2.0)  # time_at_top exceeds window


def test_aggregate_rows_mean_and_se():
    rows = [hs.MetricsRow("p", r, float(r), 0.0, 10, 1) for r in range(4)]
    agg = aggregate_rows(rows)[0]
    assert agg["position_over_time_mean"] == pytest.approx(1.5)
    expected_se = np.std([0, 1, 2, 3], ddof=1) / 2
    assert agg["position_over_time_se"] == pytest.approx(expected_se)
    assert agg["milestone_time_mean"] is None


def test_standard_error_shrinks_with_replicas():
    """SE of the replica mean scales like 1/sqrt(R) on iid replicas."""
    def se_at(reps):
        rows = []
        for r in range(reps):
            rng = hs.stream(55, "se", r)
            rows.append(hs.MetricsRow("p", r, float(rng.normal()), 0.0, 1, 0))
        return aggregate_rows(rows)[0]["position_over_time_se"]

    ratio = se_at(64) / se_at(1024)
    assert 2.5 < ratio < 6.5  # expectation 4, wide band for sampling noise
