import numpy as np
import pytest
from scipy import stats as sps

import hawksteer as hs


def test_zero_influence_gives_poisson_counts():
    """B = 0 degenerates to independent Poisson streams per dimension."""
    lam0 = np.array([0.8, 1.6])
    T = 20.0
    counts = np.zeros(2)
    runs = 500
    for r in range(runs):
        seq = hs.simulate_uncontrolled(np.zeros((2, 2)), lam0, 1.0, 0.0, T,
                                       hs.stream(1, "poisson", r))
        counts += seq.counts()
    mean = counts / runs
    se = np.sqrt(lam0 * T / runs)
    assert np.all(np.abs(mean - lam0 * T) < 3 * se)


def test_zero_baseline_never_fires():
    seq = hs.simulate_uncontrolled([[0.9]], [0.0], 1.0, 0.0, 100.0, hs.stream(2, "z"))
    assert len(seq) == 0


def test_stationary_mean_count_one_dimensional():
    """Feed-regime parameters: mean count approaches lam0/(1 - a/w) * T.

    T is chosen so the transient term of E N(T) is under 1% of the total:
    E N(T) = lbar*T - (lbar - lam0)(1 - e^{-(w-a)T})/(w-a).
    """
    lam0, alpha, omega, T, runs = 10.0, 1.0, 10.0, 10.0, 500
    lbar = lam0 / (1 - alpha / omega)
    transient = (lbar - lam0) * (1 - np.exp(-(omega - alpha) * T)) / (omega - alpha)
    assert transient / (lbar * T) < 0.01
    total = 0
    for r in range(runs):
        total += len(hs.simulate_uncontrolled([[alpha]], [lam0], omega, 0.0, T,
                                              hs.stream(3, "stat", r)))
    mean = total / runs
    assert abs(mean - lbar * T) < 0.05 * lbar * T


def test_explosion_guard_trips():
    with pytest.warns(RuntimeWarning, match="explosive"):
        with pytest.raises(hs.ExplosionError, match="event cap"):
            hs.simulate_uncontrolled([[2.0]], [5.0], 1.0, 0.0, 1e6,
                                     hs.stream(4, "boom"), event_cap=2000)


def test_subcritical_regime_does_not_warn(recwarn):
    hs.simulate_uncontrolled([[0.5]], [1.0], 1.0, 0.0, 1.0, hs.stream(5, "ok"))
    assert not [w for w in recwarn if issubclass(w.category, RuntimeWarning)]


def test_intensity_trace_reconstruction():
    """Replaying a run's events through decay/jump reproduces the recorded
    intensities to 1e-10 relative."""
    B = np.array([[0.3, 0.8], [0.5, 0.1]])
    lam0 = np.array([1.0, 0.5])
    trace = hs.SimTrace()
    seq = hs.simulate_uncontrolled(B, lam0, 2.0, 0.0, 60.0, hs.stream(6, "tr"),
                                   trace=trace)
    assert len(trace.lams) == len(seq)
    replayed = hs.replay_intensity(seq, B, lam0, 2.0, 0.0)
    for got, want in zip(replayed, trace.lams):
        assert np.allclose(got, want, rtol=1e-10)


def test_null_policy_equals_uncontrolled_stream_for_stream():
    B = np.array([[0.0, 0.5], [0.4, 0.0]])
    lam0 = np.array([1.0, 2.0])
    a = hs.simulate_uncontrolled(B, lam0, 2.0, 0.0, 50.0, hs.stream(9, "id"))
    org, inc = hs.simulate_controlled(B, lam0, 2.0, None, 0.0, 50.0,
                                      hs.stream(9, "id"))
    assert a == org and len(inc) == 0


def test_zero_feedback_policy_equals_uncontrolled_stream_for_stream():
    """A feedback policy with all-zero value coefficients draws nothing
    from the stream, so the organic draw is bit-identical."""
    B = np.array([[0.0, 0.5], [0.4, 0.0]])
    lam0 = np.array([1.0, 2.0])
    weights = hs.ControlWeights.uniform(2, 0.0, 1.0, 0.0)
    sol = hs.solve_riccati(B, 2.0, weights, lam0, 0.0, 50.0, steps=500)
    assert np.abs(sol.H).max() == 0.0 and np.abs(sol.g).max() == 0.0
    a = hs.simulate_uncontrolled(B, lam0, 2.0, 0.0, 50.0, hs.stream(9, "id2"))
    org, inc = hs.simulate_controlled(B, lam0, 2.0, hs.CheshirePolicy(sol),
                                      0.0, 50.0, hs.stream(9, "id2"))
    assert a == org and len(inc) == 0


def test_constant_policy_independent_poisson_counts():
    """B = 0 plus a constant-rate policy: both processes are Poisson with
    the prescribed rates."""
    c = np.array([3.0, 1.0])
    lam0 = np.array([0.5, 0.2])
    T, runs = 50.0, 120
    org_counts = np.zeros(2)
    inc_counts = np.zeros(2)
    for r in range(runs):
        org, inc = hs.simulate_controlled(np.zeros((2, 2)), lam0, 1.0,
                                          hs.ConstantPolicy(c), 0.0, T,
                                          hs.stream(10, "cp", r))
        org_counts += org.counts()
        inc_counts += inc.counts()
    assert np.all(np.abs(org_counts / runs - lam0 * T) < 4 * np.sqrt(lam0 * T / runs))
    assert np.all(np.abs(inc_counts / runs - c * T) < 4 * np.sqrt(c * T / runs))


def test_incentives_propagate_through_a_directed_chain():
    """Pushing node 0 raises node 1's organic count (paired sign test)."""
    B = np.array([[0.0, 0.0], [5.0, 0.0]])  # node 0 excites node 1
    lam0 = np.array([1.0, 1.0])
    pushed = hs.ConstantPolicy(np.array([5.0, 0.0]))
    diffs = []
    for r in range(200):
        org_c, _ = hs.simulate_controlled(B, lam0, 10.0, pushed, 0.0, 10.0,
                                          hs.stream(11, "push", r))
        org_u = hs.simulate_uncontrolled(B, lam0, 10.0, 0.0, 10.0,
                                         hs.stream(11, "unc", r))
        diffs.append(org_c.counts()[1] - org_u.counts()[1])
    wins = int(np.sum(np.array(diffs) > 0))
    ties = int(np.sum(np.array(diffs) == 0))
    p = sps.binomtest(wins, 200 - ties, 0.5, alternative="greater").pvalue
    assert p < 0.01


def test_added_events_never_decrease_intensity():
    """Replaying the same organic draw with extra incentivized events gives
    a pointwise-dominating intensity path (nonnegative influence)."""
    B = np.array([[0.2, 0.6], [0.7, 0.1]])
    lam0 = np.array([0.5, 0.8])
    org, inc = hs.simulate_controlled(B, lam0, 2.0, hs.ConstantPolicy([0.5, 0.5]),
                                      0.0, 30.0, hs.stream(12, "mono"))
    assert len(inc) > 0
    merged = hs.EventSeq.merge(org, inc)
    lam_base = hs.replay_intensity(org, B, lam0, 2.0, 0.0)
    lam_both = hs.replay_intensity(merged, B, lam0, 2.0, 0.0)
    index = {t: i for i, t in enumerate(merged.times)}
    for i, t in enumerate(org.times):
        assert np.all(lam_both[index[t]] >= lam_base[i] - 1e-12)


def test_event_log_round_trip_is_bit_exact(tmp_path):
    B = np.array([[0.3, 0.8], [0.5, 0.1]])
    org, inc = hs.simulate_controlled(B, [1.0, 0.5], 2.0,
                                      hs.ConstantPolicy([0.3, 0.0]),
                                      0.0, 40.0, hs.stream(13, "io"))
    merged = hs.EventSeq.merge(org, inc)
    path = tmp_path / "events.jsonl"
    from hawksteer.io import read_events_jsonl, write_events_jsonl

    write_events_jsonl(path, merged)
    back = read_events_jsonl(path, m=2)
    assert back == merged
    first = path.read_bytes()
    write_events_jsonl(path, back)
    assert path.read_bytes() == first
