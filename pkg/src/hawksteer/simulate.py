"""Event-driven simulation of the mutually exciting dynamics, with or
without an incentive policy.

One global clock: at each step the next organic arrival (Ogata thinning
with the current total intensity as its dominating rate) races the
policy's next incentivized action; the earlier one fires, the intensity
takes the corresponding influence-column jump, and both candidates are
redrawn from the new state.  Redrawing after every jump is exact because
the intensity evolves deterministically between jumps.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .network import Influence, spectral_radius
from .point import (
    INCENTIVIZED,
    ORGANIC,
    EventAccumulator,
    EventSeq,
    ExplosionError,
    IntensityState,
)

DEFAULT_EVENT_CAP = 10_000_000


@dataclass
class SimTrace:
    """Optional per-event intensity recording for diagnostics/tests."""

    times: list = field(default_factory=list)
    lams: list = field(default_factory=list)

    def record(self, t: float, lam: np.ndarray):
        self.times.append(t)
        self.lams.append(lam.copy())


def _as_influence_matrix(B, n_hint: Optional[int] = None) -> np.ndarray:
    if isinstance(B, Influence):
        return B.weights
    mat = np.atleast_2d(np.asarray(B, dtype=float))
    if mat.shape == (1, 1) and n_hint and n_hint > 1:
        raise ValueError("scalar influence given for a multidimensional system")
    return mat


def _check_stability(B: np.ndarray, omega: float, warn: bool) -> float:
    rho = spectral_radius(B) / omega
    if warn and rho >= 1.0:
        warnings.warn(
            f"explosive regime: spectral radius of influence/omega is {rho:.3f} >= 1",
            RuntimeWarning,
        )
    return rho


def _first_organic(state: IntensityState, t: float, t_end: float,
                   rng: np.random.Generator) -> Optional[tuple[int, float]]:
    """First organic arrival after t under frozen (no-jump) evolution.

    Thinning with the running total intensity as its dominating rate; the
    total decays between events (the intensity never drops below its
    baseline), so the bound refreshed at each proposal stays valid.
    """
    lam0_tot = float(state.lam0.sum())
    base = state.lam - state.lam0
    base_tot = float(base.sum())
    t_ref = state.t
    t_cur = max(t, t_ref)
    tot_cur = lam0_tot + base_tot * np.exp(-state.omega * (t_cur - t_ref))
    n = state.n
    while True:
        if tot_cur <= 0.0:
            return None
        t_prop = t_cur + rng.exponential() / tot_cur
        if t_prop > t_end:
            return None
        tot_prop = lam0_tot + base_tot * np.exp(-state.omega * (t_prop - t_ref))
        if rng.random() * tot_cur <= tot_prop:
            if n == 1:
                return 0, float(t_prop)
            lam_prop = state.lam0 + base * np.exp(-state.omega * (t_prop - t_ref))
            pick = rng.random() * lam_prop.sum()
            dim = int(np.searchsorted(np.cumsum(lam_prop), pick))
            return min(dim, n - 1), float(t_prop)
        t_cur, tot_cur = t_prop, tot_prop


def simulate_controlled(
    B,
    lam0,
    omega: float,
    policy,
    t0: float,
    tf: float,
    rng: np.random.Generator,
    event_cap: int = DEFAULT_EVENT_CAP,
    trace: Optional[SimTrace] = None,
    warn_explosive: bool = True,
) -> tuple[EventSeq, EventSeq]:
    """Joint simulation of organic dynamics plus an incentive policy.

    ``policy`` exposes ``next_event(state, t, t_end, rng) -> (dim, time)
    or None``, sampling its first action assuming no jumps after ``t``;
    ``policy=None`` reproduces the uncontrolled dynamics draw for draw.
    Every event of either origin adds the influence column of its
    dimension to the intensity.  Raises :class:`ExplosionError` when the
    event cap is hit.
    """
    B = _as_influence_matrix(B)
    lam0 = np.atleast_1d(np.asarray(lam0, dtype=float))
    _check_stability(B, omega, warn_explosive)
    state = IntensityState(lam0.copy(), lam0, omega, B, t0)
    organic = EventAccumulator(state.n)
    incentivized = EventAccumulator(state.n)
    notify = getattr(policy, "notify", None)
    if policy is not None and hasattr(policy, "reset"):
        policy.reset()
    t = t0
    while True:
        org = _first_organic(state, t, tf, rng)
        inc = None
        if policy is not None:
            horizon = tf if org is None else org[1]
            inc = policy.next_event(state, t, horizon, rng)
        if inc is not None:
            dim, when, seq, origin = inc[0], inc[1], incentivized, INCENTIVIZED
        elif org is not None:
            dim, when, seq, origin = org[0], org[1], organic, ORGANIC
        else:
            break
        if when <= max(organic.last_time(), incentivized.last_time()):
            continue  # exact tie (probability zero): redraw both candidates
        state.t, state.lam = when, (
            state.lam0 + np.exp(-omega * (when - state.t)) * (state.lam - state.lam0)
        )
        if trace is not None:
            trace.record(when, state.lam)
        state.lam += B[:, dim]
        seq.append(when, dim, origin)
        if notify is not None:
            notify(state, dim, when)
        t = when
        if len(organic) + len(incentivized) > event_cap:
            raise ExplosionError(
                f"event cap {event_cap} exceeded at t={when:.6g} "
                f"({len(organic)} organic, {len(incentivized)} incentivized); "
                "the regime is likely supercritical"
            )
    return organic.freeze(), incentivized.freeze()


def simulate_uncontrolled(
    B,
    lam0,
    omega: float,
    t0: float,
    tf: float,
    rng: np.random.Generator,
    event_cap: int = DEFAULT_EVENT_CAP,
    trace: Optional[SimTrace] = None,
    warn_explosive: bool = True,
) -> EventSeq:
    """Organic dynamics alone (identical in law and in draws to the
    controlled simulator with no policy)."""
    organic, _ = simulate_controlled(
        B, lam0, omega, None, t0, tf, rng,
        event_cap=event_cap, trace=trace, warn_explosive=warn_explosive,
    )
    return organic


def replay_intensity(seq: EventSeq, B, lam0, omega: float, t0: float) -> list[np.ndarray]:
    """Intensity vector at each event time (after decay, before the jump),
    reconstructed by replaying the sequence through the closed-form
    decay/jump updates."""
    B = _as_influence_matrix(B)
    lam0 = np.atleast_1d(np.asarray(lam0, dtype=float))
    lam = lam0.copy()
    t = t0
    out = []
    for when, dim in zip(seq.times, seq.dims):
        lam = lam0 + np.exp(-omega * (when - t)) * (lam - lam0)
        out.append(lam.copy())
        lam = lam + B[:, dim]
        t = when
    return out
