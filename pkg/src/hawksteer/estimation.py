"""Maximum-likelihood fitting of the exponential-kernel dynamics.

The log-likelihood of an event log under baseline ``lam0``, influence
``B`` and decay ``omega`` on a window [t0, tf] is

    sum_i log lam_{d_i}(t_i) - sum_u integral of lam_u over the window,

with the integral in closed form and the per-event intensities built
from an O(1)-per-event decayed-count recursion (evaluated in rescaled
chunks so the exponentials never overflow).  Fitting is projected
gradient ascent with Armijo backtracking onto the nonnegative,
support-constrained parameter set.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .network import Adjacency
from .point import EventSeq

LAM0_FLOOR = 1e-8
_CHUNK_SPAN = 60.0  # max omega * elapsed per rescaled chunk


def decayed_counts(times: np.ndarray, dims: np.ndarray, omega: float, n: int) -> np.ndarray:
    """K[i, v] = sum over earlier events j of dimension v of
    exp(-omega * (t_i - t_j)); the excitation inputs just before each event."""
    E = len(times)
    K = np.zeros((E, n))
    carry = np.zeros(n)   # decayed counts at carry_time, inclusive
    carry_time = times[0] if E else 0.0
    start = 0
    while start < E:
        t_ref = times[start]
        stop = int(np.searchsorted(times, t_ref + _CHUNK_SPAN / omega, side="right"))
        stop = max(stop, start + 1)
        ts = times[start:stop]
        ds = dims[start:stop]
        carry = carry * np.exp(-omega * (t_ref - carry_time))
        up = np.exp(omega * (ts - t_ref))       # bounded by e^span by construction
        down = np.exp(-omega * (ts - t_ref))
        onehot = np.zeros((len(ts), n))
        onehot[np.arange(len(ts)), ds] = up
        csum = np.cumsum(onehot, axis=0)
        prior = np.vstack([np.zeros(n), csum[:-1]])
        K[start:stop] = down[:, None] * (carry[None, :] + prior)
        carry = down[-1] * (carry + csum[-1])
        carry_time = ts[-1]
        start = stop
    return K


def _tail_weights(times: np.ndarray, dims: np.ndarray, omega: float, tf: float, n: int) -> np.ndarray:
    """W[v] = sum over events of dimension v of (1 - exp(-omega (tf - t))) / omega."""
    w = (1.0 - np.exp(-omega * (tf - times))) / omega
    out = np.zeros(n)
    np.add.at(out, dims, w)
    return out


def hawkes_loglik(
    events: EventSeq,
    B,
    lam0,
    omega: float,
    t0: float,
    tf: float,
) -> float:
    """Log-likelihood of the event log; -inf (distinctly) if any observed
    event has zero intensity under the parameters."""
    ll, _, _ = _loglik_impl(events, B, lam0, omega, t0, tf, want_grad=False)
    return ll


def hawkes_loglik_grad(
    events: EventSeq,
    B,
    lam0,
    omega: float,
    t0: float,
    tf: float,
) -> tuple[float, np.ndarray, np.ndarray]:
    """(log-likelihood, dL/dB, dL/dlam0)."""
    return _loglik_impl(events, B, lam0, omega, t0, tf, want_grad=True)


def _loglik_impl(events, B, lam0, omega, t0, tf, want_grad):
    B = np.atleast_2d(np.asarray(B, dtype=float))
    lam0 = np.atleast_1d(np.asarray(lam0, dtype=float))
    n = events.m
    if B.shape != (n, n) or lam0.shape != (n,):
        raise ValueError("parameter dimensions do not match the event log")
    times, dims = events.times, events.dims
    if len(times) and (times[0] < t0 or times[-1] > tf):
        raise ValueError("events outside the window")
    T = tf - t0
    if len(times) == 0:
        ll = -float(lam0.sum() * T)
        if not want_grad:
            return ll, None, None
        return ll, np.zeros((n, n)), np.full(n, -T)

    K = decayed_counts(times, dims, omega, n)
    lam_events = lam0[dims] + np.einsum("ev,ev->e", K, B[dims, :])
    W = _tail_weights(times, dims, omega, tf, n)
    integral = float(lam0.sum() * T + (B @ W).sum())
    if np.any(lam_events <= 0.0):
        ll = -np.inf
    else:
        ll = float(np.log(lam_events).sum() - integral)
    if not want_grad:
        return ll, None, None
    if not np.isfinite(ll):
        raise ValueError("gradient undefined: zero intensity at an observed event")
    inv = 1.0 / lam_events
    dB = np.zeros((n, n))
    np.add.at(dB, dims, K * inv[:, None])
    dB -= W[None, :]
    dlam0 = np.zeros(n)
    np.add.at(dlam0, dims, inv)
    dlam0 -= T
    return ll, dB, dlam0


@dataclass
class FitResult:
    B: np.ndarray
    lam0: np.ndarray
    loglik: float
    objective_path: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False

    def __iter__(self):  # (B, lam0) unpacking
        yield self.B
        yield self.lam0


def fit(
    events: EventSeq,
    omega: float,
    support: Optional[Adjacency] = None,
    init: Optional[tuple[np.ndarray, np.ndarray]] = None,
    max_iters: int = 500,
    tol: float = 1e-6,
    t0: float = 0.0,
    tf: Optional[float] = None,
) -> FitResult:
    """Fit (B, lam0) by projected gradient ascent on the log-likelihood.

    The projection clips B at zero (and at zero outside the support mask
    when a follow graph is given; the mask allows B[v, u] != 0 only where
    u's events can reach v) and floors lam0 at a small positive value.
    Backtracking keeps the objective non-decreasing across accepted
    steps; stops when the projected step shrinks below ``tol``.
    """
    if len(events) == 0:
        raise ValueError("cannot fit an empty event log")
    n = events.m
    if tf is None:
        tf = float(events.times[-1])
    mask = support.influence_mask() if support is not None else np.ones((n, n), bool)
    if support is not None and support.n != n:
        raise ValueError("support dimension mismatch")

    if init is None:
        counts = events.counts().astype(float)
        lam0 = np.maximum(counts / max(tf - t0, 1e-12) * 0.5, LAM0_FLOOR)
        B = np.where(mask, 0.1 * omega / max(n, 1), 0.0)
    else:
        B = np.asarray(init[0], dtype=float).copy()
        lam0 = np.asarray(init[1], dtype=float).copy()
    B = _project_B(B, mask)
    lam0 = np.maximum(lam0, LAM0_FLOOR)

    ll, dB, dlam0 = hawkes_loglik_grad(events, B, lam0, omega, t0, tf)
    if not np.isfinite(ll):
        raise ValueError("objective not finite at the initial point")
    path = [ll]
    step = 1.0 / max(len(events), 1)
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        accepted = False
        for _ in range(60):
            B_new = _project_B(B + step * dB, mask)
            lam0_new = np.maximum(lam0 + step * dlam0, LAM0_FLOOR)
            move = float(np.abs(B_new - B).sum() + np.abs(lam0_new - lam0).sum())
            gain_ref = float(((B_new - B) * dB).sum() + ((lam0_new - lam0) * dlam0).sum())
            ll_new = hawkes_loglik(events, B_new, lam0_new, omega, t0, tf)
            if np.isfinite(ll_new) and ll_new >= ll + 1e-4 * gain_ref - 1e-12:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        B, lam0, ll = B_new, lam0_new, ll_new
        path.append(ll)
        step *= 1.3
        ll, dB, dlam0 = hawkes_loglik_grad(events, B, lam0, omega, t0, tf)
        proj_move = float(
            np.abs(_project_B(B + dB, mask) - B).sum()
            + np.abs(np.maximum(lam0 + dlam0, LAM0_FLOOR) - lam0).sum()
        )
        if move <= tol * (1.0 + np.abs(B).sum() + np.abs(lam0).sum()) or proj_move <= tol:
            converged = True
            break
    return FitResult(B, lam0, ll, path, it, converged)


def _project_B(B: np.ndarray, mask: np.ndarray) -> np.ndarray:
    return np.where(mask, np.maximum(B, 0.0), 0.0)


def select_omega(
    events: EventSeq,
    candidates,
    holdout: float = 0.3,
    support: Optional[Adjacency] = None,
    max_iters: int = 300,
) -> float:
    """Pick the decay rate by chronological train/test splitting.

    Fits (B, lam0) on the first (1 - holdout) fraction of the window for
    each candidate, scores the held-out tail (training history still
    excites across the boundary), and returns the best scorer; ties go
    to the smaller candidate.
    """
    candidates = sorted(float(c) for c in candidates)
    if len(candidates) < 2:
        if not candidates:
            raise ValueError("need at least one candidate")
        return candidates[0]
    if not 0 < holdout < 1:
        raise ValueError("holdout must be in (0, 1)")
    tf = float(events.times[-1])
    t_split = tf * (1.0 - holdout)
    train_mask = events.times <= t_split
    if not train_mask.any() or train_mask.all():
        raise ValueError("degenerate chronological split (one side is empty)")
    train = EventSeq(events.m, events.times[train_mask], events.dims[train_mask],
                     events.origins[train_mask])

    best_omega, best_score = None, -np.inf
    for omega in candidates:
        result = fit(train, omega, support=support, max_iters=max_iters)
        score = _heldout_loglik(events, result.B, result.lam0, omega, t_split, tf)
        if score > best_score + 1e-12:
            best_omega, best_score = omega, score
    return float(best_omega)


def _heldout_loglik(events, B, lam0, omega, t_split, tf):
    """Log-likelihood of the events after t_split under the full history."""
    n = events.m
    K = decayed_counts(events.times, events.dims, omega, n)
    test = events.times > t_split
    lam_events = lam0[events.dims[test]] + np.einsum(
        "ev,ev->e", K[test], B[events.dims[test], :]
    )
    if np.any(lam_events <= 0):
        return -np.inf
    # integral over (t_split, tf]: baseline part plus each event's kernel tail
    w_full = (np.exp(-omega * np.maximum(t_split - events.times, 0.0))
              - np.exp(-omega * (tf - events.times))) / omega
    W = np.zeros(n)
    np.add.at(W, events.dims, w_full)
    integral = float(lam0.sum() * (tf - t_split) + (B @ W).sum())
    return float(np.log(lam_events).sum() - integral)
