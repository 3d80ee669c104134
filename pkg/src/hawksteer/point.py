"""Core point-process machinery.

Event containers, exponential-kernel intensity bookkeeping with O(1)
decay/jump updates, and the generic samplers (Ogata thinning,
superposition, piecewise-constant rates) everything else builds on.

Conventions
-----------
A marked event stream with ``m`` dimensions is a time-ordered sequence
of (time, dim, origin) triples with strictly increasing times; exact
ties are forbidden (they occur with probability zero in the continuous
model, and samplers re-draw on the off chance floating point produces
one).  The intensity vector of the mutually exciting dynamics decays
between events as

    lam(s) = lam0 + exp(-omega * (s - t)) * (lam(t) - lam0)

and jumps by column ``d`` of the influence matrix when an event occurs
in dimension ``d``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

ORGANIC = "organic"
INCENTIVIZED = "incentivized"
_ORIGIN_CODES = {ORGANIC: 0, INCENTIVIZED: 1}
_ORIGIN_NAMES = {0: ORGANIC, 1: INCENTIVIZED}


class Event(NamedTuple):
    time: float
    dim: int
    origin: str = ORGANIC


class ThinningBoundError(RuntimeError):
    """The dominating rate handed to the thinning sampler was exceeded.

    This signals a caller bug (a stale upper bound), not bad luck.
    """


class ExplosionError(RuntimeError):
    """A simulation exceeded its event-count cap (supercritical regime)."""


@dataclass(frozen=True)
class ExpKernel:
    """Exponential decay kernel exp(-omega * t) for t >= 0."""

    omega: float

    def __post_init__(self):
        if not (self.omega > 0):
            raise ValueError(f"omega must be positive, got {self.omega}")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t >= 0, np.exp(-self.omega * t), 0.0)


class EventSeq:
    """Time-ordered marked events of an m-dimensional counting process."""

    __slots__ = ("m", "times", "dims", "origins")

    def __init__(self, m: int, times, dims, origins=None):
        times = np.asarray(times, dtype=float)
        dims = np.asarray(dims, dtype=np.int64)
        if origins is None:
            codes = np.zeros(len(times), dtype=np.int8)
        else:
            codes = np.asarray(
                [_ORIGIN_CODES[o] if isinstance(o, str) else int(o) for o in origins],
                dtype=np.int8,
            )
        if times.ndim != 1 or times.shape != dims.shape or times.shape != codes.shape:
            raise ValueError("times, dims and origins must be 1-d and equally long")
        if len(times) and not np.all(np.isfinite(times)):
            raise ValueError("event times must be finite")
        if len(times) and times[0] < 0:
            raise ValueError("event times must be nonnegative")
        if len(times) > 1 and not np.all(np.diff(times) > 0):
            raise ValueError("event times must be strictly increasing (ties forbidden)")
        if m <= 0:
            raise ValueError("dimension count must be positive")
        if len(dims) and (dims.min() < 0 or dims.max() >= m):
            raise ValueError("event dim out of range")
        self.m = int(m)
        self.times = times
        self.dims = dims
        self.origins = codes

    def __len__(self):
        return len(self.times)

    def __iter__(self):
        for t, d, o in zip(self.times, self.dims, self.origins):
            yield Event(float(t), int(d), _ORIGIN_NAMES[int(o)])

    def __eq__(self, other):
        return (
            isinstance(other, EventSeq)
            and self.m == other.m
            and np.array_equal(self.times, other.times)
            and np.array_equal(self.dims, other.dims)
            and np.array_equal(self.origins, other.origins)
        )

    def counts(self) -> np.ndarray:
        """Events per dimension."""
        return np.bincount(self.dims, minlength=self.m).astype(np.int64)

    def subset(self, origin: str) -> "EventSeq":
        mask = self.origins == _ORIGIN_CODES[origin]
        return EventSeq(self.m, self.times[mask], self.dims[mask], self.origins[mask])

    @staticmethod
    def merge(a: "EventSeq", b: "EventSeq") -> "EventSeq":
        if a.m != b.m:
            raise ValueError("dimension mismatch")
        times = np.concatenate([a.times, b.times])
        order = np.argsort(times, kind="stable")
        return EventSeq(
            a.m,
            times[order],
            np.concatenate([a.dims, b.dims])[order],
            np.concatenate([a.origins, b.origins])[order],
        )


class EventAccumulator:
    """Append-only builder for an EventSeq."""

    def __init__(self, m: int):
        self.m = m
        self.times: list[float] = []
        self.dims: list[int] = []
        self.origins: list[int] = []

    def append(self, t: float, dim: int, origin: str = ORGANIC):
        self.times.append(t)
        self.dims.append(dim)
        self.origins.append(_ORIGIN_CODES[origin])

    def __len__(self):
        return len(self.times)

    def last_time(self) -> float:
        return self.times[-1] if self.times else -np.inf

    def freeze(self) -> EventSeq:
        return EventSeq(self.m, self.times, self.dims, self.origins)


@dataclass
class IntensityState:
    """Current intensity vector plus the parameters that evolve it.

    ``lam`` is the conditional intensity at time ``t``; ``lam0`` the
    constant baseline; ``influence`` the (n, n) jump matrix whose column
    ``d`` is added to ``lam`` when an event fires in dimension ``d``.
    Value semantics: ``decay`` and ``jump`` return fresh states.
    """

    lam: np.ndarray
    lam0: np.ndarray
    omega: float
    influence: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.lam = np.atleast_1d(np.asarray(self.lam, dtype=float)).copy()
        self.lam0 = np.atleast_1d(np.asarray(self.lam0, dtype=float)).copy()
        self.influence = np.atleast_2d(np.asarray(self.influence, dtype=float)).copy()
        n = len(self.lam)
        if self.lam0.shape != (n,) or self.influence.shape != (n, n):
            raise ValueError("inconsistent dimensions")
        if not (self.omega > 0):
            raise ValueError("omega must be positive")
        if np.any(self.lam0 < 0) or np.any(self.influence < 0):
            raise ValueError("baseline and influence must be nonnegative")
        if not np.all(np.isfinite(self.lam)):
            raise ValueError("intensity must be finite")
        if np.any(self.lam < self.lam0 - 1e-12 * np.maximum(1.0, self.lam0)):
            raise ValueError("intensity below baseline")

    @property
    def n(self) -> int:
        return len(self.lam)

    def copy(self) -> "IntensityState":
        return IntensityState(self.lam, self.lam0, self.omega, self.influence, self.t)

    def total(self) -> float:
        return float(self.lam.sum())


def decay(state: IntensityState, t_new: float) -> IntensityState:
    """Advance the intensity to ``t_new`` assuming no events in between.

    Exact closed form; the identity for ``t_new == state.t``.
    """
    if t_new < state.t:
        raise ValueError(f"cannot decay backward: {t_new} < {state.t}")
    out = state.copy()
    if t_new == state.t:
        return out
    factor = np.exp(-state.omega * (t_new - state.t))
    out.lam = state.lam0 + factor * (state.lam - state.lam0)
    out.t = t_new
    return out


def jump(state: IntensityState, dim: int) -> IntensityState:
    """Add influence column ``dim`` to the intensity (an event just fired)."""
    if not 0 <= dim < state.n:
        raise ValueError(f"dim {dim} out of range for n={state.n}")
    out = state.copy()
    out.lam = state.lam + state.influence[:, dim]
    return out


def decayed_lam(state: IntensityState, t_new: float, out: Optional[np.ndarray] = None) -> np.ndarray:
    """Intensity vector at ``t_new >= state.t`` without building a new state."""
    if t_new == state.t:
        return state.lam.copy() if out is None else np.copyto(out, state.lam) or out
    factor = np.exp(-state.omega * (t_new - state.t))
    if out is None:
        return state.lam0 + factor * (state.lam - state.lam0)
    np.subtract(state.lam, state.lam0, out=out)
    out *= factor
    out += state.lam0
    return out


def _decay_inplace(state: IntensityState, t_new: float):
    if t_new == state.t:
        return
    factor = np.exp(-state.omega * (t_new - state.t))
    state.lam -= state.lam0
    state.lam *= factor
    state.lam += state.lam0
    state.t = t_new


def _jump_inplace(state: IntensityState, dim: int):
    state.lam += state.influence[:, dim]


def superpose(candidates: Sequence[tuple]) -> Optional[tuple]:
    """Next event of a superposed process: the earliest candidate.

    ``candidates`` is a sequence of (source_id, time-or-None); returns the
    (source_id, time) with minimal time, or None if no candidate has one.
    Ties resolve to the earliest-listed source, deterministically.
    """
    best = None
    for source, t in candidates:
        if t is None:
            continue
        if best is None or t < best[1]:
            best = (source, t)
    return best


def sample_thinning(
    intensity_fn: Callable[[float], float],
    bound_fn: Callable[[float], tuple],
    t_start: float,
    t_end: float,
    rng: np.random.Generator,
) -> Optional[float]:
    """First event time of an inhomogeneous Poisson process on (t_start, t_end].

    ``bound_fn(t)`` returns ``(bound, valid_until)``: a constant dominating
    rate for the intensity on ``(t, valid_until]``.  Raises
    :class:`ThinningBoundError` if the intensity exceeds its declared bound
    at a proposed point (a stale bound is a caller bug, not randomness).
    """
    t = t_start
    while t < t_end:
        bound, valid_until = bound_fn(t)
        valid_until = min(valid_until, t_end)
        if bound < 0:
            raise ValueError("bound must be nonnegative")
        if bound == 0.0:
            if valid_until <= t:
                raise ValueError("bound_fn made no progress")
            t = valid_until
            continue
        gap = rng.exponential() / bound
        t_prop = t + gap
        if t_prop > valid_until:
            t = valid_until
            continue
        lam = intensity_fn(t_prop)
        if lam > bound * (1.0 + 1e-9):
            raise ThinningBoundError(
                f"intensity {lam} exceeds declared bound {bound} at t={t_prop}"
            )
        if rng.random() * bound <= lam:
            return t_prop
        t = t_prop
    return None


@dataclass(frozen=True)
class PiecewiseConstantRate:
    """A nonnegative piecewise-constant rate, optionally period-repeating.

    ``edges`` has length ``len(values) + 1`` and spans one period when
    ``repeat`` is set, in which case the function tiles indefinitely.
    """

    edges: np.ndarray
    values: np.ndarray
    repeat: bool = False

    def __init__(self, edges, values, repeat: bool = False):
        edges = np.asarray(edges, dtype=float)
        values = np.asarray(values, dtype=float)
        if len(edges) != len(values) + 1 or np.any(np.diff(edges) <= 0):
            raise ValueError("edges must be increasing and one longer than values")
        if np.any(values < 0):
            raise ValueError("rates must be nonnegative")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "repeat", bool(repeat))

    @property
    def period(self) -> float:
        return float(self.edges[-1] - self.edges[0])

    def _fold(self, t: float) -> float:
        if not self.repeat:
            return t
        return self.edges[0] + (t - self.edges[0]) % self.period

    def value(self, t: float) -> float:
        tau = self._fold(t)
        idx = np.searchsorted(self.edges, tau, side="right") - 1
        idx = min(max(idx, 0), len(self.values) - 1)
        return float(self.values[idx])

    def next_change(self, t: float) -> float:
        """First breakpoint strictly after ``t`` (inf when none remain)."""
        tau = self._fold(t)
        idx = np.searchsorted(self.edges, tau, side="right")
        if idx >= len(self.edges):
            return np.inf if not self.repeat else t + (self.edges[-1] - tau) + 0.0
        return t + (self.edges[idx] - tau)


def sample_piecewise_poisson(
    rate: PiecewiseConstantRate,
    t_start: float,
    t_end: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """All event times of a Poisson process with a piecewise-constant rate."""
    times: list[float] = []
    t = t_start
    while t < t_end:
        nxt = min(rate.next_change(t), t_end)
        lam = rate.value(0.5 * (t + nxt))
        if lam > 0:
            count = rng.poisson(lam * (nxt - t))
            if count:
                times.extend(np.sort(rng.uniform(t, nxt, size=count)).tolist())
        t = nxt
    out = np.array(times, dtype=float)
    # exact ties have probability zero; drop the duplicate rather than bias
    if len(out) > 1:
        keep = np.concatenate([[True], np.diff(out) > 0])
        out = out[keep]
    return out
