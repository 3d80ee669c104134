"""Network-level activity steering.

Backward integration of the coupled matrix-Riccati / linear ODE system
that prices network activity, the affine feedback law mapping the
current intensity to incentive rates, an exact sampler for the resulting
doubly stochastic incentive process, and the centrality-based allocation
baselines it is compared against.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .network import Adjacency, centrality
from .point import IntensityState, decayed_lam

_CLAMP_EPS_REL = 1e-9


class RiccatiEscapeError(RuntimeError):
    """The Riccati flow blew up in finite time during backward integration."""

    def __init__(self, escape_time: float):
        super().__init__(
            f"Riccati solution escaped to infinity near t = {escape_time:.6g}; "
            "weaken Q/F or shorten the horizon"
        )
        self.escape_time = escape_time


@dataclass(frozen=True)
class ControlWeights:
    """Diagonal weights: activity reward Q >= 0, incentive cost S > 0,
    terminal reward F >= 0 (stored as their diagonals)."""

    q: np.ndarray
    s: np.ndarray
    f: np.ndarray

    def __init__(self, q, s, f):
        q = np.atleast_1d(np.asarray(q, dtype=float))
        s = np.atleast_1d(np.asarray(s, dtype=float))
        f = np.atleast_1d(np.asarray(f, dtype=float))
        if not (len(q) == len(s) == len(f)):
            raise ValueError("weight diagonals must share a length")
        if np.any(q < 0) or np.any(f < 0):
            raise ValueError("Q and F diagonals must be nonnegative")
        if np.any(s <= 0):
            raise ValueError("S diagonal must be strictly positive (it is inverted)")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "f", f)

    @classmethod
    def uniform(cls, n: int, q: float, s: float, f: float) -> "ControlWeights":
        return cls(np.full(n, q), np.full(n, s), np.full(n, f))

    @property
    def n(self) -> int:
        return len(self.q)

    def scale_s(self, factor: float) -> "ControlWeights":
        return ControlWeights(self.q, self.s * factor, self.f)


@dataclass
class ClampStats:
    """Counts of feedback-law evaluations and of entries that came out
    meaningfully negative before clamping (they should not, up to
    numerics).

    An entry counts as a violation when it falls below -1e-9 times the
    evaluation's median rate; harmless rounding noise around zero does
    not register.
    """

    evaluations: int = 0
    clamped: int = 0
    worst: float = 0.0

    def rate(self) -> float:
        return self.clamped / self.evaluations if self.evaluations else 0.0

    def merge(self, other: "ClampStats"):
        self.evaluations += other.evaluations
        self.clamped += other.clamped
        self.worst = min(self.worst, other.worst)

    def record(self, u: np.ndarray, low: float):
        threshold = -_CLAMP_EPS_REL * max(float(np.median(u)), 1e-300)
        if low < threshold:
            self.clamped += int((u < threshold).sum())
            self.worst = min(self.worst, low)


class RiccatiSolution:
    """Backward ODE solution on a stored time grid with linear
    interpolation between knots.

    ``H[k]`` is the symmetric value-curvature matrix and ``g[k]`` the
    value-slope vector at ``grid[k]``; the terminal knot holds
    ``H = -diag(F)`` and ``g = 0`` exactly.  The dynamics and weights the
    system was solved for ride along for the sampler's benefit.
    """

    def __init__(self, grid, H, g, B, omega, weights: ControlWeights, lam0):
        self.grid = np.asarray(grid, dtype=float)
        self.H = np.asarray(H, dtype=float)
        self.g = np.asarray(g, dtype=float)
        self.B = np.asarray(B, dtype=float)
        self.omega = float(omega)
        self.weights = weights
        self.lam0 = np.asarray(lam0, dtype=float)
        if self.H.shape[0] != len(self.grid) or self.g.shape[0] != len(self.grid):
            raise ValueError("one H and g per grid point required")
        # affine pieces of the feedback law at every knot:
        #   u(t) = a(t) + c(t) - S^-1 B^T H(t) lam
        s_inv = 1.0 / weights.s
        self.a = -(self.g @ self.B) * s_inv  # (K, n): -S^-1 B^T g
        HB = np.einsum("kij,jl->kil", self.H, self.B)
        self.c = -0.5 * np.einsum("ji,kji->ki", self.B, HB) * s_inv
        self._ac = self.a + self.c
        self._s_inv = s_inv
        self._BtH: Optional[np.ndarray] = None
        self._BtHB: Optional[np.ndarray] = None
        self._baseline_key: Optional[int] = None
        self._baseline_pB: dict = {}

    def _bth(self) -> np.ndarray:
        """B^T H at every knot, built lazily for the sampler (doubles the
        solution's memory, so only samplers pay for it)."""
        if self._BtH is None:
            self._BtH = self.B.T @ self.H
        return self._BtH

    def _bthb(self) -> np.ndarray:
        """B^T H B at every knot; column d is the excitation-term jump the
        sampler's cached vectors take when an event fires in dimension d."""
        if self._BtHB is None:
            self._BtHB = self._bth() @ self.B
        return self._BtHB

    def _pB(self, k: int, lam0: np.ndarray) -> np.ndarray:
        """Cached B^T H_k lam0 for the sampler's per-cell decomposition.

        Keyed on the identity of the baseline array; the simulators keep
        one baseline object per run, so this amortizes to one
        matrix-vector product per visited knot.
        """
        key = id(lam0)
        if key != self._baseline_key:
            self._baseline_key = key
            self._baseline_pB = {}
        hit = self._baseline_pB.get(k)
        if hit is None:
            hit = self._bth()[k] @ lam0
            self._baseline_pB[k] = hit
        return hit

    @property
    def n(self) -> int:
        return self.H.shape[1]

    @property
    def t0(self) -> float:
        return float(self.grid[0])

    @property
    def tf(self) -> float:
        return float(self.grid[-1])

    def locate(self, t: float) -> tuple[int, float]:
        """Knot index k and weight w with t = (1-w)*grid[k] + w*grid[k+1]."""
        span = self.tf - self.t0
        if t < self.t0 - 1e-9 * span or t > self.tf + 1e-9 * span:
            raise ValueError(f"t={t} outside the solved grid [{self.t0}, {self.tf}]")
        t = min(max(t, self.t0), self.tf)
        k = int(np.searchsorted(self.grid, t, side="right") - 1)
        k = min(max(k, 0), len(self.grid) - 2)
        w = (t - self.grid[k]) / (self.grid[k + 1] - self.grid[k])
        return k, float(w)

    def H_at(self, t: float) -> np.ndarray:
        k, w = self.locate(t)
        return (1 - w) * self.H[k] + w * self.H[k + 1]

    def g_at(self, t: float) -> np.ndarray:
        k, w = self.locate(t)
        return (1 - w) * self.g[k] + w * self.g[k + 1]


def _riccati_rhs(H, g, M, R, B, omega, q_diag, lam0, s_inv):
    """Time derivatives of (H, g); M = omega*I - B, R = B S^-1 B^T."""
    T1 = M.T @ H
    HR = H @ R
    HB = H @ B
    dH = T1 + T1.T + HR @ H
    dH[np.diag_indices_from(dH)] += q_diag
    diag_BtHB = np.einsum("ji,ji->i", B, HB)
    dg = (omega * g - B.T @ g + HR @ g
          - omega * (H @ lam0)
          + 0.5 * ((HB * s_inv) @ diag_BtHB - diag_BtHB))
    return dH, dg


def solve_riccati(
    B,
    omega: float,
    weights: ControlWeights,
    lam0,
    t0: float,
    tf: float,
    steps: int = 1000,
    store_every: int = 1,
    escape_norm: float = 1e12,
) -> RiccatiSolution:
    """Integrate the value ODEs backward from the terminal conditions
    H(tf) = -diag(F), g(tf) = 0 with the classical fixed-step 4th-order
    scheme, symmetrizing H after every step.

    Raises :class:`RiccatiEscapeError` if the flow blows up before t0.
    """
    B = np.atleast_2d(np.asarray(B, dtype=float))
    lam0 = np.atleast_1d(np.asarray(lam0, dtype=float))
    n = B.shape[0]
    if weights.n != n or len(lam0) != n:
        raise ValueError("dimension mismatch")
    if steps < 2:
        raise ValueError("steps must be >= 2")
    if tf <= t0:
        raise ValueError("tf must exceed t0")
    if steps % store_every != 0:
        raise ValueError("store_every must divide steps (uniform stored grid)")
    s_inv = 1.0 / weights.s
    M = omega * np.eye(n) - B
    R = (B * s_inv) @ B.T
    h = (tf - t0) / steps

    H = -np.diag(weights.f)
    g = np.zeros(n)
    stored_t = [tf]
    stored_H = [H.copy()]
    stored_g = [g.copy()]

    def rhs(Hc, gc):
        return _riccati_rhs(Hc, gc, M, R, B, omega, weights.q, lam0, s_inv)

    t = tf
    for step in range(steps):
        k1H, k1g = rhs(H, g)
        k2H, k2g = rhs(H - 0.5 * h * k1H, g - 0.5 * h * k1g)
        k3H, k3g = rhs(H - 0.5 * h * k2H, g - 0.5 * h * k2g)
        k4H, k4g = rhs(H - h * k3H, g - h * k3g)
        H = H - (h / 6.0) * (k1H + 2 * k2H + 2 * k3H + k4H)
        g = g - (h / 6.0) * (k1g + 2 * k2g + 2 * k3g + k4g)
        H = 0.5 * (H + H.T)
        t = tf - (step + 1) * h
        if not np.isfinite(H).all() or np.abs(H).max() > escape_norm:
            raise RiccatiEscapeError(t)
        if (step + 1) % store_every == 0 or step == steps - 1:
            stored_t.append(t)
            stored_H.append(H.copy())
            stored_g.append(g.copy())

    order = np.argsort(stored_t)
    grid = np.array(stored_t)[order]
    grid[0] = t0  # exact endpoint (kill accumulated h roundoff)
    return RiccatiSolution(
        grid,
        np.array(stored_H)[order],
        np.array(stored_g)[order],
        B,
        omega,
        weights,
        lam0,
    )


def solve_riccati_checked(
    B, omega, weights, lam0, t0, tf,
    steps: int = 1000,
    residual_tol: float = 1e-4,
    max_steps: int = 64000,
    store_every: int = 1,
) -> RiccatiSolution:
    """Solve and double the grid until the midpoint residual meets the
    tolerance."""
    while True:
        sol = solve_riccati(B, omega, weights, lam0, t0, tf,
                            steps=steps, store_every=store_every)
        res_H, res_g = riccati_residual(sol)
        if max(res_H, res_g) <= residual_tol or steps >= max_steps:
            if max(res_H, res_g) > residual_tol:
                warnings.warn(
                    f"Riccati residual {max(res_H, res_g):.2e} above tolerance "
                    f"{residual_tol:.2e} at the step cap"
                )
            return sol
        steps *= 2


def riccati_residual(sol: RiccatiSolution) -> tuple[float, float]:
    """Max-abs defect of both ODEs at interpolated grid midpoints.

    Uses fourth-order midpoint stencils (derivative and value) over
    consecutive knot quadruples, so for a smooth solution the defect
    scales like the integrator's own h^4 global error.
    """
    grid, H, g = sol.grid, sol.H, sol.g
    K = len(grid)
    if K < 4:
        raise ValueError("need at least 4 grid points for the residual check")
    hs = np.diff(grid)
    if not np.allclose(hs, hs[0], rtol=1e-8):
        raise ValueError("residual check requires a uniform grid")
    h = hs[0]
    s_inv = 1.0 / sol.weights.s
    M = sol.omega * np.eye(sol.n) - sol.B
    R = (sol.B * s_inv) @ sol.B.T
    worst_H = 0.0
    worst_g = 0.0
    for k in range(1, K - 2):
        mid_t = 0.5 * (grid[k] + grid[k + 1])
        dH = (H[k - 1] - 27 * H[k] + 27 * H[k + 1] - H[k + 2]) / (24 * h)
        dg = (g[k - 1] - 27 * g[k] + 27 * g[k + 1] - g[k + 2]) / (24 * h)
        Hm = (-H[k - 1] + 9 * H[k] + 9 * H[k + 1] - H[k + 2]) / 16
        gm = (-g[k - 1] + 9 * g[k] + 9 * g[k + 1] - g[k + 2]) / 16
        fH, fg = _riccati_rhs(Hm, gm, M, R, sol.B, sol.omega,
                              sol.weights.q, sol.lam0, s_inv)
        worst_H = max(worst_H, float(np.abs(dH - fH).max()))
        worst_g = max(worst_g, float(np.abs(dg - fg).max()))
    return worst_H, worst_g


def control_intensity(
    lam,
    t: float,
    sol: RiccatiSolution,
    B=None,
    S=None,
    stats: Optional[ClampStats] = None,
) -> np.ndarray:
    """The affine feedback law, clamped at zero from below.

    In exact arithmetic the law is nonnegative wherever the dynamics can
    reach; numerically negative entries are clamped, and entries below
    -1e-9 times the result's scale are counted in ``stats`` as genuine
    violations (a sign the grid needs refining).
    """
    lam = np.asarray(lam, dtype=float)
    B = sol.B if B is None else np.asarray(B, dtype=float)
    s_diag = sol.weights.s if S is None else np.atleast_1d(np.asarray(S, dtype=float))
    k, w = sol.locate(t)
    H = (1 - w) * sol.H[k] + w * sol.H[k + 1]
    g = (1 - w) * sol.g[k] + w * sol.g[k + 1]
    bracket = B.T @ g + B.T @ (H @ lam) + 0.5 * np.einsum("ji,ji->i", B, H @ B)
    u = -bracket / s_diag
    if stats is not None:
        stats.evaluations += len(u)
        low = float(u.min())
        if low < 0.0:
            stats.record(u, low)
    return np.maximum(u, 0.0)


def next_incentivized(
    lam_state: IntensityState,
    sol: RiccatiSolution,
    organic_feed: Optional[Callable[[float], Optional[tuple[int, float]]]],
    t: float,
    rng: np.random.Generator,
    t_end: Optional[float] = None,
    stats: Optional[ClampStats] = None,
    on_organic: Optional[Callable[[int, float], None]] = None,
) -> Optional[tuple[int, float]]:
    """Sample (user, time) of the next incentivized action under the
    feedback law, interleaving organic arrivals.

    ``organic_feed(t)`` returns the next organic (dim, time) after ``t``
    given the current ``lam_state`` (or None).  Organic arrivals that
    precede the incentive candidate are committed: ``lam_state`` takes
    their jump, ``on_organic`` is told, and the candidate is re-drawn
    from the shifted intensity (restarting is exact by memorylessness).
    The returned action is NOT applied to ``lam_state``; the caller adds
    its jump, after which subsequent calls see the shifted intensity.
    """
    if t_end is None:
        t_end = sol.tf
    while True:
        org = organic_feed(t) if organic_feed is not None else None
        # the race only needs to know whether the control fires first, so
        # its candidate search can stop at the organic arrival
        horizon = t_end if org is None else min(t_end, org[1])
        cand = _sample_control_candidate(lam_state, sol, t, horizon, rng, stats)
        if cand is not None:
            return cand
        if org is None or org[1] >= t_end:
            return None
        dim, when = org
        factor = np.exp(-lam_state.omega * (when - lam_state.t))
        lam_state.lam = lam_state.lam0 + factor * (lam_state.lam - lam_state.lam0)
        lam_state.lam += lam_state.influence[:, dim]
        lam_state.t = when
        if on_organic is not None:
            on_organic(dim, when)
        t = when


def _sample_control_candidate(
    lam_state: IntensityState,
    sol: RiccatiSolution,
    t: float,
    t_end: float,
    rng: np.random.Generator,
    stats: Optional[ClampStats] = None,
    q_seed: Optional[tuple[int, np.ndarray, np.ndarray]] = None,
) -> Optional[tuple[int, float]]:
    """First event of the feedback-law intensity on (t, t_end], assuming
    no further jumps; thinning against certified per-cell bounds.

    Within grid cell k the unclamped law is bilinear in the interpolation
    weight w and the decay factor e = exp(-omega (s - cell entry)):

        u(s) = a(w) + c(w) - S^-1 [(1-w)(p_k + e q_k) + w(p_k1 + e q_k1)]

    with p = B^T H lam0 (cached per knot) and q = B^T H (lam - lam0) at
    the cell entry (two matrix-vector products per visited cell, reused
    across the walk).  Corner evaluation of the bilinear box certifies a
    dominating rate, so every proposal costs O(n).
    """
    t_end = min(t_end, sol.tf)
    t_cur = max(t, sol.t0)
    if t_cur >= t_end:
        return None
    grid = sol.grid
    lam0 = lam_state.lam0
    omega = lam_state.omega
    s_inv = sol._s_inv
    d = decayed_lam(lam_state, t_cur) - lam0
    k = int(np.searchsorted(grid, t_cur, side="right") - 1)
    k = min(max(k, 0), len(grid) - 2)
    bth = sol._bth()
    if q_seed is not None and q_seed[0] == k:
        q_lo, q_hi = q_seed[1], q_seed[2]
    else:
        q_lo = bth[k] @ d
        q_hi = bth[k + 1] @ d
    ac = sol._ac
    exp = np.exp
    while True:
        cell_end = min(grid[k + 1], t_end)
        span = grid[k + 1] - grid[k]
        w_lo = (t_cur - grid[k]) / span
        w_hi = (cell_end - grid[k]) / span
        e_lo = exp(-omega * (cell_end - t_cur))
        p_lo = sol._pB(k, lam0)
        dp = sol._pB(k + 1, lam0) - p_lo
        dq = q_hi - q_lo
        dac = ac[k + 1] - ac[k]
        # v(w, e) = p(w) + e q(w) is bilinear on the (w, e) box, so its
        # entrywise minimum sits at a corner; for each w endpoint the
        # minimizing e follows from q(w)'s sign
        v_min = None
        for wc in (w_lo, w_hi):
            qw = q_lo + wc * dq
            v = p_lo + wc * dp + np.where(qw > 0, e_lo * qw, qw)
            v_min = v if v_min is None else np.minimum(v_min, v)
        affine_max = np.maximum(ac[k] + w_lo * dac, ac[k] + w_hi * dac)
        bound_vec = affine_max - v_min * s_inv
        np.maximum(bound_vec, 0.0, out=bound_vec)
        total_bound = float(bound_vec.sum()) * (1.0 + 1e-12)
        anchor = t_cur
        if total_bound > 0.0:
            t_prop = anchor
            while True:
                t_prop = t_prop + rng.exponential() / total_bound
                if t_prop > cell_end:
                    break
                w = (t_prop - grid[k]) / span
                e = exp(-omega * (t_prop - anchor))
                u = (ac[k] + w * dac
                     - (p_lo + w * dp + e * (q_lo + w * dq)) * s_inv)
                if stats is not None:
                    stats.evaluations += len(u)
                    low = float(u.min())
                    if low < 0.0:
                        stats.record(u, low)
                        np.maximum(u, 0.0, out=u)
                else:
                    np.maximum(u, 0.0, out=u)
                total_u = float(u.sum())
                if total_u > total_bound * (1.0 + 1e-9):
                    from .point import ThinningBoundError

                    raise ThinningBoundError(
                        f"control intensity {total_u} exceeds cell bound {total_bound}"
                    )
                if rng.random() * total_bound <= total_u:
                    pick = rng.random() * total_u
                    dim = int(np.searchsorted(np.cumsum(u), pick))
                    return min(dim, len(u) - 1), float(t_prop)
        if cell_end >= t_end:
            return None
        # advance to the next cell: the excitation has decayed by e_lo
        q_lo = e_lo * q_hi
        d = d * e_lo
        k += 1
        q_hi = bth[k + 1] @ d
        t_cur = cell_end


class CheshirePolicy:
    """Feedback-law incentive policy for the controlled simulator.

    Keeps the candidate sampler's per-cell excitation vectors incrementally
    up to date across events (``notify``), so steady-state simulation costs
    O(n) per event instead of two matrix-vector products; the vectors are
    rebuilt from scratch periodically and whenever the cache cannot apply.
    """

    _REFRESH = 2048

    def __init__(self, sol: RiccatiSolution, stats: Optional[ClampStats] = None):
        self.sol = sol
        self.stats = stats if stats is not None else ClampStats()
        self._cache = None

    def reset(self):
        """Forget run-local state (the simulator calls this per run)."""
        self._cache = None

    def next_event(self, lam_state, t, t_end, rng):
        seed = None
        c = self._cache
        if c is not None and c["t"] == t and c["lam0_id"] == id(lam_state.lam0):
            seed = (c["k"], c["q_lo"], c["q_hi"])
        return _sample_control_candidate(
            lam_state, self.sol, t, min(t_end, self.sol.tf), rng, self.stats,
            q_seed=seed,
        )

    def notify(self, lam_state, dim, when):
        """An event of dimension ``dim`` was committed at ``when``;
        ``lam_state`` already carries its jump."""
        sol = self.sol
        grid = sol.grid
        if when >= sol.tf:
            self._cache = None
            return
        k = int(np.searchsorted(grid, when, side="right") - 1)
        k = min(max(k, 0), len(grid) - 2)
        c = self._cache
        if (c is not None and c["k"] == k and c["count"] < self._REFRESH
                and c["lam0_id"] == id(lam_state.lam0)):
            e = np.exp(-lam_state.omega * (when - c["t"]))
            bthb = sol._bthb()
            q_lo = e * c["q_lo"] + bthb[k][:, dim]
            q_hi = e * c["q_hi"] + bthb[k + 1][:, dim]
            count = c["count"] + 1
        else:
            bth = sol._bth()
            d = lam_state.lam - lam_state.lam0
            q_lo = bth[k] @ d
            q_hi = bth[k + 1] @ d
            count = 0
        self._cache = {"t": when, "k": k, "q_lo": q_lo, "q_hi": q_hi,
                       "count": count, "lam0_id": id(lam_state.lam0)}


class ConstantPolicy:
    """Fixed incentive rates (the PRK / DEG / UNC baselines)."""

    def __init__(self, rates):
        self.rates = np.atleast_1d(np.asarray(rates, dtype=float))
        if np.any(self.rates < 0):
            raise ValueError("rates must be nonnegative")
        self.total = float(self.rates.sum())
        self._cum = np.cumsum(self.rates)

    def next_event(self, lam_state, t, t_end, rng):
        if self.total <= 0:
            return None
        when = t + rng.exponential() / self.total
        if when > t_end:
            return None
        dim = int(np.searchsorted(self._cum, rng.random() * self.total))
        return min(dim, len(self.rates) - 1), float(when)


def baseline_allocation(
    kind: str,
    adjacency: Adjacency,
    budget_rate: float,
    damping: float = 0.85,
) -> np.ndarray:
    """Constant incentive rates summing to ``budget_rate``.

    PRK splits the budget by PageRank, DEG by follower count (falling
    back to uniform, with a warning, on a graph with no edges), and UNC
    is all zeros (the uncontrolled reference).
    """
    if budget_rate < 0:
        raise ValueError("budget_rate must be nonnegative")
    n = adjacency.n
    kind = kind.upper()
    if kind == "UNC":
        return np.zeros(n)
    if kind == "PRK":
        scores = centrality(adjacency, "pagerank", damping=damping)
    elif kind == "DEG":
        scores = centrality(adjacency, "out_degree")
        if scores.sum() == 0:
            warnings.warn("graph has no edges; DEG falls back to uniform")
            scores = np.ones(n)
    else:
        raise ValueError(f"unknown baseline kind: {kind}")
    return budget_rate * scores / scores.sum()


def tune_budget(
    weights: ControlWeights,
    target_incentivized: int,
    tolerance: float,
    run_fn: Callable[[ControlWeights, np.random.Generator], int],
    rng: np.random.Generator,
    runs_per_probe: int = 10,
    scale_range: tuple[float, float] = (1e-10, 1e10),
    max_probes: int = 60,
) -> ControlWeights:
    """Scale S by binary search until the mean incentivized count over
    ``runs_per_probe`` simulations lands within tolerance of the target.

    ``run_fn(weights, rng)`` must run one replica and return its
    incentivized-action count; the mean count is non-increasing in the
    S scale.  Raises RuntimeError if no bracket exists in scale_range.
    """
    if target_incentivized < 1:
        raise ValueError("target_incentivized must be >= 1")
    probes = 0

    def mean_count(scale: float) -> float:
        nonlocal probes
        probes += 1
        scaled = weights.scale_s(scale)
        counts = [run_fn(scaled, child) for child in rng.spawn(runs_per_probe)]
        return float(np.mean(counts))

    lo_scale, hi_scale = 1.0, 1.0  # lo: count >= target, hi: count <= target
    c = mean_count(1.0)
    if c > target_incentivized:
        while mean_count(hi_scale * 16) > target_incentivized:
            hi_scale *= 16
            if hi_scale > scale_range[1] or probes > max_probes:
                raise RuntimeError("failed to bracket the incentive budget (above)")
        lo_scale, hi_scale = hi_scale, hi_scale * 16
    elif c < target_incentivized:
        while mean_count(lo_scale / 16) < target_incentivized:
            lo_scale /= 16
            if lo_scale < scale_range[0] or probes > max_probes:
                raise RuntimeError("failed to bracket the incentive budget (below)")
        lo_scale, hi_scale = lo_scale / 16, lo_scale
    else:
        return weights

    best, best_err = weights, np.inf
    while probes < max_probes:
        mid = np.sqrt(lo_scale * hi_scale)
        c = mean_count(mid)
        err = abs(c - target_incentivized)
        if err < best_err:
            best, best_err = weights.scale_s(mid), err
        if err <= tolerance * target_incentivized:
            return weights.scale_s(mid)
        if c > target_incentivized:
            lo_scale = mid
        else:
            hi_scale = mid
    if best_err <= tolerance * target_incentivized:
        return best
    raise RuntimeError(
        f"budget search did not converge: best |mean - target| = {best_err:.1f}"
    )
