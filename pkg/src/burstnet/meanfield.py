"""Deterministic hybrid limit: cyclic flow, boundary hitting, burst jump map.

Between bursts the state relaxes under the cyclic single-step generator (each
subpopulation's column convolves with a Poisson kernel folded mod K).  When
the top-level mass reaches 1/beta the cascade balance function develops a
positive hump; its first positive root is the burst fraction, and the jump
map pushes every column through a truncated Poisson promotion and returns the
fired mass to level 0.

Two clocks are supported for reporting trajectories.  The analysis clock
("unit") runs the flow at the bare exogenous rates.  The cascade clock
("cascade") rescales time by the mean size of the small subcritical cascades,
1/(1 - beta * top-level mass); this is the parametrization under which the
finite stochastic network's burst times converge.  The two produce identical
paths through state space, only the timestamps differ.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammainc, gammaln

from .model import MeanState, ModelSpec, Region, classify

# burst_map accepts states this far below the threshold (hitting-time slack)
BOUNDARY_SLACK = 1e-9

_SCAN_STAGES = (1e-3, 1e-5, 1e-7)   # burst-size root isolation scan steps


class NoBurstError(RuntimeError):
    """Raised when a flow trajectory provably never reaches the burst threshold."""


def _grid(x) -> np.ndarray:
    return x.x if isinstance(x, MeanState) else np.asarray(x, dtype=float)


def queue_balance(x, s, beta: float):
    """Expected queue content minus processed mass after a fraction s has fired.

    Equals -s + sum over levels k of x_{k,m} * P(Poisson(s*beta) >= K-k).
    Zero at s = 0; its first positive root is the burst fraction.  Accepts a
    scalar or an array of s values.
    """
    grid = _grid(x)
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0):
        raise ValueError("s must be nonnegative")
    K = grid.shape[0]
    level_mass = grid.sum(axis=1)                       # (K,)
    i = np.arange(1, K + 1)                             # tail order for level K-i
    tails = gammainc(i, s_arr[..., None] * beta)        # P(Po(s*beta) >= i)
    val = -s_arr + (tails * level_mass[K - i]).sum(axis=-1)
    return float(val) if np.isscalar(s) or s_arr.ndim == 0 else val


def burst_size(x, beta: float) -> float:
    """First positive root of the queue balance; 0 when the hump never forms.

    A coarse scan of (0, 1] locates the positive hump, then bisection pins
    the down-crossing.  On the threshold boundary the balance is tangent to
    zero at s = 0, so a hump too narrow for the coarse step can only hide
    next to the origin; the finer stages rescan just that neighborhood.
    The root is < 1 because the balance at s = 1 is strictly negative for
    any state of total mass one.
    """
    grid = _grid(x)
    hi = 1.0
    for step in _SCAN_STAGES:
        s_grid = np.arange(step, hi + step / 2, step)
        vals = queue_balance(grid, s_grid, beta)
        pos = np.nonzero(vals > 0.0)[0]
        if pos.size == 0:
            hi = 2.0 * step          # refine only near the tangency at 0
            continue
        i0 = pos[0]
        down = np.nonzero(vals[i0:] <= 0.0)[0]
        i1 = i0 + down[0]
        lo = s_grid[i1 - 1] if i1 > 0 else step * 1e-3
        return float(brentq(lambda s: queue_balance(grid, s, beta),
                            lo, s_grid[i1], xtol=1e-15, rtol=8.9e-16))
    return 0.0


@lru_cache(maxsize=4096)
def boundary_burst_size(beta: float) -> float:
    """Burst fraction on the K=2 threshold boundary; depends only on beta.

    On that boundary the top level holds exactly 1/beta, so the balance
    collapses to a scalar profile: zero for beta <= 2, strictly increasing
    in beta above, approaching 1.
    """
    x = np.array([[1.0 - 1.0 / beta], [1.0 / beta]])
    return burst_size(x, beta)


def _wrapped_poisson_weights(lam: float, K: int) -> np.ndarray:
    """Poisson(lam) mass folded onto residues mod K, truncated at tail < 1e-15."""
    if lam <= 0.0:
        w = np.zeros(K)
        w[0] = 1.0
        return w
    jmax = int(lam + 40.0 * np.sqrt(lam) + 42.0)
    j = np.arange(jmax + 1)
    pmf = np.exp(-lam + j * np.log(lam) - gammaln(j + 1))
    w = np.zeros(K)
    np.add.at(w, j % K, pmf)
    return w


def flow(x: MeanState, t: float, spec: ModelSpec) -> MeanState:
    """Relaxation under the cyclic generator for time t (unit clock).

    Per subpopulation, the column at time t is the circular convolution of
    the initial column with a Poisson(rho_m t) kernel folded mod K.  Mass per
    column is conserved exactly; nonnegativity is preserved.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    grid = _grid(x)
    K, M = grid.shape
    out = np.empty_like(grid)
    rho = spec.rho_arr
    shifts = (np.arange(K)[:, None] - np.arange(K)[None, :]) % K   # (k, j) -> k-j
    for m in range(M):
        w = _wrapped_poisson_weights(rho[m] * t, K)
        out[:, m] = grid[shifts, m] @ w
    return MeanState(out)


def _flow_k2_level1(x1: np.ndarray, alpha: np.ndarray, rho: np.ndarray,
                    t) -> np.ndarray:
    """Closed-form K=2 level-1 row: alpha/2 - (alpha/2 - x1) exp(-2 rho t)."""
    return alpha / 2.0 - (alpha / 2.0 - x1) * np.exp(-2.0 * rho * np.asarray(t))


def _top_sum_after(x: MeanState, spec: ModelSpec, t: float) -> float:
    if spec.K == 2:
        return float(_flow_k2_level1(x.x[1], spec.alpha_arr, spec.rho_arr, t).sum())
    return flow(x, t, spec).top_level_sum()


def hitting_time(x: MeanState, spec: ModelSpec) -> float | None:
    """First time the flow from x reaches the burst threshold, or None.

    Fixed-step bracketing (step well below the fastest relaxation time)
    followed by bisection; the returned time lies on the threshold-or-above
    side of a bracket of width < 1e-13, so flowing to it lands in the burst
    region up to roundoff.  For K=2 the scan stops early once the residual
    envelope of the level-1 sum provably stays below the threshold; for
    larger K a relaxation-scaled horizon with an equilibrium check decides.
    """
    beta = spec.beta
    thr = 1.0 / beta
    if x.top_level_sum() >= thr:
        raise ValueError("state is not in the flow region")
    rho = spec.rho_arr
    step = 0.1 / rho.max()

    if spec.K == 2:
        # sum x1(t) = 1/2 + sum_m c_m exp(-2 rho_m t); |tail| bound decides None
        c = x.x[1] - spec.alpha_arr / 2.0
        c_abs = np.abs(c).sum()

        def certainly_below(t):
            return 0.5 + c_abs * np.exp(-2.0 * rho.min() * t) < thr

        t_max = None
    else:
        relax = 1.0 - np.cos(2.0 * np.pi / spec.K)
        eq_top = 1.0 / spec.K

        def certainly_below(t):
            return False

        t_max = None if eq_top > thr else 20.0 / (rho.min() * relax)

    t_lo = 0.0
    g_lo = x.top_level_sum() - thr
    while True:
        t_hi = t_lo + step
        g_hi = _top_sum_after(x, spec, t_hi) - thr
        if g_hi >= 0.0:
            break
        t_lo, g_lo = t_hi, g_hi
        if certainly_below(t_lo):
            return None
        if t_max is not None and t_lo > t_max:
            return None
        if t_lo > 1e7 / rho.min():
            raise RuntimeError("hitting-time scan failed to terminate")

    # keep the invariant g(t_lo) < 0 <= g(t_hi); report the upper end
    for _ in range(200):
        if t_hi - t_lo < 1e-13 * max(1.0, t_hi):
            break
        t_mid = 0.5 * (t_lo + t_hi)
        if _top_sum_after(x, spec, t_mid) - thr >= 0.0:
            t_hi = t_mid
        else:
            t_lo = t_mid
    return t_hi


def burst_map(x: MeanState, spec: ModelSpec) -> tuple[MeanState, float]:
    """Apply the jump: promote columns through the firing cascade, return fired mass to 0.

    For k >= 1 the new level is a truncated Poisson(beta * s) mixture of the
    levels below it; level 0 is fixed by per-subpopulation conservation.
    Requires the state to sit on or above the threshold (a small slack below
    is tolerated for states produced by hitting-time bisection).
    """
    beta = spec.beta
    if x.top_level_sum() < 1.0 / beta - BOUNDARY_SLACK:
        raise ValueError("state is strictly inside the flow region")
    grid = x.x
    K, M = grid.shape
    s = burst_size(grid, beta)
    z = beta * s
    if z <= 0.0:
        return MeanState(grid.copy()), 0.0
    j = np.arange(K)
    pois = np.exp(-z + j * np.log(z) - gammaln(j + 1))
    out = np.empty_like(grid)
    for k in range(1, K):
        out[k] = pois[:k + 1][::-1] @ grid[:k + 1]
    # level 0 set by conservation: all fired mass lands back at the bottom
    out[0] = spec.alpha_arr - out[1:].sum(axis=0)
    return MeanState(out), s


def return_map(x: MeanState, spec: ModelSpec) -> MeanState:
    """Flow to the threshold, then jump: the burst-to-burst map of the hybrid system."""
    tau = hitting_time(x, spec)
    if tau is None:
        raise NoBurstError("no burst reachable")
    x_hit = flow(x, tau, spec)
    x_new, _ = burst_map(x_hit, spec)
    return x_new


def _cascade_elapsed(x0: MeanState, spec: ModelSpec, u) -> float:
    """Cascade-clock time accrued over unit-clock interval [0, u] of flow from x0.

    Integrates 1 - beta * (top-level sum) along the flow; closed form for
    K=2, 64-point Gauss-Legendre otherwise (the integrand is smooth).
    """
    beta = spec.beta
    if spec.K == 2:
        alpha, rho = spec.alpha_arr, spec.rho_arr
        c = x0.x[1] - alpha / 2.0
        u = np.asarray(u, dtype=float)
        return (1.0 - beta / 2.0) * u \
            - beta * np.sum(c / (2.0 * rho) * (1.0 - np.exp(-2.0 * rho * u[..., None])),
                            axis=-1)
    nodes, weights = np.polynomial.legendre.leggauss(64)
    half = 0.5 * float(u)
    ts = half * (nodes + 1.0)
    vals = np.array([1.0 - beta * _top_sum_after(x0, spec, t) for t in ts])
    return float(half * (weights @ vals))


def _invert_cascade(x0: MeanState, spec: ModelSpec, wall: float,
                    u_max: float) -> float:
    """Unit-clock time u in [0, u_max] with cascade-elapsed(u) = wall."""
    total = _cascade_elapsed(x0, spec, u_max)
    if wall >= total:
        return u_max
    if wall <= 0.0:
        return 0.0
    return brentq(lambda u: _cascade_elapsed(x0, spec, u) - wall,
                  0.0, u_max, xtol=1e-13)


@dataclass(frozen=True)
class FlowSegment:
    """One continuous piece of a hybrid trajectory, in the trajectory's clock."""

    t_start: float
    t_end: float
    x_start: MeanState
    x_end: MeanState
    unit_duration: float      # duration in the unit clock regardless of `clock`


@dataclass
class HybridTrajectory:
    """Flow segments separated by bursts, with the burst times and sizes."""

    spec: ModelSpec
    clock: str
    segments: list[FlowSegment] = field(default_factory=list)
    burst_times: list[float] = field(default_factory=list)
    burst_sizes: list[float] = field(default_factory=list)
    post_burst_states: list[MeanState] = field(default_factory=list)
    end_reason: str = ""

    @property
    def n_bursts(self) -> int:
        return len(self.burst_times)

    @property
    def t_end(self) -> float:
        return self.segments[-1].t_end if self.segments else 0.0

    def state_at(self, t: float) -> MeanState:
        """State at time t (right-continuous at burst times)."""
        starts = [seg.t_start for seg in self.segments]
        i = bisect.bisect_right(starts, t) - 1
        if i < 0:
            raise ValueError(f"t={t} precedes the trajectory start")
        seg = self.segments[i]
        dt = min(max(t - seg.t_start, 0.0), seg.t_end - seg.t_start)
        if self.clock == "cascade":
            u = _invert_cascade(seg.x_start, self.spec, dt, seg.unit_duration)
        else:
            u = dt
        return flow(seg.x_start, u, self.spec)


def hybrid_run(x0: MeanState, spec: ModelSpec, *,
               max_time: float | None = None,
               max_bursts: int | None = None,
               clock: str = "unit") -> HybridTrajectory:
    """Alternate flow, threshold hit, jump until a horizon is reached.

    A start inside the burst region jumps immediately at time zero.  If some
    hit produces a zero-size jump (subcritical tangency, only possible for
    beta <= 2 or K >= 3), the hybrid recursion is not continuable and the
    trajectory ends there with reason "graze".  Default horizon: 200 bursts
    or 1e3 / min(rho), whichever comes first.
    """
    if clock not in ("unit", "cascade"):
        raise ValueError(f"unknown clock {clock!r}")
    if max_time is None and max_bursts is None:
        max_bursts = 200
        max_time = 1e3 / spec.rho_arr.min()
    elif max_time is None:
        max_time = np.inf
    elif max_bursts is None:
        max_bursts = 10 ** 9

    traj = HybridTrajectory(spec=spec, clock=clock)
    x = x0
    t = 0.0

    if classify(x, spec.beta) is Region.BURST:
        x_new, s = burst_map(x, spec)
        if s <= 0.0:
            traj.end_reason = "graze"
            return traj
        traj.burst_times.append(0.0)
        traj.burst_sizes.append(s)
        traj.post_burst_states.append(x_new)
        x = x_new

    while True:
        if traj.n_bursts >= max_bursts:
            traj.end_reason = "max_bursts"
            return traj
        tau = hitting_time(x, spec)
        if tau is None:
            u_cap = max_time - t if clock == "unit" \
                else _invert_cascade(x, spec, max_time - t, 1e9 / spec.rho_arr.min())
            x_end = flow(x, u_cap, spec)
            traj.segments.append(FlowSegment(t, max_time, x, x_end, u_cap))
            traj.end_reason = "no_burst"
            return traj
        wall = tau if clock == "unit" else float(_cascade_elapsed(x, spec, tau))
        if t + wall > max_time:
            u_cap = max_time - t if clock == "unit" \
                else _invert_cascade(x, spec, max_time - t, tau)
            x_end = flow(x, u_cap, spec)
            traj.segments.append(FlowSegment(t, max_time, x, x_end, u_cap))
            traj.end_reason = "horizon"
            return traj
        x_hit = flow(x, tau, spec)
        x_new, s = burst_map(x_hit, spec)
        traj.segments.append(FlowSegment(t, t + wall, x, x_hit, tau))
        t += wall
        if s <= 0.0:
            traj.end_reason = "graze"
            return traj
        traj.burst_times.append(t)
        traj.burst_sizes.append(s)
        traj.post_burst_states.append(x_new)
        x = x_new
