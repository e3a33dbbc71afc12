"""Event-driven simulation of the finite network, exact in distribution.

The chain is simulated on the occupancy grid rather than per neuron: with a
uniform pairwise probability and rates constant on subpopulations, neurons
within a cell (level, subpopulation) are exchangeable, so one binomial draw
per cell reproduces the law of the individual kicks.  Cascades process the
firing queue one neuron at a time; each pop exposes every still-unfired,
unqueued neuron to exactly one Bernoulli(p) kick, which matches the
round-based description in distribution (each ordered pair of firing and
alive neuron carries a single coin either way).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import CountState, StochasticSpec, subpopulation_sizes


def make_rng(seed: int) -> np.random.Generator:
    """Seeded PCG64 stream; same seed and spec give bit-identical traces."""
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class BurstOutcome:
    size: int                 # neurons fired, trigger included
    post_state: CountState
    rounds: int               # queue pops processed


@dataclass(frozen=True)
class EventTrace:
    """Post-event states of one run; times strictly increasing, state right-continuous."""

    times: np.ndarray         # (n,)
    burst_sizes: np.ndarray   # (n,) fired neurons at each event (0 = plain promotion)
    states: np.ndarray        # (n, K, M) occupancy after each event
    total_time: float
    spec: StochasticSpec

    def big_bursts(self, min_size: int) -> tuple[np.ndarray, np.ndarray]:
        mask = self.burst_sizes >= min_size
        return self.times[mask], self.burst_sizes[mask]


def _cascade_counts(X: np.ndarray, trigger: int, p: float,
                    rng: np.random.Generator) -> tuple[int, int]:
    """Run the queue cascade in place on X; trigger already removed from the grid.

    Returns (fired count, rounds).  One queued neuron pops per round and
    kicks each cell with an occupancy binomial; promotions out of the top
    level join the queue, and all fired neurons land at level 0 at the end.
    """
    K, M = X.shape
    queue = np.zeros(M, dtype=np.int64)
    queue[trigger] = 1
    fired = np.zeros(M, dtype=np.int64)
    rounds = 0
    flat = X.reshape(-1)
    while True:
        live = np.nonzero(queue)[0]
        if live.size == 0:
            break
        mq = live[0]
        queue[mq] -= 1
        fired[mq] += 1
        rounds += 1
        if p > 0.0:
            kicks = rng.binomial(flat, p).reshape(K, M)
            X -= kicks
            X[1:] += kicks[:-1]
            queue += kicks[K - 1]
    X[0] += fired
    return int(fired.sum()), rounds


def cascade(state: CountState, trigger: int, p: float,
            rng: np.random.Generator) -> BurstOutcome:
    """Burst initiated by one neuron of subpopulation `trigger` promoted past the top level.

    The trigger is taken out of the grid's top level, then the queue process
    runs to exhaustion.  Per-subpopulation totals are conserved and no
    occupancy at or beyond level K ever appears.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    X = state.X.copy()
    if X[-1, trigger] < 1:
        raise ValueError("trigger subpopulation has no neuron at the top level")
    X[-1, trigger] -= 1
    size, rounds = _cascade_counts(X, trigger, p, rng)
    return BurstOutcome(size=size, post_state=CountState(X), rounds=rounds)


def next_event(state: CountState, spec: StochasticSpec,
               rng: np.random.Generator) -> tuple[float, CountState, int]:
    """One exogenous promotion: exponential waiting time, then promote one neuron.

    The promoted neuron is drawn subpopulation-first (rate-weighted), then
    uniformly over its subpopulation's levels by occupancy.  A promotion out
    of level K-1 fires and runs the cascade.
    """
    X = state.X.copy()
    K, M = X.shape
    sizes = X.sum(axis=0)
    weights = spec.base.rho_arr * sizes
    total = weights.sum()
    dt = rng.exponential(1.0 / total)
    m = int(np.searchsorted(np.cumsum(weights) / total, rng.random()))
    r = rng.random() * sizes[m]
    cum = 0
    for k in range(K):
        cum += X[k, m]
        if r < cum:
            break
    burst = 0
    X[k, m] -= 1
    if k == K - 1:
        burst, _ = _cascade_counts(X, m, spec.p, rng)
    else:
        X[k + 1, m] += 1
    return dt, CountState(X), burst


def run(spec: StochasticSpec, x0: CountState, T: float) -> EventTrace:
    """Simulate until the cumulative time exceeds T, recording every event."""
    X = x0.X.copy()
    K, M = X.shape
    sizes = X.sum(axis=0)
    rng = make_rng(spec.seed)
    rho = spec.base.rho_arr
    weights = rho * sizes
    total = weights.sum()
    scale = 1.0 / total
    cum_w = np.cumsum(weights) / total
    p = spec.p

    cap = 4096
    times = np.empty(cap)
    bursts = np.empty(cap, dtype=np.int64)
    states = np.empty((cap, K, M), dtype=np.int64)
    n = 0
    t = 0.0
    while True:
        t += rng.exponential(scale)
        if t > T:
            break
        m = int(np.searchsorted(cum_w, rng.random()))
        r = rng.random() * sizes[m]
        cum = 0
        for k in range(K):
            cum += X[k, m]
            if r < cum:
                break
        burst = 0
        X[k, m] -= 1
        if k == K - 1:
            burst, _ = _cascade_counts(X, m, p, rng)
        else:
            X[k + 1, m] += 1
        if n == cap:
            cap *= 2
            times = np.concatenate([times, np.empty(n)])
            bursts = np.concatenate([bursts, np.empty(n, dtype=np.int64)])
            states = np.concatenate([states, np.empty((n, K, M), dtype=np.int64)])
        times[n] = t
        bursts[n] = burst
        states[n] = X
        n += 1
    return EventTrace(times=times[:n].copy(), burst_sizes=bursts[:n].copy(),
                      states=states[:n].copy(), total_time=float(T), spec=spec)


def equilibrium_counts(spec: StochasticSpec) -> CountState:
    """Counts closest to uniform-over-levels within each subpopulation."""
    sizes = subpopulation_sizes(spec.base.alpha, spec.N)
    K = spec.base.K
    X = np.empty((K, len(sizes)), dtype=np.int64)
    for m, Nm in enumerate(sizes):
        base, rem = divmod(int(Nm), K)
        col = np.full(K, base, dtype=np.int64)
        col[:rem] += 1
        X[:, m] = col
    return CountState(X)


def ground_counts(spec: StochasticSpec) -> CountState:
    """Every neuron at level 0."""
    sizes = subpopulation_sizes(spec.base.alpha, spec.N)
    X = np.zeros((spec.base.K, len(sizes)), dtype=np.int64)
    X[0] = sizes
    return CountState(X)
