"""Contraction analysis of the two-level hybrid system.

The burst-to-burst map factors into a stopped flow (flow until the threshold
is hit) and the jump.  Perturbing a start state moves the hitting time, so
the stopped flow's Jacobian is not the flow semigroup: it is the rank-one
corrected matrix built from the hitting-time sensitivity coefficients.  Its
spectral norm restricted to zero-sum perturbations stays below 1 + sqrt(M)/2,
while the jump contracts zero-sum directions by (1+z) e^{-z} with z = beta
times the boundary burst fraction.  When the product of the two moduli drops
below one the map is a strict contraction and every start converges to the
same limit cycle.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .meanfield import (boundary_burst_size, burst_size, hitting_time,
                        NoBurstError, return_map)
from .model import MeanState, ModelSpec

OVERSHOOT_TOL = 1e-9     # sign changes of (iterate - limit) below this are noise


class ConvergenceClass(Enum):
    MONOTONE = "monotone"
    NON_MONOTONE = "non_monotone"
    NON_CONVERGENT = "non_convergent"


def in_absorbing_set(x: MeanState) -> bool:
    """True iff every level-1 fraction sits strictly below its subpopulation midpoint.

    This set absorbs all trajectories after finitely many bursts and is where
    the stopped-flow stretch bound holds.  Two-level states only.
    """
    if x.K != 2:
        raise ValueError("absorbing-set test is defined for K=2 states")
    col = x.column_sums()
    return bool(np.all(x.x[1] < col / 2.0))


def burst_map_modulus(beta: float) -> float:
    """Contraction factor of the jump along zero-sum directions on the boundary.

    (1 + z) e^{-z} with z = beta * boundary burst fraction: equals 1 up to
    beta = 2 (no burst, no contraction) and decreases strictly to 0 beyond.
    """
    z = beta * boundary_burst_size(beta)
    return float((1.0 + z) * np.exp(-z))


def bursts_to_absorb(beta: float) -> int:
    """Smallest n with (jump modulus)^n < 1/2; bounds the bursts needed to absorb."""
    if beta <= 2.0:
        raise ValueError("beta must exceed 2 (the jump modulus is 1 otherwise)")
    h = burst_map_modulus(beta)
    n = 1
    while h ** n >= 0.5:
        n += 1
    return n


@dataclass(frozen=True)
class StretchReport:
    """Stopped-flow Jacobian data at one start state."""

    tau: float
    c: np.ndarray                # hitting-time sensitivity weights, sum to 1
    MM: np.ndarray               # M x M stopped-flow Jacobian (level-1 row)
    restricted_norm: float       # spectral norm on the zero-sum subspace
    g_modulus: float             # jump contraction factor at this beta
    product: float


def stopped_flow_jacobian(x0: MeanState, spec: ModelSpec) -> StretchReport:
    """Jacobian of (level-1 perturbation) -> (level-1 row at the hitting time).

    A perturbation e_m added to level 1 and removed from level 0 shifts the
    hitting time by a weighted average of the perturbation components; the
    resulting Jacobian is diag(d) minus the rank-one coupling c d^T, with
    d_m = exp(-2 rho_m tau).  Column sums vanish, so zero-sum perturbations
    stay zero-sum and the restricted spectral norm is the one that matters.
    """
    if spec.K != 2 or x0.K != 2:
        raise ValueError("stopped-flow Jacobian is defined for K=2")
    tau = hitting_time(x0, spec)
    if tau is None:
        raise NoBurstError("no burst reachable")
    alpha, rho = spec.alpha_arr, spec.rho_arr
    M = spec.M
    d = np.exp(-2.0 * rho * tau)
    c = rho * (alpha / 2.0 - x0.x[1]) * d
    c = c / c.sum()
    MM = (np.eye(M) - np.outer(c, np.ones(M))) @ np.diag(d)
    proj = np.eye(M) - np.ones((M, M)) / M
    restricted_norm = float(np.linalg.svd(MM @ proj, compute_uv=False)[0])
    g = burst_map_modulus(spec.beta)
    return StretchReport(tau=float(tau), c=c, MM=MM,
                         restricted_norm=restricted_norm, g_modulus=g,
                         product=restricted_norm * g)


def coupling_threshold(M: int) -> float:
    """Smallest beta at which (jump modulus) * (1 + sqrt(M)/2) drops below 1.

    The sufficient-condition threshold from the contraction argument; an
    upper bound for the true critical coupling (conjectured to be 2 for
    every M).  Bisection to 1e-6 isn't enough to matter, so we go to 1e-9.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    allow = 1.0 + np.sqrt(M) / 2.0

    def excess(beta):
        return burst_map_modulus(beta) * allow - 1.0

    lo, hi = 2.0, 4.0
    while excess(hi) > 0.0:
        hi *= 2.0
    for _ in range(64):
        if hi - lo < 1e-9:
            break
        mid = 0.5 * (lo + hi)
        if excess(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return hi


@dataclass(frozen=True)
class LimitCycleResult:
    x_star: MeanState
    iterations: int
    convergence: ConvergenceClass


def _classify_history(hist: np.ndarray, x_star: np.ndarray,
                      converged: bool) -> ConvergenceClass:
    """Overshoot test: did any coordinate cross the limit by more than the noise floor."""
    if not converged:
        return ConvergenceClass.NON_CONVERGENT
    d = hist - x_star
    crossed = (d[:-1] * d[1:] < 0.0) & (np.abs(d[1:]) > OVERSHOOT_TOL)
    return ConvergenceClass.NON_MONOTONE if crossed.any() else ConvergenceClass.MONOTONE


def find_limit_cycle(spec: ModelSpec, x0: MeanState, tol: float = 1e-10,
                     max_iter: int = 200) -> LimitCycleResult:
    """Iterate the burst-to-burst map to its fixed point and classify the approach.

    A start inside the burst region is first jumped to the flow side (not
    counted as an iteration).  Convergence means the full-grid Euclidean
    step drops below tol; the approach is monotone when no coordinate of
    (iterate - limit) changes sign beyond the noise floor.
    """
    from .meanfield import burst_map
    from .model import Region, classify

    x = x0
    if classify(x, spec.beta) is Region.BURST:
        x, _ = burst_map(x, spec)
    history = [x.x[1].copy()]
    iterations = 0
    converged = False
    for _ in range(max_iter):
        x_next = return_map(x, spec)
        iterations += 1
        history.append(x_next.x[1].copy())
        step = float(np.linalg.norm(x_next.x - x.x))
        x = x_next
        if step < tol:
            converged = True
            break
    cls = _classify_history(np.asarray(history), x.x[1], converged)
    return LimitCycleResult(x_star=x, iterations=iterations, convergence=cls)


# ---------------------------------------------------------------------------
# Vectorized two-level engine: the same dynamics applied to a batch of
# level-1 rows in lockstep.  Used by the sweep experiments where thousands
# of starts per parameter cell make the scalar path too slow.
# ---------------------------------------------------------------------------

def _hit_batch(X1: np.ndarray, alpha: np.ndarray, rho: np.ndarray,
               beta: float) -> tuple[np.ndarray, np.ndarray]:
    """Hitting times and hit-state level-1 rows for a batch of flow-side states."""
    B, M = X1.shape
    thr = 1.0 / beta
    c = X1 - alpha / 2.0                       # sum x1(t) = 1/2 + sum c e^{-2 rho t}
    step = 0.1 / rho.max()
    t_lo = np.zeros(B)
    t_hi = np.zeros(B)
    found = np.zeros(B, dtype=bool)
    t = 0.0
    guard = 0
    while not found.all():
        t_next = t + step
        top = 0.5 + (c * np.exp(-2.0 * rho * t_next)).sum(axis=1)
        newly = ~found & (top >= thr)
        t_lo[newly] = t
        t_hi[newly] = t_next
        found |= newly
        t = t_next
        guard += 1
        if guard > 10 ** 7:
            raise RuntimeError("batched hitting scan failed to terminate")
    for _ in range(90):
        t_mid = 0.5 * (t_lo + t_hi)
        top = 0.5 + (c * np.exp(-2.0 * rho * t_mid[:, None])).sum(axis=1)
        above = top >= thr
        t_hi[above] = t_mid[above]
        t_lo[~above] = t_mid[~above]
    tau = t_hi
    X1_hit = alpha / 2.0 + c * np.exp(-2.0 * rho * tau[:, None])
    return tau, X1_hit


def _jump_batch(X1_hit: np.ndarray, alpha: np.ndarray, z: float) -> np.ndarray:
    """Two-level jump with a shared boundary exponent z = beta * burst fraction."""
    return np.exp(-z) * (z * (alpha - X1_hit) + X1_hit)


def limit_cycle_ensemble(spec: ModelSpec, X1_0: np.ndarray, tol: float = 1e-9,
                         max_iter: int = 1000
                         ) -> tuple[np.ndarray, np.ndarray, list[ConvergenceClass]]:
    """Batched find_limit_cycle over rows of X1_0 (level-1 fractions).

    Returns the final level-1 rows, per-row iteration counts (-1 when the
    row failed to converge), and per-row convergence classes.  Matches the
    scalar path up to the hitting-time bisection tolerance.
    """
    if spec.K != 2:
        raise ValueError("the batched engine is two-level only")
    alpha, rho, beta = spec.alpha_arr, spec.rho_arr, spec.beta
    X1 = np.array(X1_0, dtype=float)
    B, M = X1.shape
    thr = 1.0 / beta

    # jump any start already on the burst side (its own root, not the boundary one)
    hot = X1.sum(axis=1) >= thr
    for i in np.nonzero(hot)[0]:
        grid = np.vstack([alpha - X1[i], X1[i]])
        s = burst_size(grid, beta)
        X1[i] = _jump_batch(X1[i][None, :], alpha, beta * s)[0]

    z = beta * boundary_burst_size(beta)
    history = np.empty((max_iter + 1, B, M))
    history[0] = X1
    iters = np.full(B, -1, dtype=np.int64)
    n_done = 0
    for n in range(1, max_iter + 1):
        _, X1_hit = _hit_batch(X1, alpha, rho, beta)
        X1_next = _jump_batch(X1_hit, alpha, z)
        step = np.abs(X1_next - X1).max(axis=1)
        newly = (iters < 0) & (step < tol)
        iters[newly] = n
        X1 = X1_next
        history[n] = X1
        n_done = n
        if (iters > 0).all():
            break
    hist = history[:n_done + 1]
    classes = []
    for i in range(B):
        classes.append(_classify_history(hist[:, i, :], X1[i], iters[i] > 0))
    return X1, iters, classes
