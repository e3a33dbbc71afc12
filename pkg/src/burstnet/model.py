"""Shared parameter and state types, simplex geometry, region predicates.

State space: a K x M grid where entry (k, m) is the fraction (or count) of
neurons of subpopulation m sitting at voltage level k.  Each column sums to
the subpopulation weight alpha_m (or the subpopulation size N_m for counts),
so valid states live on a product of scaled simplices.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

SIMPLEX_ATOL = 1e-10      # per-subpopulation mass conservation tolerance
ALPHA_SUM_ATOL = 1e-12


class Region(Enum):
    """Supercritical (burst) vs subcritical (flow) side of the state space."""

    FLOW = "flow"
    BURST = "burst"


@dataclass(frozen=True)
class ModelSpec:
    """Mean-field model parameters.

    K voltage levels, M subpopulations with weights alpha and exogenous
    rates rho, coupling beta.  Construction only checks shapes; use
    :func:`validate` for the full constraint report.
    """

    K: int
    M: int
    alpha: tuple[float, ...]
    rho: tuple[float, ...]
    beta: float

    def __init__(self, K: int, M: int, alpha: Sequence[float],
                 rho: Sequence[float], beta: float):
        object.__setattr__(self, "K", int(K))
        object.__setattr__(self, "M", int(M))
        object.__setattr__(self, "alpha", tuple(float(a) for a in alpha))
        object.__setattr__(self, "rho", tuple(float(r) for r in rho))
        object.__setattr__(self, "beta", float(beta))
        if self.K < 2:
            raise ValueError(f"K must be >= 2, got {self.K}")
        if self.M < 1:
            raise ValueError(f"M must be >= 1, got {self.M}")
        if len(self.alpha) != self.M:
            raise ValueError(f"alpha has length {len(self.alpha)}, expected M={self.M}")
        if len(self.rho) != self.M:
            raise ValueError(f"rho has length {len(self.rho)}, expected M={self.M}")

    @property
    def alpha_arr(self) -> np.ndarray:
        return np.asarray(self.alpha, dtype=float)

    @property
    def rho_arr(self) -> np.ndarray:
        return np.asarray(self.rho, dtype=float)

    def to_config(self) -> dict:
        return {"K": self.K, "M": self.M, "alpha": list(self.alpha),
                "rho": list(self.rho), "beta": self.beta}

    def to_json(self) -> str:
        return json.dumps(self.to_config())


def validate(spec: ModelSpec) -> list[str]:
    """Return all constraint violations; an empty list means the spec is valid."""
    errors = []
    for m, a in enumerate(spec.alpha):
        if not a > 0.0:
            errors.append(f"alpha_{m} > 0 violated (alpha_{m} = {a})")
        if not a < 1.0:
            errors.append(f"alpha_{m} < 1 violated (alpha_{m} = {a})")
    if abs(sum(spec.alpha) - 1.0) > ALPHA_SUM_ATOL:
        errors.append(f"sum(alpha) = 1 violated (sum = {sum(spec.alpha)!r})")
    for m, r in enumerate(spec.rho):
        if not r > 0.0:
            errors.append(f"rho_{m} > 0 violated (rho_{m} = {r})")
    if not spec.beta > 0.0:
        errors.append(f"beta > 0 violated (beta = {spec.beta})")
    return errors


def subpopulation_sizes(alpha: Sequence[float], N: int) -> np.ndarray:
    """Integer sizes N_m with |N_m - alpha_m N| < 1 and sum N_m = N.

    Rounds each alpha_m * N and fixes the total with a largest-remainder
    correction, which keeps every size within one of its real target.
    """
    alpha = np.asarray(alpha, dtype=float)
    exact = alpha * N
    sizes = np.floor(exact).astype(np.int64)
    remainder = exact - sizes
    deficit = N - int(sizes.sum())
    order = np.argsort(-remainder)
    sizes[order[:deficit]] += 1
    return sizes


@dataclass(frozen=True)
class StochasticSpec:
    """Finite-network parameters: a ModelSpec plus N, pairwise probability p, seed."""

    base: ModelSpec
    N: int
    p: float
    seed: int

    def __post_init__(self):
        if self.N < self.base.M:
            raise ValueError(f"N={self.N} smaller than subpopulation count M={self.base.M}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")

    @classmethod
    def from_model(cls, base: ModelSpec, N: int, seed: int,
                   p: float | None = None) -> "StochasticSpec":
        """p defaults to beta/N, the scaling under which the network has a limit."""
        return cls(base=base, N=int(N), p=base.beta / N if p is None else float(p),
                   seed=int(seed))

    @property
    def sizes(self) -> np.ndarray:
        return subpopulation_sizes(self.base.alpha, self.N)

    def to_config(self) -> dict:
        cfg = self.base.to_config()
        cfg.update({"N": self.N, "p": self.p, "seed": self.seed})
        return cfg


def config_to_spec(cfg: dict) -> ModelSpec | StochasticSpec:
    """Parse the flat key-value config document.

    Returns a StochasticSpec when N is present, otherwise a ModelSpec.
    """
    for key in ("K", "M", "alpha", "rho", "beta"):
        if key not in cfg:
            raise KeyError(f"config missing required key {key!r}")
    base = ModelSpec(cfg["K"], cfg["M"], cfg["alpha"], cfg["rho"], cfg["beta"])
    if cfg.get("N") is None:
        return base
    N = int(cfg["N"])
    p = cfg.get("p")
    seed = int(cfg.get("seed", 0))
    return StochasticSpec(base=base, N=N,
                          p=base.beta / N if p is None else float(p), seed=seed)


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class MeanState:
    """Real-valued K x M occupancy-fraction grid."""

    x: np.ndarray

    def __init__(self, x):
        grid = np.array(x, dtype=float)
        if grid.ndim != 2:
            raise ValueError(f"state grid must be 2-d (K, M), got shape {grid.shape}")
        object.__setattr__(self, "x", _frozen(grid))

    @property
    def K(self) -> int:
        return self.x.shape[0]

    @property
    def M(self) -> int:
        return self.x.shape[1]

    def column_sums(self) -> np.ndarray:
        return self.x.sum(axis=0)

    def top_level_sum(self) -> float:
        """Mass at the last level K-1, summed over subpopulations."""
        return float(self.x[-1].sum())

    def check(self, alpha: Sequence[float], atol: float = SIMPLEX_ATOL) -> None:
        if self.x.min() < -1e-12:
            raise ValueError(f"negative occupancy {self.x.min()!r}")
        gaps = np.abs(self.column_sums() - np.asarray(alpha, dtype=float))
        if gaps.max() > atol:
            raise ValueError(f"column sums off alpha by {gaps.max()!r}")


@dataclass(frozen=True, eq=False)
class CountState:
    """Integer K x M occupancy grid for the finite network."""

    X: np.ndarray

    def __init__(self, X):
        grid = np.array(X, dtype=np.int64)
        if grid.ndim != 2:
            raise ValueError(f"count grid must be 2-d (K, M), got shape {grid.shape}")
        if grid.min() < 0:
            raise ValueError("negative occupancy count")
        object.__setattr__(self, "X", _frozen(grid))

    @property
    def K(self) -> int:
        return self.X.shape[0]

    @property
    def M(self) -> int:
        return self.X.shape[1]

    @property
    def N(self) -> int:
        return int(self.X.sum())

    def level_sums(self) -> np.ndarray:
        """Y_k: occupancy per level across subpopulations."""
        return self.X.sum(axis=1)

    def column_sums(self) -> np.ndarray:
        return self.X.sum(axis=0)

    def fractions(self) -> MeanState:
        return MeanState(self.X / self.N)


def classify(x: MeanState, beta: float) -> Region:
    """Burst region iff the top-level mass is at least 1/beta (boundary included)."""
    return Region.BURST if x.top_level_sum() >= 1.0 / beta else Region.FLOW


def equilibrium(spec: ModelSpec) -> MeanState:
    """Fixed point of the cyclic flow: each subpopulation spread uniformly over levels."""
    grid = np.tile(spec.alpha_arr / spec.K, (spec.K, 1))
    return MeanState(grid)


def sample_state(spec: ModelSpec, rng: np.random.Generator) -> MeanState:
    """Uniform draw on the product of simplex slices (Dirichlet per subpopulation)."""
    cols = rng.dirichlet(np.ones(spec.K), size=spec.M).T * spec.alpha_arr
    return MeanState(cols)


def sample_flow_state(spec: ModelSpec, rng: np.random.Generator) -> MeanState:
    """Uniform state conditioned into the flow region.

    Rescales the top level below the 1/beta threshold when a draw lands in
    the burst region, pushing the excess down to level 0.
    """
    x = sample_state(spec, rng).x.copy()
    top = x[-1].sum()
    thr = 1.0 / spec.beta
    if top >= thr:
        scale = 0.95 * thr / top
        excess = x[-1] * (1.0 - scale)
        x[-1] *= scale
        x[0] += excess
    return MeanState(x)


def sample_boundary_state(spec: ModelSpec, rng: np.random.Generator,
                          max_tries: int = 1000) -> MeanState:
    """Random state with top-level mass exactly 1/beta.

    Each column's top-level load (fraction of its weight parked at the top)
    is drawn uniformly, then the loads are rescaled so the top row sums to
    1/beta; draws whose rescaling would push a column past its weight are
    rejected.  The remaining mass of each column is spread over levels
    0..K-2 by a Dirichlet draw.
    """
    alpha = spec.alpha_arr
    thr = 1.0 / spec.beta
    for _ in range(max_tries):
        load = rng.uniform(0.0, 1.0, spec.M)
        scale = thr / float((load * alpha).sum())
        if scale * load.max() < 1.0:
            top = scale * load * alpha
            break
    else:
        raise RuntimeError("could not place boundary mass under the alpha caps")
    rest = alpha - top
    x = np.empty((spec.K, spec.M))
    x[-1] = top
    if spec.K == 2:
        x[0] = rest
    else:
        x[:-1] = rng.dirichlet(np.ones(spec.K - 1), size=spec.M).T * rest
    return MeanState(x)
