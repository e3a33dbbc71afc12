"""Stochastic bursting networks with subpopulations and their hybrid mean-field limit."""

from .model import (CountState, MeanState, ModelSpec, Region, StochasticSpec,
                    classify, config_to_spec, equilibrium, sample_boundary_state,
                    sample_flow_state, sample_state, subpopulation_sizes, validate)
from .meanfield import (HybridTrajectory, NoBurstError, boundary_burst_size,
                        burst_map, burst_size, flow, hitting_time, hybrid_run,
                        queue_balance, return_map)
from .stability import (ConvergenceClass, LimitCycleResult, StretchReport,
                        burst_map_modulus, bursts_to_absorb, coupling_threshold,
                        find_limit_cycle, in_absorbing_set, limit_cycle_ensemble,
                        stopped_flow_jacobian)
from .stochastic import (BurstOutcome, EventTrace, cascade, equilibrium_counts,
                         ground_counts, make_rng, next_event, run)

__all__ = [
    "BurstOutcome", "ConvergenceClass", "CountState", "EventTrace",
    "HybridTrajectory", "LimitCycleResult", "MeanState", "ModelSpec",
    "NoBurstError", "Region", "StochasticSpec", "StretchReport",
    "boundary_burst_size", "burst_map", "burst_map_modulus", "burst_size",
    "bursts_to_absorb", "cascade", "classify", "config_to_spec",
    "coupling_threshold", "equilibrium", "equilibrium_counts",
    "find_limit_cycle", "flow", "ground_counts", "hitting_time", "hybrid_run",
    "in_absorbing_set", "limit_cycle_ensemble", "make_rng", "next_event",
    "queue_balance", "return_map", "run", "sample_boundary_state",
    "sample_flow_state", "sample_state", "stopped_flow_jacobian",
    "subpopulation_sizes", "validate",
]

__version__ = "0.1.0"
