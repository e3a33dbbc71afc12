"""Experiment harness: batch runs emitting CSV data files.

Every emitted file starts with a '#'-prefixed JSON metadata line carrying the
fully resolved configuration and seed, so a rerun with the same inputs is
byte-identical.  State columns are level-major: x_0_0, x_0_1, ..., meaning
level k, subpopulation m as x_k_m.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import datafiles
from .meanfield import boundary_burst_size, hybrid_run
from .model import (CountState, MeanState, ModelSpec, StochasticSpec,
                    config_to_spec, equilibrium, sample_flow_state, validate)
from .stability import ConvergenceClass, limit_cycle_ensemble, stopped_flow_jacobian
from .stochastic import equilibrium_counts, ground_counts, run


class ConfigError(ValueError):
    """Bad configuration document or flag combination."""


def _state_columns(K: int, M: int, prefix: str = "x") -> list[str]:
    return [f"{prefix}_{k}_{m}" for k in range(K) for m in range(M)]


def _check_spec(spec) -> None:
    base = spec.base if isinstance(spec, StochasticSpec) else spec
    errors = validate(base)
    if errors:
        raise ConfigError("invalid spec: " + "; ".join(errors))


def _resolve_counts(sspec: StochasticSpec, init) -> CountState:
    if init == "equilibrium" or init is None:
        return equilibrium_counts(sspec)
    if init == "ground":
        return ground_counts(sspec)
    X = np.asarray(init, dtype=np.int64)
    if X.shape != (sspec.base.K, sspec.base.M):
        raise ConfigError(f"init counts must have shape (K, M) = "
                          f"({sspec.base.K}, {sspec.base.M}), got {X.shape}")
    return CountState(X)


def _resolve_mean_state(spec: ModelSpec, init, rng) -> MeanState:
    if init == "equilibrium" or init is None:
        return equilibrium(spec)
    if init == "random":
        return sample_flow_state(spec, rng)
    grid = np.asarray(init, dtype=float)
    if grid.shape != (spec.K, spec.M):
        raise ConfigError(f"init grid must have shape (K, M) = "
                          f"({spec.K}, {spec.M}), got {grid.shape}")
    state = MeanState(grid)
    state.check(spec.alpha)
    return state


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def simulate(config: dict, out_dir: Path | str, *, seed: int | None = None,
             min_burst: int = 1) -> list[Path]:
    """Run the configured simulation(s) and write trace files.

    Stochastic mode writes a full event trace and a burst-only summary per
    run; a "p_grid" key fans out over coupling probabilities and adds the
    deterministic burst-size curve for overlay plots.  Mean-field mode
    writes sampled hybrid trajectories with pre- and post-burst rows.
    """
    out_dir = Path(out_dir)
    mode = config.get("mode")
    if mode not in ("stochastic", "meanfield"):
        raise ConfigError(f"mode must be 'stochastic' or 'meanfield', got {mode!r}")
    cfg = dict(config)
    if seed is not None:
        cfg["seed"] = seed
    if mode == "stochastic":
        return _simulate_stochastic(cfg, out_dir, min_burst)
    return _simulate_meanfield(cfg, out_dir)


def _simulate_stochastic(cfg: dict, out_dir: Path, min_burst: int) -> list[Path]:
    if cfg.get("N") is None:
        raise ConfigError("stochastic mode requires N")
    sspec = config_to_spec(cfg)
    _check_spec(sspec)
    T = float(cfg.get("T", 10.0))
    p_values = cfg.get("p_grid")
    single = p_values is None
    if single:
        p_values = [sspec.p]
    paths = []
    curve_rows = []
    for i, p in enumerate(p_values):
        sp = StochasticSpec(base=sspec.base, N=sspec.N, p=float(p),
                            seed=sspec.seed + i)
        trace = run(sp, _resolve_counts(sp, cfg.get("init")), T)
        meta = {"command": "simulate", "mode": "stochastic", "spec": sp.to_config(),
                "T": T, "init": cfg.get("init", "equilibrium"), "index": i}
        cols = ["t", "burst_size"] + _state_columns(sp.base.K, sp.base.M, "X")
        rows = ([trace.times[j], int(trace.burst_sizes[j])]
                + [int(v) for v in trace.states[j].ravel()]
                for j in range(len(trace.times)))
        paths.append(datafiles.write_table(out_dir / f"trace_{i:03d}.csv",
                                           meta, cols, rows))
        bt, bs = trace.big_bursts(max(min_burst, 1))
        paths.append(datafiles.write_table(
            out_dir / f"bursts_{i:03d}.csv",
            {**meta, "min_burst": min_burst},
            ["t", "burst_size"],
            ([t, int(s)] for t, s in zip(bt, bs))))
        beta_eff = p * sp.N
        curve_rows.append([p, beta_eff,
                           boundary_burst_size(beta_eff) if sp.base.K == 2
                           else float("nan")])
    if not single:
        paths.append(datafiles.write_table(
            out_dir / "burst_size_curve.csv",
            {"command": "simulate", "mode": "stochastic", "curve": True,
             "spec": sspec.to_config(), "p_grid": [float(p) for p in p_values]},
            ["p", "beta", "s_star"], curve_rows))
    return paths


def _trajectory_rows(traj, spec: ModelSpec, samples_per_segment: int):
    """Flow samples plus pre/post-burst rows; tau_flag 0=sample, 1=pre, 2=post."""
    n_bursts = traj.n_bursts
    burst_at_zero = n_bursts > 0 and traj.burst_times[0] == 0.0
    if burst_at_zero:
        yield [0, 0.0, 0.0, 2, traj.burst_sizes[0]] + \
            list(traj.post_burst_states[0].x.ravel())
    for si, seg in enumerate(traj.segments):
        ts = np.linspace(seg.t_start, seg.t_end, samples_per_segment + 1)[:-1] \
            if samples_per_segment > 0 else [seg.t_start]
        for t in ts:
            state = traj.state_at(float(t))
            yield [si, float(t), seg.t_end, 0, None] + list(state.x.ravel())
        bi = si + (1 if burst_at_zero else 0)
        if bi < n_bursts and abs(traj.burst_times[bi] - seg.t_end) < 1e-12:
            s = traj.burst_sizes[bi]
            yield [si, seg.t_end, seg.t_end, 1, s] + list(seg.x_end.x.ravel())
            yield [si, seg.t_end, seg.t_end, 2, s] + \
                list(traj.post_burst_states[bi].x.ravel())
        else:
            yield [si, seg.t_end, seg.t_end, 0, None] + list(seg.x_end.x.ravel())


def _simulate_meanfield(cfg: dict, out_dir: Path) -> list[Path]:
    spec = config_to_spec({k: v for k, v in cfg.items() if k not in ("N", "p", "seed")})
    _check_spec(spec)
    clock = cfg.get("clock", "unit")
    n_runs = int(cfg.get("n_runs", 1))
    samples = int(cfg.get("samples_per_segment", 40))
    max_time = cfg.get("T")
    max_bursts = cfg.get("max_bursts")
    rng = np.random.default_rng(int(cfg.get("seed", 0)))
    paths = []
    for i in range(n_runs):
        init = cfg.get("init") if n_runs == 1 else "random"
        x0 = _resolve_mean_state(spec, init, rng)
        traj = hybrid_run(x0, spec,
                          max_time=float(max_time) if max_time is not None else None,
                          max_bursts=int(max_bursts) if max_bursts is not None else None,
                          clock=clock)
        meta = {"command": "simulate", "mode": "meanfield", "spec": spec.to_config(),
                "clock": clock, "seed": int(cfg.get("seed", 0)), "index": i,
                "end_reason": traj.end_reason, "n_bursts": traj.n_bursts}
        cols = (["segment_index", "t_start", "t_end", "tau_flag", "s_star"]
                + _state_columns(spec.K, spec.M))
        paths.append(datafiles.write_table(out_dir / f"trajectory_{i:03d}.csv",
                                           meta, cols,
                                           _trajectory_rows(traj, spec, samples)))
    return paths


# ---------------------------------------------------------------------------
# compare: finite network vs hybrid limit
# ---------------------------------------------------------------------------

def compare(base: ModelSpec, n_list: list[int], *, seeds: int = 20,
            T: float | None = None, n_bursts: int = 3,
            epsilon: float | None = None, gamma: float | None = None,
            seed: int = 0, out_dir: Path | str | None = None,
            workers: int = 1, init: str = "equilibrium") -> dict:
    """Matched stochastic/deterministic runs from the same initial fraction.

    Both sides start from the same fraction grid ("equilibrium", which
    bursts immediately and synchronizes the two clocks, or "ground" with
    every neuron at level 0).  The deterministic side uses the cascade
    clock (the parametrization whose burst times the finite network
    tracks).  The j-th stochastic burst of size >= gamma*N pairs with the
    j-th deterministic burst; the sup distance is taken over the
    uniform-plus-burst-times grid with epsilon-neighborhoods of the
    stochastic burst times excised and the per-segment shift applied.
    """
    _check_spec(base)
    if base.beta <= 2.0:
        raise ConfigError("compare requires beta > 2 so that big bursts exist")
    if init not in ("equilibrium", "ground"):
        raise ConfigError(f"init must be 'equilibrium' or 'ground', got {init!r}")
    if init == "equilibrium":
        x0 = equilibrium(base)
    else:
        x0 = MeanState(np.vstack([base.alpha_arr,
                                  np.zeros((base.K - 1, base.M))]))
    probe = hybrid_run(x0, base, max_bursts=n_bursts + 1, clock="cascade")
    if probe.n_bursts < n_bursts + 1:
        raise ConfigError("horizon with the requested burst count not reachable")
    taus_all = np.asarray(probe.burst_times)
    if T is None:
        T = float(taus_all[n_bursts - 1]
                  + 0.4 * (taus_all[n_bursts] - taus_all[n_bursts - 1]))
    traj = hybrid_run(x0, base, max_time=1.05 * T, clock="cascade")
    taus = np.asarray([t for t in traj.burst_times if t <= T])
    sizes = np.asarray(traj.burst_sizes[:len(taus)])
    m_det = len(taus)
    if m_det < 1:
        raise ConfigError("no deterministic bursts inside [0, T]")
    b_min = float(sizes.min())
    if gamma is None:
        gamma = boundary_burst_size(base.beta) / 2.0 if base.K == 2 \
            else b_min / 2.0
    if gamma >= b_min:
        raise ConfigError(f"gamma exceeds b_min ({gamma} >= {b_min})")
    if epsilon is None:
        epsilon = 0.05 / base.rho_arr.min()

    grid = np.unique(np.concatenate([np.linspace(0.0, T, 1000), taus]))
    cells = [(N, j) for N in n_list for j in range(seeds)]
    args = [(base.to_config(), int(N), int(seed + 1000 * j + 1), T, gamma, init)
            for (N, j) in cells]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            raw = list(pool.map(_compare_cell, args))
    else:
        raw = [_compare_cell(a) for a in args]

    summary_rows = []
    burst_rows = []
    for (N, j), (Tjs, big_sizes, ev_times, ev_states) in zip(cells, raw):
        mm = min(len(Tjs), m_det)
        mismatch = int(len(Tjs) != m_det)
        errs = np.abs(Tjs[:mm] - taus[:mm]) if mm else np.array([np.nan])
        for k in range(mm):
            burst_rows.append([N, j, k, Tjs[k], taus[k],
                               abs(Tjs[k] - taus[k]), big_sizes[k] / N])
        keep = np.ones(len(grid), dtype=bool)
        for Tj in Tjs[:mm]:
            keep &= ~((grid > Tj - epsilon) & (grid < Tj + epsilon))
        sup = _sup_distance(grid[keep], Tjs[:mm], taus[:mm], traj,
                            ev_times, ev_states, N, x0.x)
        mean_frac = float(np.mean(big_sizes[:mm]) / N) if mm else math.nan
        summary_rows.append([N, j, m_det, len(Tjs), mm, mismatch,
                             float(errs.max()), sup, mean_frac, epsilon, gamma])
    result = {
        "T": T, "epsilon": epsilon, "gamma": gamma,
        "det_burst_times": taus.tolist(), "det_burst_sizes": sizes.tolist(),
        "summary": summary_rows, "bursts": burst_rows,
    }
    if out_dir is not None:
        meta = {"command": "compare", "spec": base.to_config(), "T": T,
                "epsilon": epsilon, "gamma": gamma, "seeds": seeds,
                "seed": seed, "n_list": [int(N) for N in n_list],
                "init": init, "det_burst_times": taus.tolist()}
        result["paths"] = [
            datafiles.write_table(
                Path(out_dir) / "compare_summary.csv", meta,
                ["N", "seed", "n_det", "n_stoch_big", "n_matched",
                 "count_mismatch", "max_bt_error", "sup_distance",
                 "mean_big_frac", "epsilon", "gamma"],
                summary_rows),
            datafiles.write_table(
                Path(out_dir) / "compare_bursts.csv", meta,
                ["N", "seed", "j", "t_stoch", "tau_det", "bt_error", "size_frac"],
                burst_rows),
        ]
    return result


def _compare_cell(args):
    cfg, N, cell_seed, T, gamma, init = args
    base = config_to_spec(cfg)
    sspec = StochasticSpec.from_model(base, N, seed=cell_seed)
    counts0 = equilibrium_counts(sspec) if init == "equilibrium" \
        else ground_counts(sspec)
    trace = run(sspec, counts0, T)
    thr = int(math.ceil(gamma * N))
    Tjs, big_sizes = trace.big_bursts(thr)
    return Tjs, big_sizes, trace.times, trace.states


def _sup_distance(ts, Tjs, taus, traj, ev_times, ev_states, N, x0_grid) -> float:
    """Max-abs gap between scaled counts and the shifted hybrid state."""
    if len(ts) == 0:
        return math.nan
    idx = np.searchsorted(ev_times, ts, side="right") - 1
    jj = np.searchsorted(Tjs, ts, side="right")
    sup = 0.0
    for t, i, j in zip(ts, idx, jj):
        phi = t - (Tjs[j - 1] - taus[j - 1]) if j > 0 else t
        phi = min(max(phi, 0.0), traj.t_end)
        xi = traj.state_at(phi).x
        counts = ev_states[i] if i >= 0 else np.rint(x0_grid * N)
        sup = max(sup, float(np.abs(counts / N - xi).max()))
    return sup


# ---------------------------------------------------------------------------
# phase diagram
# ---------------------------------------------------------------------------

def _phase_cell(args):
    cfg, n_ic, cell_seed, tol, max_iter = args
    spec = config_to_spec(cfg)
    rng = np.random.default_rng(cell_seed)
    X1 = rng.uniform(0.0, 1.0, size=(n_ic, spec.M)) * spec.alpha_arr
    _, iters, classes = limit_cycle_ensemble(spec, X1, tol=tol, max_iter=max_iter)
    counts = {cls: 0 for cls in ConvergenceClass}
    for c in classes:
        counts[c] += 1
    return counts


def phase_diagram(m_list: list[int], beta_grid, n_ic: int, *, seed: int = 0,
                  out_dir: Path | str | None = None, workers: int = 1,
                  tol: float = 1e-9, max_iter: int = 1000) -> dict:
    """Convergence-class fractions of the burst-to-burst map over a beta grid.

    For each M the weights and rates are drawn once at random; each (M, beta)
    cell then classifies n_ic uniform starts.  Rows are ordered by (M, beta)
    regardless of worker scheduling.
    """
    beta_grid = [float(b) for b in beta_grid]
    cells = []
    for M in m_list:
        rng = np.random.default_rng(np.random.SeedSequence([seed, M]))
        alpha = rng.dirichlet(np.ones(M))
        rho = rng.uniform(0.5, 2.0, M)
        for bi, beta in enumerate(beta_grid):
            spec = ModelSpec(2, M, alpha, rho, beta)
            cell_seed = seed * 1000003 + M * 1009 + bi
            cells.append((M, beta, spec.to_config(), cell_seed))
    args = [(cfg, n_ic, cs, tol, max_iter) for (_, _, cfg, cs) in cells]
    if n_ic == 0:
        raw = [{cls: 0 for cls in ConvergenceClass} for _ in cells]
    elif workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            raw = list(pool.map(_phase_cell, args))
    else:
        raw = [_phase_cell(a) for a in args]
    rows = []
    for (M, beta, _, _), counts in zip(cells, raw):
        denom = max(n_ic, 1)
        rows.append([beta, M, n_ic,
                     counts[ConvergenceClass.MONOTONE] / denom,
                     counts[ConvergenceClass.NON_MONOTONE] / denom,
                     counts[ConvergenceClass.NON_CONVERGENT] / denom])
    rows.sort(key=lambda r: (r[1], r[0]))
    result = {"rows": rows}
    if out_dir is not None:
        meta = {"command": "phase-diagram", "m_list": [int(m) for m in m_list],
                "beta_grid": beta_grid, "n_ic": n_ic, "seed": seed,
                "tol": tol, "max_iter": max_iter}
        result["paths"] = [datafiles.write_table(
            Path(out_dir) / "phase_diagram.csv", meta,
            ["beta", "M", "n_initial_conditions", "fraction_monotone",
             "fraction_nonmonotone", "fraction_nonconvergent"], rows)]
    return result


# ---------------------------------------------------------------------------
# stability sweep
# ---------------------------------------------------------------------------

def stability_sweep(m_list: list[int], trials: int, *, seed: int = 0,
                    out_dir: Path | str | None = None) -> dict:
    """Random stopped-flow Jacobians; asserts the zero-sum norm bound held.

    Each trial draws a spec (beta in (2, 6], random weights and rates) and a
    start inside the absorbing set on the flow side, then reports the
    restricted norm, the jump modulus, and their product.
    """
    rows = []
    violations = 0
    for M in m_list:
        for i in range(trials):
            trial_seed = seed * 1000003 + int(M) * 1009 + i
            rng = np.random.default_rng(trial_seed)
            beta = float(rng.uniform(2.05, 6.0))
            alpha = rng.dirichlet(np.ones(M))
            rho = rng.uniform(0.3, 3.0, M)
            spec = ModelSpec(2, M, alpha, rho, beta)
            x1 = rng.uniform(0.0, 1.0, M) * alpha / 2.0
            if x1.sum() >= 1.0 / beta:
                x1 *= 0.95 / (beta * x1.sum())
            x0 = MeanState(np.vstack([alpha - x1, x1]))
            rep = stopped_flow_jacobian(x0, spec)
            bound = 1.0 + math.sqrt(M) / 2.0
            if not rep.restricted_norm < bound:
                violations += 1
            if M == 2 and not rep.restricted_norm < 1.0:
                violations += 1
            rows.append([beta, M, trial_seed, rep.restricted_norm,
                         rep.g_modulus, rep.product, ""])
    result = {"rows": rows, "violations": violations}
    if out_dir is not None:
        meta = {"command": "stability-sweep", "m_list": [int(m) for m in m_list],
                "trials": trials, "seed": seed, "violations": violations}
        result["paths"] = [datafiles.write_table(
            Path(out_dir) / "stability_sweep.csv", meta,
            ["beta", "M", "seed", "restricted_norm", "g_modulus",
             "product", "class"], rows)]
    return result
