"""Command-line harness: simulate, compare, phase-diagram, stability-sweep.

Exit codes: 0 success, 2 configuration error, 3 assertion failure (a claimed
bound was violated by the data).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .experiments import ConfigError, compare, phase_diagram, simulate, stability_sweep
from .model import config_to_spec

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ASSERTION = 3


def _load_config(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}: JSON parse error at line {exc.lineno}, column {exc.colno}: "
            f"{exc.msg}") from exc


def _int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _cmd_simulate(args) -> int:
    cfg = _load_config(args.config)
    paths = simulate(cfg, args.out, seed=args.seed, min_burst=args.min_burst)
    spec = config_to_spec({**cfg, **({"seed": args.seed} if args.seed is not None else {})}
                          if cfg.get("mode") == "stochastic" and cfg.get("N") else cfg)
    print(f"resolved spec: {json.dumps(spec.to_config(), sort_keys=True)}")
    for p in paths:
        print(f"wrote {p}")
    return EXIT_OK


def _cmd_compare(args) -> int:
    cfg = _load_config(args.config)
    base = config_to_spec({k: v for k, v in cfg.items() if k not in ("N", "p", "seed")})
    result = compare(base, _int_list(args.n_list), seeds=args.seeds,
                     T=args.T, n_bursts=args.n_bursts, epsilon=args.epsilon,
                     gamma=args.gamma, seed=args.seed, out_dir=args.out,
                     workers=args.workers)
    print(f"T={result['T']:.6g} gamma={result['gamma']:.6g} "
          f"epsilon={result['epsilon']:.6g} "
          f"det bursts: {len(result['det_burst_times'])}")
    for p in result.get("paths", []):
        print(f"wrote {p}")
    return EXIT_OK


def _cmd_phase_diagram(args) -> int:
    import numpy as np
    betas = np.linspace(args.beta_min, args.beta_max, args.beta_steps)
    result = phase_diagram(_int_list(args.m_list), betas, args.n_ic,
                           seed=args.seed, out_dir=args.out, workers=args.workers)
    n_bad = sum(1 for r in result["rows"] if r[5] > 0)
    print(f"{len(result['rows'])} cells, {n_bad} with non-convergent starts")
    for p in result.get("paths", []):
        print(f"wrote {p}")
    return EXIT_OK


def _cmd_stability_sweep(args) -> int:
    result = stability_sweep(_int_list(args.m_list), args.trials,
                             seed=args.seed, out_dir=args.out)
    print(f"{len(result['rows'])} trials, {result['violations']} bound violations")
    for p in result.get("paths", []):
        print(f"wrote {p}")
    if result["violations"] > 0:
        print("restricted-norm bound violated", file=sys.stderr)
        return EXIT_ASSERTION
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="burstnet",
        description="Bursting-network simulations and hybrid-limit experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one configured simulation")
    p.add_argument("--config", required=True, help="JSON config path")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override config seed")
    p.add_argument("--min-burst", type=int, default=1,
                   help="burst-summary size threshold")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("compare", help="finite network vs hybrid limit")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--n-list", required=True, help="comma-separated network sizes")
    p.add_argument("--seeds", type=int, default=20, help="runs per network size")
    p.add_argument("--T", type=float, default=None)
    p.add_argument("--n-bursts", type=int, default=3,
                   help="deterministic bursts the horizon must contain when --T is unset")
    p.add_argument("--epsilon", type=float, default=None,
                   help="excision half-width around stochastic burst times")
    p.add_argument("--gamma", type=float, default=None,
                   help="big-burst threshold fraction")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("phase-diagram", help="convergence-class fractions over beta")
    p.add_argument("--out", required=True)
    p.add_argument("--m-list", required=True)
    p.add_argument("--beta-min", type=float, default=2.005)
    p.add_argument("--beta-max", type=float, default=2.5)
    p.add_argument("--beta-steps", type=int, default=50)
    p.add_argument("--n-ic", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=_cmd_phase_diagram)

    p = sub.add_parser("stability-sweep", help="random stopped-flow stretch reports")
    p.add_argument("--out", required=True)
    p.add_argument("--m-list", required=True)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_stability_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
