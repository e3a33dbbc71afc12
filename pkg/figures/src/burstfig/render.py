"""The five figure kinds, rendered deterministically from data files.

Conventions: stochastic data in blue, deterministic overlays in red,
everything else default matplotlib.  Rendering the same inputs twice
produces identical image bytes (fixed style, no timestamps or version
strings embedded).
"""

from __future__ import annotations

import glob as globmod
import json
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .reader import SchemaError, Table, read_table

STOCH_BLUE = "#74a9cf"
DET_RED = "#d62728"

KINDS = ("trace", "burst_vs_p", "trajectory", "convergence", "phase")


class EmptyInputError(ValueError):
    """No input files matched the recipe patterns."""


@dataclass
class FigureRecipe:
    kind: str
    inputs: list[str]
    output: str
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; "
                             f"expected one of {KINDS}")
        if isinstance(self.inputs, str):
            self.inputs = [self.inputs]

    @classmethod
    def load(cls, path: Path | str) -> "FigureRecipe":
        doc = json.loads(Path(path).read_text())
        return cls(kind=doc["kind"], inputs=doc["inputs"], output=doc["output"],
                   options=doc.get("options", {}))


def _expand(patterns: list[str]) -> list[Path]:
    paths: list[Path] = []
    for pat in patterns:
        matches = sorted(globmod.glob(pat))
        if matches:
            paths.extend(Path(m) for m in matches)
        elif Path(pat).exists():
            paths.append(Path(pat))
    return paths


def _save(fig, output: str) -> Path:
    out = Path(output)
    out.parent.mkdir(parents=True, exist_ok=True)
    # strip the library version string so identical inputs give identical bytes
    fig.savefig(out, dpi=110, metadata={"Software": None})
    plt.close(fig)
    return out


def _network_size(table: Table) -> float:
    spec = table.metadata.get("spec", {})
    return float(spec.get("N", 1.0))


def _render_trace(tables: list[Table], options: dict):
    """Burst sizes over time, one panel per run (varying coupling)."""
    fig, axes = plt.subplots(len(tables), 1, figsize=(8, 2.2 * len(tables)),
                             sharex=True, squeeze=False)
    for ax, table in zip(axes[:, 0], tables):
        table.require("t", "burst_size")
        t = table.column("t")
        size = table.column("burst_size") / _network_size(table)
        ax.vlines(t, 0.0, size, color=STOCH_BLUE, linewidth=0.6)
        p = table.metadata.get("spec", {}).get("p")
        if p is not None:
            ax.set_ylabel(f"p = {p:g}")
        ax.set_ylim(bottom=0.0)
    axes[-1, 0].set_xlabel("t")
    fig.suptitle("burst sizes (fraction of network)")
    return fig


def _render_burst_vs_p(tables: list[Table], options: dict):
    """Burst-size scatter against coupling, deterministic fraction overlaid."""
    curves = [t for t in tables if t.metadata.get("curve")]
    scatters = [t for t in tables if not t.metadata.get("curve")]
    if not scatters:
        raise SchemaError("burst_vs_p needs at least one burst summary file")
    big_fraction = float(options.get("big_fraction", 0.1))
    fig, ax = plt.subplots(figsize=(7, 4.5))
    means = []
    for table in scatters:
        table.require("t", "burst_size")
        p = table.metadata.get("spec", {}).get("p")
        if p is None:
            raise SchemaError(f"{table.path}: metadata lacks spec.p")
        N = _network_size(table)
        frac = table.column("burst_size") / N
        ax.plot(np.full(len(frac), p), frac, ".", color=STOCH_BLUE,
                markersize=2.5, alpha=0.5)
        big = frac[frac >= big_fraction]
        if len(big):
            means.append((p, big.mean(), big.std()))
    if means:
        ps, ms, sds = zip(*sorted(means))
        ax.errorbar(ps, ms, yerr=sds, fmt="o", color="k", capsize=3,
                    markersize=4, label="big-burst mean +/- sd")
    for curve in curves:
        curve.require("p", "s_star")
        order = np.argsort(curve.column("p"))
        ax.plot(curve.column("p")[order], curve.column("s_star")[order],
                "-", color=DET_RED, linewidth=2, label="deterministic fraction")
    ax.set_xlabel("p")
    ax.set_ylabel("burst size / N")
    ax.legend(loc="upper left")
    return fig


def _render_trajectory(tables: list[Table], options: dict):
    """Level-1 occupancy fractions over time, one panel per run."""
    fig, axes = plt.subplots(1, len(tables), figsize=(5.5 * len(tables), 4),
                             squeeze=False)
    for ax, table in zip(axes[0], tables):
        table.require("t_start", "tau_flag")
        cols = [c for c in table.state_columns() if c.startswith("x_1_")]
        if not cols:
            raise SchemaError(f"{table.path}: missing column 'x_1_0'")
        t = table.column("t_start")
        flags = table.column("tau_flag")
        for c in cols:
            y = table.column(c).copy()
            # break the line at jumps: post-burst rows start a new branch
            tt = t.copy()
            breaks = np.nonzero(flags == 2)[0]
            tt = np.insert(tt, breaks, np.nan)
            y = np.insert(y, breaks, np.nan)
            ax.plot(tt, y, linewidth=1.2, label=c.replace("x_1_", "group "))
        beta = table.metadata.get("spec", {}).get("beta")
        ax.set_title(f"beta = {beta}" if beta is not None else "")
        ax.set_xlabel("t")
        ax.set_ylabel("level-1 fraction")
        ax.legend(fontsize=8)
    return fig


def _render_convergence(tables: list[Table], options: dict):
    """Post-burst level-1 fractions per burst index, all runs overlaid."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    n_groups = 0
    for table in tables:
        table.require("tau_flag")
        cols = [c for c in table.state_columns() if c.startswith("x_1_")]
        if not cols:
            raise SchemaError(f"{table.path}: missing column 'x_1_0'")
        n_groups = max(n_groups, len(cols))
        flags = table.column("tau_flag")
        post = flags == 2
        for gi, c in enumerate(cols):
            y = table.column(c)[post]
            ax.plot(np.arange(1, len(y) + 1), y, "-o", markersize=3,
                    linewidth=0.9, color=f"C{gi}", alpha=0.7)
    for gi in range(n_groups):
        ax.plot([], [], "-o", color=f"C{gi}", label=f"group {gi}")
    ax.set_xlabel("burst index")
    ax.set_ylabel("post-burst level-1 fraction")
    ax.legend(fontsize=8)
    return fig


def _render_phase(tables: list[Table], options: dict):
    """Stacked convergence-class fractions against the coupling."""
    fig = None
    for table in tables:
        table.require("beta", "M", "fraction_monotone", "fraction_nonmonotone",
                      "fraction_nonconvergent")
        Ms = sorted(set(table.column("M").astype(int)))
        fig, axes = plt.subplots(1, len(Ms), figsize=(5.5 * len(Ms), 4),
                                 squeeze=False)
        for ax, M in zip(axes[0], Ms):
            sel = table.column("M").astype(int) == M
            beta = table.column("beta")[sel]
            order = np.argsort(beta)
            beta = beta[order]
            mono = table.column("fraction_monotone")[sel][order]
            nonm = table.column("fraction_nonmonotone")[sel][order]
            nonc = table.column("fraction_nonconvergent")[sel][order]
            ax.stackplot(beta, mono, nonm, nonc,
                         labels=["monotone", "non-monotone", "non-convergent"],
                         colors=["#2c7fb8", "#a6bddb", "#de2d26"])
            ax.set_xlabel("beta")
            ax.set_ylabel("fraction of starts")
            ax.set_title(f"M = {M}")
            ax.set_ylim(0, 1)
            ax.legend(loc="lower right", fontsize=8)
        break      # one phase file defines the figure
    return fig


_RENDERERS = {
    "trace": _render_trace,
    "burst_vs_p": _render_burst_vs_p,
    "trajectory": _render_trajectory,
    "convergence": _render_convergence,
    "phase": _render_phase,
}


def render(recipe: FigureRecipe) -> Path:
    """Render one figure; raises EmptyInputError / SchemaError on bad inputs."""
    paths = _expand(recipe.inputs)
    if not paths:
        raise EmptyInputError(f"no inputs matched {recipe.inputs}")
    tables = [read_table(p) for p in paths]
    fig = _RENDERERS[recipe.kind](tables, recipe.options)
    return _save(fig, recipe.output)
