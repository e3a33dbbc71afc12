"""Finite-network behavior across coupling strengths.

Simulates N = 1000 neurons in ten subpopulations at several pairwise
probabilities.  Weak coupling gives a steady hum of single firings; strong
coupling locks the network into periodic system-size bursts.
"""

import numpy as np

import burstnet as bn

M, N = 10, 1000
rng = np.random.default_rng(0)
alpha = np.full(M, 1.0 / M)
rho = rng.uniform(0.5, 2.0, M)

for p in (0.001, 0.0022, 0.004):
    base = bn.ModelSpec(2, M, alpha, rho, p * N)
    sspec = bn.StochasticSpec(base=base, N=N, p=p, seed=42)
    trace = bn.run(sspec, bn.equilibrium_counts(sspec), 20.0)
    big_t, big_s = trace.big_bursts(N // 10)
    line = f"p = {p:.4f} (beta = {p * N:.1f}): {len(trace.times):6d} events"
    if len(big_t):
        gaps = np.diff(big_t)
        line += (f", {len(big_t):3d} big bursts, mean size {big_s.mean() / N:.3f}"
                 f" of the network")
        if len(gaps):
            line += f", period {gaps.mean():.3f} +/- {gaps.std():.3f}"
    else:
        line += ", no big bursts (subcritical)"
    print(line)

print("\nmean-field burst fraction for comparison:")
for p in (0.0022, 0.004):
    print(f"  beta = {p * N:.1f}: s* = {bn.boundary_burst_size(p * N):.4f}")
