"""Lattice A + A -> 0: free 1D annihilation, Glauber kinks and diffusion shutting off in time.

Slow-ish (a minute or so): L = 4096, 32 replicas each.
"""
import numpy as np

from qa_kinetics.annealing import glauber_time
from qa_kinetics.lattice import (
    constant_hooks,
    decaying_hooks,
    fit_power_law,
    glauber_kink_mc,
    kmc_time_dependent,
    touching_crossover,
)

L, reps = 4096, 32
t = np.geomspace(1, 1000, 60)

res = kmc_time_dependent(L, 0.5, constant_hooks(1.0, 1.0), 1, 1000.0, reps, t_samples=t)
print(f"diffusion-limited exponent: {fit_power_law(res.t, res.n_mean, 33, 1000):.3f}  (expect -1/2)")

gl = glauber_kink_mc(L, 0.5, 1.0, 2, 1000.0, reps, t_samples=t)
print(f"Glauber t(n = 0.05) = {gl.time_to_density(0.05):.2f}, 1/(8 pi n^2) = {glauber_time(0.05):.2f}")

# hop rate decaying as (1 + t/t0)^-3/2: mixing stops and the density freezes
n0, w = 0.2, 0.05
hooks = decaying_hooks(1.0, 100.0, w)
tc = touching_crossover(hooks, lambda s: n0 / (1 + w * n0 * s), 1e5)
dec = kmc_time_dependent(L, n0, hooks, 3, 1e5, reps, t_samples=np.geomspace(1, 1e5, 40))
mf = n0 / (1 + w * n0 * dec.t)
for ti, n, e, m in zip(dec.t[::4], dec.n_mean[::4], dec.n_stderr[::4], mf[::4]):
    print(f"t = {ti:9.1f}   n = {n:.4f} +- {e:.4f}   mean field {m:.4f}")
print(f"touching: tau* = {tc.t_star:.1f}, t_touch = {tc.t_touch:.1f}, n* = {tc.n_star:.4f}, k = {tc.k_implied:.2f}")
print(f"late-time plateau / n* = {dec.n_mean[-1] / tc.n_star:.2f}")
