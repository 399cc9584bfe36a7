"""Density along the annealing run at v = 2.85e-7: rate-equation ODE, QBE and the equilibrium curve.

Run:  python3 demos/annealing_density.py [outdir]
Writes annealing_density.csv (and a png if matplotlib is around).
"""
import sys
from pathlib import Path

import numpy as np

from qa_kinetics import ModelParams, Schedule
from qa_kinetics.annealing import integrate_density, solve_g0
from qa_kinetics.io import write_csv
from qa_kinetics.qbe import evolve, fermi_dirac_state

out = Path(sys.argv[1] if len(sys.argv) > 1 else ".")
p = ModelParams()  # alpha=0.06, beta=25
v = 2.85e-7
sched = Schedule(1.2, v, 0.6)

g0 = solve_g0(v, p, "exact")
ode = integrate_density(sched, p, "exact")
qb, _ = evolve(fermi_dirac_state(1.2, p), sched, p, output_stride=2)

print(f"g0 = {g0:.4f}")
print(f"ODE leaves 2 n_th at g = {ode.departure_g():.4f}, QBE at g = {qb.departure_g():.4f}")
print(f"final density: ODE {ode.n_mean[-1]:.3e}, QBE {qb.n_mean[-1]:.3e}, n_th {ode.n_th[-1]:.3e}")
print(f"crossover to diffusion-limited recombination at g* = {ode.meta['g_star']:.4f}")

# QBE on the ODE's g mesh for a single table
n_qbe = np.interp(ode.g[::-1], qb.g[::-1], qb.n_mean[::-1])[::-1]
write_csv(out / "annealing_density.csv", "annealing_density",
          {"g": ode.g, "n_ode": ode.n_mean, "n_qbe": n_qbe, "n_th": ode.n_th})

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    sys.exit(0)
fig, ax = plt.subplots(figsize=(5, 3.6))
ax.semilogy(ode.g, ode.n_th, "k--", lw=1, label="n_th")
ax.semilogy(ode.g, ode.n_mean, "k", label="rate equation")
ax.semilogy(qb.g, qb.n_mean, "r:", label="QBE")
ax.axvline(g0, color="0.6", lw=0.8)
ax.set_xlabel("g")
ax.set_ylabel("<n>")
ax.invert_xaxis()
ax.legend(frameon=False)
fig.tight_layout()
fig.savefig(out / "annealing_density.png", dpi=150)
