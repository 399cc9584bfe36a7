"""n*(v) is non-monotone: sweep the annealing rate, locate the optimum, compare with the closed forms."""
import numpy as np

from qa_kinetics import ModelParams
from qa_kinetics.annealing import max_onset_rate, optimum, scaled_curves, solve_crossover

p = ModelParams()
opt = optimum(p)
print(f"mu = {opt.mu:.1f}  x_opt = {opt.x_opt:.3f}  n_opt = {opt.n_opt:.3e}")
print(f"v_opt (x0 = x_opt - 1) = {opt.v_opt:.3e}   expanded closed form = {opt.v_opt_closed:.3e}")
print(f"direct minimization:   x* = {opt.x_opt_numeric:.3f}  n* = {opt.n_opt_numeric:.3e}  v = {opt.v_opt_numeric:.3e}")

vs = np.geomspace(opt.v_opt / 30, min(30 * opt.v_opt, 0.9 * max_onset_rate(p)), 25)
print("\n      v         g0      g*      n*     valid")
for v in vs:
    r = solve_crossover(v, p)
    print(f"{v:10.3e}  {r.g0:.4f}  {r.g_star:.4f}  {r.n_star:.3e}  {int(r.valid)}")

# scaled family
for c in scaled_curves((8, 9, 10, 11)):
    x0, xs, vm, nm = c.minimum()
    L = c.log_mu
    print(f"ln mu = {L:g}: min at x* = {xs:.3f} (x_opt = {L + 1 - np.log(L):.3f}), n_scaled = {nm:.2f}")
