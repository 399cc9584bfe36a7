"""Command-line driver: figure data, sweeps and diagnostics as CSV files.

Reduced units throughout: hbar = J = 1, beta = 2J/k_B T, times in hbar/J,
rates (v, w, hop rates) in J/hbar, bath frequencies in units of 2J/hbar.
"""
from __future__ import annotations

import argparse
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from . import annealing, lattice, qbe, renorm
from .chain import AccuracyWarning, ModelParams
from .io import read_config, report_text, write_csv
from .rates import ConvergenceError
from .schedule import Schedule

EXIT_OK, EXIT_USAGE, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4

log = logging.getLogger("qa_kinetics")


class UsageError(ValueError):
    pass


def _common(p):
    g = p.add_argument_group("model (reduced units, hbar = J = 1)")
    g.add_argument("--alpha", type=float, default=0.06, help="Ohmic coupling (dimensionless), default 0.06")
    g.add_argument("--beta", type=float, default=25.0, help="inverse temperature 2J/k_B T, default 25")
    g.add_argument("--omega-c", type=float, default=20.0, help="bath cutoff, units of 2J/hbar, default 20")
    g.add_argument("--omega-cutoff", type=float, default=10.0,
                   help="polaron-transformation cutoff, units of 2J/hbar, default 10")
    g.add_argument("--n-sites", type=int, default=1024, help="momentum grid size N (even), default 1024")
    s = p.add_argument_group("schedule and analysis")
    s.add_argument("--v", type=float, default=2.85e-7, help="annealing rate |dg/dt| in J/hbar, default 2.85e-7")
    s.add_argument("--g-init", type=float, default=1.2, help="initial transverse field, default 1.2")
    s.add_argument("--g-final", type=float, default=0.6, help="final transverse field, default 0.6")
    s.add_argument("--k-order", type=float, default=1.0, help="O(1) constant k in n* = k w / D, default 1")
    s.add_argument("--rate-source", choices=("exact", "asymptotic"), default=None,
                   help="band sums or closed forms for w(g), n_th(g); command-specific default")
    s.add_argument("--log-mu", type=float, action="append", default=None,
                   help="ln(mu) of a scaled curve (repeatable), default 8 9 10 11")
    o = p.add_argument_group("run control")
    o.add_argument("--seed", type=int, default=12345, help="64-bit RNG seed, default 12345")
    o.add_argument("--out", type=Path, default=Path("."), help="output directory, default .")
    o.add_argument("--config", type=Path, default=None, help="key = value file; explicit flags override it")
    o.add_argument("-q", "--quiet", action="store_true", help="suppress accuracy warnings")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qa-kinetics",
        description=__doc__.split("\n\n")[0] + " " + __doc__.split("\n\n")[1].replace("\n", " "),
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fig1a", help="density vs g along a linear anneal (fig1a.csv)")
    _common(p)
    p.add_argument("--n-out", type=int, default=600, help="number of output rows")

    p = sub.add_parser("fig1b", help="scaled n*(v) curves for several ln(mu) (fig1b.csv)")
    _common(p)
    p.add_argument("--n-points", type=int, default=489, help="points per curve")

    p = sub.add_parser("sweep", help="crossover reports over a log-spaced range of v (sweep.csv)")
    _common(p)
    p.add_argument("--v-min", type=float, default=None, help="smallest v, J/hbar (default v_opt/30)")
    p.add_argument("--v-max", type=float, default=None, help="largest v, J/hbar (default 30 v_opt)")
    p.add_argument("--n-v", type=int, default=41, help="number of rates")

    p = sub.add_parser("qbe", help="quantum Boltzmann equation along the schedule (qbe.csv)")
    _common(p)
    p.add_argument("--output-stride", type=int, default=1, help="record every n-th accepted step")
    p.add_argument("--rtol", type=float, default=1e-8, help="relative tolerance of the stiff integrator")

    p = sub.add_parser("kmc", help="A + A -> 0 kinetic Monte Carlo on a ring (kmc.csv)")
    _common(p)
    p.add_argument("--hooks", choices=("constant", "decaying", "model_g_schedule"), default="constant",
                   help="rate schedule")
    p.add_argument("--hop", type=float, default=1.0, help="total hop rate per particle, 1/time (D = hop/2)")
    p.add_argument("--react", type=float, default=1.0, help="mean-field pair rate w, sites/time")
    p.add_argument("--t0", type=float, default=100.0, help="decay time of the 'decaying' hop rate")
    p.add_argument("--time-scale", type=float, default=1.0, help="model time per lattice time (model_g_schedule)")
    p.add_argument("--length", type=int, default=4096, help="ring length L in sites")
    p.add_argument("--density", type=float, default=0.5, help="initial particle density per site")
    p.add_argument("--horizon", type=float, default=1000.0, help="simulated time")
    p.add_argument("--replicas", type=int, default=32, help="independent seeds")

    p = sub.add_parser("renorm", help="polaronic shift and mixing term (renorm.csv)")
    _common(p)
    p.add_argument("--g", type=float, default=0.95, help="transverse field")
    p.add_argument("--eps-max", type=float, default=0.3, help="upper band energy of the linear-fit window")

    p = sub.add_parser("optimum", help="optimal annealing rate and comparisons (stdout)")
    _common(p)
    return parser


def _explicit_dests(parser, argv):
    """Destinations given explicitly on the command line."""
    sub = parser._subparsers._group_actions[0].choices[argv[0]] if argv and not argv[0].startswith("-") else None
    if sub is None:
        return set()
    found = set()
    for action in sub._actions:
        for opt in action.option_strings:
            if any(a == opt or a.startswith(opt + "=") for a in argv):
                found.add(action.dest)
    return found


def parse_args(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config is not None:
        cfg = read_config(args.config)
        explicit = _explicit_dests(parser, argv)
        for key, raw in cfg.items():
            if key in explicit:
                continue
            if not hasattr(args, key):
                raise UsageError(f"unknown config key {key!r}")
            cur = getattr(args, key)
            if key == "log_mu":
                setattr(args, key, [float(x) for x in raw.replace(",", " ").split()])
            elif isinstance(cur, bool):
                setattr(args, key, raw.lower() in ("1", "true", "yes"))
            elif isinstance(cur, int):
                setattr(args, key, int(raw))
            elif isinstance(cur, float) or cur is None and key in ("v_min", "v_max"):
                setattr(args, key, float(raw))
            elif isinstance(cur, Path) or key == "out":
                setattr(args, key, Path(raw))
            else:
                setattr(args, key, raw)
    return args


def _params(args) -> ModelParams:
    try:
        return ModelParams(alpha=args.alpha, beta=args.beta, omega_c=args.omega_c,
                           omega_cutoff=args.omega_cutoff, n_sites=args.n_sites)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _schedule(args) -> Schedule:
    try:
        return Schedule(args.g_init, args.v, args.g_final)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _emit(record: dict):
    sys.stdout.write(report_text(record))


def cmd_fig1a(args):
    params = _params(args)
    sched = _schedule(args)
    src = args.rate_source or "exact"
    traj = annealing.integrate_density(sched, params, src, args.k_order, n_out=args.n_out)
    g0 = annealing.solve_g0(sched.v, params, src)
    cross = annealing.solve_crossover(sched.v, params, args.k_order, rate_source_kind=src)
    write_csv(args.out / "fig1a.csv", "fig1a", {"g": traj.g, "n_mean": traj.n_mean, "n_th": traj.n_th})
    _emit({"command": "fig1a", "rate_source": src, "v": sched.v, "g0": g0, "g_star": cross.g_star,
           "x0": cross.x0, "x_star": cross.x_star, "n_star": cross.n_star, "crossover_valid": cross.valid,
           "g_star_event": traj.meta["g_star"], "n_star_event": traj.meta["n_star"],
           "g_departure_2x": traj.departure_g(2.0), "n_final": traj.n_mean[-1], "g_start": traj.meta["g_start"],
           "file": args.out / "fig1a.csv"})


def cmd_fig1b(args):
    params = _params(args)
    log_mu = args.log_mu or [8.0, 9.0, 10.0, 11.0]
    x0 = np.linspace(0.6, 25.0, args.n_points)
    curves = annealing.scaled_curves(log_mu, beta=params.beta, x0=x0)
    cols = {"log_mu": [], "v_scaled": [], "n_scaled": [], "valid_flag": []}
    rec = {"command": "fig1b"}
    for c in curves:
        cols["log_mu"].append(np.full(c.x0.shape, c.log_mu))
        cols["v_scaled"].append(c.v_scaled)
        cols["n_scaled"].append(c.n_scaled)
        cols["valid_flag"].append(c.valid.astype(int))
        x0m, xs, vm, nm = c.minimum()
        tag = f"{c.log_mu:g}"
        rec[f"x_star_min[{tag}]"] = xs
        rec[f"v_scaled_min[{tag}]"] = vm
        rec[f"n_scaled_min[{tag}]"] = nm
        L = c.log_mu
        rec[f"x_opt[{tag}]"] = L + 1 - np.log(L)
    cols = {k: np.concatenate(v) for k, v in cols.items()}
    write_csv(args.out / "fig1b.csv", "fig1b", cols)
    rec["file"] = args.out / "fig1b.csv"
    _emit(rec)


def cmd_sweep(args):
    params = _params(args)
    src = args.rate_source or "asymptotic"
    opt = annealing.optimum(params, args.k_order, rate_source_kind=src)
    v_min = args.v_min or opt.v_opt / 30
    v_max = args.v_max or min(opt.v_opt * 30, 0.9 * annealing.max_onset_rate(params, src))
    if not 0 < v_min < v_max:
        raise UsageError("need 0 < v-min < v-max")
    vs = np.geomspace(v_min, v_max, args.n_v)
    rows = [annealing.solve_crossover(v, params, args.k_order, rate_source_kind=src) for v in vs]
    cols = {name: [getattr(r, name) for r in rows]
            for name in ("v", "g0", "g_star", "x0", "x_star", "n_star", "n_star_frozen")}
    cols["valid_flag"] = [int(r.valid) for r in rows]
    write_csv(args.out / "sweep.csv", "sweep", cols)
    i = int(np.argmin(cols["n_star"]))
    _emit({"command": "sweep", "rate_source": src, "n_v": len(vs), "v_at_min_n_star": vs[i],
           "min_n_star": cols["n_star"][i], "file": args.out / "sweep.csv"})


def cmd_qbe(args):
    params = _params(args)
    sched = _schedule(args)
    init = qbe.fermi_dirac_state(sched.g_initial, params)
    traj, final = qbe.evolve(init, sched, params, output_stride=args.output_stride, rtol=args.rtol)
    write_csv(args.out / "qbe.csv", "qbe", {"t": traj.t, "g": traj.g, "n_mean": traj.n_mean,
                                            "n_th_exact": traj.n_th, "n_th_asym": traj.n_th_asym})
    try:
        g0 = annealing.solve_g0(sched.v, params, "exact")
    except annealing.NoRootError:
        g0 = float("nan")  # rate above the onset peak: no quasi-static regime
    _emit({"command": "qbe", "v": sched.v, "g0": g0, "g_departure_2x": traj.departure_g(2.0),
           "n_final": traj.n_mean[-1], "steps": traj.meta["steps"],
           "bound_violations": traj.meta["bound_violations"], "file": args.out / "qbe.csv"})


def cmd_kmc(args):
    if args.hooks == "constant":
        hooks = lattice.constant_hooks(args.hop, args.react)
    elif args.hooks == "decaying":
        hooks = lattice.decaying_hooks(args.hop, args.t0, args.react)
    else:
        hooks = lattice.model_g_schedule_hooks(_params(args), args.g_init, args.v, time_scale=args.time_scale)
    if args.replicas < 2:
        raise UsageError("need at least 2 replicas")
    res = lattice.kmc_time_dependent(args.length, args.density, hooks, args.seed, args.horizon, args.replicas)
    write_csv(args.out / "kmc.csv", "kmc", res.columns())
    rec = {"command": "kmc", "hooks": args.hooks, "length": args.length, "replicas": args.replicas,
           "n_final": res.n_mean[-1], "n_final_stderr": res.n_stderr[-1]}
    try:
        rec["decay_exponent"] = lattice.fit_power_law(res.t, res.n_mean, args.horizon / 30, args.horizon)
    except ValueError:
        rec["decay_exponent"] = float("nan")
    rec["file"] = args.out / "kmc.csv"
    _emit(rec)


def cmd_renorm(args):
    params = _params(args)
    res = renorm.renormalize(args.g, params, eps_max=args.eps_max)
    W, factor = renorm.ising_renorm_factor(params.alpha, params.omega_c, params.omega_cutoff)
    write_csv(args.out / "renorm.csv", "renorm", {"k": res.k, "eps_k": res.eps, "sigma": res.sigma,
                                                  "sigma_mix": res.sigma_mix})
    _emit({"command": "renorm", "g": args.g, "sigma0": res.sigma0, "slope_C": res.slope_C,
           "fit_residual": res.residual, "W": W, "ising_factor": factor, "file": args.out / "renorm.csv"})


def cmd_optimum(args):
    params = _params(args)
    src = args.rate_source or "asymptotic"
    opt = annealing.optimum(params, args.k_order, rate_source_kind=src)
    kz = annealing.kz_comparison(params, k_order=args.k_order, rate_source_kind=src)
    _emit({"command": "optimum", "alpha": params.alpha, "beta": params.beta, "k_order": args.k_order,
           "mu": opt.mu, "x_opt": opt.x_opt, "n_opt": opt.n_opt, "v_opt": opt.v_opt,
           "v_opt_closed": opt.v_opt_closed, "x_opt_numeric": opt.x_opt_numeric,
           "n_opt_numeric": opt.n_opt_numeric, "v_opt_numeric": opt.v_opt_numeric, "valid": opt.valid,
           "v_kz": kz.v_kz, "v_opt_over_v_kz": kz.ratio,
           "t_class_v_opt": annealing.glauber_time(opt.n_opt, 1.0) * opt.v_opt})


COMMANDS = {"fig1a": cmd_fig1a, "fig1b": cmd_fig1b, "sweep": cmd_sweep, "qbe": cmd_qbe, "kmc": cmd_kmc,
            "renorm": cmd_renorm, "optimum": cmd_optimum}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        args = parse_args(argv)
    except SystemExit as exc:  # argparse usage errors and --help
        return int(exc.code or 0)
    except (UsageError, ValueError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    if args.quiet:
        warnings.simplefilter("ignore", AccuracyWarning)
    try:
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (RuntimeError, ArithmeticError, ValueError, ConvergenceError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
