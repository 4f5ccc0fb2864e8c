"""Command line entry point: ``rksampling <subcommand> ...``."""

from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path

from . import __version__
from .config import ExperimentConfig
from .discretization import a_for_p, level_bottom_index, level_top_index
from .probability import (
    G_size_bound,
    failure_probability,
    format_constants,
    levelwise_failure_probability,
    main_bounds,
    min_sample_size,
)


def _load(path) -> ExperimentConfig:
    return ExperimentConfig.from_file(path) if path else ExperimentConfig()


def cmd_constants(args) -> int:
    from .experiments import prepare

    vals: dict = {}
    if args.config:
        st = prepare(_load(args.config))
        tc = st.tc
        vals.update(tc.as_dict())
        vals["N_gamma"] = st.space.N_gamma
        vals["amalgam"] = st.space.amalgam
        vals["truncation_N"] = st.plan.N
        vals["C_eps_mu"] = st.plan.dimension_bound
        vals["G_size_bound"] = G_size_bound(tc)
        if args.r:
            vals["r"] = args.r
            vals["R"] = tc.R(args.r)
            vals["failure_bound"] = failure_probability(tc, args.r)
            vals["failure_bound_levelwise"] = levelwise_failure_probability(tc, args.r)
        print(format_constants(vals))
        return 0

    p = args.p
    a = args.a if args.a is not None else a_for_p(p)
    A, B, delta = args.A, args.B, args.delta
    vals.update(p=p, a=a, A=A, B=B, delta=delta)
    C2p = (1.0 + a) ** (2 * p)
    vals["sigma"] = A / C2p * (1.0 - delta) / (2.0 * B)
    vals["j0"] = level_bottom_index(a, p, A, B, delta)
    vals["j0_real"] = math.log(A / C2p * (1.0 - delta) / (4.0 * B)) / (p * math.log1p(a))
    if args.D is not None and args.mu is not None:
        vals.update(D=args.D, mu=args.mu)
        vals["J"] = level_top_index(a, p, args.D, args.mu)
        vals["G_size"] = vals["J"] - vals["j0"] + 1
        vals["C4"] = (4.0 * args.D / a) ** p
        vals["C5"] = 5.0 * B * args.D ** p / (A * (1.0 - delta))
        if args.d_M is not None:
            vals["d_M"] = args.d_M
            vals["A1"] = math.exp(args.d_M * math.log(vals["C4"] * args.mu) / p)
    sigma = args.sigma if args.sigma is not None else vals["sigma"]
    G = args.G_size if args.G_size is not None else vals.get("G_size")
    if args.d_M is not None and G is not None:
        vals["d_M"] = args.d_M
        vals["G_size"] = G
        vals["r_min"] = min_sample_size(sigma, args.d_M, G)
    if args.tau is not None and args.D is not None:
        lo, hi = main_bounds(p, args.D, args.tau, A, B)
        vals.update(tau=args.tau, lower_coeff=lo, upper_coeff=hi)
    print(format_constants(vals))
    return 0


def cmd_check(args) -> int:
    from .experiments import check_assumptions

    cfg = _load(args.config)
    rep = check_assumptions(cfg)
    print(rep)
    print(f"overall: {'PASS' if rep.ok else 'FAIL'}")
    return 0 if rep.ok else 1


def cmd_trial(args) -> int:
    from .experiments import draw_concentrated_function, prepare, run_stability_trial, trial_seed

    cfg = _load(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    st = prepare(cfg)
    r = args.r or cfg.r_schedule[0]
    print(f"seed={cfg.seed}")
    f = draw_concentrated_function(st.space, st.domain, cfg.delta, cfg.p, trial_seed(cfg.seed, r, args.trial_id, 0),
                                   grid=st.grid, margin=cfg.margin)
    rec = run_stability_trial(f, st.domain, r, st.tc, trial_seed(cfg.seed, r, args.trial_id, 1),
                              trial_id=args.trial_id)
    row = rec.as_row()
    print(format_constants(row))
    if args.csv:
        out = cfg.resolved_output_dir() / f"{cfg.name}_trial.csv"
        out.parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(row), lineterminator="\n")
            w.writeheader()
            w.writerow(row)
        print(f"wrote {out}")
    return 0


def cmd_curve(args) -> int:
    from .experiments import success_curve

    cfg = _load(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.trials is not None:
        cfg.trials = args.trials
    if args.r:
        cfg.r_schedule = args.r
    print(f"seed={cfg.seed}")

    def show(row):
        print(f"r={row.r:<9d} success={row.successes}/{row.trials}  p_hat={row.p_hat:.4f}  "
              f"wilson=[{row.wilson_lo:.4f}, {row.wilson_hi:.4f}]  theory={row.theory_bound:.4f}", flush=True)

    table = success_curve(cfg, output_dir=args.output_dir, plot=args.plot or None, progress=show)
    print(f"wrote {table.csv_path}")
    if table.svg_path:
        print(f"wrote {table.svg_path}")
    print(f"sound={table.sound} trend={table.trend_ok()}")
    return 0 if table.sound else 1


def cmd_net(args) -> int:
    from .experiments import net_experiment

    print(f"seed={args.seed}")
    ok = True
    for d in args.d_M:
        for frac in args.eps_fraction:
            res = net_experiment(d, frac, args.p, probes=args.probes, seed=args.seed, step=args.step)
            ok &= res.ok
            print(f"d_M={d} eps={res.eps:.6g} net_size={res.size} bound={res.bound:.6g} "
                  f"covered={res.covered}/{res.probes} max_dist={res.max_distance:.6g}")
    return 0 if ok else 1


def cmd_regularity(args) -> int:
    from .experiments import regularity_demo

    rows = regularity_demo(args.eps)
    print(f"{'eps':>8} {'value':>12} {'step':>12} {'window':>7}")
    for row in rows:
        print(f"{row.eps:8.4g} {row.value:12.8f} {row.step:12.6g} {row.window:7d}")
    if args.csv:
        out = Path(args.csv)
        out.parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["eps", "value", "step", "window"])
            for row in rows:
                w.writerow([row.eps, f"{row.value:.10f}", row.step, row.window])
    return 0 if all(row.value >= 0.99 for row in rows) else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rksampling", description=__doc__)
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="cmd", required=True)

    c = sub.add_parser("constants", help="print the theory constants")
    c.add_argument("--config")
    c.add_argument("--A", type=float, default=1.0)
    c.add_argument("--B", type=float, default=1.0)
    c.add_argument("--delta", type=float, default=0.5)
    c.add_argument("--a", type=float)
    c.add_argument("--p", type=float, default=2.0)
    c.add_argument("--D", type=float)
    c.add_argument("--mu", type=float)
    c.add_argument("--d-M", dest="d_M", type=int)
    c.add_argument("--G-size", dest="G_size", type=int)
    c.add_argument("--sigma", type=float)
    c.add_argument("--tau", type=float)
    c.add_argument("--r", type=int)
    c.set_defaults(func=cmd_constants)

    c = sub.add_parser("check-assumptions", help="verify the standing assumptions for a config")
    c.add_argument("--config")
    c.set_defaults(func=cmd_check)

    c = sub.add_parser("trial", help="run one stability trial")
    c.add_argument("--config")
    c.add_argument("--r", type=int)
    c.add_argument("--seed", type=int)
    c.add_argument("--trial-id", type=int, default=0)
    c.add_argument("--csv", action="store_true", help="also write the record as CSV")
    c.set_defaults(func=cmd_trial)

    c = sub.add_parser("curve", help="empirical success curve over the r schedule")
    c.add_argument("--config")
    c.add_argument("--r", type=int, nargs="+")
    c.add_argument("--trials", type=int)
    c.add_argument("--seed", type=int)
    c.add_argument("--output-dir")
    c.add_argument("--plot", action="store_true", help="write an SVG plot next to the CSV")
    c.set_defaults(func=cmd_curve)

    c = sub.add_parser("net", help="build explicit nets in the hat space and probe them")
    c.add_argument("--d-M", dest="d_M", type=int, nargs="+", default=[1, 2, 3])
    c.add_argument("--eps-fraction", type=float, nargs="+", default=[0.5, 0.25])
    c.add_argument("--p", type=float, default=2.0)
    c.add_argument("--probes", type=int, default=1000)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--step", type=float, default=1 / 64)
    c.set_defaults(func=cmd_net)

    c = sub.add_parser("demo-regularity", help="indicator kernel regularity values")
    c.add_argument("--eps", type=float, nargs="+", default=[0.25, 0.1, 0.01])
    c.add_argument("--csv")
    c.set_defaults(func=cmd_regularity)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
