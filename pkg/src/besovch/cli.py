"""Command line entry point: ``besovch <subcommand> ...``."""
import argparse
import csv
import json
import math
import os
import sys
from dataclasses import asdict, replace


from . import __version__
from .besov import BesovSpec, besov_norm
from .config import ConfigError, ExperimentConfig, config_help, load_config
from .counterexample import CounterexampleParams, algebra_failure_experiment, build_u0, snh_calibration
from .dynamics import PeakonState, SolveConfig, gaussian_bump, integrate_peakons, peakon_field, solve
from .experiments import (
    Timer, dynamic_params, e_transport_residual, early_time_linearization, emit_report, inflation_ladder,
    no_inflation_experiment, report_json, run_manifest, write_manifest,
)
from .grid import make_grid, read_field, write_binary
from .littlewood_paley import block_l2_norms, block_sup_norms, build_filter_bank


def _floats(s):
    try:
        return [float(v) for v in s.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {s!r}")


def _ints(s):
    try:
        return [int(v) for v in s.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {s!r}")


def _cfg(args):
    cfg = load_config(args.config) if getattr(args, "config", None) else ExperimentConfig()
    if getattr(args, "outdir", None):
        cfg = replace(cfg, outdir=args.outdir)
    return cfg


def _out(cfg, name):
    os.makedirs(cfg.outdir, exist_ok=True)
    return os.path.join(cfg.outdir, name)


def _finish(cfg, name, report, fmt, wall, command, grids=()):
    paths = []
    for f in fmt:
        p = _out(cfg, f"{name}.{f}")
        emit_report(report, f, p)
        paths.append(p)
    write_manifest(run_manifest(cfg, command, grids, wall, paths), _out(cfg, f"{name}.manifest.json"))
    for p in paths:
        print(p)


# -- subcommands ---------------------------------------------------------------

def cmd_decompose(args):
    f = read_field(args.field)
    bank = build_filter_bank(f.grid)
    sup = block_sup_norms(f, bank)
    l2 = block_l2_norms(f, bank)
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["j", "block_Linf", "block_L2"])
        for j in bank.indices:
            w.writerow([j, repr(sup[j]), repr(l2[j])])
    finally:
        if args.out:
            out.close()


def cmd_besov_norm(args):
    f = read_field(args.field)
    spec = BesovSpec(args.s, args.p, args.r, args.log_weight)
    rep = besov_norm(f, spec)
    print(json.dumps(rep.to_dict(), sort_keys=True))


def _init_field(args):
    init = args.init
    if init.startswith("counterexample:"):
        N = int(init.split(":", 1)[1])
        return build_u0(dynamic_params(N, _cfg(args)))
    if init == "peakon":
        g = make_grid(args.L, args.n)
        st = PeakonState(args.p, args.q)
        return peakon_field(st, g, mollify_width="default", periodic=True)
    if init == "bump":
        return gaussian_bump(make_grid(args.L, args.n), args.amp, args.width)
    return read_field(init)


def cmd_solve(args):
    u0 = _init_field(args)
    cfg = SolveConfig(t_end=args.t_end, cfl=args.cfl, record_every=args.record_every,
                      breaking_threshold=args.breaking_threshold, speed_floor=args.speed_floor,
                      track_besov=True)
    os.makedirs(args.outdir, exist_ok=True)
    with Timer() as tm:
        traj = solve(u0, cfg)
    files = []
    diag = os.path.join(args.outdir, "diagnostics.csv")
    with open(diag, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "h1", "min_ux", "b1inf1"])
        for i, s in enumerate(traj.states):
            d = s.diagnostics
            w.writerow([repr(s.t), repr(d["h1"]), repr(d["min_ux"]), repr(d.get("b1inf1", float("nan")))])
            p = os.path.join(args.outdir, f"u_{i:05d}.bin")
            write_binary(s.u, p)
            files.append(p)
    g = u0.grid
    manifest = {
        "init": args.init, "L": g.L, "n": g.n, "config": asdict(cfg), "version": __version__,
        "steps": traj.steps, "broke_at": traj.broke_at, "reason": traj.reason,
        "records": [{"t": s.t, "file": f} for s, f in zip(traj.states, files)],
        "diagnostics": diag, "wall_time": tm.elapsed,
    }
    with open(os.path.join(args.outdir, "trajectory.json"), "w") as fh:
        fh.write(report_json(manifest))
    print(os.path.join(args.outdir, "trajectory.json"))
    if traj.broke_at is not None:
        print(f"breaking at t={traj.broke_at:.6g}: {traj.reason}", file=sys.stderr)


def cmd_peakon(args):
    st = PeakonState(args.p, args.q)
    states = integrate_peakons(st, args.t_end, args.dt, args.record_every)
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(out, lineterminator="\n")
        k = st.p.size
        w.writerow(["t"] + [f"p{i}" for i in range(k)] + [f"q{i}" for i in range(k)])
        for s in states:
            w.writerow([repr(s.t)] + [repr(float(v)) for v in s.p] + [repr(float(v)) for v in s.q])
    finally:
        if args.out:
            out.close()


def _algebra(cfg, Ns, fmt, command, dump=False):
    with Timer() as tm:
        rep = algebra_failure_experiment(Ns)
    d = rep.to_dict()
    d["ratio_increasing"] = all(b.algebra_ratio > a.algebra_ratio
                                for a, b in zip(rep.records, rep.records[1:]))
    if dump:
        for N in Ns:
            write_binary(build_u0(CounterexampleParams(N)), _out(cfg, f"u0_N{N}.bin"))
    rows = [asdict(r) for r in rep.records]
    _finish(cfg, "counterexample", d, fmt, tm.elapsed, command,
            [(math.pi, 2 ** (N + 9)) for N in Ns])
    with open(_out(cfg, "counterexample_rows.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        keys = [k for k in rows[0] if k != "window"] + ["window_lo", "window_hi"]
        w.writerow(keys)
        for r in rows:
            lo, hi = r.pop("window")
            w.writerow([repr(v) if isinstance(v, float) else v for v in r.values()] + [lo, hi])


def cmd_counterexample(args):
    cfg = _cfg(args)
    _algebra(cfg, args.n_list or list(cfg.static_n_list), args.format, "counterexample", args.dump_fields)


def cmd_algebra(args):
    cfg = _cfg(args)
    _algebra(cfg, list(cfg.static_n_list), args.format, "algebra")


def cmd_inflate(args):
    cfg = _cfg(args)
    if args.n:
        cfg = replace(cfg, n_list=tuple(args.n))
    with Timer() as tm:
        rep = inflation_ladder(cfg)
    grids = [(r["L"], r["n"]) for r in rep["runs"]]
    _finish(cfg, "inflate", rep, args.format, tm.elapsed, "inflate", grids)


def cmd_linearize(args):
    cfg = _cfg(args)
    N = args.n if args.n is not None else cfg.linearize_n
    ts = args.t or list(cfg.linearize_t)
    with Timer() as tm:
        rep = early_time_linearization(N, ts, cfg)
    _finish(cfg, "linearize", rep, args.format, tm.elapsed, "linearize")


def cmd_e_residual(args):
    cfg = _cfg(args)
    N = args.n if args.n is not None else cfg.residual_n
    with Timer() as tm:
        rep = e_transport_residual(N, cfg)
    _finish(cfg, "e_residual", rep, args.format, tm.elapsed, "e-residual")


def cmd_control(args):
    cfg = _cfg(args)
    if args.window_factor is not None:
        cfg = replace(cfg, window_factor=args.window_factor)
    with Timer() as tm:
        rep = no_inflation_experiment(args.amp, args.width, cfg)
    _finish(cfg, "control", rep, args.format, tm.elapsed, "control",
            [(cfg.control_L, cfg.control_n)])


SECTIONS = ("snh", "algebra", "inflate", "linearize", "e_residual", "control")


def build_report(cfg, sections=SECTIONS):
    """Run the selected experiments; the result depends only on ``cfg``."""
    rep = {"version": __version__, "config": {k: v for k, v in sorted(asdict(cfg).items())
                                               if k != "outdir"}}
    if "snh" in sections:
        recs = snh_calibration(cfg.snh_n_list)
        vals = [r.b0_over_N for r in recs]
        rep["snh"] = {"records": [asdict(r) for r in recs],
                      "max_over_min": max(vals) / min(vals)}
    if "algebra" in sections:
        rep["algebra"] = algebra_failure_experiment(cfg.static_n_list).to_dict()
    if "inflate" in sections:
        rep["inflate"] = inflation_ladder(cfg)
    if "linearize" in sections:
        rep["linearize"] = early_time_linearization(cfg.linearize_n, cfg.linearize_t, cfg)
    if "e_residual" in sections:
        rep["e_residual"] = e_transport_residual(cfg.residual_n, cfg)
    if "control" in sections:
        rep["control"] = no_inflation_experiment(cfg=cfg)
    return rep


def cmd_report(args):
    cfg = _cfg(args)
    sections = args.sections or list(SECTIONS)
    bad = [s for s in sections if s not in SECTIONS]
    if bad:
        raise SystemExit(f"unknown section(s) {bad}; choose from {', '.join(SECTIONS)}")
    with Timer() as tm:
        rep = build_report(cfg, sections)
    _finish(cfg, "report", rep, [args.format], tm.elapsed, "report " + ",".join(sections))


# -- parser ----------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(
        prog="besovch",
        description="Littlewood-Paley / Besov analysis and Camassa-Holm norm-inflation experiments.",
        epilog="config file keys (flat key = value, '#' comments):\n" + config_help()
               + "\n\nenvironment: BESOVCH_THREADS caps worker threads, "
                 "BESOVCH_NUMBA=0 selects the pure numpy kernels.",
        formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def exp(name, help_):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--config", help="flat key=value config file")
        s.add_argument("--outdir", help="output directory (overrides config)")
        s.add_argument("--format", type=lambda v: v.split(","), default=["json", "csv"],
                       help="comma separated subset of json,csv")
        return s

    s = sub.add_parser("decompose", help="block sup and L2 norms of a field file")
    s.add_argument("field")
    s.add_argument("--out")
    s.set_defaults(func=cmd_decompose)

    s = sub.add_parser("besov-norm", help="Besov norm of a field file as JSON")
    s.add_argument("field")
    s.add_argument("--s", type=float, default=0.0)
    s.add_argument("--p", default="inf")
    s.add_argument("--r", default="1")
    s.add_argument("--log-weight", action="store_true")
    s.set_defaults(func=cmd_besov_norm)

    s = sub.add_parser("solve", help="evolve the CH equation")
    s.add_argument("--init", required=True,
                   help="field file, 'peakon', 'bump' or 'counterexample:N'")
    s.add_argument("--t-end", type=float, default=1.0)
    s.add_argument("--cfl", type=float, default=0.4)
    s.add_argument("--record-every", type=int, default=0)
    s.add_argument("--breaking-threshold", type=float, default=1e3)
    s.add_argument("--speed-floor", type=float, default=1.0)
    s.add_argument("--L", type=float, default=32.0)
    s.add_argument("--n", type=int, default=4096)
    s.add_argument("--p", type=_floats, default=[1.0])
    s.add_argument("--q", type=_floats, default=[0.0])
    s.add_argument("--amp", type=float, default=0.5)
    s.add_argument("--width", type=float, default=1.0)
    s.add_argument("--outdir", default="besovch_solve")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("peakon", help="integrate the multipeakon ODE, CSV of (t, p_i, q_i)")
    s.add_argument("--p", type=_floats, required=True)
    s.add_argument("--q", type=_floats, required=True)
    s.add_argument("--t-end", type=float, default=1.0)
    s.add_argument("--dt", type=float, default=1e-3)
    s.add_argument("--record-every", type=int, default=100)
    s.add_argument("--out")
    s.set_defaults(func=cmd_peakon)

    s = exp("counterexample", "static scaling of u0(N)")
    s.add_argument("--n-list", type=_ints)
    s.add_argument("--dump-fields", action="store_true")
    s.set_defaults(func=cmd_counterexample)

    s = exp("algebra", "Banach-algebra failure over the configured N ladder")
    s.set_defaults(func=cmd_algebra)

    s = exp("inflate", "norm inflation runs and smooth controls")
    s.add_argument("--n", type=_ints)
    s.set_defaults(func=cmd_inflate)

    s = exp("linearize", "early-time linearization r(t)")
    s.add_argument("--n", type=int)
    s.add_argument("--t", type=_floats)
    s.set_defaults(func=cmd_linearize)

    s = exp("e-residual", "transported E residual under cadence refinement")
    s.add_argument("--n", type=int)
    s.set_defaults(func=cmd_e_residual)

    s = exp("control", "smooth bump inside 1/(4 ||u0||_{C^{0,1}})")
    s.add_argument("--amp", type=float)
    s.add_argument("--width", type=float)
    s.add_argument("--window-factor", type=float)
    s.set_defaults(func=cmd_control)

    s = sub.add_parser("report", help="run the configured suite into one report")
    s.add_argument("--config")
    s.add_argument("--outdir")
    s.add_argument("--format", choices=["json", "csv"], default="json")
    s.add_argument("--sections", type=lambda v: v.split(","),
                   help="comma separated subset of " + ",".join(SECTIONS))
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (ConfigError, ValueError, OSError, FloatingPointError) as exc:
        print(f"besovch {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
