"""Command-line interface.

    quadfc simulate <scenario> [--out DIR]      closed-loop run -> log + metrics
    quadfc build-table <axis> <config> --out F  write an explicit-control table
    quadfc fit <kind> <csv> [--out F]           bench-data parameter fits
    quadfc benchmark <scenario> [...]           controller timing comparison
    quadfc presets list                         shipped + user preset files
    quadfc bench-kernels                        numba vs pure-python kernels

Scenario arguments accept either file paths or preset names (searched on
QUADFC_PRESET_PATH and the shipped presets).
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import config as cfgmod
from . import empc as empc_mod
from . import sim as sim_mod
from . import sysid
from .errors import QuadfcError
from .linmodels import Axis, discrete_submodels


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except QuadfcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _build_parser():
    p = argparse.ArgumentParser(prog="quadfc", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(required=True)

    s = sub.add_parser("simulate", help="run a closed-loop scenario")
    s.add_argument("scenario")
    s.add_argument("--out", default=".", help="output directory")
    s.add_argument("--controller", default=None,
                   help="override the scenario's controller kind")
    s.set_defaults(func=_cmd_simulate)

    s = sub.add_parser("build-table", help="build an explicit-control table")
    s.add_argument("axis", choices=[a.value for a in Axis])
    s.add_argument("config", help="scenario config supplying vehicle params")
    s.add_argument("--out", required=True)
    s.add_argument("--resolution", type=int, default=201)
    s.add_argument("--horizon", type=float, default=1.0, help="seconds")
    s.set_defaults(func=_cmd_build_table)

    s = sub.add_parser("fit", help="fit parameters from bench CSV data")
    s.add_argument("kind", choices=["thrust", "moment", "speed-map",
                                    "time-constant", "pendulum"])
    s.add_argument("csv")
    s.add_argument("--out", default=None,
                   help="write a [vehicle] fragment to this file")
    s.add_argument("--filament-sep", type=float, default=None)
    s.add_argument("--filament-len", type=float, default=None)
    s.add_argument("--mass", type=float, default=None)
    s.set_defaults(func=_cmd_fit)

    s = sub.add_parser("benchmark", help="controller timing from replay")
    s.add_argument("scenario", nargs="+")
    s.add_argument("--budget-us", type=float, default=5000.0)
    s.add_argument("--empc-resolution", type=int, default=101)
    s.set_defaults(func=_cmd_benchmark)

    s = sub.add_parser("presets", help="preset management")
    s.add_argument("action", choices=["list"])
    s.set_defaults(func=_cmd_presets)

    s = sub.add_parser("bench-kernels",
                       help="compare numba kernels against pure python")
    s.set_defaults(func=_cmd_bench_kernels)
    return p


def _cmd_simulate(args) -> int:
    scn = cfgmod.load_scenario(args.scenario)
    if args.controller:
        scn.controller = args.controller
    log = sim_mod.run_closed_loop(scn)
    metrics = sim_mod.compute_metrics(log, scn)
    os.makedirs(args.out, exist_ok=True)
    log_path = os.path.join(args.out, "log.csv")
    metrics_path = os.path.join(args.out, "metrics.txt")
    log.save_csv(log_path)
    with open(metrics_path, "w") as fh:
        fh.write(metrics.to_text())
    print(f"wrote {log_path} ({len(log.t)} ticks) and {metrics_path}")
    print(metrics.to_text(), end="")
    return 0


def _cmd_build_table(args) -> int:
    scn = cfgmod.load_scenario(args.config)
    axis = Axis(args.axis)
    sub = discrete_submodels(scn.vehicle)[axis]
    cfg = empc_mod.default_mpc_config(sub, args.horizon)
    grid = empc_mod.default_grid(axis, args.resolution, args.resolution)
    table = empc_mod.build_explicit_table(sub, cfg, grid)
    empc_mod.save_table(table, args.out)
    frac = table.feasible_mask.mean()
    print(f"wrote {args.out}: {args.resolution}x{args.resolution} nodes, "
          f"{frac:.1%} feasible, digest {table.params_digest.hex()[:16]}")
    return 0


def _cmd_fit(args) -> int:
    kind = args.kind
    if kind in ("thrust", "moment"):
        col = "thrust" if kind == "thrust" else "moment"
        name = "c_t" if kind == "thrust" else "c_m"
        omega, load = sysid.read_columns(args.csv, ["omega", col])
        fit = sysid.fit_thrust_moment(omega, load, name)
    elif kind == "speed-map":
        sigma, omega = sysid.read_columns(args.csv, ["sigma", "omega"])
        fit = sysid.fit_speed_map(sigma, omega)
    elif kind == "time-constant":
        t, omega = sysid.read_columns(args.csv, ["t", "omega"])
        t_m = sysid.fit_time_constant(t, omega)
        fit = sysid.FitResult({"t_m": t_m}, 1.0, 0.0)
    else:  # pendulum
        t, angle = sysid.read_columns(args.csv, ["t", "angle"])
        period = sysid.periodogram_peak(angle, float(t[1] - t[0]))
        coeffs = {"t_pend": period}
        if None not in (args.filament_sep, args.filament_len, args.mass):
            coeffs["j"] = sysid.bifilar_inertia(
                args.mass, 9.81, args.filament_sep, args.filament_len, period)
        fit = sysid.FitResult(coeffs, 1.0, 0.0)
    for key, value in fit.coefficients.items():
        print(f"{key} = {value:.9g}")
    print(f"r_squared = {fit.r_squared:.6f}")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(sysid.params_fragment(fit.coefficients))
        print(f"wrote {args.out}")
    return 0


def _cmd_benchmark(args) -> int:
    from . import controllers as ctl

    for name in args.scenario:
        scn = cfgmod.load_scenario(name)
        log = sim_mod.run_closed_loop(scn)
        params = scn.vehicle
        tables = sim_mod.build_empc_tables(params,
                                           resolution=args.empc_resolution)
        cascades = {
            "lqr": ctl.make_lqr_cascade(params),
            "lqri": ctl.make_lqri_cascade(params),
            "pd": ctl.make_pd_cascade(params),
            "pid": ctl.make_pid_cascade(params),
            "empc": ctl.make_empc_cascade(params, tables),
        }
        rows = sim_mod.benchmark_controllers(log, cascades, params)
        print(f"scenario {name}: {len(log.t)} replayed ticks")
        print(sim_mod.timing_table(rows, args.budget_us))
    return 0


def _cmd_presets(args) -> int:
    for name in cfgmod.list_presets():
        print(name)
    return 0


def _cmd_bench_kernels(args) -> int:
    from .benchmarks import kernel_comparison

    print(kernel_comparison())
    return 0


if __name__ == "__main__":
    sys.exit(main())
