"""Timing comparison of the jitted kernels against their Python originals.

The hot paths are the plant integration (RK4 substeps inside the control
tick) and the dual-ascent QP solve behind the explicit-control tables. When
numba is active each kernel's original implementation remains available, so
both can be timed in one process; with QUADFC_DISABLE_NUMBA=1 only the
pure path exists and the comparison collapses to a single column.
"""

from __future__ import annotations

import math
import time

import numpy as np

from ._accel import NUMBA_ENABLED, python_impl
from . import empc as empc_mod
from .linmodels import Axis, discrete_submodels
from .vehicle import VehicleParams, _plant_hold


def _time_fn(fn, args, repeats: int, burn_in: int = 1) -> float:
    for _ in range(burn_in):
        fn(*args)
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn(*args)
    return (time.perf_counter() - t0) / repeats


def kernel_comparison() -> str:
    params = VehicleParams()
    x = np.zeros(12)
    omega = np.full(4, params.hover_speed)
    sigma = np.full(4, 0.676)
    plant_args = (x, omega, sigma, 10, params.t_s, 0.0, 0.0, 0.0,
                  params.c_t, params.c_m, params.c_tau, params.c_r,
                  params.omega_b, params.t_m, params.m, params.j_xx,
                  params.j_yy, params.j_zz, params.g)

    sub = discrete_submodels(params)[Axis.PHI]
    cfg = empc_mod.default_mpc_config(sub)
    fam = empc_mod._CondensedFamily(sub, cfg)
    x0 = np.array([1.0, 0.0])
    qp_args = (fam.h_inv, fam.q_map @ x0, fam.b2, x0[1], fam.vmax, fam.umax,
               fam.step, 1e-8, 10 ** 5, 1e10, np.zeros(4 * cfg.horizon_steps))

    rows = []
    cases = [
        ("plant tick (10 RK4 substeps)", _plant_hold, plant_args, 2000, 50),
        ("QP solve (hard node, N=200)", empc_mod._dpg_double_integrator,
         qp_args, 5, 2),
    ]
    for name, fn, fn_args, rep_fast, rep_slow in cases:
        pure = python_impl(fn)
        if NUMBA_ENABLED:
            t_jit = _time_fn(fn, fn_args, rep_fast)
            t_py = _time_fn(pure, fn_args, rep_slow)
            rows.append((name, t_jit, t_py))
        else:
            t_py = _time_fn(pure, fn_args, rep_slow)
            rows.append((name, None, t_py))

    lines = [f"numba enabled: {NUMBA_ENABLED}",
             f"{'kernel':<32} {'numba':>12} {'python':>12} {'speedup':>9}"]
    for name, t_jit, t_py in rows:
        if t_jit is None:
            lines.append(f"{name:<32} {'-':>12} {t_py * 1e6:>10.1f}us {'-':>9}")
        else:
            lines.append(f"{name:<32} {t_jit * 1e6:>10.1f}us "
                         f"{t_py * 1e6:>10.1f}us {t_py / t_jit:>8.1f}x")
    return "\n".join(lines)


def qp_horizon_comparison() -> str:
    """Online QP cost at the two published sampling setups (5 ms vs 20 ms)."""
    params = VehicleParams()
    lines = [f"{'setup':<28} {'horizon N':>9} {'solve time':>12}"]
    for t_s, label in ((0.005, "200 Hz, 1 s horizon"),
                       (0.020, "50 Hz, 1 s horizon")):
        sub = discrete_submodels(params, t_s)[Axis.PHI]
        cfg = empc_mod.default_mpc_config(sub)
        fam = empc_mod._CondensedFamily(sub, cfg)
        qp = fam.qp_at(np.array([1.0, 0.0]))
        t = _time_fn(lambda: empc_mod.solve_qp(qp), (), 5, 1)
        lines.append(f"{label:<28} {cfg.horizon_steps:>9} {t * 1e3:>10.1f}ms")
    return "\n".join(lines)
