"""Digital controllers and the cascaded loop structure.

Gain synthesis (discrete Riccati) and the per-axis stepping laws live here,
together with the outer/inner cascade, output saturation, and the mapping
from a commanded wrench to motor throttles.

Cascade wiring: the outer loop turns z / yaw / horizontal-position errors
into a thrust differential, a yaw torque, and roll/pitch angle references
(clamped to +/-1 rad); the inner loop turns attitude errors into the roll
and pitch torques. The controller fed by pitch state drives the pitch
torque slot (tau_y) and the one fed by roll drives tau_x, matching the
plant's rotational dynamics; their design gains come from the published
per-angle case table (see linmodels).
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, SynthesisError
from .linmodels import (AXES, AugmentedSubmodel, Axis, DiscreteSubmodel,
                        continuous_submodels, discrete_submodels)
from .vehicle import MotorCommand, VehicleParams, WrenchInput, wrap_angle


# --------------------------------------------------------------------------
# Riccati synthesis
# --------------------------------------------------------------------------

def dare_solve(a, b, q, r, tol: float = 1e-10, max_iter: int = 10 ** 6) -> np.ndarray:
    """Positive semidefinite fixed point of the discrete Riccati equation.

    Uses the structure-preserving doubling iteration, which squares the
    effective horizon each step and converges quadratically; `tol` is the
    relative sup-norm change between iterates.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.asarray(b, dtype=float).reshape(a.shape[0], -1)
    q = np.atleast_2d(np.asarray(q, dtype=float))
    r_mat = np.atleast_2d(np.asarray(r, dtype=float))

    n = a.shape[0]
    if a.shape != (n, n) or q.shape != (n, n) or b.shape[0] != n:
        raise DomainError("inconsistent DARE dimensions")
    if np.any(np.linalg.eigvalsh(0.5 * (q + q.T)) < -1e-12):
        raise DomainError("q must be positive semidefinite")
    if np.any(np.linalg.eigvalsh(0.5 * (r_mat + r_mat.T)) <= 0.0):
        raise DomainError("r must be positive definite")

    a_k = a.copy()
    g_k = b @ np.linalg.solve(r_mat, b.T)
    h_k = q.copy()
    eye = np.eye(n)
    for it in range(max_iter):
        w = eye + g_k @ h_k
        try:
            w_inv_a = np.linalg.solve(w, a_k)
            w_inv_g = np.linalg.solve(w, g_k)
        except np.linalg.LinAlgError as exc:
            raise SynthesisError(f"doubling iteration became singular at step {it}") from exc
        h_next = h_k + a_k.T @ h_k @ w_inv_a
        g_k = g_k + a_k @ w_inv_g @ a_k.T
        a_k = a_k @ w_inv_a
        delta = np.max(np.abs(h_next - h_k))
        scale = max(np.max(np.abs(h_next)), 1e-30)
        h_k = h_next
        if delta <= tol * scale:
            return 0.5 * (h_k + h_k.T)
    raise SynthesisError(
        f"DARE did not converge within {max_iter} iterations "
        f"(last relative change {delta / scale:.3e})")


@dataclass(frozen=True)
class LqrGains:
    """State-feedback gains for one axis; k_int is present for LQR-I."""

    axis: Axis
    k_x: float
    k_xdot: float
    k_int: float | None = None

    def as_array(self) -> np.ndarray:
        if self.k_int is None:
            return np.array([self.k_x, self.k_xdot])
        return np.array([self.k_x, self.k_xdot, self.k_int])


def lqr_gains(sub: DiscreteSubmodel | AugmentedSubmodel, q, r) -> LqrGains:
    """Synthesize K = (R + B'PB)^-1 B'PA and verify closed-loop stability."""
    if isinstance(sub, AugmentedSubmodel):
        a, b = sub.a_int, sub.b_int
    else:
        a, b = sub.a, sub.b_ts
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float).reshape(-1)
    p = dare_solve(a, b, q, r)
    r_s = float(np.atleast_2d(np.asarray(r, dtype=float))[0, 0])
    bp = b @ p
    k = (bp @ a) / (r_s + float(bp @ b))
    rho = max(abs(np.linalg.eigvals(a - np.outer(b, k))))
    if rho >= 1.0:
        raise SynthesisError(
            f"axis {sub.axis.value}: closed-loop spectral radius {rho:.6f} >= 1")
    k_int = float(k[2]) if k.shape[0] == 3 else None
    return LqrGains(sub.axis, float(k[0]), float(k[1]), k_int)


def lqr_step(gains: LqrGains, x: float, xdot: float, r_x: float, r_xdot: float,
             limits: tuple[float, float] | None = None) -> float:
    """One step of the state-feedback law on tracking errors, then saturation."""
    u = gains.k_x * (r_x - x) + gains.k_xdot * (r_xdot - xdot)
    if limits is not None:
        u = min(max(u, limits[0]), limits[1])
    return u


# --------------------------------------------------------------------------
# LQR with output-side integrator and back-calculation anti-windup
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class AntiWindupConfig:
    u_min: float
    u_max: float
    tau_int: float = 10.0  # wind-down gain on the saturation excess

    def __post_init__(self):
        if self.u_min >= self.u_max:
            raise DomainError("u_min must be below u_max")
        if self.tau_int < 0.0:
            raise DomainError("tau_int must be >= 0")


@dataclass(frozen=True)
class LqriState:
    """Memory of the integrator-output realization (all values start at 0)."""

    e_prev: float = 0.0
    edot_prev: float = 0.0
    integ: float = 0.0
    excess_prev: float = 0.0


def lqri_step(state: LqriState, gains: LqrGains, t_s: float, x: float,
              xdot: float, r_x: float, r_xdot: float,
              aw: AntiWindupConfig) -> tuple[float, LqriState]:
    """Integrator-at-the-output realization of the LQR-I law.

    The two error channels are discretely differentiated, weighted by the
    position/velocity gains, and summed with the integral gain acting on the
    raw position error; the sum feeds an output-side integrator whose result
    is saturated. The previous step's saturation excess re-enters the sum
    through tau_int, bleeding the integrator while the output is railed.
    """
    if gains.k_int is None:
        raise DomainError("lqri_step needs gains with an integral term")
    e = r_x - x
    edot = r_xdot - xdot
    s = (gains.k_x * (e - state.e_prev) / t_s
         + gains.k_xdot * (edot - state.edot_prev) / t_s
         + gains.k_int * e
         + aw.tau_int * state.excess_prev)
    v = state.integ + t_s * s
    u = min(max(v, aw.u_min), aw.u_max)
    return u, LqriState(e, edot, v, u - v)


# --------------------------------------------------------------------------
# PID / PD with filtered derivative
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PidConfig:
    """Discrete PID: K_p + K_i*T_s/(z-1) + K_d*N*(z-1)/(z-1+N*T_s)."""

    k_p: float
    k_i: float
    k_d: float
    n: float      # derivative filter coefficient, rad/s
    t_s: float

    def __post_init__(self):
        if self.n <= 0.0:
            raise DomainError("derivative filter coefficient must be > 0")
        if min(self.k_p, self.k_i, self.k_d) < 0.0:
            raise DomainError("PID gains must be >= 0")


@dataclass(frozen=True)
class PidState:
    integrator: float = 0.0   # running error sum (scaled by K_i*T_s on output)
    deriv_filter: float = 0.0


def pid_step(state: PidState, cfg: PidConfig, e: float) -> tuple[float, PidState]:
    """One step of the discrete PID transfer function (no anti-windup).

    Two-state realization: the integral branch is strictly proper
    (T_s/(z-1)), the derivative branch is the one-pole filter
    N*(z-1)/(z-(1-N*T_s)) realized as a feedthrough plus filter state.
    """
    alpha = 1.0 - cfg.n * cfg.t_s
    u = (cfg.k_p * e
         + cfg.k_i * cfg.t_s * state.integrator
         + cfg.k_d * cfg.n * (e + (alpha - 1.0) * state.deriv_filter))
    return u, PidState(state.integrator + e, alpha * state.deriv_filter + e)


# --------------------------------------------------------------------------
# Saturation limits and actuator envelopes
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SaturationLimits:
    """Output clamps applied by every controller in the cascade."""

    d_thrust: tuple[float, float] = (-10.42, 12.34)  # N, around hover thrust
    tau_xy: float = 1.3679       # N*m, roll/pitch torque magnitude
    tau_z: float = 0.1766        # N*m, yaw torque magnitude
    ref_angle: float = 1.0       # rad, roll/pitch reference magnitude

    def __post_init__(self):
        if self.d_thrust[0] >= self.d_thrust[1]:
            raise DomainError("thrust band is empty")
        if min(self.tau_xy, self.tau_z, self.ref_angle) <= 0.0:
            raise DomainError("torque/angle limits must be > 0")


def actuator_envelopes(params: VehicleParams,
                       ref_angle: float = 1.0) -> SaturationLimits:
    """Recompute the saturation band from the physical rotor limits.

    Thrust spans four rotors between the zero-throttle bias speed and full
    throttle; each torque takes its extreme when the two rotors on one side
    rail high and the two on the other rail low.
    """
    w2_max = params.max_speed ** 2
    w2_min = params.omega_b ** 2
    spread = 2.0 * (w2_max - w2_min)
    return SaturationLimits(
        d_thrust=(4.0 * params.c_t * w2_min - params.hover_thrust,
                  4.0 * params.c_t * w2_max - params.hover_thrust),
        tau_xy=params.c_tau * spread,
        tau_z=params.c_m * spread,
        ref_angle=ref_angle,
    )


def command_mapping(u: WrenchInput, params: VehicleParams) -> MotorCommand:
    """Invert the mixing matrix and the throttle curve.

    Squared speeds that come out negative (infeasible wrench) are floored at
    zero and throttles are clamped to [0, 1], mirroring what a real ESC does.
    """
    ct_inv = 1.0 / (4.0 * params.c_t)
    cm_inv = 1.0 / (4.0 * params.c_m)
    ctau_inv = math.sqrt(2.0) / (4.0 * params.d * params.c_t)
    t, tx, ty, tz = u.thrust, u.tau[0], u.tau[1], u.tau[2]
    w2 = np.array([
        ct_inv * t - ctau_inv * tx + ctau_inv * ty - cm_inv * tz,
        ct_inv * t - ctau_inv * tx - ctau_inv * ty + cm_inv * tz,
        ct_inv * t + ctau_inv * tx - ctau_inv * ty - cm_inv * tz,
        ct_inv * t + ctau_inv * tx + ctau_inv * ty + cm_inv * tz,
    ])
    w = np.sqrt(np.maximum(w2, 0.0))
    sigma = np.clip((w - params.omega_b) / params.c_r, 0.0, 1.0)
    return MotorCommand(sigma)


# --------------------------------------------------------------------------
# Cascade
# --------------------------------------------------------------------------

@functools.lru_cache(maxsize=None)
def load_gain_preset(name: str) -> dict[Axis, dict[str, float]]:
    """Per-axis gain table from a shipped preset data file.

    Names: gains_lqr, gains_lqri, gains_pd_experiment, gains_pd_simulation,
    gains_pid_experiment, gains_pid_simulation.
    """
    import configparser
    from importlib import resources

    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    text = (resources.files("quadfc") / "presets" / f"{name}.cfg").read_text()
    cp.read_string(text)
    out = {}
    for axis in AXES:
        out[axis] = {k: float(v) for k, v in cp.items(axis.value)}
    return out


def _clamp(v, lo, hi):
    return min(max(v, lo), hi)


class _AxisController:
    """Single-channel controller with explicit internal memory."""

    kind = "base"

    def reset(self):
        pass

    def step(self, x: float, xdot: float, r_x: float, r_xdot: float) -> float:
        raise NotImplementedError


class LqrAxis(_AxisController):
    kind = "lqr"

    def __init__(self, gains: LqrGains, limits: tuple[float, float]):
        self.gains = gains
        self.limits = limits

    def step(self, x, xdot, r_x, r_xdot):
        return lqr_step(self.gains, x, xdot, r_x, r_xdot, self.limits)


class LqriAxis(_AxisController):
    kind = "lqri"

    def __init__(self, gains: LqrGains, t_s: float, aw: AntiWindupConfig):
        self.gains = gains
        self.t_s = t_s
        self.aw = aw
        self.state = LqriState()

    def reset(self):
        self.state = LqriState()

    def step(self, x, xdot, r_x, r_xdot):
        u, self.state = lqri_step(self.state, self.gains, self.t_s,
                                  x, xdot, r_x, r_xdot, self.aw)
        return u


class PidAxis(_AxisController):
    """PID on the position error alone; the rate inputs are ignored.

    ``sign`` carries the sign of the channel's linearized input gain, so
    that the published all-positive gain tables act in the stabilizing
    direction on the channels whose gain is negative (x and z).
    """

    kind = "pid"

    def __init__(self, cfg: PidConfig, sign: float, limits: tuple[float, float]):
        self.cfg = cfg
        self.sign = sign
        self.limits = limits
        self.state = PidState()

    def reset(self):
        self.state = PidState()

    def step(self, x, xdot, r_x, r_xdot):
        u, self.state = pid_step(self.state, self.cfg, r_x - x)
        return _clamp(self.sign * u, self.limits[0], self.limits[1])


class EmpcAxis(_AxisController):
    kind = "empc"

    def __init__(self, table, limits: tuple[float, float]):
        # table: empc.ExplicitTable (kept duck-typed to avoid an import cycle)
        from .empc import empc_lookup
        self._lookup = empc_lookup
        self.table = table
        self.limits = limits

    def step(self, x, xdot, r_x, r_xdot):
        u = self._lookup(self.table, np.array([x - r_x, xdot - r_xdot]))
        return _clamp(u, self.limits[0], self.limits[1])


@dataclass
class CascadeConfig:
    """One controller per channel plus the shared limits and hover thrust."""

    axes: dict[Axis, _AxisController]
    limits: SaturationLimits
    t_hov: float
    kind: str = "custom"

    def __post_init__(self):
        missing = [a for a in AXES if a not in self.axes]
        if missing:
            raise DomainError(f"cascade is missing axes {missing}")


class Cascade:
    """Outer/inner loop controller operating on yaw-aligned states.

    ``step`` consumes the aligned 12-entry state array and the aligned
    8-entry reference [r_x, r_y, r_z, r_psi, r_vx, r_vy, r_vz, r_psidot]
    and returns the saturated wrench.
    """

    def __init__(self, cfg: CascadeConfig):
        self.cfg = cfg

    def reset(self):
        for ctl in self.cfg.axes.values():
            ctl.reset()

    def step(self, x_psi: np.ndarray, r_psi: np.ndarray) -> WrenchInput:
        cfg = self.cfg
        lim = cfg.limits
        x, y, z = x_psi[0], x_psi[1], x_psi[2]
        vx, vy, vz = x_psi[3], x_psi[4], x_psi[5]
        phi, theta, psi = x_psi[6], x_psi[7], x_psi[8]
        # Euler-angle rates; at the small attitudes the inner loops see,
        # body rates are used directly.
        phidot, thetadot, psidot = x_psi[9], x_psi[10], x_psi[11]

        # Outer loop.
        d_thrust = cfg.axes[Axis.Z].step(z, vz, r_psi[2], r_psi[6])
        d_thrust = _clamp(d_thrust, lim.d_thrust[0], lim.d_thrust[1])

        r_yaw = psi + wrap_angle(r_psi[3] - psi)   # track the nearest turn
        tau_z = cfg.axes[Axis.PSI].step(psi, psidot, r_yaw, r_psi[7])
        tau_z = _clamp(tau_z, -lim.tau_z, lim.tau_z)

        r_phi = cfg.axes[Axis.Y].step(y, vy, r_psi[1], r_psi[5])
        r_phi = _clamp(r_phi, -lim.ref_angle, lim.ref_angle)
        r_theta = cfg.axes[Axis.X].step(x, vx, r_psi[0], r_psi[4])
        r_theta = _clamp(r_theta, -lim.ref_angle, lim.ref_angle)

        # Inner loop: roll error commands the roll torque (tau_x), pitch
        # error the pitch torque (tau_y).
        tau_x = cfg.axes[Axis.PHI].step(phi, phidot, r_phi, 0.0)
        tau_x = _clamp(tau_x, -lim.tau_xy, lim.tau_xy)
        tau_y = cfg.axes[Axis.THETA].step(theta, thetadot, r_theta, 0.0)
        tau_y = _clamp(tau_y, -lim.tau_xy, lim.tau_xy)

        thrust = cfg.t_hov + d_thrust
        return WrenchInput(max(thrust, 0.0), np.array([tau_x, tau_y, tau_z]))


def cascade_step(cascade: Cascade, x_psi: np.ndarray,
                 r_psi: np.ndarray) -> WrenchInput:
    """Functional alias for :meth:`Cascade.step`."""
    return cascade.step(x_psi, r_psi)


# --------------------------------------------------------------------------
# Cascade factories for the shipped tuning tables
# --------------------------------------------------------------------------

def _axis_limits(axis: Axis, lim: SaturationLimits) -> tuple[float, float]:
    if axis == Axis.Z:
        return lim.d_thrust
    if axis == Axis.PSI:
        return (-lim.tau_z, lim.tau_z)
    if axis in (Axis.X, Axis.Y):
        return (-lim.ref_angle, lim.ref_angle)
    return (-lim.tau_xy, lim.tau_xy)


def make_lqr_cascade(params: VehicleParams, weights=None,
                     limits: SaturationLimits | None = None,
                     t_s: float | None = None) -> Cascade:
    weights = load_gain_preset("gains_lqr") if weights is None else weights
    lim = SaturationLimits() if limits is None else limits
    subs = discrete_submodels(params, t_s)
    axes = {}
    for axis in AXES:
        w = weights[axis]
        gains = lqr_gains(subs[axis], np.diag([w["q_p"], w["q_d"]]), w["r"])
        axes[axis] = LqrAxis(gains, _axis_limits(axis, lim))
    return Cascade(CascadeConfig(axes, lim, params.hover_thrust, kind="lqr"))


def make_lqri_cascade(params: VehicleParams, weights=None,
                      limits: SaturationLimits | None = None,
                      t_s: float | None = None,
                      tau_int: float = 10.0) -> Cascade:
    """Integral action on the position/yaw loops, plain state feedback on
    the attitude loops (integrators there invite overshoot)."""
    from .linmodels import augment_integrator

    weights = load_gain_preset("gains_lqri") if weights is None else weights
    lim = SaturationLimits() if limits is None else limits
    subs = discrete_submodels(params, t_s)
    axes = {}
    for axis in AXES:
        w = weights[axis]
        if "q_i" in w:
            gains = lqr_gains(augment_integrator(subs[axis]),
                              np.diag([w["q_p"], w["q_d"], w["q_i"]]), w["r"])
            lo, hi = _axis_limits(axis, lim)
            axes[axis] = LqriAxis(gains, subs[axis].t_s,
                                  AntiWindupConfig(lo, hi, tau_int))
        else:
            gains = lqr_gains(subs[axis], np.diag([w["q_p"], w["q_d"]]), w["r"])
            axes[axis] = LqrAxis(gains, _axis_limits(axis, lim))
    return Cascade(CascadeConfig(axes, lim, params.hover_thrust, kind="lqri"))


def _pid_cascade(params, preset_file, limits, t_s, kind) -> Cascade:
    lim = SaturationLimits() if limits is None else limits
    ts = params.t_s if t_s is None else t_s
    gains = load_gain_preset(preset_file)
    signs = {axis: math.copysign(1.0, sub.k_delta)
             for axis, sub in continuous_submodels(params).items()}
    axes = {}
    for axis in AXES:
        g = gains[axis]
        cfg = PidConfig(g["k_p"], g.get("k_i", 0.0), g["k_d"], g["n"], ts)
        axes[axis] = PidAxis(cfg, signs[axis], _axis_limits(axis, lim))
    return Cascade(CascadeConfig(axes, lim, params.hover_thrust, kind=kind))


def make_pd_cascade(params: VehicleParams, preset: str = "experiment",
                    limits: SaturationLimits | None = None,
                    t_s: float | None = None) -> Cascade:
    return _pid_cascade(params, f"gains_pd_{preset}", limits, t_s, "pd")


def make_pid_cascade(params: VehicleParams, preset: str = "experiment",
                     limits: SaturationLimits | None = None,
                     t_s: float | None = None) -> Cascade:
    return _pid_cascade(params, f"gains_pid_{preset}", limits, t_s, "pid")


def make_empc_cascade(params: VehicleParams, tables: dict,
                      limits: SaturationLimits | None = None) -> Cascade:
    """Explicit-MPC on all six channels from prebuilt lookup tables."""
    lim = SaturationLimits() if limits is None else limits
    axes = {axis: EmpcAxis(tables[axis], _axis_limits(axis, lim))
            for axis in AXES}
    return Cascade(CascadeConfig(axes, lim, params.hover_thrust, kind="empc"))
