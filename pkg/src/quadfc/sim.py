"""Deterministic closed-loop simulation, synthetic sensors, metrics, timing.

Per control tick: synthesize sensor readings from the true state, step the
estimator bank, yaw-align, run the control cascade, map the wrench to motor
throttles, then hold those throttles while the plant integrates through
``plant_substeps`` RK4 substeps with the exact first-order propulsor lag.
Everything is driven by one seeded generator, so a scenario reruns
bit-identically.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import controllers as ctl
from .errors import QuadfcError
from .estimation import (EstimatorBank, ImuSample, MeasurementEvent,
                         MeasurementKind)
from .guidance import (CircleReference, CircleScenario, ReferenceVector,
                       StepScenario, align_bundle)
from .linmodels import AXES, Axis, discrete_submodels
from .vehicle import (PropulsorBank, StateVector, VehicleParams, WrenchInput,
                      _plant_hold, propulsor_wrench, _state_derivative,
                      GIMBAL_COS_MIN)
from . import empc as empc_mod

DEG = math.pi / 180.0


class SimAbort(QuadfcError):
    def __init__(self, tick: int, t: float, reason: str):
        self.tick = tick
        super().__init__(f"simulation aborted at tick {tick} (t={t:.3f} s): {reason}")


@dataclass(frozen=True)
class SensorConfig:
    """Rates, noise levels, biases and dropout windows of the sensor suite.

    Noise standard deviations are physical (SI units); the estimator's
    measurement covariances are configured separately and deliberately do
    not have to match (the flown filter used inflated values).
    """

    mocap_hz: float = 100.0
    baro_hz: float = 0.0           # 0 disables the sensor
    rangefinder_hz: float = 0.0
    noise: bool = True
    accel_std: tuple[float, float, float] = (0.5243, 0.1811, 0.3779)
    gyro_std: float = 0.8844 * DEG          # applies to all three axes
    attitude_std: float = 0.2 * DEG         # onboard roll/pitch source
    mocap_pos_std: float = 1.5e-5
    mocap_yaw_std: float = 0.01
    baro_std: float = 0.2349
    rangefinder_std: float = 1.1e-3
    accel_bias: tuple[float, float, float] = (0.0, 0.0, 0.0)
    gyro_z_bias: float = 0.0
    dropouts: tuple[tuple[float, float], ...] = ()   # mocap outage windows

    def in_dropout(self, t: float) -> bool:
        return any(t0 <= t < t1 for t0, t1 in self.dropouts)


@dataclass(frozen=True)
class DisturbanceConfig:
    """Constant external force (N, inertial frame) over a time window."""

    force: tuple[float, float, float] = (0.0, 0.0, 0.0)
    t_start: float = 0.0
    t_end: float = math.inf


@dataclass
class SimScenario:
    vehicle: VehicleParams = field(default_factory=VehicleParams)
    controller: str | ctl.Cascade = "lqr"
    trajectory: CircleScenario | StepScenario = field(
        default_factory=CircleScenario)
    sensors: SensorConfig = field(default_factory=SensorConfig)
    duration: float | None = None      # None: trajectory duration + settle
    settle: float = 3.0
    seed: int = 0
    plant_substeps: int = 10
    estimator_preset: str = "tracking"
    scale_accel_by_mass: bool = True
    use_estimator: bool = True
    disturbance: DisturbanceConfig = field(default_factory=DisturbanceConfig)
    gain_preset: str = "simulation"    # PD/PID gains stable in-loop
    empc_resolution: int = 201

    def resolved_duration(self) -> float:
        if self.duration is not None:
            return self.duration
        return getattr(self.trajectory, "duration", 10.0) + self.settle


@dataclass
class SimLog:
    """Uniform-tick arrays of the closed-loop run."""

    t_s: float
    t: np.ndarray
    truth: np.ndarray        # (n, 12)
    estimate: np.ndarray     # (n, 12)
    reference: np.ndarray    # (n, 8)
    wrench: np.ndarray       # (n, 4)
    throttle: np.ndarray     # (n, 4)
    ctl_time_us: np.ndarray  # (n,)

    CSV_HEADER = ("# quadfc-simlog v1\n"
                  "t,x,y,z,vx,vy,vz,phi,theta,psi,wx,wy,wz,"
                  "xh,yh,zh,vxh,vyh,vzh,phih,thetah,psih,wxh,wyh,wzh,"
                  "rx,ry,rz,rpsi,rvx,rvy,rvz,rpsidot,"
                  "T,taux,tauy,tauz,s1,s2,s3,s4,ctl_us\n")

    def save_csv(self, path):
        data = np.column_stack([self.t, self.truth, self.estimate,
                                self.reference, self.wrench, self.throttle,
                                self.ctl_time_us])
        with open(path, "w") as fh:
            fh.write(self.CSV_HEADER)
            for row in data:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")

    @classmethod
    def load_csv(cls, path):
        with open(path) as fh:
            version = fh.readline().strip()
            if version != "# quadfc-simlog v1":
                raise QuadfcError(f"{path}: unknown log version {version!r}")
            fh.readline()  # column names
            data = np.array([[float(v) for v in line.split(",")]
                             for line in fh if line.strip()])
        t = data[:, 0]
        t_s = float(t[1] - t[0]) if len(t) > 1 else 0.005
        return cls(t_s, t, data[:, 1:13], data[:, 13:25], data[:, 25:33],
                   data[:, 33:37], data[:, 37:41], data[:, 41])


@dataclass(frozen=True)
class Metrics:
    avg_tracking_error: float
    max_radial_error: float
    max_altitude_error: float
    mean_velocity_error: float
    control_effort: float
    ctl_mean_us: float
    ctl_std_us: float
    ctl_worst_us: float

    def to_text(self) -> str:
        lines = ["[metrics]"]
        for name in ("avg_tracking_error", "max_radial_error",
                     "max_altitude_error", "mean_velocity_error",
                     "control_effort", "ctl_mean_us", "ctl_std_us",
                     "ctl_worst_us"):
            lines.append(f"{name} = {getattr(self, name):.6g}")
        return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# Controller construction
# --------------------------------------------------------------------------

def build_empc_tables(params: VehicleParams, t_s: float | None = None,
                      resolution: int = 201, horizon_s: float = 1.0,
                      cache_dir=None) -> dict[Axis, "empc_mod.ExplicitTable"]:
    """Build (or load cached) lookup tables for all six channels."""
    import os

    subs = discrete_submodels(params, t_s)
    tables = {}
    for axis in AXES:
        cfg = empc_mod.default_mpc_config(subs[axis], horizon_s)
        grid = empc_mod.default_grid(axis, resolution, resolution)
        digest = empc_mod.config_digest(subs[axis], cfg, grid)
        path = None
        if cache_dir is not None:
            os.makedirs(cache_dir, exist_ok=True)
            path = os.path.join(cache_dir, f"{axis.value}-{digest.hex()[:16]}.qfct")
            if os.path.exists(path):
                tables[axis] = empc_mod.load_table(path, expected_digest=digest)
                continue
        table = empc_mod.build_explicit_table(subs[axis], cfg, grid)
        if path is not None:
            empc_mod.save_table(table, path)
        tables[axis] = table
    return tables


def make_cascade(scn: SimScenario) -> ctl.Cascade:
    if isinstance(scn.controller, ctl.Cascade):
        return scn.controller
    kind = scn.controller
    params = scn.vehicle
    if kind == "pd":
        return ctl.make_pd_cascade(params, scn.gain_preset)
    if kind == "pid":
        return ctl.make_pid_cascade(params, scn.gain_preset)
    if kind == "lqr":
        return ctl.make_lqr_cascade(params)
    if kind == "lqri":
        return ctl.make_lqri_cascade(params)
    if kind == "empc":
        tables = build_empc_tables(params, resolution=scn.empc_resolution)
        return ctl.make_empc_cascade(params, tables)
    raise QuadfcError(f"unknown controller kind {kind!r}")


def _trajectory_fn(traj):
    if isinstance(traj, CircleScenario):
        return CircleReference(traj)
    return traj


# --------------------------------------------------------------------------
# Sensor synthesis
# --------------------------------------------------------------------------

def sensor_simulate(x: StateVector, deriv: np.ndarray, t: float, tick: int,
                    cfg: SensorConfig, t_s: float, rng) \
        -> tuple[list[MeasurementEvent], ImuSample]:
    """Synthesize the tick's sensor outputs from the true state.

    ``deriv`` is the current state derivative (for accelerometer channels).
    The vertical accelerometer channel uses the near-hover convention
    a_z = -(z acceleration) - g expected by the vertical estimator; mocap
    altitude events carry up-positive height.
    """
    g = 9.81
    noise = cfg.noise

    def n(std):
        return rng.normal(0.0, std) if noise and std > 0.0 else 0.0

    accel = np.array([
        deriv[3] + cfg.accel_bias[0] + n(cfg.accel_std[0]),
        deriv[4] + cfg.accel_bias[1] + n(cfg.accel_std[1]),
        -deriv[5] - g + cfg.accel_bias[2] + n(cfg.accel_std[2]),
    ])
    gyro = np.array([
        x.omega_body[0] + n(cfg.gyro_std),
        x.omega_body[1] + n(cfg.gyro_std),
        x.omega_body[2] + cfg.gyro_z_bias + n(cfg.gyro_std),
    ])
    attitude = np.array([x.euler[0] + n(cfg.attitude_std),
                         x.euler[1] + n(cfg.attitude_std)])
    imu = ImuSample(accel, gyro, attitude)

    events = [MeasurementEvent(t, MeasurementKind.GYRO_Z, [gyro[2]])]

    def due(hz):
        if hz <= 0.0:
            return False
        every = max(1, round(1.0 / (hz * t_s)))
        return tick % every == 0

    if due(cfg.mocap_hz) and not cfg.in_dropout(t):
        pos = x.pos + np.array([n(cfg.mocap_pos_std) for _ in range(3)])
        events.append(MeasurementEvent(t, MeasurementKind.MOCAP_POS, pos))
        events.append(MeasurementEvent(
            t, MeasurementKind.MOCAP_YAW, [x.euler[2] + n(cfg.mocap_yaw_std)]))
    if due(cfg.baro_hz):
        events.append(MeasurementEvent(
            t, MeasurementKind.BARO, [-x.pos[2] + n(cfg.baro_std)]))
    if due(cfg.rangefinder_hz):
        events.append(MeasurementEvent(
            t, MeasurementKind.RANGEFINDER, [-x.pos[2] + n(cfg.rangefinder_std)]))
    return events, imu


# --------------------------------------------------------------------------
# Closed loop
# --------------------------------------------------------------------------

def run_closed_loop(scn: SimScenario) -> SimLog:
    params = scn.vehicle
    t_s = params.t_s
    n_ticks = int(round(scn.resolved_duration() / t_s))
    traj = _trajectory_fn(scn.trajectory)
    cascade = make_cascade(scn)
    cascade.reset()
    rng = np.random.default_rng(scn.seed)

    r0 = traj.at(0.0)
    truth = StateVector.hover(r0.pos_ref, r0.yaw_ref)
    xa = truth.to_array()
    omega = PropulsorBank.at_hover(params).omega.copy()
    bank = EstimatorBank(params, t_s, scn.estimator_preset,
                         scn.scale_accel_by_mass)
    bank.initialize(xa)

    t_arr = np.empty(n_ticks)
    truth_arr = np.empty((n_ticks, 12))
    est_arr = np.empty((n_ticks, 12))
    ref_arr = np.empty((n_ticks, 8))
    wrench_arr = np.empty((n_ticks, 4))
    throttle_arr = np.empty((n_ticks, 4))
    ctl_us = np.empty(n_ticks)

    dist = scn.disturbance
    for k in range(n_ticks):
        t = k * t_s
        state = StateVector.from_array(xa)
        wrench_now = propulsor_wrench(PropulsorBank(np.maximum(omega, 0.0)),
                                      params)
        f_now = (dist.force if dist.t_start <= t < dist.t_end
                 else (0.0, 0.0, 0.0))
        deriv = _state_derivative(xa, wrench_now.thrust, wrench_now.tau[0],
                                  wrench_now.tau[1], wrench_now.tau[2],
                                  f_now[0], f_now[1], f_now[2], params.m,
                                  params.j_xx, params.j_yy, params.j_zz,
                                  params.g)
        events, imu = sensor_simulate(state, deriv, t, k, scn.sensors, t_s, rng)
        if scn.use_estimator:
            x_hat = bank.step(events, imu)
        else:
            x_hat = xa.copy()
        ref = traj.at(t)

        t0 = time.perf_counter_ns()
        x_al, r_al = align_bundle(StateVector.from_array(x_hat), ref)
        u = cascade.step(x_al, r_al)
        cmd = ctl.command_mapping(u, params)
        ctl_ns = time.perf_counter_ns() - t0

        t_arr[k] = t
        truth_arr[k] = xa
        est_arr[k] = x_hat
        ref_arr[k] = ref.to_array()
        wrench_arr[k] = u.to_array()
        throttle_arr[k] = cmd.sigma
        ctl_us[k] = ctl_ns / 1000.0

        xa, omega = _plant_hold(xa, omega, cmd.sigma, scn.plant_substeps, t_s,
                                f_now[0], f_now[1], f_now[2], params.c_t,
                                params.c_m, params.c_tau, params.c_r,
                                params.omega_b, params.t_m, params.m,
                                params.j_xx, params.j_yy, params.j_zz,
                                params.g)
        if not np.all(np.isfinite(xa)):
            raise SimAbort(k, t, "plant state became non-finite")
        if abs(math.cos(xa[7])) < GIMBAL_COS_MIN:
            raise SimAbort(k, t, "pitch reached the Euler singularity")
    return SimLog(t_s, t_arr, truth_arr, est_arr, ref_arr, wrench_arr,
                  throttle_arr, ctl_us)


# --------------------------------------------------------------------------
# Metrics
# --------------------------------------------------------------------------

def compute_metrics(log: SimLog, scn: SimScenario) -> Metrics:
    pos_err = log.truth[:, 0:3] - log.reference[:, 0:3]
    vel_err = log.truth[:, 3:6] - log.reference[:, 4:7]
    avg_err = float(np.mean(np.linalg.norm(pos_err, axis=1)))
    mean_vel = float(np.mean(np.linalg.norm(vel_err, axis=1)))
    alt_err = float(np.max(np.abs(pos_err[:, 2])))

    traj = scn.trajectory
    if isinstance(traj, CircleScenario):
        ref = CircleReference(traj)
        sel = (log.t >= ref.t_circle) & (log.t <= ref.t_out)
        if not np.any(sel):
            sel = slice(None)
        rel = log.truth[sel, 0:3] - np.asarray(traj.center)
        in_plane = rel @ ref._rot[:, 0:2]      # components along the circle plane
        radial = np.linalg.norm(in_plane, axis=1)
        max_radial = float(np.max(np.abs(radial - traj.radius)))
    else:
        max_radial = float(np.max(np.linalg.norm(pos_err[:, 0:2], axis=1)))

    t_total = float(log.t[-1] - log.t[0] + log.t_s) if len(log.t) else 1.0
    effort = float(np.linalg.norm(log.throttle.ravel()) / t_total)
    return Metrics(avg_err, max_radial, alt_err, mean_vel, effort,
                   float(np.mean(log.ctl_time_us)),
                   float(np.std(log.ctl_time_us)),
                   float(np.max(log.ctl_time_us)))


# --------------------------------------------------------------------------
# Controller timing benchmark
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TimingRow:
    name: str
    mean_us: float
    std_us: float
    worst_us: float
    outputs: np.ndarray


def benchmark_controllers(log: SimLog, cascades: dict[str, ctl.Cascade],
                          params: VehicleParams) -> list[TimingRow]:
    """Replay a logged run through each controller in isolation.

    Only the control path (align, cascade, command mapping) is timed, from
    the logged state estimates and references.
    """
    rows = []
    n = len(log.t)
    for name, cascade in cascades.items():
        cascade.reset()
        times = np.empty(n)
        outputs = np.empty((n, 4))
        for k in range(n):
            x_hat = StateVector.from_array(log.estimate[k])
            ref = ReferenceVector(log.reference[k, 0:3], log.reference[k, 3],
                                  log.reference[k, 4:7], log.reference[k, 7])
            t0 = time.perf_counter_ns()
            x_al, r_al = align_bundle(x_hat, ref)
            u = cascade.step(x_al, r_al)
            ctl.command_mapping(u, params)
            times[k] = (time.perf_counter_ns() - t0) / 1000.0
            outputs[k] = u.to_array()
        rows.append(TimingRow(name, float(np.mean(times)), float(np.std(times)),
                              float(np.max(times)), outputs))
    return rows


def timing_table(rows: list[TimingRow], budget_us: float = 5000.0) -> str:
    lines = [f"{'controller':<12} {'mean [us]':>10} {'std [us]':>10} "
             f"{'worst [us]':>11}  within {budget_us:.0f} us budget"]
    for r in rows:
        ok = "yes" if r.mean_us < budget_us else "NO"
        lines.append(f"{r.name:<12} {r.mean_us:>10.2f} {r.std_us:>10.2f} "
                     f"{r.worst_us:>11.1f}  {ok}")
    return "\n".join(lines)
