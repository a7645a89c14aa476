"""Decoupled Kalman filters with asynchronous multi-rate measurement fusion.

Three independent linear filters cover the states the onboard attitude
source does not provide:

  vertical    [z, vz, az_bias]          barometer / rangefinder / mocap z
  horizontal  [x, y, vx, vy, bx, by]    mocap x, y
  yaw         [psi, wz, wz_bias]        mocap yaw + z gyro

Prediction runs every control tick using the IMU specific-force inputs; a
posteriori updates run only for the measurement rows that actually arrived,
in timestamp order. Measurement matrices, biases and covariance presets
follow the published calibration appendices, including the inflated
barometer variance that effectively disables it in flight, and including
the 1/m scaling applied to the accelerometer inputs; that scaling is
physically unconventional (the readings are already specific force), so a
switch selects the unscaled kinematic variant.

The vertical accelerometer channel is expected in the near-hover form
a_z = -(true z acceleration) - g, i.e. about -g while hovering; the
prediction input is then u = -a_z - g, the published form.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DomainError
from .vehicle import VehicleParams, wrap_angle

log = logging.getLogger(__name__)


class MeasurementKind(str, Enum):
    IMU_ACCEL = "imu_accel"      # (ax, ay, az): inertial x/y accel + vertical channel
    GYRO_Z = "gyro_z"            # body yaw rate
    BARO = "baro"                # altitude (up positive)
    RANGEFINDER = "rangefinder"  # altitude (up positive)
    MOCAP_POS = "mocap_pos"      # (x, y, z) inertial position
    MOCAP_YAW = "mocap_yaw"      # yaw angle


@dataclass(frozen=True)
class MeasurementEvent:
    timestamp: float
    kind: MeasurementKind
    value: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "value",
                           np.atleast_1d(np.asarray(self.value, dtype=float)))


@dataclass(frozen=True)
class GaussMarkovModel:
    """Linear prediction/measurement pair x+ = Fx + G_u u + w, z = Hx + b + v."""

    f: np.ndarray
    g_u: np.ndarray
    g_w: np.ndarray
    h: np.ndarray
    meas_bias: np.ndarray
    w_cov: np.ndarray
    v_cov: np.ndarray
    angle_rows: tuple[int, ...] = ()    # measurement rows compared on the circle
    angle_states: tuple[int, ...] = ()  # state entries wrapped after updates

    def __post_init__(self):
        for name in ("f", "g_u", "g_w", "h", "meas_bias", "w_cov", "v_cov"):
            object.__setattr__(self, name,
                               np.atleast_1d(np.asarray(getattr(self, name),
                                                        dtype=float)))
        n = self.f.shape[0]
        if self.f.shape != (n, n) or self.h.shape[1] != n:
            raise DomainError("inconsistent model dimensions")
        if self.meas_bias.shape[0] != self.h.shape[0]:
            raise DomainError("bias length must match measurement rows")


@dataclass(frozen=True)
class KfState:
    x_hat: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x_hat", np.asarray(self.x_hat, dtype=float).copy())
        object.__setattr__(self, "p", np.asarray(self.p, dtype=float).copy())


def kf_predict(model: GaussMarkovModel, kf: KfState, u=None) -> KfState:
    """A priori update: x = Fx + G_u u, P = FPF' + G_w W G_w'."""
    x = model.f @ kf.x_hat
    if model.g_u.size and u is not None:
        x = x + model.g_u @ np.atleast_1d(np.asarray(u, dtype=float))
    p = model.f @ kf.p @ model.f.T + model.g_w @ model.w_cov @ model.g_w.T
    return KfState(x, 0.5 * (p + p.T))


def kf_update(model: GaussMarkovModel, kf: KfState, rows, z) -> KfState:
    """A posteriori update on a subset of measurement rows (Joseph form).

    A numerically singular innovation covariance rejects the update: the
    event is logged and the state returned unchanged.
    """
    rows = list(rows)
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if not np.all(np.isfinite(z)):
        raise DomainError("measurement must be finite")
    h = model.h[rows, :]
    bias = model.meas_bias[rows]
    v = model.v_cov[np.ix_(rows, rows)]
    innov = z - (h @ kf.x_hat + bias)
    for local, row in enumerate(rows):
        if row in model.angle_rows:
            innov[local] = wrap_angle(innov[local])
    s = h @ kf.p @ h.T + v
    try:
        cond = np.linalg.cond(s)
    except np.linalg.LinAlgError:
        cond = np.inf
    if not np.isfinite(cond) or cond > 1e12:
        log.warning("update rejected: singular innovation covariance "
                    "(rows %s, cond %.3g)", rows, cond)
        return kf
    gain = kf.p @ h.T @ np.linalg.inv(s)
    x = kf.x_hat + gain @ innov
    for idx in model.angle_states:
        x[idx] = wrap_angle(x[idx])
    ikh = np.eye(kf.p.shape[0]) - gain @ h
    p = ikh @ kf.p @ ikh.T + gain @ v @ gain.T
    return KfState(x, 0.5 * (p + p.T))


# --------------------------------------------------------------------------
# The three filter models
# --------------------------------------------------------------------------

#: Covariances from the calibration appendix: the values flown ("used") and
#: the bench-measured ones ("measured"). Both give the yaw-rate state zero
#: process noise, which freezes it once its variance collapses; fine for the
#: short published flights, untenable for long maneuvering runs, so the
#: closed-loop simulator defaults to "tracking", which only adds rate-state
#: process noise on top of "used".
COVARIANCE_PRESETS = {
    "used": {
        "vertical_v": (1.00e6, 1.20e-6, 1e-4),       # baro, rangefinder, mocap z
        "horizontal_v": (1e-4, 1e-4),                # mocap x, y
        "yaw_v": (1e-4, 0.7822),                     # mocap yaw, gyro z (|.| of the
                                                     # published negative entry)
        "vertical_w": (0.0, 0.1428, 0.1),
        "horizontal_w": (0.0, 0.0, 0.2749, 0.0328, 0.1, 0.1),
        "yaw_w": (0.0, 0.0, 0.1),
    },
    "measured": {
        "vertical_v": (0.0552, 1.20e-6, 7.84e-10),
        "horizontal_v": (2.25e-10, 2.89e-10),
        "yaw_v": (1e-4, 0.7822),
        "vertical_w": (0.0, 0.1428, 0.1),
        "horizontal_w": (0.0, 0.0, 0.2749, 0.0328, 0.1, 0.1),
        "yaw_w": (0.0, 0.0, 0.1),
    },
    "tracking": {
        "vertical_v": (1.00e6, 1.20e-6, 1e-4),
        "horizontal_v": (1e-4, 1e-4),
        "yaw_v": (1e-4, 0.7822),
        "vertical_w": (0.0, 0.1428, 0.1),
        "horizontal_w": (0.0, 0.0, 0.2749, 0.0328, 0.1, 0.1),
        # rate state follows the gyro, bias walks on a seconds scale
        # rather than the published per-tick 0.1 (a real gyro bias does
        # not move 0.3 rad/s every 5 ms, and that walk integrates into
        # yaw drift whenever the mocap drops out)
        "yaw_w": (0.0, 0.5, 1e-6),
    },
}


def vertical_model(params: VehicleParams, t_s: float | None = None,
                   preset: str = "used",
                   scale_accel_by_mass: bool = True) -> GaussMarkovModel:
    """[z, vz, az_bias] driven by u = -(a_z) - g; rows: baro, rf, mocap z.

    Altitude sensors read up-positive height, hence the -1 measurement
    entries against the down-positive state.
    """
    ts = params.t_s if t_s is None else t_s
    m = params.m if scale_accel_by_mass else 1.0
    cov = COVARIANCE_PRESETS[preset]
    return GaussMarkovModel(
        f=np.array([[1.0, ts, 0.0], [0.0, 1.0, -ts], [0.0, 0.0, 1.0]]),
        g_u=np.array([[ts * ts / (2.0 * m)], [ts / m], [0.0]]),
        g_w=np.eye(3),
        h=np.array([[-1.0, 0.0, 0.0]] * 3),
        meas_bias=np.zeros(3),       # baro/rangefinder biases calibrated at start
        w_cov=np.diag(cov["vertical_w"]),
        v_cov=np.diag(cov["vertical_v"]),
    )


def horizontal_model(params: VehicleParams, t_s: float | None = None,
                     preset: str = "used",
                     scale_accel_by_mass: bool = True) -> GaussMarkovModel:
    """[x, y, vx, vy, bx, by] driven by inertial accelerations; rows: mocap x, y."""
    ts = params.t_s if t_s is None else t_s
    m = params.m if scale_accel_by_mass else 1.0
    cov = COVARIANCE_PRESETS[preset]
    f = np.eye(6)
    f[0, 2] = f[1, 3] = ts
    f[2, 4] = f[3, 5] = -ts
    g_u = np.zeros((6, 2))
    g_u[0, 0] = g_u[1, 1] = ts * ts / (2.0 * m)
    g_u[2, 0] = g_u[3, 1] = ts / m
    h = np.zeros((2, 6))
    h[0, 0] = h[1, 1] = 1.0
    return GaussMarkovModel(
        f=f, g_u=g_u, g_w=np.eye(6), h=h, meas_bias=np.zeros(2),
        w_cov=np.diag(cov["horizontal_w"]),
        v_cov=np.diag(cov["horizontal_v"]),
    )


def yaw_model(params: VehicleParams, t_s: float | None = None,
              preset: str = "used") -> GaussMarkovModel:
    """[psi, wz, wz_bias]; rows: mocap yaw, z gyro. No deterministic input."""
    ts = params.t_s if t_s is None else t_s
    cov = COVARIANCE_PRESETS[preset]
    return GaussMarkovModel(
        f=np.array([[1.0, ts, -ts], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]),
        g_u=np.zeros((3, 0)),
        g_w=np.eye(3),
        h=np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]),
        meas_bias=np.zeros(2),
        w_cov=np.diag(cov["yaw_w"]),
        v_cov=np.diag(cov["yaw_v"]),
        angle_rows=(0,),
        angle_states=(0,),
    )


# Measurement-row indices per filter.
VERT_BARO, VERT_RF, VERT_MOCAP = 0, 1, 2
YAW_MOCAP, YAW_GYRO = 0, 1


@dataclass(frozen=True)
class ImuSample:
    """One 200 Hz IMU readout: accelerations plus pass-through attitude."""

    accel: np.ndarray      # (ax, ay, a_z_channel)
    gyro: np.ndarray       # (wx, wy, wz)
    attitude: np.ndarray   # (phi, theta) from the onboard attitude source

    def __post_init__(self):
        object.__setattr__(self, "accel", np.asarray(self.accel, dtype=float))
        object.__setattr__(self, "gyro", np.asarray(self.gyro, dtype=float))
        object.__setattr__(self, "attitude",
                           np.asarray(self.attitude, dtype=float))


class EstimatorBank:
    """The three filters plus attitude pass-through, stepped at the control tick."""

    def __init__(self, params: VehicleParams, t_s: float | None = None,
                 preset: str = "used", scale_accel_by_mass: bool = True,
                 p0: float = 1e-2):
        self.params = params
        self.t_s = params.t_s if t_s is None else t_s
        self.vertical = vertical_model(params, self.t_s, preset,
                                       scale_accel_by_mass)
        self.horizontal = horizontal_model(params, self.t_s, preset,
                                           scale_accel_by_mass)
        self.yaw = yaw_model(params, self.t_s, preset)
        self.kf_vert = KfState(np.zeros(3), p0 * np.eye(3))
        self.kf_horiz = KfState(np.zeros(6), p0 * np.eye(6))
        self.kf_yaw = KfState(np.zeros(3), p0 * np.eye(3))
        self._attitude = np.zeros(2)
        self._rates_xy = np.zeros(2)

    def initialize(self, state12: np.ndarray):
        """Seed the filters from a known state (start of a simulation run)."""
        x = np.asarray(state12, dtype=float)
        self.kf_vert = KfState(np.array([x[2], x[5], 0.0]), self.kf_vert.p)
        self.kf_horiz = KfState(np.array([x[0], x[1], x[3], x[4], 0.0, 0.0]),
                                self.kf_horiz.p)
        self.kf_yaw = KfState(np.array([x[8], x[11], 0.0]), self.kf_yaw.p)
        self._attitude = x[6:8].copy()
        self._rates_xy = x[9:11].copy()

    def step(self, events, imu: ImuSample) -> np.ndarray:
        """One tick: predict with the IMU inputs, update with arrived events.

        Returns the assembled 12-entry state estimate; roll/pitch and their
        rates come straight from the IMU sample.
        """
        u_vert = -imu.accel[2] - self.params.g
        self.kf_vert = kf_predict(self.vertical, self.kf_vert, [u_vert])
        self.kf_horiz = kf_predict(self.horizontal, self.kf_horiz,
                                   imu.accel[:2])
        self.kf_yaw = kf_predict(self.yaw, self.kf_yaw)

        for ev in sorted(events, key=lambda e: e.timestamp):
            self._apply(ev)

        self._attitude = imu.attitude.copy()
        self._rates_xy = imu.gyro[:2].copy()
        xh, xv, xy = self.kf_horiz.x_hat, self.kf_vert.x_hat, self.kf_yaw.x_hat
        return np.array([
            xh[0], xh[1], xv[0], xh[2], xh[3], xv[1],
            self._attitude[0], self._attitude[1], wrap_angle(xy[0]),
            self._rates_xy[0], self._rates_xy[1], xy[1],
        ])

    def _apply(self, ev: MeasurementEvent):
        kind = ev.kind
        if kind == MeasurementKind.MOCAP_POS:
            self.kf_horiz = kf_update(self.horizontal, self.kf_horiz,
                                      [0, 1], ev.value[:2])
            self.kf_vert = kf_update(self.vertical, self.kf_vert,
                                     [VERT_MOCAP], [-ev.value[2]])
        elif kind == MeasurementKind.MOCAP_YAW:
            self.kf_yaw = kf_update(self.yaw, self.kf_yaw, [YAW_MOCAP],
                                    ev.value)
        elif kind == MeasurementKind.GYRO_Z:
            self.kf_yaw = kf_update(self.yaw, self.kf_yaw, [YAW_GYRO],
                                    ev.value)
        elif kind == MeasurementKind.BARO:
            self.kf_vert = kf_update(self.vertical, self.kf_vert,
                                     [VERT_BARO], ev.value)
        elif kind == MeasurementKind.RANGEFINDER:
            self.kf_vert = kf_update(self.vertical, self.kf_vert,
                                     [VERT_RF], ev.value)
        # IMU_ACCEL events carry prediction inputs, not update rows.


def estimator_bank_step(bank: EstimatorBank, events, imu: ImuSample) -> np.ndarray:
    """Functional alias for :meth:`EstimatorBank.step`."""
    return bank.step(events, imu)


# --------------------------------------------------------------------------
# Measurement log replay
# --------------------------------------------------------------------------

REPLAY_HEADER = "t,kind,v1,v2,v3"


def write_measurement_log(path, events):
    """CSV replay format: t, kind, then up to three value columns."""
    with open(path, "w") as fh:
        fh.write(REPLAY_HEADER + "\n")
        for ev in sorted(events, key=lambda e: e.timestamp):
            vals = [repr(float(v)) for v in ev.value]
            vals += [""] * (3 - len(vals))
            fh.write(f"{float(ev.timestamp)!r},{ev.kind.value},"
                     + ",".join(vals) + "\n")


def read_measurement_log(path):
    events = []
    with open(path) as fh:
        header = fh.readline().strip()
        if header.split(",")[:2] != ["t", "kind"]:
            raise DomainError(f"{path}: not a measurement log")
        for line in fh:
            parts = line.strip().split(",")
            if len(parts) < 3:
                continue
            vals = [float(x) for x in parts[2:] if x != ""]
            events.append(MeasurementEvent(float(parts[0]),
                                           MeasurementKind(parts[1]),
                                           np.array(vals)))
    return events
