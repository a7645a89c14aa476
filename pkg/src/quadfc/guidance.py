"""Reference trajectories and yaw alignment.

The flight scenario is an inclined circle entered and left through straight
segments. The circular section follows a trapezoidal tangential-speed
profile; the straight lead-in/out segments follow a smooth speed bump with
zero speed and zero acceleration at both endpoints (a quintic position
polynomial). Velocity references are exact time derivatives of the position
references.

Because the decoupled horizontal controllers act in a frame aligned with
the vehicle heading, position and velocity states and references are
rotated by the current yaw before entering the control cascade.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .vehicle import StateVector, wrap_angle


@dataclass(frozen=True)
class ReferenceVector:
    pos_ref: np.ndarray
    yaw_ref: float
    vel_ref: np.ndarray
    yaw_rate_ref: float

    def __post_init__(self):
        object.__setattr__(self, "pos_ref", np.asarray(self.pos_ref, dtype=float))
        object.__setattr__(self, "vel_ref", np.asarray(self.vel_ref, dtype=float))
        object.__setattr__(self, "yaw_ref", wrap_angle(float(self.yaw_ref)))

    def to_array(self) -> np.ndarray:
        """[r_x, r_y, r_z, r_psi, r_vx, r_vy, r_vz, r_psidot]."""
        return np.array([self.pos_ref[0], self.pos_ref[1], self.pos_ref[2],
                         self.yaw_ref, self.vel_ref[0], self.vel_ref[1],
                         self.vel_ref[2], self.yaw_rate_ref])


def yaw_align(xy, psi: float) -> np.ndarray:
    """Rotate a horizontal 2-vector into the heading-aligned frame."""
    c, s = math.cos(psi), math.sin(psi)
    return np.array([c * xy[0] + s * xy[1], -s * xy[0] + c * xy[1]])


def align_bundle(x: StateVector, r: ReferenceVector):
    """Yaw-align state and reference for the cascade.

    Horizontal positions and velocities of both are rotated by the state's
    yaw; vertical and yaw channels pass through. Returns 12- and 8-entry
    arrays in the cascade's layout.
    """
    psi = float(x.euler[2])
    xa = x.to_array()
    ra = r.to_array()
    out_x = xa.copy()
    out_x[0:2] = yaw_align(xa[0:2], psi)
    out_x[3:5] = yaw_align(xa[3:5], psi)
    out_r = ra.copy()
    out_r[0:2] = yaw_align(ra[0:2], psi)
    out_r[4:6] = yaw_align(ra[4:6], psi)
    return out_x, out_r


# --------------------------------------------------------------------------
# Inclined-circle scenario
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CircleScenario:
    """Inclined circle with straight lead-in/out segments.

    The circle of given radius lies in a plane rotated by ``incline`` about
    the inertial y axis, centered at ``center`` (inertial, z down). The
    vehicle enters at the point closest to beta = 0 along the tangent.
    """

    radius: float = 4.5
    incline: float = math.radians(-7.5)
    tangential_speed: float = 2.0
    accel_phase: float | None = None     # ramp duration; default speed/1.0
    lead_in: float = 2.0                 # straight segment length, m
    lead_out: float | None = None
    laps: float = 1.0
    center: tuple[float, float, float] = (0.0, 0.0, -2.0)
    heading_mode: str = "tangent"        # "tangent" or "fixed"
    fixed_heading: float = 0.0

    def __post_init__(self):
        if self.radius <= 0.0:
            raise DomainError("radius must be > 0")
        if abs(self.incline) >= 0.5 * math.pi:
            raise DomainError("incline must be below 90 deg")
        if self.tangential_speed <= 0.0:
            raise DomainError("tangential speed must be > 0")
        if self.heading_mode not in ("tangent", "fixed"):
            raise DomainError("heading_mode must be 'tangent' or 'fixed'")

    @property
    def ramp_time(self) -> float:
        return (self.tangential_speed if self.accel_phase is None
                else self.accel_phase)

    @property
    def lead_out_len(self) -> float:
        return self.lead_in if self.lead_out is None else self.lead_out


class _Trapezoid:
    """Arc length s(t) ramping 0 -> v -> 0 at constant acceleration."""

    def __init__(self, v: float, t_ramp: float, total_len: float):
        if t_ramp <= 0.0:
            t_ramp = 1e-9
        accel = v / t_ramp
        if v * t_ramp <= total_len:          # full trapezoid
            self.v = v
            self.t_ramp = t_ramp
        else:                                 # degenerate triangle: cap peak
            self.v = math.sqrt(total_len * accel)
            self.t_ramp = self.v / accel
        self.accel = accel
        self.s_ramp = 0.5 * self.v * self.t_ramp
        self.t_cruise = (total_len - 2.0 * self.s_ramp) / self.v
        self.duration = 2.0 * self.t_ramp + self.t_cruise
        self.length = total_len

    def eval(self, t: float) -> tuple[float, float]:
        """(s, sdot) at time t within [0, duration]."""
        if t <= 0.0:
            return 0.0, 0.0
        if t < self.t_ramp:
            return 0.5 * self.accel * t * t, self.accel * t
        if t < self.t_ramp + self.t_cruise:
            return self.s_ramp + self.v * (t - self.t_ramp), self.v
        if t < self.duration:
            dt = self.duration - t
            return self.length - 0.5 * self.accel * dt * dt, self.accel * dt
        return self.length, 0.0


class _SmoothSegment:
    """Straight segment with zero speed and acceleration at both ends.

    Quintic position polynomial (smoothstep of order 2); the peak speed is
    15/8 of the mean, which sets the duration for a given target speed.
    """

    def __init__(self, length: float, peak_speed: float):
        self.length = length
        self.duration = (15.0 * length / (8.0 * peak_speed)
                         if length > 0.0 and peak_speed > 0.0 else 0.0)

    def eval(self, t: float) -> tuple[float, float]:
        if self.duration <= 0.0 or t <= 0.0:
            return 0.0, 0.0
        if t >= self.duration:
            return self.length, 0.0
        tau = t / self.duration
        s = self.length * (10.0 * tau ** 3 - 15.0 * tau ** 4 + 6.0 * tau ** 5)
        sdot = (self.length / self.duration) * (30.0 * tau ** 2
                                                - 60.0 * tau ** 3
                                                + 30.0 * tau ** 4)
        return s, sdot


class CircleReference:
    """Precomputed phase layout of a circle scenario; evaluate with at(t)."""

    def __init__(self, scn: CircleScenario):
        self.scn = scn
        a = scn.incline
        self._rot = np.array([[math.cos(a), 0.0, math.sin(a)],
                              [0.0, 1.0, 0.0],
                              [-math.sin(a), 0.0, math.cos(a)]])
        self._center = np.asarray(scn.center, dtype=float)
        v = scn.tangential_speed
        self.lead_in = _SmoothSegment(scn.lead_in, v)
        self.circle = _Trapezoid(v, scn.ramp_time,
                                 scn.laps * 2.0 * math.pi * scn.radius)
        self.lead_out = _SmoothSegment(scn.lead_out_len, v)
        self.t_circle = self.lead_in.duration
        self.t_out = self.t_circle + self.circle.duration
        self.duration = self.t_out + self.lead_out.duration

    # circle geometry -------------------------------------------------
    def _point(self, beta: float) -> np.ndarray:
        flat = np.array([self.scn.radius * math.cos(beta),
                         self.scn.radius * math.sin(beta), 0.0])
        return self._center + self._rot @ flat

    def _tangent(self, beta: float) -> np.ndarray:
        """Unit tangent: |d point/d beta| = radius for any incline."""
        flat = np.array([-math.sin(beta), math.cos(beta), 0.0])
        return self._rot @ flat

    def at(self, t: float) -> ReferenceVector:
        if t < 0.0:
            raise DomainError("t must be >= 0")
        scn = self.scn
        r = scn.radius
        entry_tan = self._tangent(0.0)
        start = self._point(0.0) - scn.lead_in * entry_tan

        if t < self.t_circle:
            s, sdot = self.lead_in.eval(t)
            pos = start + s * entry_tan
            vel = sdot * entry_tan
            beta = 0.0
            beta_dot = 0.0
            tan = entry_tan
        elif t < self.t_out:
            s, sdot = self.circle.eval(t - self.t_circle)
            beta = s / r
            beta_dot = sdot / r
            pos = self._point(beta)
            tan = self._tangent(beta)
            vel = sdot * tan
        else:
            beta = self.circle.length / r
            exit_tan = self._tangent(beta)
            s, sdot = self.lead_out.eval(t - self.t_out)
            pos = self._point(beta) + s * exit_tan
            vel = sdot * exit_tan
            beta_dot = 0.0
            tan = exit_tan

        if scn.heading_mode == "fixed":
            return ReferenceVector(pos, scn.fixed_heading, vel, 0.0)
        yaw = math.atan2(tan[1], tan[0])
        # d/dt atan2(ty, tx) along the circle; zero on the straights.
        tx, ty = tan[0], tan[1]
        denom = tx * tx + ty * ty
        dtan = self._rot @ np.array([-math.cos(beta), -math.sin(beta), 0.0])
        yaw_rate = (tx * dtan[1] - ty * dtan[0]) / denom * beta_dot
        return ReferenceVector(pos, yaw, vel, yaw_rate)


def circle_reference(scn: CircleScenario, t: float) -> ReferenceVector:
    """Reference at time t; holds the terminal hover point past the end."""
    return CircleReference(scn).at(t)


# --------------------------------------------------------------------------
# Step scenario (setpoint jumps from hover)
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class StepScenario:
    """Hover at `start`, then jump the setpoint at `step_time`."""

    start: tuple[float, float, float] = (0.0, 0.0, -1.5)
    step_pos: tuple[float, float, float] = (1.0, 1.0, -1.0)
    step_yaw: float = 0.0
    step_time: float = 1.0
    start_yaw: float = 0.0

    def at(self, t: float) -> ReferenceVector:
        if t < self.step_time:
            return ReferenceVector(np.asarray(self.start, dtype=float),
                                   self.start_yaw, np.zeros(3), 0.0)
        return ReferenceVector(np.asarray(self.step_pos, dtype=float),
                               self.step_yaw, np.zeros(3), 0.0)

    @property
    def duration(self) -> float:
        return self.step_time
