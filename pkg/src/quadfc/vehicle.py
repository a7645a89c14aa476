"""Nonlinear quadcopter plant.

State convention (12 entries, inertial frame is NED so z points down):

    [x, y, z, vx, vy, vz, phi, theta, psi, wx, wy, wz]

positions/velocities in the inertial frame, 3-2-1 Euler angles, body-frame
angular rates. The four propulsors are first-order lags from normalized
throttle to rotor speed (RPM); squared speeds map to total thrust and body
torques through the X-configuration mixing matrix (rotors 1 and 3 spin CW,
2 and 4 CCW).

Rotor speeds, the throttle slope and the speed bias are all RPM. Hover then
solves at a throttle near 0.68, which is consistent with a 920 KV motor on a
3S pack; treating them as rad/s would imply impossible speeds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._accel import njit
from .errors import DomainError, GimbalLockError

GRAVITY = 9.81

# |cos(theta)| below this is treated as gimbal lock rather than returning NaN.
GIMBAL_COS_MIN = 1e-6


@dataclass(frozen=True)
class VehicleParams:
    """Physical constants of the vehicle and propulsion units."""

    c_t: float = 5.724165e-8    # thrust coefficient, N per RPM^2
    c_m: float = 8.881631e-10   # moment coefficient, N*m per RPM^2
    c_r: float = 9957.3         # throttle-to-speed slope, RPM
    omega_b: float = 12.3517    # speed bias at zero throttle, RPM
    t_m: float = 0.245217       # propulsor time constant, s
    d: float = 0.17             # rotor arm distance, m
    m: float = 1.062            # mass, kg
    j_xx: float = 1.07e-2       # roll inertia, kg*m^2
    j_yy: float = 1.11e-2       # pitch inertia, kg*m^2
    j_zz: float = 2.29e-2       # yaw inertia, kg*m^2
    g: float = GRAVITY          # m/s^2
    t_s: float = 0.005          # control sample period, s

    def __post_init__(self):
        for name in ("c_t", "c_m", "c_r", "t_m", "d", "m",
                     "j_xx", "j_yy", "j_zz", "g", "t_s"):
            if getattr(self, name) <= 0.0:
                raise DomainError(f"VehicleParams.{name} must be > 0")
        if self.omega_b < 0.0:
            raise DomainError("VehicleParams.omega_b must be >= 0")

    @property
    def c_tau(self) -> float:
        """Arm torque coefficient, (sqrt(2)/2) * d * c_t. Derived, never stored."""
        return 0.5 * math.sqrt(2.0) * self.d * self.c_t

    @property
    def hover_thrust(self) -> float:
        return self.m * self.g

    @property
    def hover_speed(self) -> float:
        """Rotor speed (RPM) at which four rotors exactly carry the weight."""
        return math.sqrt(self.m * self.g / (4.0 * self.c_t))

    @property
    def max_speed(self) -> float:
        """Steady-state rotor speed at full throttle."""
        return self.c_r + self.omega_b


def wrap_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    r = math.remainder(a, 2.0 * math.pi)
    if r <= -math.pi:
        r += 2.0 * math.pi
    return r


@dataclass(frozen=True)
class StateVector:
    """Rigid-body state. Arrays are copied in and treated as immutable."""

    pos: np.ndarray
    vel: np.ndarray
    euler: np.ndarray
    omega_body: np.ndarray

    def __post_init__(self):
        for name in ("pos", "vel", "euler", "omega_body"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != (3,):
                raise DomainError(f"StateVector.{name} must be a 3-vector")
            object.__setattr__(self, name, v.copy())

    @classmethod
    def hover(cls, pos=(0.0, 0.0, 0.0), psi: float = 0.0) -> "StateVector":
        return cls(np.asarray(pos, dtype=float), np.zeros(3),
                   np.array([0.0, 0.0, psi]), np.zeros(3))

    @classmethod
    def from_array(cls, x: np.ndarray) -> "StateVector":
        x = np.asarray(x, dtype=float)
        return cls(x[0:3], x[3:6], x[6:9], x[9:12])

    def to_array(self) -> np.ndarray:
        return np.concatenate([self.pos, self.vel, self.euler, self.omega_body])


@dataclass(frozen=True)
class WrenchInput:
    """Plant input: total thrust along -z_body and the three body torques."""

    thrust: float
    tau: np.ndarray

    def __post_init__(self):
        if self.thrust < 0.0:
            raise DomainError("WrenchInput.thrust must be >= 0")
        t = np.asarray(self.tau, dtype=float)
        if t.shape != (3,):
            raise DomainError("WrenchInput.tau must be a 3-vector")
        object.__setattr__(self, "tau", t.copy())

    def to_array(self) -> np.ndarray:
        return np.array([self.thrust, self.tau[0], self.tau[1], self.tau[2]])


@dataclass(frozen=True)
class PropulsorBank:
    """Current speeds of the four propulsors (RPM)."""

    omega: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.omega, dtype=float)
        if w.shape != (4,):
            raise DomainError("PropulsorBank.omega must be a 4-vector")
        if np.any(w < 0.0):
            raise DomainError("propulsor speeds must be >= 0")
        object.__setattr__(self, "omega", w.copy())

    @classmethod
    def at_hover(cls, params: VehicleParams) -> "PropulsorBank":
        return cls(np.full(4, params.hover_speed))


@dataclass(frozen=True)
class MotorCommand:
    """Normalized throttle for each motor, each in [0, 1]."""

    sigma: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.sigma, dtype=float)
        if s.shape != (4,):
            raise DomainError("MotorCommand.sigma must be a 4-vector")
        if np.any(s < 0.0) or np.any(s > 1.0):
            raise DomainError("throttle outside [0, 1]")
        object.__setattr__(self, "sigma", s.copy())


def rotation_body_to_inertial(euler) -> np.ndarray:
    """3-2-1 rotation matrix taking body-frame vectors to the inertial frame."""
    phi, theta, psi = float(euler[0]), float(euler[1]), float(euler[2])
    if abs(theta) >= 0.5 * math.pi:
        raise DomainError("pitch magnitude must be below 90 deg")
    cphi, sphi = math.cos(phi), math.sin(phi)
    cth, sth = math.cos(theta), math.sin(theta)
    cpsi, spsi = math.cos(psi), math.sin(psi)
    return np.array([
        [cth * cpsi, cpsi * sth * sphi - spsi * cphi, cpsi * sth * cphi + spsi * sphi],
        [cth * spsi, spsi * sth * sphi + cpsi * cphi, spsi * sth * cphi - cpsi * sphi],
        [-sth,       sphi * cth,                      cphi * cth],
    ])


def propulsor_steady_state(sigma: float, params: VehicleParams) -> float:
    """Steady-state rotor speed (RPM) for a normalized throttle."""
    if not 0.0 <= sigma <= 1.0:
        raise DomainError(f"throttle {sigma} outside [0, 1]")
    return params.c_r * sigma + params.omega_b


def propulsor_step(bank: PropulsorBank, cmd: MotorCommand, dt: float,
                   params: VehicleParams) -> PropulsorBank:
    """Advance rotor speeds by dt under a held throttle command.

    Uses the exact solution of the first-order lag, so composing two half
    steps equals one full step to rounding.
    """
    if dt <= 0.0:
        raise DomainError("dt must be > 0")
    w_ss = params.c_r * cmd.sigma + params.omega_b
    decay = math.exp(-dt / params.t_m)
    return PropulsorBank(w_ss + (bank.omega - w_ss) * decay)


def propulsor_wrench(bank: PropulsorBank, params: VehicleParams) -> WrenchInput:
    """Map squared rotor speeds through the mixing matrix to thrust and torques."""
    w2 = bank.omega ** 2
    ct, cm, ctau = params.c_t, params.c_m, params.c_tau
    thrust = ct * (w2[0] + w2[1] + w2[2] + w2[3])
    tau = np.array([
        ctau * (-w2[0] - w2[1] + w2[2] + w2[3]),
        ctau * (w2[0] - w2[1] - w2[2] + w2[3]),
        cm * (-w2[0] + w2[1] - w2[2] + w2[3]),
    ])
    return WrenchInput(thrust, tau)


def mixing_matrix(params: VehicleParams) -> np.ndarray:
    """4x4 map from squared rotor speeds to [T, tau_x, tau_y, tau_z]."""
    ct, cm, ctau = params.c_t, params.c_m, params.c_tau
    return np.array([
        [ct, ct, ct, ct],
        [-ctau, -ctau, ctau, ctau],
        [ctau, -ctau, -ctau, ctau],
        [-cm, cm, -cm, cm],
    ])


@njit(cache=True)
def _state_derivative(x, thrust, tau_x, tau_y, tau_z, fx, fy, fz,
                      m, j_xx, j_yy, j_zz, g):
    out = np.empty(12)
    phi = x[6]
    theta = x[7]
    psi = x[8]
    wx = x[9]
    wy = x[10]
    wz = x[11]
    cphi = math.cos(phi)
    sphi = math.sin(phi)
    cth = math.cos(theta)
    sth = math.sin(theta)
    cpsi = math.cos(psi)
    spsi = math.sin(psi)
    out[0] = x[3]
    out[1] = x[4]
    out[2] = x[5]
    a = thrust / m
    out[3] = -(cpsi * sth * cphi + spsi * sphi) * a + fx / m
    out[4] = -(spsi * sth * cphi - cpsi * sphi) * a + fy / m
    out[5] = g - cth * cphi * a + fz / m
    tth = sth / cth
    out[6] = wx + tth * (sphi * wy + cphi * wz)
    out[7] = cphi * wy - sphi * wz
    out[8] = (sphi * wy + cphi * wz) / cth
    out[9] = tau_x / j_xx + (j_yy - j_zz) / j_xx * wy * wz
    out[10] = tau_y / j_yy + (j_zz - j_xx) / j_yy * wx * wz
    out[11] = tau_z / j_zz + (j_xx - j_yy) / j_zz * wx * wy
    return out


@njit(cache=True)
def _rk4_step(x, thrust, tau_x, tau_y, tau_z, fx, fy, fz, dt,
              m, j_xx, j_yy, j_zz, g):
    k1 = _state_derivative(x, thrust, tau_x, tau_y, tau_z, fx, fy, fz,
                           m, j_xx, j_yy, j_zz, g)
    k2 = _state_derivative(x + 0.5 * dt * k1, thrust, tau_x, tau_y, tau_z,
                           fx, fy, fz, m, j_xx, j_yy, j_zz, g)
    k3 = _state_derivative(x + 0.5 * dt * k2, thrust, tau_x, tau_y, tau_z,
                           fx, fy, fz, m, j_xx, j_yy, j_zz, g)
    k4 = _state_derivative(x + dt * k3, thrust, tau_x, tau_y, tau_z,
                           fx, fy, fz, m, j_xx, j_yy, j_zz, g)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@njit(cache=True)
def _plant_hold(x, omega, sigma, substeps, dt, fx, fy, fz,
                c_t, c_m, c_tau, c_r, omega_b, t_m, m, j_xx, j_yy, j_zz, g):
    """Advance plant + propulsors over one zero-order-hold interval."""
    h = dt / substeps
    decay = math.exp(-h / t_m)
    x = x.copy()
    omega = omega.copy()
    for _ in range(substeps):
        w2_0 = omega[0] * omega[0]
        w2_1 = omega[1] * omega[1]
        w2_2 = omega[2] * omega[2]
        w2_3 = omega[3] * omega[3]
        thrust = c_t * (w2_0 + w2_1 + w2_2 + w2_3)
        tau_x = c_tau * (-w2_0 - w2_1 + w2_2 + w2_3)
        tau_y = c_tau * (w2_0 - w2_1 - w2_2 + w2_3)
        tau_z = c_m * (-w2_0 + w2_1 - w2_2 + w2_3)
        x = _rk4_step(x, thrust, tau_x, tau_y, tau_z, fx, fy, fz, h,
                      m, j_xx, j_yy, j_zz, g)
        for i in range(4):
            w_ss = c_r * sigma[i] + omega_b
            omega[i] = w_ss + (omega[i] - w_ss) * decay
    return x, omega


def _check_attitude(x: np.ndarray):
    if abs(math.cos(x[7])) < GIMBAL_COS_MIN or not np.all(np.isfinite(x)):
        raise GimbalLockError(f"pitch {x[7]:.6f} rad is too close to +/-90 deg")


def dynamics_derivative(x: StateVector, u: WrenchInput, params: VehicleParams,
                        f_ext=None) -> np.ndarray:
    """Time derivative of the 12-entry state array under a held wrench.

    ``f_ext`` is an optional constant external force (N, inertial frame),
    the hook used for disturbance studies. Raises GimbalLockError near
    pitch = +/-90 deg, where the Euler kinematics are singular.
    """
    xa = x.to_array()
    _check_attitude(xa)
    fx, fy, fz = (0.0, 0.0, 0.0) if f_ext is None else map(float, f_ext)
    return _state_derivative(xa, u.thrust, u.tau[0], u.tau[1], u.tau[2],
                             fx, fy, fz, params.m, params.j_xx, params.j_yy,
                             params.j_zz, params.g)


def integrate_step(x: StateVector, u: WrenchInput, dt: float,
                   params: VehicleParams, f_ext=None) -> StateVector:
    """One fourth-order Runge-Kutta step with the wrench held constant."""
    if dt <= 0.0:
        raise DomainError("dt must be > 0")
    xa = x.to_array()
    _check_attitude(xa)
    fx, fy, fz = (0.0, 0.0, 0.0) if f_ext is None else map(float, f_ext)
    out = _rk4_step(xa, u.thrust, u.tau[0], u.tau[1], u.tau[2], fx, fy, fz,
                    dt, params.m, params.j_xx, params.j_yy, params.j_zz,
                    params.g)
    _check_attitude(out)
    return StateVector.from_array(out)


def hover_equilibrium(params: VehicleParams, pos=(0.0, 0.0, 0.0),
                      psi: float = 0.0):
    """Hover state and input pair: zero rates, thrust exactly m*g."""
    x = StateVector.hover(pos, psi)
    u = WrenchInput(params.hover_thrust, np.zeros(3))
    return x, u
