"""Hover-linearized submodels.

Linearizing the rigid-body model about hover decouples it into six double
integrators, one per controlled channel. Each has the continuous form

    d/dt [e, de] = [[0, 1], [0, 0]] [e, de] + [0, k_delta] u

and, under a zero-order hold with period t_s, the discrete form

    [e, de]_{k+1} = [[1, t_s], [0, 1]] [e, de]_k + k_delta * [t_s^2/2, t_s] u_k

The channel gains follow the published case table: the phi channel carries
1/j_yy and the theta channel 1/j_xx. Relative to the rotational dynamics of
the nonlinear plant those two inertias are exchanged; j_xx and j_yy differ by
under 4 percent, so controllers designed on these gains remain valid (the
cascade routes torques to the physically matching axes, see controllers).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DomainError
from .vehicle import VehicleParams


class Axis(str, Enum):
    X = "x"
    Y = "y"
    Z = "z"
    PHI = "phi"
    THETA = "theta"
    PSI = "psi"


AXES = tuple(Axis)

# Axes whose tracking error must be wrapped to (-pi, pi].
ANGLE_AXES = frozenset({Axis.PHI, Axis.THETA, Axis.PSI})


@dataclass(frozen=True)
class ContinuousSubmodel:
    axis: Axis
    k_delta: float  # input gain of the double integrator


@dataclass(frozen=True)
class DiscreteSubmodel:
    axis: Axis
    a: np.ndarray      # 2x2, [[1, t_s], [0, 1]]
    b_ts: np.ndarray   # 2-vector
    t_s: float

    def __post_init__(self):
        object.__setattr__(self, "a", np.asarray(self.a, dtype=float))
        object.__setattr__(self, "b_ts", np.asarray(self.b_ts, dtype=float))


@dataclass(frozen=True)
class AugmentedSubmodel:
    """Discrete submodel with an appended position-error integrator state."""

    axis: Axis
    a_int: np.ndarray  # 3x3, third row [t_s, 0, 1]
    b_int: np.ndarray  # 3-vector, third entry 0
    t_s: float

    def __post_init__(self):
        object.__setattr__(self, "a_int", np.asarray(self.a_int, dtype=float))
        object.__setattr__(self, "b_int", np.asarray(self.b_int, dtype=float))


def continuous_submodels(params: VehicleParams) -> dict[Axis, ContinuousSubmodel]:
    """The six decoupled channels and their input gains."""
    gains = {
        Axis.X: -params.g,
        Axis.Y: params.g,
        Axis.Z: -1.0 / params.m,
        Axis.PHI: 1.0 / params.j_yy,
        Axis.THETA: 1.0 / params.j_xx,
        Axis.PSI: 1.0 / params.j_zz,
    }
    return {axis: ContinuousSubmodel(axis, k) for axis, k in gains.items()}


def discretize(sub: ContinuousSubmodel, t_s: float) -> DiscreteSubmodel:
    """Zero-order-hold discretization, exact for the double integrator."""
    if t_s < 0.0:
        raise DomainError("t_s must be >= 0")
    a = np.array([[1.0, t_s], [0.0, 1.0]])
    b = sub.k_delta * np.array([0.5 * t_s * t_s, t_s])
    return DiscreteSubmodel(sub.axis, a, b, t_s)


def augment_integrator(sub: DiscreteSubmodel) -> AugmentedSubmodel:
    """Append an integrator that accumulates t_s times the position error."""
    t_s = sub.t_s
    a_int = np.array([
        [1.0, t_s, 0.0],
        [0.0, 1.0, 0.0],
        [t_s, 0.0, 1.0],
    ])
    b_int = np.array([sub.b_ts[0], sub.b_ts[1], 0.0])
    return AugmentedSubmodel(sub.axis, a_int, b_int, t_s)


def discrete_submodels(params: VehicleParams,
                       t_s: float | None = None) -> dict[Axis, DiscreteSubmodel]:
    """Convenience: all six ZOH-discretized channels at the control period."""
    ts = params.t_s if t_s is None else t_s
    return {axis: discretize(sub, ts)
            for axis, sub in continuous_submodels(params).items()}
