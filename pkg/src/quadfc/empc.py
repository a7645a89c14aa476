"""Explicit MPC: offline condensed QP solves over a state grid, online lookup.

Each channel solves, from initial deviation x0 = [e, edot],

    min  x_N' P x_N + sum_{k<N} x_k' Q x_k + u_k' R u_k
    s.t. x_{k+1} = A x_k + B u_k,   |edot_k| <= edot_max (k = 1..N),
         |u_k| <= u_max (k = 0..N-1)

with P the Riccati terminal weight, so the unconstrained optimum coincides
with the infinite-horizon LQR law. States are eliminated, leaving the dense
condensed program  min 1/2 U'HU + q'U  s.t.  GU <= w  in the move sequence
U, solved by projected gradient ascent on the dual (step 1/L with L the
largest eigenvalue of G H^-1 G', Nesterov momentum with restarts). The
first move over a grid of initial states is frozen into a lookup table;
online evaluation is a bilinear interpolation with an unconstrained-LQR
fallback outside the grid or at infeasible nodes.

For the double integrator the constraint matrix never needs to be formed:
predicted velocities are b2 * prefix sums of the moves, so G u and G' lam
are cumulative sums and each dual iteration costs one N x N solve against
the Hessian. The table builder leans on that; the generic dense solver
handles arbitrary condensed programs.

Table file layout (little-endian, documented for interoperability):

    offset  size  field
    0       8     magic  b"QFCEMPC1"
    8       2     axis   u16 (0 x, 1 y, 2 z, 3 phi, 4 theta, 5 psi)
    10      2     flags  u16 (reserved, 0)
    12      4     n_pos  u32  grid nodes along the position-error axis
    16      4     n_vel  u32  grid nodes along the velocity-error axis
    20      32    pos_min, pos_max, vel_min, vel_max   4 x f64
    52      4     horizon u32
    56      48    t_s, q00, q11, r, k_fallback_pos, k_fallback_vel  6 x f64
    104     8     input_bound f64
    112     32    sha256 digest of the generating configuration
    144     8*n   table values, f64, row-major (position rows), NaN at
                  infeasible nodes
    ...     n     feasibility mask, u8 (1 feasible)
"""

from __future__ import annotations

import functools
import hashlib
import math
import struct
from dataclasses import dataclass

import numpy as np

from ._accel import njit, prange
from .controllers import LqrGains, dare_solve, lqr_gains
from .errors import DomainError, QpSolverError, TableMismatchError
from .linmodels import AXES, Axis, DiscreteSubmodel

_MAGIC = b"QFCEMPC1"

# Solver status codes shared with the jitted kernels.
_OPTIMAL = 0
_INFEASIBLE = 1
_ITER_CAP = 2

DEFAULT_QP_TOL = 1e-8
DEFAULT_QP_MAX_ITER = 10 ** 5
DEFAULT_QP_DIVERGENCE = 1e10


@dataclass(frozen=True)
class MpcConfig:
    """Per-axis horizon, weights, terminal weight and bounds."""

    horizon_steps: int
    q: np.ndarray            # 2x2 PSD stage weight
    r: float                 # positive control weight
    p: np.ndarray            # 2x2 terminal weight (Riccati solution)
    state_bounds: tuple[float, float]   # (|e|_max, |edot|_max); only the
                                        # velocity bound becomes a constraint
    input_bound: float

    def __post_init__(self):
        if self.horizon_steps < 1:
            raise DomainError("horizon must be at least one step")
        if self.r <= 0.0 or self.input_bound <= 0.0:
            raise DomainError("control weight and input bound must be > 0")
        object.__setattr__(self, "q", np.asarray(self.q, dtype=float))
        object.__setattr__(self, "p", np.asarray(self.p, dtype=float))

    @classmethod
    def from_weights(cls, sub: DiscreteSubmodel, q, r: float,
                     state_bounds, input_bound: float,
                     horizon_steps: int) -> "MpcConfig":
        q = np.asarray(q, dtype=float)
        p = dare_solve(sub.a, sub.b_ts, q, r)
        return cls(horizon_steps, q, float(r), p,
                   (float(state_bounds[0]), float(state_bounds[1])),
                   float(input_bound))


@dataclass(frozen=True)
class CondensedQp:
    h: np.ndarray       # N x N symmetric positive definite
    q_lin: np.ndarray   # N
    g: np.ndarray       # m x N
    w: np.ndarray       # m


class _CondensedFamily:
    """x0-independent pieces of the condensed program for one (model, config).

    Constraint row order: velocity upper (k = 1..N), velocity lower
    (k = 1..N), input upper (k = 0..N-1), input lower (k = 0..N-1).
    """

    def __init__(self, sub: DiscreteSubmodel, cfg: MpcConfig):
        self.sub = sub
        self.cfg = cfg
        n = cfg.horizon_steps
        a, b = sub.a, sub.b_ts

        powers = [np.eye(2)]
        for _ in range(n):
            powers.append(a @ powers[-1])
        f = np.vstack([powers[k] for k in range(1, n + 1)])        # 2N x 2
        gp = np.zeros((2 * n, n))
        for k in range(1, n + 1):                                  # block row k
            for j in range(k):
                gp[2 * (k - 1):2 * k, j] = powers[k - 1 - j] @ b
        wts = np.kron(np.eye(n), cfg.q)
        wts[-2:, -2:] = cfg.p
        # Stage cost k=0 uses the fixed x0: constant, dropped. Stages
        # 1..N-1 carry Q, the terminal carries P.
        h = 2.0 * (gp.T @ wts @ gp + cfg.r * np.eye(n))
        self.h = 0.5 * (h + h.T)
        self.q_map = 2.0 * gp.T @ wts @ f                          # q = q_map @ x0
        self.h_inv = np.linalg.inv(self.h)
        self.u_free_map = -self.h_inv @ self.q_map                 # N x 2
        self.b2 = float(b[1])
        self.vmax = cfg.state_bounds[1]
        self.umax = cfg.input_bound
        self.step = 1.0 / self._operator_norm()
        self._gp = gp
        self._f = f

    def _apply_ghg(self, v: np.ndarray) -> np.ndarray:
        """G H^-1 G' v through the prefix-sum structure of G."""
        n = self.h.shape[0]
        z = self.b2 * np.cumsum((v[:n] - v[n:2 * n])[::-1])[::-1] \
            + v[2 * n:3 * n] - v[3 * n:]
        hu = self.h_inv @ z
        gv = self.b2 * np.cumsum(hu)
        return np.concatenate([gv, -gv, hu, -hu])

    def _operator_norm(self, iters: int = 300) -> float:
        # Start vector must avoid the operator's null space (the paired
        # +row/-row structure annihilates symmetric vectors like all-ones).
        n = self.h.shape[0]
        v = np.cos(1.7 * np.arange(4 * n))
        v /= np.linalg.norm(v)
        lam = 1.0
        for _ in range(iters):
            v = self._apply_ghg(v)
            nrm = np.linalg.norm(v)
            if nrm == 0.0:
                return 1.0
            v /= nrm
            lam = nrm
        return lam * 1.001

    def dense_g_w(self, x0: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        n = self.h.shape[0]
        vel_rows = self._gp[1::2, :]
        eye_n = np.eye(n)
        g = np.vstack([vel_rows, -vel_rows, eye_n, -eye_n])
        v0 = float(x0[1])
        w = np.concatenate([np.full(n, self.vmax - v0),
                            np.full(n, self.vmax + v0),
                            np.full(n, self.umax), np.full(n, self.umax)])
        return g, w

    def qp_at(self, x0: np.ndarray) -> CondensedQp:
        x0 = np.asarray(x0, dtype=float)
        g, w = self.dense_g_w(x0)
        return CondensedQp(self.h, self.q_map @ x0, g, w)


def condense_qp(sub: DiscreteSubmodel, cfg: MpcConfig, x0) -> CondensedQp:
    """Condensed program whose minimizer is the optimal move sequence from x0."""
    return _CondensedFamily(sub, cfg).qp_at(np.asarray(x0, dtype=float))


# --------------------------------------------------------------------------
# Dual projected gradient, generic dense form
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class QpSolution:
    status: str            # "optimal" or "infeasible"
    u: np.ndarray | None
    iterations: int


def solve_qp(qp: CondensedQp, tol: float = DEFAULT_QP_TOL,
             max_iter: int = DEFAULT_QP_MAX_ITER,
             divergence: float = DEFAULT_QP_DIVERGENCE) -> QpSolution:
    """Solve the condensed program; infeasibility is signalled, not raised.

    The dual gradient is affine (grad(lam) = G u_free - w - M lam with
    M = G H^-1 G'), so the gradient at the momentum point is the matching
    affine combination of stored gradients; each iteration costs one
    matrix-vector product with M.
    """
    h_inv = np.linalg.inv(qp.h)
    u_free = -h_inv @ qp.q_lin
    base = qp.g @ u_free - qp.w
    if np.max(base) <= tol:
        return QpSolution("optimal", u_free, 0)
    m1 = h_inv @ qp.g.T
    m2 = qp.g @ m1

    lam = np.zeros(qp.w.shape[0])
    grad = base.copy()
    grad_prev = grad
    lam_prev = lam
    t_mom = 1.0
    step = 1.0 / _symmetric_norm(m2)
    for it in range(1, max_iter + 1):
        beta = (t_mom - 1.0) / (0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t_mom * t_mom)))
        grad_y = (1.0 + beta) * grad - beta * grad_prev
        y = lam + beta * (lam - lam_prev)
        lam_next = np.maximum(y + step * grad_y, 0.0)
        grad_next = base - m2 @ lam_next

        viol = max(np.max(grad_next), 0.0)
        lam_l1 = float(np.sum(lam_next))
        comp = float(lam_next @ grad_next)
        if viol <= tol and abs(comp) <= tol * (1.0 + lam_l1):
            return QpSolution("optimal", u_free - m1 @ lam_next, it)
        if lam_l1 > divergence:
            return QpSolution("infeasible", None, it)

        if grad_next @ (lam_next - lam) < 0.0:
            t_mom = 1.0
        else:
            t_mom = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t_mom * t_mom))
        lam_prev, lam = lam, lam_next
        grad_prev, grad = grad, grad_next
    raise QpSolverError(f"no verdict after {max_iter} dual iterations")


def _symmetric_norm(m: np.ndarray, iters: int = 300) -> float:
    v = np.cos(1.7 * np.arange(m.shape[0]))
    v /= np.linalg.norm(v)
    lam = 1.0
    for _ in range(iters):
        v = m @ v
        nrm = np.linalg.norm(v)
        if nrm == 0.0:
            return 1.0
        v /= nrm
        lam = nrm
    return lam * 1.001


# --------------------------------------------------------------------------
# Structured solver used by the table builder (jitted)
# --------------------------------------------------------------------------

@njit(cache=True)
def _dpg_double_integrator(h_inv, q_vec, b2, v0, vmax, umax, step, tol,
                           max_iter, divergence, lam_init):
    """Dual ascent specialized to the double integrator.

    lam is laid out [vel_upper(N), vel_lower(N), u_upper(N), u_lower(N)].
    Returns (status, u, lam, iterations); u is meaningful when optimal.
    """
    n = h_inv.shape[0]
    u_free = -np.dot(h_inv, q_vec)
    gu = b2 * np.cumsum(u_free)
    base = np.concatenate((gu - (vmax - v0), -gu - (vmax + v0),
                           u_free - umax, -u_free - umax))
    lam = lam_init.copy()
    if np.max(base) <= tol and np.max(lam) == 0.0:
        return _OPTIMAL, u_free, lam, 0

    # grad(lam) = base - (G H^-1 G') lam, via cumulative sums
    z = b2 * np.cumsum((lam[:n] - lam[n:2 * n])[::-1])[::-1] \
        + lam[2 * n:3 * n] - lam[3 * n:]
    hz = np.dot(h_inv, z)
    gv = b2 * np.cumsum(hz)
    grad = base - np.concatenate((gv, -gv, hz, -hz))

    lam_prev = lam.copy()
    grad_prev = grad.copy()
    t_mom = 1.0
    for it in range(1, max_iter + 1):
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t_mom * t_mom))
        beta = (t_mom - 1.0) / t_next
        lam_next = np.maximum(
            lam + beta * (lam - lam_prev)
            + step * ((1.0 + beta) * grad - beta * grad_prev), 0.0)

        z = b2 * np.cumsum((lam_next[:n] - lam_next[n:2 * n])[::-1])[::-1] \
            + lam_next[2 * n:3 * n] - lam_next[3 * n:]
        hz = np.dot(h_inv, z)
        gv = b2 * np.cumsum(hz)
        grad_next = base - np.concatenate((gv, -gv, hz, -hz))

        viol = max(np.max(grad_next), 0.0)
        lam_l1 = np.sum(lam_next)
        comp = np.dot(lam_next, grad_next)
        if viol <= tol and abs(comp) <= tol * (1.0 + lam_l1):
            u = u_free - np.dot(h_inv, z)
            return _OPTIMAL, u, lam_next, it
        if lam_l1 > divergence:
            return _INFEASIBLE, u_free, lam_next, it

        if np.dot(grad_next, lam_next - lam) < 0.0:
            t_mom = 1.0
        else:
            t_mom = t_next
        lam_prev = lam
        lam = lam_next
        grad_prev = grad
        grad = grad_next
    return _ITER_CAP, u_free, lam, max_iter


@njit(cache=True, parallel=True)
def _build_kernel(pos_grid, vel_grid, h_inv, q_map, u_free_map, b2, vmax,
                  umax, step, tol, max_iter, divergence):
    n_pos = pos_grid.shape[0]
    n_vel = vel_grid.shape[0]
    n = h_inv.shape[0]
    values = np.full((n_pos, n_vel), np.nan)
    mask = np.zeros((n_pos, n_vel), np.uint8)
    status = np.zeros((n_pos, n_vel), np.int32)
    for i in prange(n_pos):
        # Sweep the velocity axis warm-starting each node from its left
        # neighbour; rows are independent, so any thread partition across
        # rows yields the same table.
        lam = np.zeros(4 * n)
        for j in range(n_vel):
            e = pos_grid[i]
            v0 = vel_grid[j]
            if abs(v0) > vmax * (1.0 + 1e-12):
                status[i, j] = _INFEASIBLE
                lam[:] = 0.0
                continue
            q_vec = q_map[:, 0] * e + q_map[:, 1] * v0
            if np.max(lam) == 0.0:
                u_free = u_free_map[:, 0] * e + u_free_map[:, 1] * v0
                gu = b2 * np.cumsum(u_free)
                feas = True
                for k in range(n):
                    if (gu[k] > vmax - v0 + tol or -gu[k] > vmax + v0 + tol
                            or abs(u_free[k]) > umax + tol):
                        feas = False
                        break
                if feas:
                    values[i, j] = u_free[0]
                    mask[i, j] = 1
                    continue
            st, u, lam_out, _ = _dpg_double_integrator(
                h_inv, q_vec, b2, v0, vmax, umax, step, tol, max_iter,
                divergence, lam)
            status[i, j] = st
            if st == _OPTIMAL:
                values[i, j] = u[0]
                mask[i, j] = 1
                lam = lam_out
            else:
                lam[:] = 0.0
    return values, mask, status


# --------------------------------------------------------------------------
# Table build and lookup
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    """Uniform grid over [-pos_span, pos_span] x [-vel_span, vel_span]."""

    pos_span: float
    n_pos: int = 201
    n_vel: int = 201
    vel_span: float | None = None   # defaults to the velocity bound

    def __post_init__(self):
        if self.n_pos < 2 or self.n_vel < 2:
            raise DomainError("grid needs at least 2 nodes per dimension")
        if self.pos_span <= 0.0:
            raise DomainError("pos_span must be > 0")


@dataclass(frozen=True)
class ExplicitTable:
    axis: Axis
    pos_grid: np.ndarray
    vel_grid: np.ndarray
    values: np.ndarray         # (n_pos, n_vel), NaN where infeasible
    feasible_mask: np.ndarray  # bool, same shape
    fallback_gains: LqrGains
    input_bound: float
    horizon_steps: int
    t_s: float
    q: np.ndarray
    r: float
    params_digest: bytes

    def fallback(self, x) -> float:
        u = -(self.fallback_gains.k_x * float(x[0])
              + self.fallback_gains.k_xdot * float(x[1]))
        return min(max(u, -self.input_bound), self.input_bound)


def config_digest(sub: DiscreteSubmodel, cfg: MpcConfig, grid: GridSpec) -> bytes:
    """Content hash of everything that determines the table values."""
    blob = struct.pack(
        "<15d",
        sub.a[0, 0], sub.a[0, 1], sub.a[1, 0], sub.a[1, 1],
        sub.b_ts[0], sub.b_ts[1], sub.t_s,
        cfg.q[0, 0], cfg.q[0, 1], cfg.q[1, 0], cfg.q[1, 1], cfg.r,
        cfg.state_bounds[0], cfg.state_bounds[1], cfg.input_bound,
    )
    blob += struct.pack("<3i", cfg.horizon_steps, grid.n_pos, grid.n_vel)
    blob += struct.pack("<d", grid.pos_span)
    blob += sub.axis.value.encode()
    if grid.vel_span is not None:
        blob += struct.pack("<d", grid.vel_span)
    return hashlib.sha256(blob).digest()


def build_explicit_table(sub: DiscreteSubmodel, cfg: MpcConfig,
                         grid: GridSpec, tol: float = DEFAULT_QP_TOL,
                         max_iter: int = DEFAULT_QP_MAX_ITER,
                         divergence: float = DEFAULT_QP_DIVERGENCE) -> ExplicitTable:
    """First optimal move at every grid node, with LQR fallback metadata.

    Rows warm-start along the velocity axis but never across rows, so the
    result is identical for any number of build threads.
    """
    fam = _CondensedFamily(sub, cfg)
    vel_span = grid.vel_span if grid.vel_span is not None else cfg.state_bounds[1]
    pos_grid = np.linspace(-grid.pos_span, grid.pos_span, grid.n_pos)
    vel_grid = np.linspace(-vel_span, vel_span, grid.n_vel)
    values, mask, status = _build_kernel(
        pos_grid, vel_grid, fam.h_inv, fam.q_map, fam.u_free_map, fam.b2,
        fam.vmax, fam.umax, fam.step, tol, max_iter, divergence)
    if np.any(status == _ITER_CAP):
        i, j = np.argwhere(status == _ITER_CAP)[0]
        raise QpSolverError(
            f"axis {sub.axis.value}: QP hit the iteration cap at grid node "
            f"({i}, {j}), x0 = ({pos_grid[i]:.6g}, {vel_grid[j]:.6g})")
    return ExplicitTable(
        axis=sub.axis,
        pos_grid=pos_grid,
        vel_grid=vel_grid,
        values=values,
        feasible_mask=mask.astype(bool),
        fallback_gains=lqr_gains(sub, cfg.q, cfg.r),
        input_bound=cfg.input_bound,
        horizon_steps=cfg.horizon_steps,
        t_s=sub.t_s,
        q=cfg.q,
        r=cfg.r,
        params_digest=config_digest(sub, cfg, grid),
    )


def empc_lookup(table: ExplicitTable, x) -> float:
    """Bilinear interpolation of the stored law, LQR fallback off the grid.

    The velocity coordinate clamps into the grid range, like an embedded
    lookup table clamping its index: on the constraint rail the stored law
    rides the boundary, and a clamped read returns that riding control, so
    an epsilon excursion recovers instead of dropping to the unconstrained
    fallback. Position overflow (outside the table's envelope) and
    infeasible corner nodes still switch to the clamped fallback law.
    """
    e = float(x[0])
    edot = float(x[1])
    pg, vg = table.pos_grid, table.vel_grid
    if not pg[0] <= e <= pg[-1]:
        return table.fallback(x)
    edot = min(max(edot, vg[0]), vg[-1])
    i = min(int(np.searchsorted(pg, e, side="right")) - 1, pg.shape[0] - 2)
    j = min(int(np.searchsorted(vg, edot, side="right")) - 1, vg.shape[0] - 2)
    i = max(i, 0)
    j = max(j, 0)
    m = table.feasible_mask
    if not (m[i, j] and m[i + 1, j] and m[i, j + 1] and m[i + 1, j + 1]):
        return table.fallback(x)
    tx = (e - pg[i]) / (pg[i + 1] - pg[i])
    ty = (edot - vg[j]) / (vg[j + 1] - vg[j])
    v = table.values
    return float((1 - tx) * (1 - ty) * v[i, j] + tx * (1 - ty) * v[i + 1, j]
                 + (1 - tx) * ty * v[i, j + 1] + tx * ty * v[i + 1, j + 1])


# --------------------------------------------------------------------------
# Serialization
# --------------------------------------------------------------------------

_AXIS_IDS = {axis: idx for idx, axis in enumerate(AXES)}
_AXIS_FROM_ID = {idx: axis for axis, idx in _AXIS_IDS.items()}


def save_table(table: ExplicitTable, path) -> None:
    header = _MAGIC
    header += struct.pack("<HH", _AXIS_IDS[table.axis], 0)
    header += struct.pack("<II", table.pos_grid.shape[0], table.vel_grid.shape[0])
    header += struct.pack("<4d", table.pos_grid[0], table.pos_grid[-1],
                          table.vel_grid[0], table.vel_grid[-1])
    header += struct.pack("<I", table.horizon_steps)
    header += struct.pack("<6d", table.t_s, table.q[0, 0], table.q[1, 1],
                          table.r, table.fallback_gains.k_x,
                          table.fallback_gains.k_xdot)
    header += struct.pack("<d", table.input_bound)
    header += table.params_digest
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(table.values, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(
            table.feasible_mask.astype(np.uint8)).tobytes())


def load_table(path, expected_digest: bytes | None = None) -> ExplicitTable:
    """Read a table file; refuse it when the stored digest mismatches."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:8] != _MAGIC:
        raise TableMismatchError(f"{path}: not an explicit-control table file")
    axis_id, _flags = struct.unpack_from("<HH", raw, 8)
    n_pos, n_vel = struct.unpack_from("<II", raw, 12)
    pos_min, pos_max, vel_min, vel_max = struct.unpack_from("<4d", raw, 20)
    (horizon,) = struct.unpack_from("<I", raw, 52)
    t_s, q00, q11, r, k_x, k_xdot = struct.unpack_from("<6d", raw, 56)
    (input_bound,) = struct.unpack_from("<d", raw, 104)
    digest = raw[112:144]
    if expected_digest is not None and digest != expected_digest:
        raise TableMismatchError(
            f"{path}: table was built from a different configuration")
    n = n_pos * n_vel
    values = np.frombuffer(raw, dtype="<f8", count=n, offset=144)
    mask = np.frombuffer(raw, dtype=np.uint8, count=n, offset=144 + 8 * n)
    axis = _AXIS_FROM_ID[axis_id]
    return ExplicitTable(
        axis=axis,
        pos_grid=np.linspace(pos_min, pos_max, n_pos),
        vel_grid=np.linspace(vel_min, vel_max, n_vel),
        values=values.reshape(n_pos, n_vel).copy(),
        feasible_mask=mask.reshape(n_pos, n_vel).astype(bool),
        fallback_gains=LqrGains(axis, k_x, k_xdot),
        input_bound=input_bound,
        horizon_steps=horizon,
        t_s=t_s,
        q=np.diag([q00, q11]),
        r=r,
        params_digest=digest,
    )


# --------------------------------------------------------------------------
# Published per-axis settings (200 Hz, 1 s horizon), shipped as a data file
# --------------------------------------------------------------------------

DEG = math.pi / 180.0

#: The published bound |x|_max = 1000 (m or rad depending on the axis). It
#: is a non-constraint; the stored grid spans the actual flight envelope
#: (pos_span in the preset file) instead.
PUBLISHED_POS_BOUND = 1000.0


@functools.lru_cache(maxsize=None)
def mpc_settings() -> dict[Axis, dict[str, float]]:
    import configparser
    from importlib import resources

    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.read_string((resources.files("quadfc") / "presets" / "empc.cfg")
                   .read_text())
    return {axis: {k: float(v) for k, v in cp.items(axis.value)}
            for axis in AXES}


def default_mpc_config(sub: DiscreteSubmodel,
                       horizon_s: float = 1.0) -> MpcConfig:
    s = mpc_settings()[sub.axis]
    n = max(1, round(horizon_s / sub.t_s))
    return MpcConfig.from_weights(sub, np.diag([s["q_p"], s["q_d"]]), s["r"],
                                  (PUBLISHED_POS_BOUND, s["vel_bound"]),
                                  s["input_bound"], n)


def default_grid(axis: Axis, n_pos: int = 201, n_vel: int = 201) -> GridSpec:
    return GridSpec(mpc_settings()[axis]["pos_span"], n_pos, n_vel)
