import itertools
import math

import numpy as np
import pytest

import quadfc.empc as empc
from quadfc.controllers import dare_solve, lqr_gains
from quadfc.errors import TableMismatchError
from quadfc.linmodels import Axis, discrete_submodels
from quadfc.vehicle import VehicleParams

PARAMS = VehicleParams()
SUBS = discrete_submodels(PARAMS)


def small_config(sub, n=3, vmax=0.5, umax=2.0, q=None, r=1.0):
    q = np.diag([1.0, 0.1]) if q is None else q
    return empc.MpcConfig.from_weights(sub, q, r, (1000.0, vmax), umax, n)


def enumerate_active_sets(qp: empc.CondensedQp):
    """Brute-force oracle: try every constraint-activity pattern's KKT system."""
    m, n = qp.g.shape
    best_u, best_cost = None, math.inf
    for pattern in itertools.product([False, True], repeat=m):
        active = [i for i, a in enumerate(pattern) if a]
        k = len(active)
        if k > n:
            continue
        kkt = np.zeros((n + k, n + k))
        kkt[:n, :n] = qp.h
        rhs = np.concatenate([-qp.q_lin, qp.w[active]])
        if k:
            ga = qp.g[active, :]
            kkt[:n, n:] = ga.T
            kkt[n:, :n] = ga
        try:
            sol = np.linalg.solve(kkt, rhs)
        except np.linalg.LinAlgError:
            continue
        u, lam = sol[:n], sol[n:]
        if np.any(lam < -1e-9):
            continue
        if np.any(qp.g @ u - qp.w > 1e-9):
            continue
        cost = 0.5 * u @ qp.h @ u + qp.q_lin @ u
        if cost < best_cost - 1e-12:
            best_cost, best_u = cost, u
    return best_u


class TestCondense:
    def test_single_step_hessian_by_hand(self):
        sub = SUBS[Axis.PHI]
        cfg = small_config(sub, n=1, q=np.eye(2), r=1.0)
        qp = empc.condense_qp(sub, cfg, np.zeros(2))
        b = sub.b_ts
        expected = 2.0 * (b @ cfg.p @ b + 1.0)
        assert qp.h[0, 0] == pytest.approx(expected, rel=1e-12)

    def test_zero_state_zero_linear_term(self):
        sub = SUBS[Axis.PHI]
        qp = empc.condense_qp(sub, small_config(sub, n=4), np.zeros(2))
        assert np.allclose(qp.q_lin, 0.0)

    def test_control_weight_enters_diagonal_only(self):
        sub = SUBS[Axis.PHI]
        q = np.diag([1.0, 0.1])
        p = dare_solve(sub.a, sub.b_ts, q, 1.0)
        cfg1 = empc.MpcConfig(4, q, 1.0, p, (1000.0, 0.5), 2.0)
        cfg2 = empc.MpcConfig(4, q, 2.0, p, (1000.0, 0.5), 2.0)
        h1 = empc.condense_qp(sub, cfg1, np.zeros(2)).h
        h2 = empc.condense_qp(sub, cfg2, np.zeros(2)).h
        assert np.allclose(h2 - h1, 2.0 * np.eye(4), atol=1e-12)


class TestSolveQp:
    def test_unconstrained_minimum(self):
        sub = SUBS[Axis.PHI]
        cfg = small_config(sub, n=4, vmax=100.0, umax=1000.0)
        qp = empc.condense_qp(sub, cfg, np.array([0.01, 0.0]))
        sol = empc.solve_qp(qp)
        assert sol.status == "optimal"
        assert np.allclose(sol.u, -np.linalg.solve(qp.h, qp.q_lin), atol=1e-8)

    def test_zero_input_bound_forces_zero_sequence(self):
        sub = SUBS[Axis.PHI]
        q = np.diag([1.0, 0.1])
        p = dare_solve(sub.a, sub.b_ts, q, 1.0)
        cfg = empc.MpcConfig(3, q, 1.0, p, (1000.0, 0.5), 1e-12)
        qp = empc.condense_qp(sub, cfg, np.array([0.2, 0.1]))
        sol = empc.solve_qp(qp)
        assert sol.status == "optimal"
        assert np.allclose(sol.u, 0.0, atol=1e-6)

    @pytest.mark.parametrize("x0", [(0.4, 0.3), (-0.6, 0.45), (0.9, -0.5),
                                    (0.05, 0.0), (1.2, 0.49)])
    def test_matches_active_set_enumeration(self, x0):
        sub = SUBS[Axis.PHI]
        cfg = small_config(sub, n=3, vmax=0.5, umax=1.5)
        qp = empc.condense_qp(sub, cfg, np.array(x0))
        sol = empc.solve_qp(qp, tol=1e-10)
        oracle = enumerate_active_sets(qp)
        assert sol.status == "optimal"
        assert oracle is not None
        assert np.allclose(sol.u, oracle, atol=1e-6)

    def test_primal_feasibility_of_solutions(self):
        sub = SUBS[Axis.THETA]
        cfg = small_config(sub, n=6, vmax=0.3, umax=1.0)
        rng = np.random.default_rng(2)
        fam = empc._CondensedFamily(sub, cfg)
        for _ in range(25):
            x0 = rng.uniform(-1, 1, 2) * np.array([1.0, 0.3])
            qp = fam.qp_at(x0)
            sol = empc.solve_qp(qp)
            assert sol.status == "optimal"
            assert np.max(qp.g @ sol.u - qp.w) <= 1e-8

    def test_structured_solver_agrees_with_dense(self):
        sub = SUBS[Axis.PHI]
        cfg = empc.default_mpc_config(sub, horizon_s=0.25)
        fam = empc._CondensedFamily(sub, cfg)
        rng = np.random.default_rng(9)
        for _ in range(10):
            x0 = rng.uniform(-1, 1, 2) * np.array([1.2, fam.vmax])
            dense = empc.solve_qp(fam.qp_at(x0))
            st, u, _, _ = empc._dpg_double_integrator(
                fam.h_inv, fam.q_map @ x0, fam.b2, x0[1], fam.vmax, fam.umax,
                fam.step, 1e-8, 10 ** 5, 1e10, np.zeros(4 * cfg.horizon_steps))
            assert st == empc._OPTIMAL
            assert dense.u[0] == pytest.approx(u[0], abs=1e-6)


@pytest.fixture(scope="module")
def phi_table():
    sub = SUBS[Axis.PHI]
    cfg = empc.default_mpc_config(sub)
    return cfg, empc.build_explicit_table(sub, cfg,
                                          empc.GridSpec(1.2, 41, 41))


class TestExplicitTable:
    def test_origin_node_zero(self, phi_table):
        _, tab = phi_table
        assert tab.values[20, 20] == pytest.approx(0.0, abs=1e-9)

    def test_interior_equals_lqr_where_unconstrained(self, phi_table):
        cfg, tab = phi_table
        sub = SUBS[Axis.PHI]
        fam = empc._CondensedFamily(sub, cfg)
        gains = lqr_gains(sub, cfg.q, cfg.r)
        checked = 0
        for i in range(41):
            for j in range(41):
                x0 = np.array([tab.pos_grid[i], tab.vel_grid[j]])
                u_free = fam.u_free_map @ x0
                gu = fam.b2 * np.cumsum(u_free)
                inactive = (np.all(gu <= fam.vmax - x0[1] - 1e-9)
                            and np.all(-gu <= fam.vmax + x0[1] - 1e-9)
                            and np.all(np.abs(u_free) <= fam.umax - 1e-9))
                if inactive:
                    checked += 1
                    lqr_u = -(gains.k_x * x0[0] + gains.k_xdot * x0[1])
                    assert tab.values[i, j] == pytest.approx(lqr_u, abs=1e-5)
        assert checked > 200

    def test_velocity_beyond_bound_marked_infeasible(self):
        sub = SUBS[Axis.PHI]
        cfg = empc.default_mpc_config(sub)
        grid = empc.GridSpec(1.2, 5, 5, vel_span=cfg.state_bounds[1] * 1.2)
        tab = empc.build_explicit_table(sub, cfg, grid)
        assert not tab.feasible_mask[:, 0].any()
        assert not tab.feasible_mask[:, -1].any()
        assert tab.feasible_mask[:, 2].all()

    def test_lookup_exact_node(self, phi_table):
        _, tab = phi_table
        x = np.array([tab.pos_grid[7], tab.vel_grid[30]])
        assert empc.empc_lookup(tab, x) == tab.values[7, 30]

    def test_lookup_bilinear_on_affine_patch(self, phi_table):
        # midpoint of four nodes whose values form a plane: exact mean
        _, tab = phi_table
        i, j = 20, 20
        corners = tab.values[i:i + 2, j:j + 2]
        x = np.array([(tab.pos_grid[i] + tab.pos_grid[i + 1]) / 2,
                      (tab.vel_grid[j] + tab.vel_grid[j + 1]) / 2])
        got = empc.empc_lookup(tab, x)
        assert got == pytest.approx(float(np.mean(corners)), abs=1e-6)

    def test_lookup_outside_grid_uses_clamped_fallback(self, phi_table):
        _, tab = phi_table
        x = np.array([50.0, 0.0])
        expected = -(tab.fallback_gains.k_x * 50.0)
        expected = max(min(expected, tab.input_bound), -tab.input_bound)
        assert empc.empc_lookup(tab, x) == pytest.approx(expected)

    def test_closed_loop_rate_constraint_with_slack(self, phi_table):
        # double-integrator rollout under the stored law: the rate stays
        # within the bound plus interpolation slack (< 2 percent)
        cfg, tab = phi_table
        sub = SUBS[Axis.PHI]
        vmax = cfg.state_bounds[1]
        worst = 0.0
        for e0 in np.linspace(-1.19, 1.19, 13):
            for v0 in (0.0, 0.5 * vmax, -0.7 * vmax):
                x = np.array([e0, v0])
                for _ in range(800):
                    u = empc.empc_lookup(tab, x)
                    x = sub.a @ x + sub.b_ts * u
                    worst = max(worst, abs(x[1]))
                assert abs(x[0]) < 2e-3   # regulated to the origin
        slack = worst / vmax - 1.0
        assert slack < 0.02

    def test_lookup_clamps_small_rail_excursion(self, phi_table):
        # an epsilon beyond the velocity rail reads the rail row, not the
        # unconstrained fallback (which would dive far past the bound)
        cfg, tab = phi_table
        vmax = cfg.state_bounds[1]
        x_rail = np.array([1.0, vmax])
        x_over = np.array([1.0, vmax + 1e-6])
        assert empc.empc_lookup(tab, x_over) == pytest.approx(
            empc.empc_lookup(tab, x_rail), abs=1e-9)

    def test_rebuild_bit_identical(self):
        sub = SUBS[Axis.PHI]
        cfg = empc.default_mpc_config(sub, horizon_s=0.25)
        grid = empc.GridSpec(1.2, 11, 11)
        a = empc.build_explicit_table(sub, cfg, grid)
        b = empc.build_explicit_table(sub, cfg, grid)
        assert np.array_equal(a.values, b.values, equal_nan=True)
        assert np.array_equal(a.feasible_mask, b.feasible_mask)
        assert a.params_digest == b.params_digest


class TestTableFile:
    def test_round_trip_and_digest(self, phi_table, tmp_path):
        _, tab = phi_table
        path = tmp_path / "phi.qfct"
        empc.save_table(tab, path)
        back = empc.load_table(path, expected_digest=tab.params_digest)
        assert np.array_equal(back.values, tab.values, equal_nan=True)
        assert np.array_equal(back.feasible_mask, tab.feasible_mask)
        assert back.axis == tab.axis
        assert back.horizon_steps == tab.horizon_steps
        assert back.input_bound == tab.input_bound

    def test_digest_mismatch_refused(self, phi_table, tmp_path):
        _, tab = phi_table
        path = tmp_path / "phi.qfct"
        empc.save_table(tab, path)
        with pytest.raises(TableMismatchError):
            empc.load_table(path, expected_digest=b"\x00" * 32)

    def test_save_is_byte_deterministic(self, phi_table, tmp_path):
        _, tab = phi_table
        p1, p2 = tmp_path / "a.qfct", tmp_path / "b.qfct"
        empc.save_table(tab, p1)
        empc.save_table(tab, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_wrong_magic_rejected(self, tmp_path):
        p = tmp_path / "junk.qfct"
        p.write_bytes(b"NOTATABL" + b"\x00" * 64)
        with pytest.raises(TableMismatchError):
            empc.load_table(p)
