import math

import numpy as np
import pytest
import scipy.linalg

from quadfc.controllers import (AntiWindupConfig, LqrGains, LqriState,
                                PidConfig, PidState, SaturationLimits,
                                actuator_envelopes, command_mapping,
                                dare_solve, load_gain_preset, lqr_gains,
                                lqr_step, lqri_step, make_lqr_cascade,
                                make_lqri_cascade, make_pd_cascade,
                                make_pid_cascade, pid_step)
from quadfc.errors import DomainError, SynthesisError
from quadfc.linmodels import (AXES, Axis, augment_integrator,
                              continuous_submodels, discrete_submodels)
from quadfc.vehicle import (MotorCommand, PropulsorBank, VehicleParams,
                            WrenchInput, propulsor_wrench)

PARAMS = VehicleParams()
SUBS = discrete_submodels(PARAMS)


def riccati_value_iteration(a, b, q, r, iters=10 ** 5):
    """Independent fixed-point oracle for the DARE."""
    a = np.atleast_2d(np.asarray(a, float))
    b = np.asarray(b, float).reshape(a.shape[0], 1)
    q = np.atleast_2d(np.asarray(q, float))
    p = q.copy()
    for _ in range(iters):
        bp = b.T @ p
        k = (bp @ a) / (r + (bp @ b).item())
        p = q + a.T @ p @ a - a.T @ p @ b @ k
    return p


def gains_from(p, a, b, r):
    b = np.asarray(b, float).reshape(-1, 1)
    bp = b.T @ p
    return ((bp @ np.atleast_2d(a)) / (r + (bp @ b).item())).ravel()


class TestDare:
    def test_scalar_golden_ratio(self):
        p = dare_solve(1.0, 1.0, 1.0, 1.0)
        assert p[0, 0] == pytest.approx((1.0 + math.sqrt(5.0)) / 2.0,
                                        abs=1e-12)

    def test_zero_input_column_reduces_to_lyapunov(self):
        a = np.array([[0.9, 0.1], [0.0, 0.8]])
        q = np.diag([1.0, 2.0])
        p = dare_solve(a, np.zeros(2), q, 1.0)
        expected = scipy.linalg.solve_discrete_lyapunov(a.T, q)
        assert np.allclose(p, expected, atol=1e-9)

    def test_z_axis_against_value_iteration(self):
        sub = SUBS[Axis.Z]
        q = np.diag([2000.0, 100.0])
        p = dare_solve(sub.a, sub.b_ts, q, 4.0)
        p_vi = riccati_value_iteration(sub.a, sub.b_ts, q, 4.0)
        assert np.allclose(gains_from(p, sub.a, sub.b_ts, 4.0),
                           gains_from(p_vi, sub.a, sub.b_ts, 4.0), atol=1e-8)

    def test_residual_property_all_axes_both_families(self):
        lqr = load_gain_preset("gains_lqr")
        lqri = load_gain_preset("gains_lqri")
        cases = []
        for axis in AXES:
            w = lqr[axis]
            cases.append((SUBS[axis].a, SUBS[axis].b_ts,
                          np.diag([w["q_p"], w["q_d"]]), w["r"]))
            w = lqri[axis]
            if "q_i" in w:
                aug = augment_integrator(SUBS[axis])
                cases.append((aug.a_int, aug.b_int,
                              np.diag([w["q_p"], w["q_d"], w["q_i"]]), w["r"]))
        for a, b, q, r in cases:
            p = dare_solve(a, b, q, r)
            b2 = np.asarray(b, float).reshape(-1, 1)
            gain = np.linalg.solve(r + b2.T @ p @ b2, b2.T @ p @ a)
            resid = a.T @ p @ a - a.T @ p @ b2 @ gain + q - p
            assert np.max(np.abs(resid)) < 1e-9

    def test_rejects_indefinite_q(self):
        with pytest.raises(DomainError):
            dare_solve(np.eye(2), np.array([0.0, 1.0]), -np.eye(2), 1.0)


class TestLqrGains:
    def test_zero_state_cost_gives_zero_gain(self):
        from quadfc.linmodels import DiscreteSubmodel
        sub = DiscreteSubmodel(Axis.X, np.array([[0.9, 0.05], [0.0, 0.8]]),
                               np.array([0.01, 0.2]), 0.05)
        g = lqr_gains(sub, np.zeros((2, 2)), 1.0)
        assert g.k_x == pytest.approx(0.0, abs=1e-12)
        assert g.k_xdot == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("axis", AXES)
    def test_matches_value_iteration_oracle(self, axis):
        w = load_gain_preset("gains_lqr")[axis]
        sub = SUBS[axis]
        q, r = np.diag([w["q_p"], w["q_d"]]), w["r"]
        g = lqr_gains(sub, q, r)
        k_vi = gains_from(riccati_value_iteration(sub.a, sub.b_ts, q, r),
                          sub.a, sub.b_ts, r)
        assert np.allclose(g.as_array(), k_vi, atol=1e-8)

    def test_augmented_z_axis_stable_three_gains(self):
        aug = augment_integrator(SUBS[Axis.Z])
        g = lqr_gains(aug, np.diag([490.0, 117.0, 12.6]), 5.5)
        assert g.k_int is not None
        a, b = aug.a_int, aug.b_int
        rho = max(abs(np.linalg.eigvals(a - np.outer(b, g.as_array()))))
        assert rho < 1.0


class TestLqrStep:
    GAINS = LqrGains(Axis.Z, -21.9, -8.4)

    def test_zero_error_zero_output(self):
        assert lqr_step(self.GAINS, 1.0, 2.0, 1.0, 2.0) == 0.0

    def test_unit_position_error_returns_k(self):
        assert lqr_step(self.GAINS, 0.0, 0.0, 1.0, 0.0) == pytest.approx(-21.9)

    def test_saturation(self):
        assert lqr_step(self.GAINS, 0.0, 0.0, 100.0, 0.0,
                        limits=(-10.42, 12.34)) == -10.42


class TestLqriStep:
    def _gains(self):
        aug = augment_integrator(SUBS[Axis.Z])
        return lqr_gains(aug, np.diag([490.0, 117.0, 12.6]), 5.5)

    def test_zero_error_keeps_zero_state(self):
        g = self._gains()
        aw = AntiWindupConfig(-10.0, 12.0)
        u, st = lqri_step(LqriState(), g, 0.005, 0.0, 0.0, 0.0, 0.0, aw)
        assert u == 0.0
        assert st == LqriState()

    def test_constant_error_growth_matches_block_oracle(self):
        # independent replay of the block diagram: differentiators on both
        # error channels, integral gain on the raw error, output integrator
        g = self._gains()
        t_s = 0.005
        aw = AntiWindupConfig(-1e9, 1e9, tau_int=0.0)
        e = 0.25
        st = LqriState()
        mine = []
        for _ in range(40):
            u, st = lqri_step(st, g, t_s, 0.0, 0.0, e, 0.0, aw)
            mine.append(u)
        # oracle: shift registers, no saturation
        e_prev = 0.0
        integ = 0.0
        oracle = []
        for _ in range(40):
            s = g.k_x * (e - e_prev) / t_s + g.k_int * e
            e_prev = e
            integ += t_s * s
            oracle.append(integ)
        assert np.allclose(mine, oracle, atol=1e-12)
        # steady growth after the first-step transient: k_int * e * t_s
        assert mine[10] - mine[9] == pytest.approx(g.k_int * e * t_s)

    def test_wind_down_limits_integrator_and_desaturates_earlier(self):
        # z-axis gains are negative (negative input gain), so a positive
        # error rails the output low. The error then reverses on a ramp (a
        # step would let the error differentiator dominate) and the
        # wind-down variant must leave the rail sooner.
        g = self._gains()
        t_s = 0.005

        def run(tau_int):
            aw = AntiWindupConfig(-1.0, 1.0, tau_int)
            st = LqriState()
            for _ in range(400):
                u, st = lqri_step(st, g, t_s, 0.0, 0.0, 2.0, 0.0, aw)
            assert u == -1.0
            integ_at_flip = st.integ
            for k in range(4000):
                e = 2.0 - 4.0 * (k / 2000.0)
                u, st = lqri_step(st, g, t_s, 0.0, 0.0, e, 0.0, aw)
                if u > -1.0:
                    return integ_at_flip, k
            return integ_at_flip, 4000

        integ_aw, k_aw = run(10.0)
        integ_plain, k_plain = run(0.0)
        assert abs(integ_aw) < abs(integ_plain)  # integrator held near the rail
        assert k_aw < k_plain                    # leaves the rail earlier


class TestPidStep:
    def test_proportional_only(self):
        cfg = PidConfig(2.5, 0.0, 0.0, 50.0, 0.005)
        u, _ = pid_step(PidState(), cfg, 0.4)
        assert u == pytest.approx(1.0)

    def test_integral_accumulation(self):
        cfg = PidConfig(0.0, 3.0, 0.0, 50.0, 0.005)
        st = PidState()
        e = 0.7
        for k in range(25):
            u, st = pid_step(st, cfg, e)
            assert u == pytest.approx(cfg.k_i * cfg.t_s * k * e)

    def test_derivative_branch_geometric_decay(self):
        cfg = PidConfig(0.0, 0.0, 1.3, 62.83, 0.005)
        st = PidState()
        outs = []
        for _ in range(6):
            u, st = pid_step(st, cfg, 1.0)
            outs.append(u)
        assert outs[0] == pytest.approx(cfg.k_d * cfg.n)
        ratio = 1.0 - cfg.n * cfg.t_s
        for k in range(1, 6):
            assert outs[k] / outs[k - 1] == pytest.approx(ratio, rel=1e-12)

    def test_matches_long_division_realization(self):
        # oracle: impulse response of the full transfer function by
        # polynomial long division, then convolution
        cfg = PidConfig(0.5, 0.15, 0.05, 62.83, 0.005)
        n_steps = 1000
        alpha = 1.0 - cfg.n * cfg.t_s
        # C(z) over the common denominator (z-1)(z-alpha): the proportional
        # term carries the full denominator, the integral term (z-alpha),
        # the filtered derivative (z-1)^2
        num = (cfg.k_p * np.polymul([1.0, -1.0], [1.0, -alpha])
               + cfg.k_i * cfg.t_s * np.array([0.0, 1.0, -alpha])
               + cfg.k_d * cfg.n * np.polymul([1.0, -1.0], [1.0, -1.0]))
        den = np.polymul([1.0, -1.0], [1.0, -alpha])
        # long division for the impulse response h[0..n]
        h = np.zeros(n_steps)
        rem = np.zeros(n_steps + len(den))
        rem[:len(num)] = num
        for k in range(n_steps):
            h[k] = rem[k]
            rem[k + 1:k + len(den)] -= h[k] * den[1:]
        rng = np.random.default_rng(3)
        e_seq = rng.normal(size=n_steps)
        oracle = np.convolve(e_seq, h)[:n_steps]
        st = PidState()
        mine = np.empty(n_steps)
        for k in range(n_steps):
            mine[k], st = pid_step(st, cfg, e_seq[k])
        assert np.allclose(mine, oracle, atol=1e-10)


class TestEnvelopesAndLimits:
    def test_reconstructed_envelopes_match_published(self):
        env = actuator_envelopes(PARAMS)
        assert env.d_thrust[0] == pytest.approx(-10.42, abs=1e-2)
        assert env.d_thrust[1] == pytest.approx(12.34, abs=1e-2)
        assert env.tau_xy == pytest.approx(1.3679, abs=1e-2)
        assert env.tau_z == pytest.approx(0.1766, abs=1e-2)

    def test_default_limits_are_published_values(self):
        lim = SaturationLimits()
        assert lim.d_thrust == (-10.42, 12.34)
        assert lim.tau_xy == 1.3679
        assert lim.tau_z == 0.1766
        assert lim.ref_angle == 1.0


class TestCommandMapping:
    def test_hover_throttle(self):
        u = WrenchInput(PARAMS.hover_thrust, np.zeros(3))
        cmd = command_mapping(u, PARAMS)
        assert np.allclose(cmd.sigma, cmd.sigma[0])
        assert cmd.sigma[0] == pytest.approx(0.676, abs=1e-3)

    def test_round_trip_on_feasible_wrenches(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            u = WrenchInput(rng.uniform(2.0, 20.0),
                            rng.uniform(-0.5, 0.5, 3) * np.array([1, 1, 0.1]))
            cmd = command_mapping(u, PARAMS)
            if np.any(cmd.sigma <= 0.0) or np.any(cmd.sigma >= 1.0):
                continue  # clamped: outside the invertible set
            w = PARAMS.c_r * cmd.sigma + PARAMS.omega_b
            back = propulsor_wrench(PropulsorBank(w), PARAMS)
            assert back.thrust == pytest.approx(u.thrust, abs=1e-9)
            assert np.allclose(back.tau, u.tau, atol=1e-9)

    def test_zero_wrench_clamps_to_zero_throttle(self):
        cmd = command_mapping(WrenchInput(0.0, np.zeros(3)), PARAMS)
        assert np.all(cmd.sigma == 0.0)


class TestCascade:
    def _aligned_hover(self, z=-1.0):
        x = np.zeros(12)
        x[2] = z
        r = np.zeros(8)
        r[2] = z
        return x, r

    @pytest.mark.parametrize("make", [make_lqr_cascade, make_lqri_cascade,
                                      make_pd_cascade, make_pid_cascade])
    def test_hover_equilibrium_output(self, make):
        cascade = make(PARAMS)
        x, r = self._aligned_hover()
        u = cascade.step(x, r)
        assert u.thrust == pytest.approx(PARAMS.hover_thrust)
        assert np.allclose(u.tau, 0.0)

    def test_large_y_error_clamps_roll_reference(self):
        cascade = make_lqr_cascade(PARAMS)
        x, r = self._aligned_hover()
        r[1] = 100.0
        cascade.step(x, r)
        # r_phi clamps at +1 rad; reach it via the phi controller input by
        # inspecting the saturated inner-loop behavior indirectly: a huge
        # error must produce exactly the +-1 rad reference
        phi_ctl = cascade.cfg.axes[Axis.PHI]
        probe = []
        orig_step = phi_ctl.step
        try:
            phi_ctl.step = lambda *a: probe.append(a) or orig_step(*a)
            cascade.step(x, r)
        finally:
            phi_ctl.step = orig_step
        assert probe[0][2] == 1.0  # clamped roll reference

    def test_altitude_error_raises_thrust(self):
        cascade = make_lqr_cascade(PARAMS)
        x, r = self._aligned_hover()
        r[2] = x[2] - 1.0  # reference 1 m above (z down)
        u = cascade.step(x, r)
        assert u.thrust > PARAMS.hover_thrust

    @pytest.mark.parametrize("make", [make_lqr_cascade, make_lqri_cascade,
                                      make_pd_cascade, make_pid_cascade])
    def test_outputs_always_inside_limits(self, make):
        cascade = make(PARAMS)
        lim = cascade.cfg.limits
        rng = np.random.default_rng(17)
        for _ in range(10_000):
            x = rng.uniform(-1, 1, 12) * np.array(
                [20, 20, 10, 5, 5, 5, 1, 1, math.pi, 3, 3, 3])
            r = rng.uniform(-1, 1, 8) * np.array(
                [20, 20, 10, math.pi, 5, 5, 5, 2])
            u = cascade.step(x, r)
            assert lim.d_thrust[0] - 1e-12 <= u.thrust - PARAMS.hover_thrust \
                <= lim.d_thrust[1] + 1e-12
            assert abs(u.tau[0]) <= lim.tau_xy + 1e-12
            assert abs(u.tau[1]) <= lim.tau_xy + 1e-12
            assert abs(u.tau[2]) <= lim.tau_z + 1e-12

    def test_yaw_error_wraps(self):
        cascade = make_lqr_cascade(PARAMS)
        x, r = self._aligned_hover()
        x[8] = math.pi - 0.1
        r[3] = -math.pi + 0.1   # 0.2 rad away through the wrap
        u = cascade.step(x, r)
        assert u.tau[2] > 0.0   # turn the short way
        assert abs(u.tau[2]) < cascade.cfg.limits.tau_z
