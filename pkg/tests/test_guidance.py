import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quadfc.guidance import (CircleReference, CircleScenario, ReferenceVector,
                             StepScenario, align_bundle, circle_reference,
                             yaw_align)
from quadfc.vehicle import StateVector

SCN = CircleScenario(radius=4.5, incline=math.radians(-7.5),
                     tangential_speed=2.0)


class TestYawAlign:
    def test_identity_at_zero(self):
        assert np.allclose(yaw_align([1.2, -0.5], 0.0), [1.2, -0.5])

    def test_quarter_turn(self):
        assert np.allclose(yaw_align([1.0, 0.0], math.pi / 2), [0.0, -1.0],
                           atol=1e-12)

    @given(st.floats(-10, 10), st.floats(-10, 10), st.floats(-10, 10))
    @settings(max_examples=100)
    def test_norm_preserved(self, x, y, psi):
        out = yaw_align([x, y], psi)
        assert math.isclose(np.hypot(*out), math.hypot(x, y), abs_tol=1e-12)


class TestAlignBundle:
    def _bundle(self, psi):
        x = StateVector(np.array([1.0, 2.0, -1.5]), np.array([0.5, -0.2, 0.1]),
                        np.array([0.01, -0.02, psi]), np.zeros(3))
        r = ReferenceVector(np.array([2.0, 1.0, -2.0]), 0.3,
                            np.array([1.0, 0.0, -0.1]), 0.05)
        return x, r

    def test_zero_yaw_passthrough(self):
        x, r = self._bundle(0.0)
        xa, ra = align_bundle(x, r)
        assert np.allclose(xa, x.to_array())
        assert np.allclose(ra, r.to_array())

    def test_error_norm_invariant(self):
        x, r = self._bundle(1.1)
        xa, ra = align_bundle(x, r)
        raw = np.hypot(*(r.to_array()[0:2] - x.to_array()[0:2]))
        aligned = np.hypot(*(ra[0:2] - xa[0:2]))
        assert aligned == pytest.approx(raw, abs=1e-12)

    def test_vertical_and_yaw_untouched(self):
        x, r = self._bundle(0.7)
        xa, ra = align_bundle(x, r)
        assert xa[2] == x.pos[2]
        assert ra[2] == r.pos_ref[2]
        assert ra[3] == r.yaw_ref
        assert xa[8] == x.euler[2]


class TestCircleReference:
    def test_start_point_zero_velocity(self):
        r = circle_reference(SCN, 0.0)
        assert np.allclose(r.vel_ref, 0.0)
        ref = CircleReference(SCN)
        start = ref._point(0.0) - SCN.lead_in * ref._tangent(0.0)
        assert np.allclose(r.pos_ref, start)

    def test_one_revolution_closes(self):
        ref = CircleReference(SCN)
        p_start = ref.at(ref.t_circle).pos_ref
        p_end = ref.at(ref.t_out).pos_ref
        assert np.allclose(p_start, p_end, atol=1e-9)

    def test_cruise_speed(self):
        ref = CircleReference(SCN)
        t = ref.t_circle + 0.5 * ref.circle.duration
        assert np.linalg.norm(ref.at(t).vel_ref) == pytest.approx(2.0,
                                                                  rel=1e-12)

    def test_altitude_span_of_inclined_circle(self):
        # z extrema sit at the two points where the circle plane's tilt
        # axis projection peaks (beta = 0 and pi)
        ref = CircleReference(SCN)
        span = abs(ref._point(math.pi)[2] - ref._point(0.0)[2])
        assert span == pytest.approx(2.0 * 4.5 * math.sin(math.radians(7.5)),
                                     abs=1e-9)
        assert span == pytest.approx(1.175, abs=1e-3)

    def test_velocity_is_position_derivative(self):
        # central differences across the full profile, away from the
        # piecewise-profile corners
        ref = CircleReference(SCN)
        dt = 1e-3
        corners = [0.0, ref.t_circle, ref.t_circle + ref.circle.t_ramp,
                   ref.t_out - ref.circle.t_ramp, ref.t_out, ref.duration]
        ts = np.arange(dt, ref.duration - dt, 0.05)
        for t in ts:
            if min(abs(t - c) for c in corners) < 2 * dt:
                continue
            num = (ref.at(t + dt).pos_ref - ref.at(t - dt).pos_ref) / (2 * dt)
            assert np.allclose(num, ref.at(t).vel_ref, atol=5e-5)

    def test_ramp_acceleration_bounded(self):
        scn = CircleScenario(radius=4.5, tangential_speed=3.0,
                             accel_phase=1.5)
        ref = CircleReference(scn)
        a_max = 3.0 / 1.5
        dt = 1e-3
        ts = np.arange(ref.t_circle + dt, ref.t_out - dt, 0.01)
        for t in ts:
            dv = (np.linalg.norm(ref.at(t + dt).vel_ref)
                  - np.linalg.norm(ref.at(t - dt).vel_ref)) / (2 * dt)
            assert abs(dv) <= a_max * 1.001

    def test_tangent_heading_and_rate(self):
        ref = CircleReference(SCN)
        t = ref.t_circle + 0.5 * ref.circle.duration
        r = ref.at(t)
        v = r.vel_ref
        assert r.yaw_ref == pytest.approx(math.atan2(v[1], v[0]), abs=1e-12)
        dt = 1e-4
        dyaw = (ref.at(t + dt).yaw_ref - ref.at(t - dt).yaw_ref) / (2 * dt)
        assert r.yaw_rate_ref == pytest.approx(dyaw, rel=1e-3)

    def test_holds_terminal_reference(self):
        ref = CircleReference(SCN)
        a = ref.at(ref.duration + 5.0)
        b = ref.at(ref.duration + 50.0)
        assert np.allclose(a.pos_ref, b.pos_ref)
        assert np.allclose(a.vel_ref, 0.0)

    def test_fixed_heading_mode(self):
        scn = CircleScenario(heading_mode="fixed", fixed_heading=0.4)
        ref = CircleReference(scn)
        r = ref.at(ref.t_circle + 1.0)
        assert r.yaw_ref == 0.4
        assert r.yaw_rate_ref == 0.0

    def test_smooth_lead_in_endpoint_conditions(self):
        # within the straight segment: speed and acceleration both vanish
        # at its two ends (the circle's trapezoid then ramps from zero
        # speed at nonzero acceleration, which is its own contract)
        ref = CircleReference(SCN)
        dt = 1e-4
        for t0, sgn in ((0.0, 1), (ref.t_circle, -1)):
            v1 = np.linalg.norm(ref.at(t0 + sgn * dt).vel_ref)
            v2 = np.linalg.norm(ref.at(t0 + sgn * 2 * dt).vel_ref)
            assert v1 < 1e-6
            assert abs(v2 - v1) / dt < 1e-2   # accel ~ 0 at the endpoint


class TestStepScenario:
    def test_holds_before_and_after(self):
        scn = StepScenario(start=(0, 0, -1.0), step_pos=(1, 0, -1.0),
                           step_time=2.0)
        assert np.allclose(scn.at(1.9).pos_ref, [0, 0, -1.0])
        assert np.allclose(scn.at(2.0).pos_ref, [1, 0, -1.0])
        assert np.allclose(scn.at(100.0).pos_ref, [1, 0, -1.0])
