import math

import numpy as np
import pytest
import scipy.linalg

from quadfc.linmodels import (AXES, Axis, augment_integrator,
                              continuous_submodels, discrete_submodels,
                              discretize)
from quadfc.vehicle import (StateVector, VehicleParams, WrenchInput,
                            integrate_step)

PARAMS = VehicleParams()


class TestContinuousSubmodels:
    def test_channel_gains(self):
        subs = continuous_submodels(PARAMS)
        assert subs[Axis.X].k_delta == pytest.approx(-9.81)
        assert subs[Axis.Y].k_delta == pytest.approx(9.81)
        assert subs[Axis.Z].k_delta == pytest.approx(-0.94162, abs=1e-5)
        assert subs[Axis.PHI].k_delta == pytest.approx(90.09, abs=1e-2)
        assert subs[Axis.THETA].k_delta == pytest.approx(1.0 / 0.0107)
        assert subs[Axis.PSI].k_delta == pytest.approx(1.0 / 0.0229)

    def test_exactly_six(self):
        assert set(continuous_submodels(PARAMS)) == set(AXES)


class TestDiscretize:
    def test_a_matrix(self):
        sub = discretize(continuous_submodels(PARAMS)[Axis.Z], 0.005)
        assert np.array_equal(sub.a, [[1.0, 0.005], [0.0, 1.0]])

    def test_x_axis_input_column(self):
        sub = discretize(continuous_submodels(PARAMS)[Axis.X], 0.005)
        assert np.allclose(sub.b_ts, [-1.22625e-4, -4.905e-2], rtol=1e-12)

    def test_zero_period_limit(self):
        sub = discretize(continuous_submodels(PARAMS)[Axis.Y], 0.0)
        assert np.allclose(sub.b_ts, 0.0)
        assert np.array_equal(sub.a, np.eye(2))

    @pytest.mark.parametrize("axis", AXES)
    def test_matches_matrix_exponential_zoh(self, axis):
        # independent discretization: expm of the augmented [A B; 0 0] block
        cont = continuous_submodels(PARAMS)[axis]
        ts = 0.005
        m = np.zeros((3, 3))
        m[0, 1] = 1.0
        m[1, 2] = cont.k_delta
        em = scipy.linalg.expm(m * ts)
        sub = discretize(cont, ts)
        assert np.allclose(sub.a, em[:2, :2], atol=1e-12)
        assert np.allclose(sub.b_ts, em[:2, 2], atol=1e-12)


class TestAugment:
    def test_structure(self):
        sub = discrete_submodels(PARAMS)[Axis.Z]
        aug = augment_integrator(sub)
        assert np.allclose(aug.a_int[2], [sub.t_s, 0.0, 1.0])
        assert aug.b_int[2] == 0.0
        assert np.allclose(aug.a_int[:2, :2], sub.a)
        assert np.allclose(aug.b_int[:2], sub.b_ts)

    def test_zero_period_is_identity(self):
        sub = discretize(continuous_submodels(PARAMS)[Axis.PSI], 0.0)
        aug = augment_integrator(sub)
        assert np.array_equal(aug.a_int, np.eye(3))


class TestAgainstNonlinearPlant:
    def test_small_pitch_matches_x_submodel(self):
        # hold a 0.01 rad pitch at hover thrust; the linear model predicts
        # x(t) = -g * theta * t^2 / 2
        theta = 0.01
        x = StateVector(np.zeros(3), np.zeros(3),
                        np.array([0.0, theta, 0.0]), np.zeros(3))
        u = WrenchInput(PARAMS.hover_thrust, np.zeros(3))
        dt = 1e-3
        for _ in range(500):
            x = integrate_step(x, u, dt, PARAMS)
        predicted = -PARAMS.g * theta * 0.5 ** 2 / 2.0
        assert x.pos[0] == pytest.approx(predicted, rel=0.02)
