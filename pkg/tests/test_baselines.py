"""Kalman baselines: hand-computed updates, tracking, and group equivariance."""

from __future__ import annotations

import numpy as np
import pytest
import scipy.linalg

from cipgnav.baselines import (
    EkfState,
    FilterConfig,
    InekfState,
    _attitude_innovation,
    _check_cov,
    inekf_predict,
    inekf_update,
    kalman_update,
    run_ekf,
    run_inekf,
    se23_exp,
)
from cipgnav.errors import NumericalError
from cipgnav.preintegration import NavState
from cipgnav.quat import (
    quat_angular_distance,
    quat_from_rotvec,
    quat_from_yaw,
    quat_product,
    quat_to_rotation,
)
from cipgnav.sim import NoiseSpec, ScenarioSpec, generate

QUIET = NoiseSpec(0.0, 0.0, 0.0, 0.0)


def skew(v):
    return np.array([[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0.0]])


def circle_epochs(duration=20.0, noise=QUIET, seed=0, radius=10.0):
    spec = ScenarioSpec(kind="circle", duration=duration, speed=0.5,
                        circle_radius=radius, noise=noise, seed=seed)
    run = generate(spec)
    return run, run.epochs()


class TestKalmanUpdate:
    def test_scalar_hand_oracle(self):
        # P = H = R = 1: gain 0.5, Joseph covariance 0.25 + 0.25 = 0.5.
        dx, P = kalman_update(np.eye(1), np.eye(1), np.eye(1), np.array([1.0]))
        assert dx[0] == pytest.approx(0.5, abs=1e-15)
        assert P[0, 0] == pytest.approx(0.5, abs=1e-15)

    def test_joseph_form_stays_psd(self, rng):
        for _ in range(20):
            A = rng.normal(size=(4, 4))
            P = A @ A.T + 1e-6 * np.eye(4)
            H = rng.normal(size=(2, 4))
            R = np.diag(rng.uniform(0.01, 1.0, 2))
            _, P_next = kalman_update(P, H, R, rng.normal(size=2))
            np.testing.assert_allclose(P_next, P_next.T, atol=1e-12)
            assert np.linalg.eigvalsh(P_next).min() > -1e-12

    def test_zero_innovation_leaves_mean(self):
        dx, _ = kalman_update(np.eye(3), np.eye(3), np.eye(3), np.zeros(3))
        np.testing.assert_allclose(dx, np.zeros(3))


class TestCovarianceGuard:
    def test_rejects_nonfinite(self):
        P = np.eye(2)
        P[0, 0] = np.nan
        with pytest.raises(NumericalError):
            _check_cov(P, 1e-9, "test covariance")

    def test_rejects_indefinite(self):
        with pytest.raises(NumericalError):
            _check_cov(np.diag([1.0, -0.5]), 1e-9, "test covariance")

    def test_symmetrizes(self):
        P = np.array([[1.0, 0.1], [0.1 + 1e-12, 1.0]])
        out = _check_cov(P, 1e-9, "test covariance")
        np.testing.assert_allclose(out, out.T)


class TestSe23Exp:
    def embed(self, xi):
        A = np.zeros((5, 5))
        A[:3, :3] = skew(xi[:3])
        A[:3, 3] = xi[3:6]
        A[:3, 4] = xi[6:9]
        return A

    def test_matches_matrix_exponential(self, rng):
        for scale in (1e-9, 1e-3, 1.0, 3.0):
            xi = scale * rng.normal(size=9)
            R, v, p = se23_exp(xi)
            M = scipy.linalg.expm(self.embed(xi))
            np.testing.assert_allclose(R, M[:3, :3], atol=1e-9)
            np.testing.assert_allclose(v, M[:3, 3], atol=1e-9)
            np.testing.assert_allclose(p, M[:3, 4], atol=1e-9)

    def test_zero_is_identity(self):
        R, v, p = se23_exp(np.zeros(9))
        np.testing.assert_allclose(R, np.eye(3))
        np.testing.assert_allclose(v, np.zeros(3))
        np.testing.assert_allclose(p, np.zeros(3))


class TestAttitudeInnovation:
    def test_small_angle_recovery(self, rng):
        q = quat_from_yaw(0.3)
        theta = 1e-4 * rng.normal(size=3)
        z = quat_product(q, quat_from_rotvec(theta))
        np.testing.assert_allclose(_attitude_innovation(q, z), theta, atol=1e-9)

    def test_hemisphere_invariance(self):
        q = quat_from_yaw(0.3)
        z = quat_product(q, quat_from_rotvec([0.01, 0.0, 0.02]))
        np.testing.assert_allclose(
            _attitude_innovation(q, z), _attitude_innovation(q, -z), atol=1e-15
        )


class TestEkf:
    def test_noiseless_tracking(self):
        run, epochs = circle_epochs(duration=20.0)
        points = run_ekf(epochs, FilterConfig(), initial=run.initial_nav())
        truth = {p.t: p.nav for p in run.truth}
        final = points[-1]
        assert np.linalg.norm(final.nav.position - truth[final.t].position) < 1e-2
        assert np.linalg.norm(final.nav.velocity - truth[final.t].velocity) < 1e-3
        assert quat_angular_distance(final.nav.orientation,
                                     truth[final.t].orientation) < 1e-3

    def test_covariance_stays_symmetric_psd(self):
        run, epochs = circle_epochs(duration=10.0, noise=NoiseSpec.bluerov2(), seed=2)
        from cipgnav.baselines import ekf_predict, ekf_update

        state = EkfState.start(run.initial_nav(), FilterConfig())
        t_prev = epochs[0].t_prev
        for epoch in epochs:
            state = ekf_predict(state, epoch.imu_burst, FilterConfig(), t_prev)
            state = ekf_update(state, epoch.dvl, epoch.ahrs, FilterConfig())
            t_prev = epoch.t
            np.testing.assert_allclose(state.cov, state.cov.T, atol=1e-10)
            assert np.linalg.eigvalsh(state.cov).min() > -1e-9

    def test_requires_epochs(self):
        with pytest.raises(ValueError):
            run_ekf([], FilterConfig())


class TestInekf:
    def test_noiseless_tracking(self):
        run, epochs = circle_epochs(duration=20.0)
        points = run_inekf(epochs, FilterConfig(), initial=run.initial_nav())
        truth = {p.t: p.nav for p in run.truth}
        final = points[-1]
        assert np.linalg.norm(final.nav.position - truth[final.t].position) < 1e-2
        assert np.linalg.norm(final.nav.velocity - truth[final.t].velocity) < 1e-3

    def test_state_matrix_round_trip(self, rng):
        nav = NavState(rng.normal(size=3), rng.normal(size=3), quat_from_yaw(0.5))
        state = InekfState.start(nav, FilterConfig())
        X = state.as_matrix()
        np.testing.assert_allclose(X[:3, :3], quat_to_rotation(nav.orientation))
        back = state.nav()
        np.testing.assert_allclose(back.position, nav.position)
        np.testing.assert_allclose(back.velocity, nav.velocity)

    def test_left_translation_equivariance(self):
        # Rotating the world about gravity and translating it transforms the
        # filter output exactly, provided the initial covariance is carried
        # through the adjoint: X'_k = Gamma * X_k for every epoch.
        run, epochs = circle_epochs(duration=10.0, noise=NoiseSpec.bluerov2(), seed=4)
        config = FilterConfig()

        gamma_yaw = 0.8
        Rg = quat_to_rotation(quat_from_yaw(gamma_yaw))
        pg = np.array([5.0, -3.0, 2.0])
        Ad = np.zeros((9, 9))
        Ad[0:3, 0:3] = Rg
        Ad[3:6, 3:6] = Rg
        Ad[6:9, 6:9] = Rg
        Ad[6:9, 0:3] = skew(pg) @ Rg

        nav0 = run.initial_nav()
        a = InekfState.start(nav0, config)
        b = InekfState(
            rotation=Rg @ a.rotation,
            velocity=Rg @ a.velocity,
            position=Rg @ a.position + pg,
            cov=Ad @ a.cov @ Ad.T,
        )
        qg = quat_from_yaw(gamma_yaw)
        t_prev = epochs[0].t_prev
        for epoch in epochs:
            a = inekf_predict(a, epoch.imu_burst, config, t_prev)
            b = inekf_predict(b, epoch.imu_burst, config, t_prev)
            a = inekf_update(a, epoch.dvl, epoch.ahrs, config)
            b = inekf_update(b, Rg @ epoch.dvl, quat_product(qg, epoch.ahrs), config)
            t_prev = epoch.t
            np.testing.assert_allclose(b.rotation, Rg @ a.rotation, atol=1e-9)
            np.testing.assert_allclose(b.velocity, Rg @ a.velocity, atol=1e-9)
            np.testing.assert_allclose(b.position, Rg @ a.position + pg, atol=1e-9)


class TestFilterConfig:
    def test_matrix_builders(self):
        cfg = FilterConfig(r_vel=np.array([0.1, 0.2, 0.3]), r_att=np.array([0.4, 0.5, 0.6]))
        R = cfg.r_matrix()
        np.testing.assert_allclose(np.diag(R), [0.1, 0.2, 0.3, 0.4, 0.5, 0.6])
        q = cfg.q_diag()
        assert q.shape == (9,)
        np.testing.assert_allclose(q[3:6], 4e-6)
