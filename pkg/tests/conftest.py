"""Shared test helpers: random rotations, finite differences, tiny streams."""

from __future__ import annotations

import numpy as np
import pytest

from cipgnav.sensors import AhrsSample, DvlSample, ImuSample


def random_unit_quat(rng: np.random.Generator) -> np.ndarray:
    """Uniform random unit quaternion (scalar-first)."""
    q = rng.normal(size=4)
    return q / np.linalg.norm(q)


def central_difference(fun, x, eps: float = 1e-6) -> np.ndarray:
    """Dense central-difference Jacobian of a vector function."""
    x = np.asarray(x, dtype=float)
    f0 = np.asarray(fun(x), dtype=float)
    J = np.zeros((f0.size, x.size))
    for j in range(x.size):
        step = np.zeros_like(x)
        step[j] = eps
        J[:, j] = (np.asarray(fun(x + step)) - np.asarray(fun(x - step))) / (2 * eps)
    return J


def make_streams(duration=2.0, imu_rate=100.0, meas_rate=5.0, accel=(0.0, 0.0, -9.81),
                 gyro=(0.0, 0.0, 0.0), velocity=(0.0, 0.0, 0.0)):
    """Constant-reading IMU/DVL/AHRS streams for synchronization tests."""
    n_imu = int(round(duration * imu_rate))
    imu = [
        ImuSample(t=(i + 1) / imu_rate, accel=np.array(accel), gyro=np.array(gyro))
        for i in range(n_imu)
    ]
    n_meas = int(round(duration * meas_rate))
    dvl = [
        DvlSample(t=(k + 1) / meas_rate, velocity=np.array(velocity))
        for k in range(n_meas)
    ]
    ahrs = [
        AhrsSample(t=(k + 1) / meas_rate, orientation=np.array([1.0, 0.0, 0.0, 0.0]))
        for k in range(n_meas)
    ]
    return imu, dvl, ahrs


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
