"""Two-stage cascaded window observer over synchronized epochs.

Stage 1 estimates orientation: the window dynamics integrate gyro bursts and
the measurements are AHRS quaternions (identity measurement map, hemisphere
aligned to the prediction, renormalized after every inner iteration).

Stage 2 estimates velocity: the window dynamics integrate specific force
along the orientation trajectory re-propagated from stage 1's window-start
estimate, and the measurements are DVL velocities.  Because the velocity
dynamics do not depend on the velocity state itself, each burst contributes
a precomputed increment and the stacked Jacobian is a stack of identities.

Position is not windowed: it integrates the stage-2 velocity estimate over
the epoch period.  The first N-1 epochs are emitted as dead-reckoned warmup
rows; on divergence the estimator aborts (default) or falls back to dead
reckoning for the epoch and reseeds the windows from direct measurements.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DivergenceError
from .ipg import IpgParams, IpgWindow, WindowModel, ipg_step, slide_window
from .preintegration import (
    GravityModel,
    ImuBiases,
    NavState,
    preintegrate_burst,
    propagate_orientation,
)
from .quat import normalize_jacobian, quat_normalize, quat_product, quat_right_matrix
from .sensors import initial_nav_from_epochs
from .trajectory import TrajectoryPoint

__all__ = [
    "BurstInput",
    "VelocityInput",
    "CascadeConfig",
    "CascadeState",
    "cascade_step",
    "run_cascade",
]

FALLBACK_MODES = ("abort", "deadreckon")


@dataclass(frozen=True)
class BurstInput:
    """IMU burst unpacked into arrays; the window input between two epochs.

    ``rot_increment`` is the Hamilton product of the per-sample orientation
    increments (1, dt_i/2 * (gyro_i - bias)).  Because per-step quaternion
    renormalization only rescales, ``normalize(q * rot_increment)`` equals
    the sample-by-sample propagation of ``q`` through the whole burst, so
    the window dynamics and their Jacobian cost O(1) per burst.
    """

    dts: np.ndarray            # (M,)
    gyro: np.ndarray           # (M, 3)
    accel: np.ndarray          # (M, 3)
    rot_increment: np.ndarray  # (4,)


@dataclass(frozen=True)
class VelocityInput:
    """Velocity increment of one burst along a fixed orientation trajectory."""

    delta_v: np.ndarray  # (3,)


def _make_burst(epoch, gyro_bias) -> BurstInput:
    ts = np.array([s.t for s in epoch.imu_burst])
    dts = np.diff(np.concatenate(([epoch.t_prev], ts)))
    if np.any(dts <= 0.0):
        raise ValueError(f"non-positive IMU sample spacing in epoch at t={epoch.t!r}")
    gyro = np.vstack([s.gyro for s in epoch.imu_burst])
    accel = np.vstack([s.accel for s in epoch.imu_burst])
    increment = np.array([1.0, 0.0, 0.0, 0.0])
    for i in range(len(dts)):
        step = np.concatenate(([1.0], 0.5 * dts[i] * (gyro[i] - gyro_bias)))
        increment = quat_product(increment, step)
    return BurstInput(dts, gyro, accel, increment)


def _rotate_rows(quats: np.ndarray, vecs: np.ndarray) -> np.ndarray:
    """Rotate vecs[i] by quats[i] (body -> nav), vectorized over rows."""
    w = quats[:, :1]
    qv = quats[:, 1:]
    t = 2.0 * np.cross(qv, vecs)
    return vecs + w * t + np.cross(qv, t)


class _OrientationStage:
    """Window model for the orientation observer (state: quaternion)."""

    def __init__(self, biases: ImuBiases):
        self._gyro_bias = biases.gyro
        self.model = WindowModel(
            state_dim=4,
            meas_dim=4,
            dynamics=self._dynamics,
            measurement=lambda q: q,
            dynamics_jacobian=self._dynamics_jacobian,
            measurement_jacobian=lambda q: np.eye(4),
            post_iterate=quat_normalize,
            align_measurements=_align_quat_blocks,
        )

    def _dynamics(self, q, burst: BurstInput):
        return quat_normalize(quat_product(q, burst.rot_increment))

    def _dynamics_jacobian(self, q, burst: BurstInput):
        raw = quat_product(np.asarray(q, dtype=float), burst.rot_increment)
        return normalize_jacobian(raw) @ quat_right_matrix(burst.rot_increment)

    def window_trajectory(self, q_start, bursts):
        """Per-burst arrays of sample-interval start orientations, plus the endpoint."""
        q = quat_normalize(np.asarray(q_start, dtype=float))
        per_burst = []
        for burst in bursts:
            quats = np.empty((len(burst.dts), 4))
            for i in range(len(burst.dts)):
                quats[i] = q
                q = propagate_orientation(q, burst.gyro[i], self._gyro_bias, burst.dts[i])
            per_burst.append(quats)
        return per_burst, q


def _align_quat_blocks(predicted: np.ndarray, Z: np.ndarray) -> np.ndarray:
    """Flip each measured quaternion block onto the predicted hemisphere."""
    Zb = Z.reshape(-1, 4).copy()
    Pb = predicted.reshape(-1, 4)
    flip = np.sum(Zb * Pb, axis=1) < 0.0
    Zb[flip] *= -1.0
    return Zb.reshape(-1)


_VELOCITY_MODEL = WindowModel(
    state_dim=3,
    meas_dim=3,
    dynamics=lambda v, u: v + u.delta_v,
    measurement=lambda v: v,
    dynamics_jacobian=lambda v, u: np.eye(3),
    measurement_jacobian=lambda v: np.eye(3),
)


def _velocity_inputs(bursts, per_burst_quats, biases: ImuBiases, gravity: GravityModel):
    """Precompute each burst's velocity increment along the stage-1 trajectory."""
    out = []
    for burst, quats in zip(bursts, per_burst_quats):
        force = _rotate_rows(quats, burst.accel - biases.accel) + gravity.vector
        out.append(VelocityInput(delta_v=burst.dts @ force))
    return tuple(out)


@dataclass(frozen=True)
class CascadeConfig:
    """Cascade parameters; both stages share the window length."""

    params: IpgParams = field(default_factory=IpgParams)
    params_velocity: Optional[IpgParams] = None
    biases: ImuBiases = field(default_factory=ImuBiases)
    gravity: GravityModel = field(default_factory=GravityModel)
    initial: Optional[NavState] = None
    fallback: str = "abort"

    def __post_init__(self):
        if self.fallback not in FALLBACK_MODES:
            raise ValueError(f"fallback must be one of {FALLBACK_MODES}, got {self.fallback!r}")
        if self.params_velocity is not None and self.params_velocity.horizon != self.params.horizon:
            raise ValueError(
                "orientation and velocity stages must share the window length: "
                f"{self.params.horizon} != {self.params_velocity.horizon}"
            )

    @property
    def velocity_params(self) -> IpgParams:
        return self.params_velocity if self.params_velocity is not None else self.params


@dataclass
class CascadeState:
    """Mutable per-run state of the cascade estimator."""

    config: CascadeConfig
    nav: NavState
    t_prev: float
    k: int = 0
    pending_bursts: list = field(default_factory=list)
    pending_ahrs: list = field(default_factory=list)
    pending_dvl: list = field(default_factory=list)
    window_start_seed: Optional[NavState] = None
    q_window: Optional[IpgWindow] = None
    v_window: Optional[IpgWindow] = None
    needs_reseed: bool = False
    fallback_count: int = 0
    last_orientation_traj: Optional[list] = None
    _stage1: _OrientationStage = None

    def __post_init__(self):
        if self._stage1 is None:
            self._stage1 = _OrientationStage(self.config.biases)

    @classmethod
    def start(cls, config: CascadeConfig, epochs) -> "CascadeState":
        nav = config.initial.copy() if config.initial is not None else initial_nav_from_epochs(epochs)
        return cls(config=config, nav=nav, t_prev=epochs[0].t_prev)


def _dead_reckon(state: CascadeState, epoch) -> NavState:
    return preintegrate_burst(
        state.nav, epoch.imu_burst, state.config.biases, state.config.gravity, state.t_prev
    )


def cascade_step(state: CascadeState, epoch, config: CascadeConfig | None = None):
    """Consume one SyncedEpoch and emit a TrajectoryPoint.

    The first N-1 epochs dead-reckon (flag ``warmup``) while the windows
    fill.  Afterwards each epoch slides both windows, runs stage 1 then
    stage 2, and integrates position over the epoch period.
    """
    config = config if config is not None else state.config
    n = config.params.horizon
    burst = _make_burst(epoch, config.biases.gyro)
    dt_epoch = epoch.t - state.t_prev
    state.k += 1

    if state.k < n:
        nav = _dead_reckon(state, epoch)
        if state.k == 1:
            state.window_start_seed = nav.copy()
        else:
            state.pending_bursts.append(burst)
        state.pending_ahrs.append(epoch.ahrs)
        state.pending_dvl.append(epoch.dvl)
        state.nav = nav
        state.t_prev = epoch.t
        return state, TrajectoryPoint(epoch.t, nav, "warmup")

    if state.k == n:
        q_inputs = tuple(state.pending_bursts) + (burst,)
        q_meas = tuple(state.pending_ahrs) + (epoch.ahrs,)
        v_meas = tuple(state.pending_dvl) + (epoch.dvl,)
        seed = state.window_start_seed
        state.q_window = IpgWindow.initial(q_inputs, q_meas, seed.orientation, config.params.k0_scale)
        state.v_window = IpgWindow.initial(
            tuple(VelocityInput(np.zeros(3)) for _ in q_inputs),
            v_meas,
            seed.velocity,
            config.velocity_params.k0_scale,
        )
        state.pending_bursts = []
        state.pending_ahrs = []
        state.pending_dvl = []
    else:
        state.q_window = slide_window(state.q_window, burst, epoch.ahrs)
        state.v_window = IpgWindow(
            inputs=state.v_window.inputs[1:] + (VelocityInput(np.zeros(3)),),
            measurements=state.v_window.measurements[1:] + (np.asarray(epoch.dvl, dtype=float),),
            iterate=state.v_window.iterate,
            precond=state.v_window.precond,
        )
        if state.needs_reseed:
            # After a fallback epoch, restart both iterates from the direct
            # measurements of the new window start (identity measurement maps).
            state.q_window = IpgWindow.initial(
                state.q_window.inputs,
                state.q_window.measurements,
                quat_normalize(state.q_window.measurements[0]),
                config.params.k0_scale,
            )
            state.v_window = IpgWindow.initial(
                state.v_window.inputs,
                state.v_window.measurements,
                state.v_window.measurements[0],
                config.velocity_params.k0_scale,
            )
            state.needs_reseed = False

    stage = "orientation"
    try:
        res_q = ipg_step(state._stage1.model, config.params, state.q_window)
        per_burst_quats, q_end = state._stage1.window_trajectory(
            res_q.window_start, state.q_window.inputs
        )
        vel_inputs = _velocity_inputs(
            state.q_window.inputs, per_burst_quats, config.biases, config.gravity
        )
        state.v_window = IpgWindow(
            inputs=vel_inputs,
            measurements=state.v_window.measurements,
            iterate=state.v_window.iterate,
            precond=state.v_window.precond,
        )
        stage = "velocity"
        res_v = ipg_step(_VELOCITY_MODEL, config.velocity_params, state.v_window)
    except DivergenceError as exc:
        if config.fallback == "abort":
            raise DivergenceError(
                "cascade stage diverged", iteration=exc.iteration, stage=stage, epoch=epoch.t
            ) from exc
        nav = _dead_reckon(state, epoch)
        state.nav = nav
        state.t_prev = epoch.t
        state.needs_reseed = True
        state.fallback_count += 1
        return state, TrajectoryPoint(epoch.t, nav, "fallback")

    velocity = res_v.estimate
    position = state.nav.position + velocity * dt_epoch
    nav = NavState(position, velocity, q_end)

    state.q_window = res_q.window
    state.v_window = res_v.window
    state.last_orientation_traj = per_burst_quats
    state.nav = nav
    state.t_prev = epoch.t
    return state, TrajectoryPoint(epoch.t, nav, "ok")


def run_cascade(epochs, config: CascadeConfig):
    """Run the cascade over a full epoch stream; returns one row per epoch."""
    epochs = list(epochs)
    if len(epochs) < config.params.horizon:
        raise ValueError(
            f"need at least horizon={config.params.horizon} epochs, got {len(epochs)}"
        )
    state = CascadeState.start(config, epochs)
    points = []
    for epoch in epochs:
        state, point = cascade_step(state, epoch)
        points.append(point)
    return points
