"""Seven-state constant-velocity Kalman filter with observation-centric re-update.

State vector x = [u, v, s, r, du, dv, ds]: box center, scale (area),
aspect ratio, and per-frame rates of u, v, s.  The aspect ratio carries
no derivative.  Time step is fixed to one frame.

A track that was lost and later re-associated is repaired by re-running
predict/update from its last post-update checkpoint over a virtual
trajectory that linearly interpolates the two bracketing observations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

STATE_DIM = 7
OBS_DIM = 4


@dataclass(frozen=True)
class KFState:
    x: np.ndarray  # (7,)
    P: np.ndarray  # (7, 7)

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float).reshape(STATE_DIM))
        object.__setattr__(self, "P", np.asarray(self.P, dtype=float).reshape(STATE_DIM, STATE_DIM))


@dataclass(frozen=True)
class Observation:
    z: np.ndarray  # (4,) [u, v, s, r]
    frame: int

    def __post_init__(self):
        object.__setattr__(self, "z", np.asarray(self.z, dtype=float).reshape(OBS_DIM))


def _default_F() -> np.ndarray:
    F = np.eye(STATE_DIM)
    F[0, 4] = 1.0  # u += du
    F[1, 5] = 1.0  # v += dv
    F[2, 6] = 1.0  # s += ds
    return F


def _default_H() -> np.ndarray:
    H = np.zeros((OBS_DIM, STATE_DIM))
    H[:OBS_DIM, :OBS_DIM] = np.eye(OBS_DIM)
    return H


@dataclass(frozen=True)
class KFModel:
    F: np.ndarray = field(default_factory=_default_F)
    H: np.ndarray = field(default_factory=_default_H)
    Q: np.ndarray = field(default_factory=lambda: np.diag([1.0, 1.0, 1.0, 1.0, 0.01, 0.01, 1e-4]))
    R: np.ndarray = field(default_factory=lambda: np.diag([1.0, 1.0, 10.0, 10.0]))


# SORT-lineage birth covariance: large velocity uncertainty, moderate position.
INITIAL_P = np.diag([10.0, 10.0, 10.0, 10.0, 1e4, 1e4, 1e4])


def initial_state(z: np.ndarray) -> KFState:
    """Track birth: observed [u, v, s, r] with zero velocities."""
    x = np.zeros(STATE_DIM)
    x[:OBS_DIM] = np.asarray(z, dtype=float)
    return KFState(x=x, P=INITIAL_P.copy())


def predict(state: KFState, model: KFModel) -> KFState:
    x = state.x.copy()
    # Scale guard: never let the predicted area go non-positive.
    if x[2] + x[6] <= 0:
        x[6] = 0.0
    x = model.F @ x
    P = model.F @ state.P @ model.F.T + model.Q
    return KFState(x=x, P=P)


def update(state: KFState, z: Observation, model: KFModel) -> KFState:
    H, R = model.H, model.R
    S = H @ state.P @ H.T + R
    K = np.linalg.solve(S.T, (state.P @ H.T).T).T
    x = state.x + K @ (z.z - H @ state.x)
    P = (np.eye(STATE_DIM) - K @ H) @ state.P
    P = (P + P.T) / 2.0  # defensive symmetrization
    return KFState(x=x, P=P)


def virtual_trajectory(z1: Observation, z2: Observation, t: int) -> Observation:
    """Linear interpolation between two observations at frame t, t1 < t < t2."""
    if not (z1.frame < t < z2.frame):
        raise ValueError(f"frame {t} outside open interval ({z1.frame}, {z2.frame})")
    alpha = (t - z1.frame) / (z2.frame - z1.frame)
    return Observation(z=z1.z + (z2.z - z1.z) * alpha, frame=t)


def oru_reupdate(state_at_t1: KFState, z1: Observation, z2: Observation,
                 model: KFModel) -> KFState:
    """Re-run the filter from the checkpoint at t1 over the virtual trajectory.

    For each frame in (t1, t2]: predict, then update with the interpolated
    observation (the real z2 at t2).  Returns the post-update state at t2.
    """
    if z2.frame <= z1.frame + 1:
        raise ValueError("no gap to re-update; use a plain update")
    state = state_at_t1
    for t in range(z1.frame + 1, z2.frame + 1):
        state = predict(state, model)
        zt = z2 if t == z2.frame else virtual_trajectory(z1, z2, t)
        state = update(state, zt, model)
    return state
