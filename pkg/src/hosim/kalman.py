"""Two-state Kalman filter tracking per-(UE, cell) RSRP and ambient noise.

The state is the pair (estimated RSRP dBm, estimated ambient noise dBm)
with a full 2x2 covariance.  Prediction is deterministic (process noise
enters through Q only) and both prediction and measurement matrices are
identity.  combine_state squashes a posterior state into a single (0, 1)
quality score that rises with signal strength and falls with noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .rl import sigmoid

RSRP_ANCHOR_DBM = -90.0
RSRP_SCALE_DB = 10.0
NOISE_ANCHOR_DBM = -100.0
NOISE_SCALE_DB = 10.0
STREAM_EVICTION_S = 10.0
_PSD_TOLERANCE = -1e-9


@dataclass
class KalmanState:
    """State estimate x (2-vector) and its covariance P (2x2)."""

    x: np.ndarray
    P: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float).reshape(2)
        self.P = np.asarray(self.P, dtype=float).reshape(2, 2)

    def validate(self) -> None:
        if not np.all(np.isfinite(self.x)):
            raise ValueError("state vector must be finite")
        if not np.allclose(self.P, self.P.T, atol=1e-9):
            raise ValueError("covariance must be symmetric")
        if np.linalg.eigvalsh(self.P).min() < _PSD_TOLERANCE:
            raise ValueError("covariance must be positive semi-definite")


@dataclass
class KalmanParams:
    """Filter matrices; defaults follow the identity-dynamics signal model."""

    F: np.ndarray = field(default_factory=lambda: np.eye(2))
    H: np.ndarray = field(default_factory=lambda: np.eye(2))
    Q: np.ndarray = field(default_factory=lambda: np.diag([0.04, 0.04]))
    R: np.ndarray = field(default_factory=lambda: np.diag([4.0, 4.0]))
    P0: np.ndarray = field(default_factory=lambda: np.eye(2))

    def __post_init__(self):
        for name in ("F", "H", "Q", "R", "P0"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float).reshape(2, 2))


def predict(state: KalmanState, params: KalmanParams) -> KalmanState:
    """A priori estimate: x' = F x, P' = F P F^T + Q."""
    x = params.F @ state.x
    P = params.F @ state.P @ params.F.T + params.Q
    return KalmanState(x, P)


def gain(P_prior: np.ndarray, params: KalmanParams) -> np.ndarray:
    """Kalman gain K = P' H^T (H P' H^T + R)^-1."""
    S = params.H @ P_prior @ params.H.T + params.R
    # Solve S^T K^T = (P' H^T)^T instead of forming the inverse.
    return np.linalg.solve(S.T, (P_prior @ params.H.T).T).T


def update(prior: KalmanState, z, params: KalmanParams) -> KalmanState:
    """A posteriori estimate from a 2-vector measurement."""
    z = np.asarray(z, dtype=float).reshape(2)
    if not np.all(np.isfinite(z)):
        raise ValueError("measurement must be finite")
    K = gain(prior.P, params)
    x = prior.x + K @ (z - params.H @ prior.x)
    P = (np.eye(2) - K @ params.H) @ prior.P
    P = (P + P.T) / 2.0
    return KalmanState(x, P)


def step(state: KalmanState, z, params: KalmanParams) -> KalmanState:
    """Per-measurement entry point: predict then update."""
    return update(predict(state, params), z, params)


def initial_state(z, params: KalmanParams) -> KalmanState:
    """Seed a stream from its first measurement with covariance P0."""
    return KalmanState(np.asarray(z, dtype=float).reshape(2).copy(), params.P0.copy())


def combine_state(x) -> float:
    """Squash (RSRP, noise) estimates into a single (0, 1) quality score.

    Both components are rescaled through anchored sigmoids; the noise
    term enters as its complement so that louder ambient noise lowers
    the score.  Strictly increasing in RSRP, strictly decreasing in noise.
    """
    rsrp_est, noise_est = float(x[0]), float(x[1])
    a = sigmoid((rsrp_est - RSRP_ANCHOR_DBM) / RSRP_SCALE_DB)
    b = sigmoid((noise_est - NOISE_ANCHOR_DBM) / NOISE_SCALE_DB)
    return sigmoid(a + (1.0 - b) - 1.0)


class KalmanStreams:
    """Lazily created per-(UE, cell) filter streams with idle eviction.

    A stream appears on the first measurement that mentions its key and
    is dropped after 10 s without a mention.  Confined to one
    single-threaded simulation instance.
    """

    def __init__(self, params: KalmanParams, eviction_s: float = STREAM_EVICTION_S):
        self.params = params
        self.eviction_s = eviction_s
        self._states: dict[tuple[int, int], KalmanState] = {}
        self._last_seen: dict[tuple[int, int], float] = {}

    def observe(self, key: tuple[int, int], z, now: float) -> KalmanState:
        state = self._states.get(key)
        if state is None:
            state = initial_state(z, self.params)
        else:
            state = step(state, z, self.params)
        self._states[key] = state
        self._last_seen[key] = now
        self._evict(now)
        return state

    def get(self, key: tuple[int, int]) -> KalmanState | None:
        return self._states.get(key)

    def _evict(self, now: float) -> None:
        stale = [k for k, t in self._last_seen.items() if now - t > self.eviction_s]
        for k in stale:
            del self._states[k]
            del self._last_seen[k]
