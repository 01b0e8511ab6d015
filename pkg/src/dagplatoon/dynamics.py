"""Vehicle models: the third-order linear model, the stacked closed-loop
platoon matrix, and the nonlinear torque-driven plant with its
feedback-linearizing and sliding-mode layers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import Topology, grounded_matrix

GRAVITY = 9.81


@dataclass(frozen=True)
class OutputMask:
    c_p: int = 1
    c_v: int = 1
    c_a: int = 1

    def __post_init__(self):
        for name in ("c_p", "c_v", "c_a"):
            v = getattr(self, name)
            if v not in (0, 1):
                raise ValueError(f"{name} must be 0 or 1, got {v!r}")
            object.__setattr__(self, name, int(v))

    def as_array(self) -> np.ndarray:
        return np.array([self.c_p, self.c_v, self.c_a], dtype=float)

    @property
    def C(self) -> np.ndarray:
        return np.diag(self.as_array())


@dataclass(frozen=True)
class NonlinearParams:
    mass: float
    eta: float
    drag: float
    wheel_radius: float
    rolling: float

    def __post_init__(self):
        for name in ("mass", "eta", "drag", "wheel_radius", "rolling"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.eta > 1:
            raise ValueError("driveline efficiency eta must lie in (0, 1]")


@dataclass(frozen=True)
class VehicleParams:
    """Physical parameters of one vehicle.

    ``plant`` holds the true nonlinear parameters and ``estimate`` (with
    ``tau_estimate``) the values the feedback-linearization law believes.
    Both are optional; the linear model only needs ``tau``.
    """

    tau: float
    plant: NonlinearParams | None = None
    estimate: NonlinearParams | None = None
    tau_estimate: float | None = None

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"inertial lag tau must be positive, got {self.tau!r}")
        if self.tau_estimate is not None and not self.tau_estimate > 0:
            raise ValueError("tau_estimate must be positive")

    @property
    def has_nonlinear(self) -> bool:
        return self.plant is not None and self.estimate is not None and self.tau_estimate is not None


def linear_matrices(tau: float) -> tuple[np.ndarray, np.ndarray]:
    if not tau > 0:
        raise ValueError(f"inertial lag tau must be positive, got {tau!r}")
    A = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, -1.0 / tau]])
    B = np.array([[0.0], [0.0], [1.0 / tau]])
    return A, B


def closed_loop_matrix(taus, gains, t: Topology) -> np.ndarray:
    """3N x 3N tracking-error dynamics, states stacked as (p_hat, v_hat, a_hat).

    ``gains`` is a GainSet (anything with ``.matrix`` as an (N, 3) array and a
    ``.mask``).
    """
    taus = np.asarray(taus, dtype=float)
    K = np.asarray(gains.matrix, dtype=float)
    N = t.n
    if taus.shape != (N,) or K.shape != (N, 3):
        raise ValueError(f"dimension mismatch: {taus.shape[0]} lags, {K.shape[0]} gain rows, {N} followers")
    if np.any(taus <= 0):
        raise ValueError("all inertial lags must be positive")
    T = K * gains.mask.as_array() / taus[:, None]  # columns t_p, t_v, t_a
    G = grounded_matrix(t)
    I, Z = np.eye(N), np.zeros((N, N))
    return np.block([
        [Z, I, Z],
        [Z, Z, I],
        [-T[:, [0]] * G, -T[:, [1]] * G, -np.diag(1.0 / taus) - T[:, [2]] * G],
    ])


def kronecker_closed_loop(tau: float, k, G: np.ndarray) -> np.ndarray:
    """Homogeneous platoon in per-vehicle stacking: I (x) A - G (x) B k^T."""
    A, B = linear_matrices(tau)
    k = np.asarray(k, dtype=float).reshape(1, 3)
    return np.kron(np.eye(G.shape[0]), A) - np.kron(G, B @ k)


def longitudinal_accel(v, torque, p: NonlinearParams):
    return (p.eta / p.wheel_radius * torque - p.drag * v**2 - p.mass * GRAVITY * p.rolling) / p.mass


def nonlinear_derivative(state, torque_command, params: VehicleParams):
    """Derivative of (p, v, T) for the torque-driven plant."""
    if params.plant is None:
        raise ValueError("vehicle has no nonlinear parameter block")
    _, v, torque = state
    return np.array([
        v,
        longitudinal_accel(v, torque, params.plant),
        (torque_command - torque) / params.tau,
    ])


def feedback_linearization(u, v, a, est: NonlinearParams, tau_est: float):
    """Desired torque realizing acceleration command ``u`` under the estimated model."""
    return est.wheel_radius / est.eta * (
        est.mass * u + est.mass * est.rolling * GRAVITY + 2.0 * est.drag * tau_est * v * a + est.drag * v**2
    )


def sliding_mode_augment(u, s, k_s):
    if np.any(np.asarray(k_s) < 0):
        raise ValueError("sliding gain k_s must be nonnegative")
    return u - k_s * np.sign(s)


def equilibrium_torque(v, p: NonlinearParams):
    """Torque holding constant speed v."""
    return p.wheel_radius / p.eta * (p.drag * v**2 + p.mass * GRAVITY * p.rolling)
