"""Distributed linear control law, the closed-form stability region for DAG
platoons, internal-model feasibility, and Riccati-based gain synthesis."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import OutputMask, linear_matrices
from .graph import Topology, grounded_matrix, pinning_condition, topological_order


class NoConvergence(RuntimeError):
    def __init__(self, iterations, residual):
        self.iterations = iterations
        self.residual = residual
        super().__init__(f"Newton-Kleinman did not converge after {iterations} iterations (residual {residual:.3e})")


@dataclass(frozen=True)
class GainSet:
    k: tuple[tuple[float, float, float], ...]
    mask: OutputMask = field(default_factory=OutputMask)

    def __post_init__(self):
        k = tuple(tuple(float(x) for x in row) for row in self.k)
        if any(len(row) != 3 for row in k):
            raise ValueError("each gain row must be (k_p, k_v, k_a)")
        if not np.all(np.isfinite(np.array(k, dtype=float))):
            raise ValueError("gains must be finite")
        object.__setattr__(self, "k", k)

    @property
    def n(self) -> int:
        return len(self.k)

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.k, dtype=float).reshape(-1, 3)

    @classmethod
    def from_array(cls, K, mask: OutputMask | None = None) -> "GainSet":
        return cls(tuple(map(tuple, np.asarray(K, dtype=float).reshape(-1, 3).tolist())), mask or OutputMask())


@dataclass(frozen=True)
class SynthesisRecipe:
    """Per-follower Riccati weight ``epsilon`` and coupling scale ``alpha``.

    ``alpha`` entries may be the string ``"auto"``, meaning 1/(2(d_ii+p_ii)) + 1.
    """

    epsilon: tuple[float, ...]
    alpha: tuple[float | str, ...]

    def __post_init__(self):
        eps = tuple(float(e) for e in self.epsilon)
        if any(not e > 0 for e in eps):
            raise ValueError("epsilon must be positive")
        alpha = tuple(a if a == "auto" else float(a) for a in self.alpha)
        if len(alpha) != len(eps):
            raise ValueError("epsilon and alpha lengths differ")
        object.__setattr__(self, "epsilon", eps)
        object.__setattr__(self, "alpha", alpha)

    @classmethod
    def uniform(cls, n: int, epsilon: float, alpha: float | str = "auto") -> "SynthesisRecipe":
        return cls((epsilon,) * n, (alpha,) * n)


@dataclass(frozen=True)
class VehicleVerdict:
    kp_positive: bool
    kv_above_bound: bool
    ka_above_bound: bool
    connected: bool
    mask_ok: bool
    kv_bound: float
    kv_margin: float

    @property
    def ok(self) -> bool:
        return self.kp_positive and self.kv_above_bound and self.ka_above_bound and self.connected and self.mask_ok

    def violations(self) -> list[str]:
        out = []
        if not self.mask_ok:
            out.append("c_p = c_v = 1 required")
        if not self.connected:
            out.append("d_ii + p_ii > 0 required")
        if not self.kp_positive:
            out.append("k_p > 0")
        if not self.ka_above_bound:
            out.append("k_a c_a > -1/(d_ii + p_ii)")
        if not self.kv_above_bound:
            out.append(f"k_v > {self.kv_bound:.6g}")
        return out


@dataclass(frozen=True)
class StabilityVerdict:
    vehicles: tuple[VehicleVerdict, ...]

    @property
    def stable(self) -> bool:
        return all(v.ok for v in self.vehicles)


def control_inputs(errors, gains: GainSet, t: Topology) -> np.ndarray:
    """u = -k_i^T eps_i for all followers; ``errors`` is (N, 3) of (p_hat, v_hat, a_hat)."""
    Y = np.asarray(errors, dtype=float) * gains.mask.as_array()
    lumped = grounded_matrix(t) @ Y
    return -(gains.matrix * lumped).sum(axis=1)


def control_input(i: int, errors, gains: GainSet, t: Topology) -> float:
    if not 0 <= i < t.n:
        raise IndexError(f"follower index {i} out of range for {t.n} followers")
    errors = np.asarray(errors, dtype=float)
    C = gains.mask.as_array()
    A = t.A
    lumped = sum(A[i, j] * C * (errors[i] - errors[j]) for j in range(t.n)) + t.pinning[i] * C * errors[i]
    return float(-np.dot(gains.matrix[i], lumped))


def stability_region_check(tau: float, k, degree_plus_pin: float, mask: OutputMask) -> VehicleVerdict:
    """Evaluate the per-follower stability inequalities (strict, no tolerance)."""
    tau = float(tau)
    if not tau > 0:
        raise ValueError("tau must be positive")
    kp, kv, ka = (float(x) for x in k)
    dp = float(degree_plus_pin)
    connected = dp > 0
    denom = 1.0 + ka * mask.c_a * dp
    if denom > 0:
        bound = tau * kp / denom
        kv_ok = kv > bound
    else:
        bound = float("inf")
        kv_ok = False
    ka_ok = connected and ka * mask.c_a > -1.0 / dp
    return VehicleVerdict(
        kp_positive=bool(kp > 0),
        kv_above_bound=bool(kv_ok),
        ka_above_bound=bool(ka_ok),
        connected=bool(connected),
        mask_ok=mask.c_p == 1 and mask.c_v == 1,
        kv_bound=float(bound),
        kv_margin=float(kv - bound),
    )


def stability_verdict(taus, gains: GainSet, t: Topology) -> StabilityVerdict:
    """Platoon-level verdict; raises CyclicGraph when the topology is not a DAG."""
    topological_order(t)
    dp = t.degree_plus_pin()
    return StabilityVerdict(tuple(
        stability_region_check(tau, k, d, gains.mask) for tau, k, d in zip(taus, gains.matrix, dp)
    ))


@dataclass
class FeasibilityReport:
    S: np.ndarray
    R: np.ndarray
    Pi: np.ndarray
    observability: np.ndarray
    rank: int
    feasible: bool
    sylvester_residuals: list[float]
    output_residuals: list[float]
    note: str = (
        "S = [[0, 1], [0, 0]] (constant-speed leader); the zero S choices only admit a standing leader"
    )


def tracking_feasibility(mask: OutputMask, taus) -> FeasibilityReport:
    S = np.array([[0.0, 1.0], [0.0, 0.0]])
    Pi = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
    R = np.array([[mask.c_p, 0.0], [0.0, mask.c_v], [0.0, 0.0]])
    Qo = np.vstack([R, R @ S])
    rank = int(np.linalg.matrix_rank(Qo))
    syl, out = [], []
    for tau in taus:
        A, _ = linear_matrices(tau)
        syl.append(float(np.abs(A @ Pi - Pi @ S).max()))
        out.append(float(np.abs(mask.C @ Pi - R).max()))
    return FeasibilityReport(S, R, Pi, Qo, rank, rank == 2, syl, out)


def solve_lyapunov(Ac: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Solve Ac^T X + X Ac + Q = 0 through the vectorized n^2 linear system."""
    n = Ac.shape[0]
    I = np.eye(n)
    M = np.kron(Ac.T, I) + np.kron(I, Ac.T)
    X = np.linalg.solve(M, -Q.reshape(-1)).reshape(n, n)
    return 0.5 * (X + X.T)


def care_residual(P, A, B, epsilon) -> np.ndarray:
    return P @ A + A.T @ P - P @ B @ B.T @ P + epsilon * np.eye(A.shape[0])


def solve_care(A: np.ndarray, B: np.ndarray, epsilon: float, max_iter: int = 60) -> np.ndarray:
    """Stabilizing solution of P A + A^T P - P B B^T P + eps I = 0 (Newton-Kleinman).

    Starts from the stabilizing gain K = [1, 2 tau, 0] of the velocity-only
    stability region (tau read off A).
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    n = A.shape[0]
    tau = -1.0 / A[-1, -1]
    K = np.array([[1.0, 2.0 * tau, 0.0]])
    Q = epsilon * np.eye(n)
    P = np.zeros((n, n))
    res = np.inf
    for it in range(1, max_iter + 1):
        P = solve_lyapunov(A - B @ K, Q + K.T @ K)
        K_next = B.T @ P
        res = np.linalg.norm(care_residual(P, A, B, epsilon))
        step = np.abs(K_next - K).max()
        K = K_next
        if res <= 1e-10 * (1.0 + np.linalg.norm(P)) and step <= 1e-12 * (1.0 + np.abs(K).max()):
            break
    else:
        raise NoConvergence(max_iter, res)
    if np.linalg.eigvalsh(P).min() <= 0 or np.linalg.eigvals(A - B @ B.T @ P).real.max() >= 0:
        raise NoConvergence(it, res)
    return P


def resolve_alpha(alpha, degree_plus_pin: float) -> float:
    lower = 1.0 / (2.0 * degree_plus_pin)
    if alpha == "auto":
        return lower + 1.0
    if alpha < lower:
        raise ValueError(f"alpha {alpha} below the admissible bound 1/(2(d_ii+p_ii)) = {lower}")
    return float(alpha)


def synthesize_gains(taus, t: Topology, recipe: SynthesisRecipe, mask: OutputMask | None = None) -> GainSet:
    mask = mask or OutputMask()
    if (mask.c_p, mask.c_v, mask.c_a) != (1, 1, 1):
        raise ValueError("Riccati synthesis requires every state to be measured (mask 1,1,1)")
    if len(taus) != t.n or len(recipe.epsilon) != t.n:
        raise ValueError("recipe, lags and topology disagree on the follower count")
    if not pinning_condition(t).all():
        missing = [i + 1 for i, ok in enumerate(pinning_condition(t)) if not ok]
        raise ValueError(f"followers {missing} receive no information (d_ii + p_ii = 0)")
    dp = t.degree_plus_pin()
    rows = []
    for tau, eps, alpha, d in zip(taus, recipe.epsilon, recipe.alpha, dp):
        A, B = linear_matrices(tau)
        P = solve_care(A, B, eps)
        rows.append(resolve_alpha(alpha, d) * (B.T @ P).ravel())
    return GainSet.from_array(np.array(rows), mask)
