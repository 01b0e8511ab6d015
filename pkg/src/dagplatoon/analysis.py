"""Spectral and Routh-Hurwitz analysis of DAG platoons.

For a DAG the 3N closed-loop spectrum splits into N monic cubics, one per
follower; these helpers build them, test them, and cross-check the split
against a dense eigensolve of the full matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import closed_loop_matrix, linear_matrices
from .graph import Topology, topological_order


@dataclass(frozen=True)
class CharacteristicCubic:
    """lambda^3 + c2 lambda^2 + c1 lambda + c0."""

    c2: float
    c1: float
    c0: float

    @property
    def coefficients(self) -> tuple[float, float, float, float]:
        return (1.0, self.c2, self.c1, self.c0)

    def roots(self) -> np.ndarray:
        # companion-matrix eigenvalues
        companion = np.array([[-self.c2, -self.c1, -self.c0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        return np.linalg.eigvals(companion)

    def __call__(self, lam):
        return ((lam + self.c2) * lam + self.c1) * lam + self.c0


def characteristic_cubics(taus, gains, t: Topology) -> list[CharacteristicCubic]:
    topological_order(t)  # raises CyclicGraph
    taus = np.asarray(taus, dtype=float)
    T = gains.matrix * gains.mask.as_array() / taus[:, None]
    dp = t.degree_plus_pin()
    return [
        CharacteristicCubic(1.0 / tau + ta * d, tv * d, tp * d)
        for tau, (tp, tv, ta), d in zip(taus, T, dp)
    ]


@dataclass(frozen=True)
class RouthResult:
    first_column: tuple[float, float, float, float]
    stable: bool
    marginal: bool


def routh_verdict(c: CharacteristicCubic) -> RouthResult:
    """Routh array of a monic cubic; a zero pivot is reported as not stable."""
    if c.c2 == 0:
        return RouthResult((1.0, 0.0, float("nan"), c.c0), False, True)
    col = (1.0, c.c2, c.c1 - c.c0 / c.c2, c.c0)
    marginal = any(x == 0 for x in col)
    return RouthResult(col, all(x > 0 for x in col), marginal)


def hurwitz(M: np.ndarray) -> bool:
    return bool(np.linalg.eigvals(M).real.max() < 0)


def equivalent_subsystem(tau: float, k, degree_plus_pin: float) -> tuple[np.ndarray, bool]:
    """A_i - (d_ii + p_ii) B_i k_i^T and whether it is Hurwitz."""
    A, B = linear_matrices(tau)
    At = A - degree_plus_pin * B @ np.asarray(k, dtype=float).reshape(1, 3)
    return At, hurwitz(At)


@dataclass
class FactorizationReport:
    eigenvalues: np.ndarray
    cubic_roots: np.ndarray
    max_distance: float
    ok: bool


def match_spectra(a, b) -> float:
    """Greedy nearest-neighbour pairing of two equal-size multisets; max distance."""
    a = list(np.asarray(a))
    pool = list(np.asarray(b))
    if len(a) != len(pool):
        raise ValueError("spectra differ in size")
    worst = 0.0
    for x in sorted(a, key=lambda z: (z.real, z.imag)):
        d = np.abs(np.array(pool) - x)
        j = int(np.argmin(d))
        worst = max(worst, float(d[j]))
        pool.pop(j)
    return worst


def spectrum_factorization_check(taus, gains, t: Topology, tol: float = 1e-6) -> FactorizationReport:
    cubics = characteristic_cubics(taus, gains, t)
    eig = np.linalg.eigvals(closed_loop_matrix(taus, gains, t))
    roots = np.concatenate([c.roots() for c in cubics])
    dist = match_spectra(eig, roots)
    report = FactorizationReport(eig, roots, dist, dist <= tol)
    if not report.ok:
        raise ValueError(f"spectrum does not factor into the per-follower cubics: max pairing distance {dist:.3e} > {tol:.1e}")
    return report


def characteristic_identity_error(taus, gains, t: Topology, points) -> float:
    """Max relative gap between det(lambda I - A_hat) and the product of cubics at sample points.

    Unlike eigenvalue pairing this stays accurate when the closed loop has
    repeated (defective) eigenvalues, as in homogeneous predecessor-following.
    """
    M = closed_loop_matrix(taus, gains, t)
    cubics = characteristic_cubics(taus, gains, t)
    n = M.shape[0]
    worst = 0.0
    for lam in points:
        lhs = np.linalg.det(lam * np.eye(n) - M)
        rhs = np.prod([c(lam) for c in cubics])
        worst = max(worst, abs(lhs - rhs) / max(abs(rhs), 1e-300))
    return worst
