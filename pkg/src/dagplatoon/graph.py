"""Information-flow topology of a platoon.

Followers are indexed 0..n-1 in code (vehicle number = index + 1). The leader
is not a node of the follower graph; its links are carried by ``pinning``.
``adjacency[i][j] == 1`` means follower i receives follower j's state.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

STANDARD_KINDS = ("PF", "PLF", "TPF", "TPLF")


class CyclicGraph(ValueError):
    """Raised when a follower graph contains a directed cycle."""

    def __init__(self, cycle):
        self.cycle = tuple(cycle)
        pretty = " -> ".join(str(v + 1) for v in self.cycle + self.cycle[:1])
        super().__init__(f"communication graph is not a DAG; cycle (vehicle numbers): {pretty}")


@dataclass(frozen=True)
class Topology:
    adjacency: tuple[tuple[int, ...], ...]
    pinning: tuple[int, ...]
    kind: str | None = None

    def __post_init__(self):
        adj = tuple(tuple(int(a) for a in row) for row in self.adjacency)
        pin = tuple(int(p) for p in self.pinning)
        n = len(pin)
        if n < 1:
            raise ValueError("topology needs at least one follower")
        if len(adj) != n or any(len(row) != n for row in adj):
            raise ValueError(f"adjacency must be {n}x{n} to match the pinning vector")
        for i, row in enumerate(adj):
            if any(a not in (0, 1) for a in row):
                raise ValueError("adjacency entries must be 0 or 1 (weighted graphs are not supported)")
            if row[i] != 0:
                raise ValueError(f"self-loop at follower {i + 1}")
        if any(p not in (0, 1) for p in pin):
            raise ValueError("pinning entries must be 0 or 1")
        if self.kind is not None and self.kind not in STANDARD_KINDS:
            raise ValueError(f"unknown topology kind {self.kind!r}")
        object.__setattr__(self, "adjacency", adj)
        object.__setattr__(self, "pinning", pin)

    @property
    def n(self) -> int:
        return len(self.pinning)

    @property
    def A(self) -> np.ndarray:
        return np.array(self.adjacency, dtype=float)

    @property
    def P(self) -> np.ndarray:
        return np.diag(np.array(self.pinning, dtype=float))

    def in_degrees(self) -> np.ndarray:
        return self.A.sum(axis=1)

    def degree_plus_pin(self) -> np.ndarray:
        """d_ii + p_ii for every follower."""
        return self.in_degrees() + np.array(self.pinning, dtype=float)

    @classmethod
    def from_arrays(cls, adjacency, pinning, kind=None) -> "Topology":
        adjacency = np.asarray(adjacency)
        return cls(tuple(map(tuple, adjacency.tolist())), tuple(np.asarray(pinning).tolist()), kind)


def standard_topology(kind: str, n: int) -> Topology:
    """Build one of the unidirectional topologies PF, PLF, TPF, TPLF.

    In TPF/TPLF the second follower's missing second predecessor is the
    leader, so it is pinned as well.
    """
    if kind not in STANDARD_KINDS:
        raise ValueError(f"unknown topology kind {kind!r}; expected one of {STANDARD_KINDS}")
    if n < 1:
        raise ValueError("n must be >= 1")
    adj = np.zeros((n, n), dtype=int)
    pin = np.zeros(n, dtype=int)
    two_pred = kind in ("TPF", "TPLF")
    for i in range(1, n):
        adj[i, i - 1] = 1
        if two_pred and i >= 2:
            adj[i, i - 2] = 1
    pin[0] = 1
    if two_pred and n >= 2:
        pin[1] = 1
    if kind in ("PLF", "TPLF"):
        pin[:] = 1
    return Topology.from_arrays(adj, pin, kind)


def laplacian(t: Topology) -> np.ndarray:
    A = t.A
    return np.diag(A.sum(axis=1)) - A


def grounded_matrix(t: Topology) -> np.ndarray:
    """G = L + P."""
    return laplacian(t) + t.P


def pinning_condition(t: Topology) -> np.ndarray:
    """True where follower i hears from at least one node (d_ii + p_ii > 0)."""
    return t.degree_plus_pin() > 0


def _find_cycle(adj: np.ndarray, nodes) -> list[int]:
    # Every node left over by Kahn's algorithm has an in-edge from another leftover node,
    # so walking predecessors must revisit a node.
    nodes = set(nodes)
    start = min(nodes)
    path, seen = [], {}
    v = start
    while v not in seen:
        seen[v] = len(path)
        path.append(v)
        v = next(j for j in sorted(nodes) if adj[v, j])
    # path follows "receives from" links; reverse to get information-flow direction
    return list(reversed(path[seen[v]:]))


def topological_order(t: Topology) -> tuple[int, ...]:
    """Order followers so every information source precedes its receivers.

    Kahn's algorithm with a min-heap frontier: ties go to the smallest index,
    so the result is deterministic. Returns 0-based follower indices.
    """
    adj = np.array(t.adjacency, dtype=int)
    n = t.n
    indeg = adj.sum(axis=1)  # number of sources each follower listens to
    frontier = [i for i in range(n) if indeg[i] == 0]
    heapq.heapify(frontier)
    order = []
    while frontier:
        j = heapq.heappop(frontier)
        order.append(j)
        for i in np.nonzero(adj[:, j])[0]:
            indeg[i] -= 1
            if indeg[i] == 0:
                heapq.heappush(frontier, int(i))
    if len(order) < n:
        raise CyclicGraph(_find_cycle(adj, set(range(n)) - set(order)))
    return tuple(order)


def is_dag(t: Topology) -> bool:
    try:
        topological_order(t)
    except CyclicGraph:
        return False
    return True


def permutation_matrix(order) -> np.ndarray:
    """Q = [e_{s_1}, ..., e_{s_N}] for a 0-based ordering s."""
    order = [int(s) for s in order]
    n = len(order)
    if sorted(order) != list(range(n)):
        raise ValueError(f"{order} is not a permutation of 0..{n - 1}")
    Q = np.zeros((n, n))
    Q[order, np.arange(n)] = 1.0
    return Q


def permute(M: np.ndarray, order) -> np.ndarray:
    """Q^{-1} M Q."""
    Q = permutation_matrix(order)
    return Q.T @ M @ Q


def random_dag(n: int, rng: np.random.Generator, edge_prob: float = 0.4, pin_prob: float = 0.5) -> Topology:
    """Random DAG on n followers with shuffled labels; every follower is reachable."""
    perm = rng.permutation(n)
    adj = np.zeros((n, n), dtype=int)
    pin = (rng.random(n) < pin_prob).astype(int)
    for a in range(n):
        for b in range(a):
            if rng.random() < edge_prob:
                adj[perm[a], perm[b]] = 1
    # connect isolated followers so d_ii + p_ii > 0 everywhere
    for a in range(n):
        i = perm[a]
        if adj[i].sum() + pin[i] == 0:
            if a == 0 or rng.random() < 0.5:
                pin[i] = 1
            else:
                adj[i, perm[rng.integers(a)]] = 1
    return Topology.from_arrays(adj, pin)
