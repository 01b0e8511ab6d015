import numpy as np
import pytest
from hypothesis import given, strategies as st

from dagplatoon.graph import (
    STANDARD_KINDS,
    CyclicGraph,
    Topology,
    grounded_matrix,
    is_dag,
    laplacian,
    permutation_matrix,
    permute,
    pinning_condition,
    random_dag,
    standard_topology,
    topological_order,
)

# four followers; 2 <- 1, 3 <- {1, 2, 4}, 4 <- 1, only follower 1 pinned
FIG2A = Topology.from_arrays([[0, 0, 0, 0], [1, 0, 0, 0], [1, 1, 0, 1], [1, 0, 0, 0]], [1, 0, 0, 0])
# the same graph with the 1 <-> 3 link reversed
FIG2D = Topology.from_arrays([[0, 0, 1, 0], [1, 0, 0, 0], [0, 1, 0, 1], [1, 0, 0, 0]], [1, 0, 0, 0])


def test_pf_three():
    t = standard_topology("PF", 3)
    assert t.adjacency == ((0, 0, 0), (1, 0, 0), (0, 1, 0))
    assert t.pinning == (1, 0, 0)


def test_plf_three():
    t = standard_topology("PLF", 3)
    assert t.adjacency == standard_topology("PF", 3).adjacency
    assert t.pinning == (1, 1, 1)


def test_single_follower_pinned():
    for kind in STANDARD_KINDS:
        t = standard_topology(kind, 1)
        assert t.adjacency == ((0,),)
        assert t.pinning == (1,)


def test_two_predecessor_kinds():
    t = standard_topology("TPF", 4)
    assert t.adjacency == ((0, 0, 0, 0), (1, 0, 0, 0), (1, 1, 0, 0), (0, 1, 1, 0))
    # follower 2 listens to follower 1 and to the leader
    assert t.pinning == (1, 1, 0, 0)
    assert standard_topology("TPLF", 4).pinning == (1, 1, 1, 1)


def test_unknown_kind():
    with pytest.raises(ValueError):
        standard_topology("BD", 3)


def test_laplacian_examples():
    np.testing.assert_array_equal(laplacian(standard_topology("PF", 3)), [[0, 0, 0], [-1, 1, 0], [0, -1, 1]])
    np.testing.assert_array_equal(laplacian(Topology.from_arrays(np.zeros((3, 3)), [0, 0, 0])), np.zeros((3, 3)))
    np.testing.assert_array_equal(np.diag(laplacian(FIG2A)), [0, 1, 3, 1])


def test_grounded_examples():
    np.testing.assert_array_equal(grounded_matrix(standard_topology("PF", 3)), [[1, 0, 0], [-1, 1, 0], [0, -1, 1]])
    np.testing.assert_array_equal(grounded_matrix(standard_topology("PLF", 2)), [[1, 0], [-1, 2]])
    np.testing.assert_array_equal(grounded_matrix(Topology.from_arrays(np.zeros((2, 2)), [0, 0])), np.zeros((2, 2)))


def test_topological_order_fig2():
    assert topological_order(FIG2A) == (0, 1, 3, 2)
    assert topological_order(Topology(((0,),), (1,))) == (0,)


def test_cycle_detected_with_witness():
    with pytest.raises(CyclicGraph) as info:
        topological_order(FIG2D)
    cyc = info.value.cycle
    A = FIG2D.A
    # each consecutive pair is an information-flow edge: cyc[k] -> cyc[k+1]
    for a, b in zip(cyc, cyc[1:] + cyc[:1]):
        assert A[b, a] == 1
    assert not is_dag(FIG2D)


def test_permutation_matrix_examples():
    Q = permutation_matrix((0, 1, 3, 2))
    expected = np.eye(4)[:, [0, 1, 3, 2]]
    np.testing.assert_array_equal(Q, expected)
    np.testing.assert_array_equal(permutation_matrix(range(5)), np.eye(5))
    np.testing.assert_array_equal(permutation_matrix((1, 0)), [[0, 1], [1, 0]])
    with pytest.raises(ValueError):
        permutation_matrix((0, 0, 1))


def test_fig2a_reordered_lower_triangular():
    Ahat = permute(FIG2A.A, topological_order(FIG2A))
    np.testing.assert_array_equal(np.triu(Ahat), 0)


def test_pinning_condition_examples():
    assert pinning_condition(standard_topology("PF", 3)).all()
    assert pinning_condition(standard_topology("PLF", 7)).all()
    isolated = Topology.from_arrays([[0, 0, 0], [0, 0, 0], [0, 1, 0]], [1, 0, 0])
    assert pinning_condition(isolated).tolist() == [True, False, True]


@pytest.mark.parametrize("bad", [
    dict(adjacency=((0, 2), (0, 0)), pinning=(1, 0)),
    dict(adjacency=((1, 0), (0, 0)), pinning=(1, 0)),
    dict(adjacency=((0, 0), (1, 0)), pinning=(1,)),
    dict(adjacency=((0, 0), (1, 0)), pinning=(1, 3)),
])
def test_topology_validation(bad):
    with pytest.raises(ValueError):
        Topology(**bad)


@given(n=st.integers(1, 9), seed=st.integers(0, 2**32 - 1))
def test_random_dag_orders_to_lower_triangular(n, seed):
    t = random_dag(n, np.random.default_rng(seed))
    order = topological_order(t)
    assert sorted(order) == list(range(n))
    pos = {v: k for k, v in enumerate(order)}
    A = t.A
    for i, j in zip(*np.nonzero(A)):
        assert pos[j] < pos[i]
    Ghat = permute(grounded_matrix(t), order)
    np.testing.assert_array_equal(np.triu(Ghat, 1), 0)
    np.testing.assert_array_equal(np.diag(Ghat), t.degree_plus_pin()[list(order)])
    assert pinning_condition(t).all()


@given(n=st.integers(1, 9), seed=st.integers(0, 2**32 - 1))
def test_permutation_is_orthogonal(n, seed):
    order = np.random.default_rng(seed).permutation(n)
    Q = permutation_matrix(order)
    np.testing.assert_array_equal(Q.T @ Q, np.eye(n))


@given(n=st.integers(2, 8))
def test_ring_is_cyclic(n):
    adj = np.zeros((n, n), dtype=int)
    for i in range(1, n):
        adj[i, i - 1] = 1
    adj[0, n - 1] = 1  # close the chain into a ring
    with pytest.raises(CyclicGraph) as info:
        topological_order(Topology.from_arrays(adj, np.ones(n, dtype=int)))
    assert sorted(info.value.cycle) == list(range(n))


@given(kind=st.sampled_from(STANDARD_KINDS), n=st.integers(1, 12))
def test_laplacian_rows_sum_to_zero(kind, n):
    t = standard_topology(kind, n)
    np.testing.assert_array_equal(laplacian(t).sum(axis=1), 0)
    assert is_dag(t)
    assert topological_order(t) == tuple(range(n))
