"""Tests for graph containers, permutations, padding, and propagation.

The propagation matrix is checked against the four closed-form corner
cases and hand-evaluated small graphs; permutation handling is checked
for bijectivity, inverses, and uniformity.
"""

import numpy as np
import pytest

from pinet.errors import DomainError, ShapeError
from pinet.graph import (
    Batch,
    LabeledGraph,
    Permutation,
    degree_matrix,
    graph_from_edges,
    make_batch,
    pad_graph,
    permute_graph,
    propagation_matrix,
    random_permutation,
)
from pinet.tensor import Mat


def _triangle():
    return graph_from_edges(3, [(0, 1), (1, 2), (0, 2)])


def _path3():
    return graph_from_edges(3, [(0, 1), (1, 2)])


# -- LabeledGraph validation --------------------------------------------------

def test_graph_from_edges_defaults():
    g = _triangle()
    assert g.n == 3 and g.n_real == 3 and g.d == 1
    np.testing.assert_array_equal(g.features.data, np.ones((3, 1)))
    np.testing.assert_array_equal(g.node_mask, [True, True, True])


def test_graph_requires_symmetry():
    a = np.zeros((2, 2))
    a[0, 1] = 1.0
    with pytest.raises(DomainError):
        LabeledGraph(2, Mat(a), Mat(np.ones((2, 1))), 0)


def test_graph_rejects_self_loops():
    a = np.eye(2)
    with pytest.raises(DomainError):
        LabeledGraph(2, Mat(a), Mat(np.ones((2, 1))), 0)
    with pytest.raises(DomainError):
        graph_from_edges(2, [(0, 0)])


def test_graph_rejects_nonbinary_entries():
    a = np.array([[0.0, 0.5], [0.5, 0.0]])
    with pytest.raises(DomainError):
        LabeledGraph(2, Mat(a), Mat(np.ones((2, 1))), 0)


def test_graph_rejects_nonzero_padding():
    a = np.zeros((3, 3))
    a[0, 2] = a[2, 0] = 1.0  # touches the padded node
    x = np.ones((3, 1))
    x[2, 0] = 0.0
    with pytest.raises(DomainError):
        LabeledGraph(2, Mat(a), Mat(x), 0)


def test_graph_rejects_out_of_range_edges():
    with pytest.raises(DomainError):
        graph_from_edges(3, [(0, 5)])


def test_graph_square_check():
    with pytest.raises(ShapeError):
        LabeledGraph(2, Mat(np.zeros((2, 3))), Mat(np.ones((2, 1))), 0)


# -- degree matrix ------------------------------------------------------------

def test_degree_triangle():
    np.testing.assert_array_equal(
        degree_matrix(_triangle().adjacency).data, np.diag([2.0, 2.0, 2.0])
    )


def test_degree_path():
    np.testing.assert_array_equal(
        degree_matrix(_path3().adjacency).data, np.diag([1.0, 2.0, 1.0])
    )


def test_degree_padded_zero_rows():
    g = pad_graph(_triangle(), 5)
    np.testing.assert_array_equal(
        degree_matrix(g.adjacency).data, np.diag([2.0, 2.0, 2.0, 0.0, 0.0])
    )


# -- propagation matrix -------------------------------------------------------

def _random_simple_adjacency(rng, n, min_degree=1):
    while True:
        a = np.triu((rng.random((n, n)) < 0.5).astype(float), 1)
        a = a + a.T
        if a.sum(axis=1).min() >= min_degree:
            return a


def test_propagation_corner_adjacency():
    a = _random_simple_adjacency(np.random.default_rng(0), 6)
    out = propagation_matrix(Mat(a), 1.0, 0.0)
    assert (out.data == a).all()  # exact, not approximate


def test_propagation_corner_adjacency_with_self_loops():
    a = _random_simple_adjacency(np.random.default_rng(1), 6)
    out = propagation_matrix(Mat(a), 1.0, 1.0)
    assert (out.data == a + np.eye(6)).all()


def test_propagation_corner_symmetric_normalized():
    a = _random_simple_adjacency(np.random.default_rng(2), 6)
    dis = np.diag(1.0 / np.sqrt(a.sum(axis=1)))
    out = propagation_matrix(Mat(a), 0.0, 0.0)
    np.testing.assert_allclose(out.data, dis @ a @ dis, atol=1e-12)


def test_propagation_k3_halves():
    # triangle degrees are all 2, so D^{-1/2} A D^{-1/2} = A / 2
    a = _triangle().adjacency
    out = propagation_matrix(a, 0.0, 0.0)
    np.testing.assert_allclose(out.data, a.data / 2.0, atol=1e-15)


def test_propagation_interior_point_hand_value():
    # single edge, p=q=0.5: mixing matrix is (0.5 + 0.5 d) I = I,
    # so the result is simply A + 0.5 I
    a = Mat(np.array([[0.0, 1.0], [1.0, 0.0]]))
    out = propagation_matrix(a, 0.5, 0.5)
    np.testing.assert_allclose(out.data, a.data + 0.5 * np.eye(2), atol=1e-15)


def test_propagation_padding_never_couples_to_real_nodes():
    g = pad_graph(_triangle(), 5)
    out = propagation_matrix(g.adjacency, 0.3, 0.7).data
    # the q-diagonal survives on padded nodes (their mixing weight is p,
    # not zero), but they never exchange mass with real nodes, and the
    # zero feature rows of padded nodes keep the towers unaffected
    assert (out[3:, :3] == 0.0).all() and (out[:3, 3:] == 0.0).all()
    zero_q = propagation_matrix(g.adjacency, 0.3, 0.0).data
    assert (zero_q[3:, :] == 0.0).all() and (zero_q[:, 3:] == 0.0).all()


def test_propagation_domain_checks():
    a = _triangle().adjacency
    for bad in (-0.1, 1.5):
        with pytest.raises(DomainError):
            propagation_matrix(a, bad, 0.0)
        with pytest.raises(DomainError):
            propagation_matrix(a, 0.0, bad)


def test_propagation_accepts_tracked_scalars():
    from pinet.tensor import Tape, backward, sum_all

    a = _triangle().adjacency
    tape = Tape()
    p = tape.leaf(Mat.scalar(0.5), "p")
    q = tape.leaf(Mat.scalar(0.5), "q")
    out = propagation_matrix(a, p, q)
    grads = backward(tape, sum_all(out))
    assert "p" in grads and "q" in grads
    assert np.isfinite(grads["p"].data).all()


# -- permutations -------------------------------------------------------------

def test_permutation_identity():
    g = _path3()
    out = permute_graph(g, Permutation((0, 1, 2)))
    np.testing.assert_array_equal(out.adjacency.data, g.adjacency.data)
    np.testing.assert_array_equal(out.features.data, g.features.data)


def test_permutation_inverse_round_trip():
    rng = np.random.default_rng(3)
    a = _random_simple_adjacency(rng, 7)
    g = LabeledGraph(7, Mat(a), Mat(rng.random((7, 1))), 1)
    perm = random_permutation(7, 4)
    back = permute_graph(permute_graph(g, perm), perm.inverse())
    np.testing.assert_array_equal(back.adjacency.data, g.adjacency.data)
    np.testing.assert_array_equal(back.features.data, g.features.data)


def test_permutation_path_swap_ends():
    # swapping the endpoints of a 3-path relabels the edges but keeps
    # the same edge set and degree sequence
    g = _path3()
    out = permute_graph(g, Permutation((2, 1, 0)))
    np.testing.assert_array_equal(out.adjacency.data, g.adjacency.data)
    assert sorted(out.adjacency.data.sum(axis=1)) == [1.0, 1.0, 2.0]


def test_permutation_definition():
    # new index perm[i] receives old node i
    g = graph_from_edges(3, [(0, 1)])
    perm = Permutation((1, 2, 0))
    out = permute_graph(g, perm)
    inv = perm.inverse().mapping
    expect = g.adjacency.data[np.ix_(inv, inv)]
    np.testing.assert_array_equal(out.adjacency.data, expect)
    assert out.adjacency.data[1, 2] == 1.0  # the edge moved to (1, 2)


def test_permutation_matrix_action():
    g = _path3()
    perm = Permutation((2, 0, 1))
    pm = perm.matrix().data
    out = permute_graph(g, perm)
    np.testing.assert_allclose(out.adjacency.data, pm @ g.adjacency.data @ pm.T)


def test_permutation_rejects_non_bijection():
    with pytest.raises(DomainError):
        Permutation((0, 0, 1))


def test_random_permutation_n1():
    assert tuple(random_permutation(1, 0).mapping) == (0,)


def test_random_permutation_deterministic():
    assert tuple(random_permutation(8, 42).mapping) == tuple(random_permutation(8, 42).mapping)


def test_random_permutation_uniform():
    counts = {}
    for s in range(10_000):
        key = tuple(random_permutation(3, s).mapping)
        counts[key] = counts.get(key, 0) + 1
    assert len(counts) == 6
    for freq in counts.values():
        assert abs(freq / 10_000 - 1 / 6) < 0.02


def test_permute_size_mismatch():
    with pytest.raises(ShapeError):
        permute_graph(_path3(), Permutation((1, 0)))


# -- padding ------------------------------------------------------------------

def test_pad_to_current_size_unchanged():
    g = _triangle()
    out = pad_graph(g, 3)
    np.testing.assert_array_equal(out.adjacency.data, g.adjacency.data)


def test_pad_triangle_to_five():
    g = pad_graph(_triangle(), 5)
    assert g.n == 5 and g.n_real == 3
    np.testing.assert_array_equal(g.adjacency.data[:3, :3], _triangle().adjacency.data)
    assert (g.adjacency.data[3:, :] == 0).all()
    assert (g.features.data[3:, :] == 0).all()
    np.testing.assert_array_equal(g.node_mask, [True, True, True, False, False])


def test_pad_below_size_rejected():
    with pytest.raises(DomainError):
        pad_graph(pad_graph(_triangle(), 5), 4)


# -- batching -----------------------------------------------------------------

def test_batch_single_graph_one_hot():
    b = make_batch([_triangle()], class_count=2)
    np.testing.assert_array_equal(b.labels.data, [[1.0, 0.0]])


def test_batch_two_graphs_labels():
    g1 = graph_from_edges(3, [(0, 1)], label=1)
    g0 = graph_from_edges(3, [(0, 1)], label=0)
    b = make_batch([g1, g0], class_count=2)
    np.testing.assert_array_equal(b.labels.data, [[0.0, 1.0], [1.0, 0.0]])


def test_batch_mask_of_padded_graph():
    b = make_batch([pad_graph(_triangle(), 5)], class_count=2)
    np.testing.assert_array_equal(b.masks[0], [True, True, True, False, False])


def test_batch_requires_shared_size():
    with pytest.raises(ShapeError):
        make_batch([_triangle(), pad_graph(_triangle(), 5)], class_count=2)


def test_batch_label_range_checked():
    g = graph_from_edges(3, [(0, 1)], label=5)
    with pytest.raises(DomainError):
        make_batch([g], class_count=2)


def test_batch_rejects_empty():
    with pytest.raises(DomainError):
        make_batch([], class_count=2)
