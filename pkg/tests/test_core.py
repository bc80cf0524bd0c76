import numpy as np
import pytest

from rigidalign import (
    InvalidMatchingError,
    Matching,
    RigidGraph,
    RigidTransform,
    edge_overlap,
    node_overlap,
    overlap_fraction,
)

from conftest import permute_graph, random_graph


def dense_overlap(a, b, m):
    """Independent oracle: inner product of A with X B X^T on dense matrices."""
    A = a.adjacency().toarray()
    B = b.adjacency().toarray()
    X = np.zeros((a.n, b.n))
    for i, j in m:
        X[i, j] = 1.0
    return int(round((A * (X @ B @ X.T)).sum()))


def triangle():
    return RigidGraph(np.eye(3), [[0, 1], [1, 2], [0, 2]])


class TestEdgeOverlap:
    def test_triangle_identity(self):
        g = triangle()
        assert edge_overlap(g, g, Matching.identity(3)) == 6

    def test_path_reversal(self):
        g = RigidGraph(np.arange(9, dtype=float).reshape(3, 3), [[0, 1], [1, 2]])
        m = Matching([[0, 2], [1, 1], [2, 0]])
        assert edge_overlap(g, g, m) == 4

    def test_permuted_copy_one_edge_deleted_matches_oracle(self, rng):
        g = random_graph(rng, 5, p=0.6)
        perm = rng.permutation(5)
        h, truth = permute_graph(g, perm)
        edges = h.edges[1:]  # drop one edge
        h2 = RigidGraph(h.coords, edges)
        got = edge_overlap(g, h2, truth)
        assert got == dense_overlap(g, h2, truth)

    def test_identity_self_overlap_is_twice_edge_count(self, rng):
        for n in (4, 7, 12):
            g = random_graph(rng, n, p=0.4)
            assert edge_overlap(g, g, Matching.identity(n)) == 2 * g.num_edges

    def test_matches_dense_oracle_exhaustively(self, rng):
        for _ in range(40):
            n_a = int(rng.integers(2, 9))
            n_b = int(rng.integers(2, 9))
            a = random_graph(rng, n_a, p=0.5)
            b = random_graph(rng, n_b, p=0.5)
            size = int(rng.integers(0, min(n_a, n_b) + 1))
            i_idx = rng.choice(n_a, size=size, replace=False)
            j_idx = rng.choice(n_b, size=size, replace=False)
            m = Matching(np.column_stack([i_idx, j_idx]))
            assert edge_overlap(a, b, m) == dense_overlap(a, b, m)

    def test_relabeling_invariance(self, rng):
        a = random_graph(rng, 8, p=0.5)
        b = random_graph(rng, 8, p=0.5)
        m = Matching(np.column_stack([np.arange(8), rng.permutation(8)]))
        base = edge_overlap(a, b, m)
        pa = rng.permutation(8)
        pb = rng.permutation(8)
        a2, _ = permute_graph(a, pa)
        b2, _ = permute_graph(b, pb)
        m2 = Matching(np.column_stack([pa[m.pairs[:, 0]], pb[m.pairs[:, 1]]]))
        assert edge_overlap(a2, b2, m2) == base

    def test_unmatched_nodes_contribute_nothing(self):
        g = triangle()
        m = Matching([[0, 0], [1, 1]])  # node 2 unmatched
        assert edge_overlap(g, g, m) == 2

    def test_out_of_range_matching_raises(self):
        g = triangle()
        with pytest.raises(InvalidMatchingError):
            edge_overlap(g, g, Matching([[0, 5]]))

    def test_overlap_fraction_normalization(self):
        g = triangle()
        assert overlap_fraction(g, g, Matching.identity(3)) == 1.0
        assert overlap_fraction(g, g, Matching([[0, 0], [1, 1]])) == pytest.approx(2 / 6)


class TestNodeOverlap:
    def test_exact_match(self):
        truth = Matching(np.column_stack([np.arange(10), np.arange(10)]))
        assert node_overlap(truth, truth) == 1.0

    def test_full_derangement(self):
        n = 10
        truth = Matching(np.column_stack([np.arange(n), np.arange(n)]))
        m = Matching(np.column_stack([np.arange(n), (np.arange(n) + 1) % n]))
        assert node_overlap(m, truth) == 0.0

    def test_half_correct(self):
        n = 10
        perm = np.arange(n)
        truth = Matching(np.column_stack([np.arange(n), perm]))
        wrong = perm.copy()
        # swap five disjoint pairs of targets on nodes 0..4 vs 5..9
        for k in range(5):
            wrong[k], wrong[k + 5] = wrong[k + 5], wrong[k]
        m = Matching(np.column_stack([np.arange(n), wrong]))
        assert node_overlap(m, truth) == 0.0
        half = perm.copy()
        half[0], half[1] = half[1], half[0]
        half[2], half[3] = half[3], half[2]
        half[4], half[5] = half[5], half[4]  # 6 wrong, 4 right
        m2 = Matching(np.column_stack([np.arange(n), half]))
        assert node_overlap(m2, truth) == pytest.approx(0.4)
        partial = Matching(np.column_stack([np.arange(5), perm[:5]]))
        assert node_overlap(partial, truth) == pytest.approx(0.5)


class TestRigidGraph:
    def test_edges_canonicalized_and_sorted(self):
        g = RigidGraph(np.zeros((4, 2)), [[3, 1], [0, 2], [2, 1]])
        assert g.edges.tolist() == [[0, 2], [1, 2], [1, 3]]

    def test_rejects_self_loop(self):
        with pytest.raises(ValueError, match="self-loop"):
            RigidGraph(np.zeros((3, 2)), [[1, 1]])

    def test_rejects_duplicate_edge(self):
        with pytest.raises(ValueError, match="duplicate"):
            RigidGraph(np.zeros((3, 2)), [[0, 1], [1, 0]])

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError, match="out of range"):
            RigidGraph(np.zeros((3, 2)), [[0, 3]])

    def test_rejects_nonfinite_coords(self):
        with pytest.raises(ValueError, match="finite"):
            RigidGraph([[0.0, np.nan]], [])

    def test_coords_immutable(self):
        g = RigidGraph(np.zeros((3, 2)), [[0, 1]])
        with pytest.raises(ValueError):
            g.coords[0, 0] = 1.0

    def test_with_coords_shares_edges(self, rng):
        g = random_graph(rng, 6)
        h = g.with_coords(g.coords + 1.0)
        assert h.edges is g.edges
        assert np.allclose(h.coords, g.coords + 1.0)


class TestMatching:
    def test_rejects_repeated_left(self):
        with pytest.raises(ValueError, match="left"):
            Matching([[0, 1], [0, 2]])

    def test_rejects_repeated_right(self):
        with pytest.raises(ValueError, match="right"):
            Matching([[0, 1], [2, 1]])

    def test_sorted_by_left_index(self):
        m = Matching([[2, 0], [0, 2], [1, 1]])
        assert m.pairs[:, 0].tolist() == [0, 1, 2]

    def test_to_map(self):
        m = Matching([[0, 3], [2, 1]])
        assert m.to_map(4).tolist() == [3, -1, 1, -1]


class TestRigidTransform:
    def test_rejects_non_orthogonal(self):
        with pytest.raises(ValueError, match="orthogonal"):
            RigidTransform(np.array([[1.0, 0.1], [0.0, 1.0]]), np.zeros(2))

    def test_rejects_reflection(self):
        with pytest.raises(ValueError, match="proper"):
            RigidTransform(np.diag([1.0, -1.0]), np.zeros(2))

    def test_compose_matches_sequential_application(self, rng):
        from conftest import random_rotation
        t1 = RigidTransform(random_rotation(rng), rng.standard_normal(3))
        t2 = RigidTransform(random_rotation(rng), rng.standard_normal(3))
        pts = rng.standard_normal((20, 3))
        assert np.allclose(t1.compose(t2).apply(pts), t2.apply(t1.apply(pts)), atol=1e-12)

    def test_inverse_round_trip(self, rng):
        from conftest import random_rotation
        t = RigidTransform(random_rotation(rng), rng.standard_normal(3))
        pts = rng.standard_normal((10, 3))
        assert np.allclose(t.inverse().apply(t.apply(pts)), pts, atol=1e-12)

    def test_homogeneous_block_layout(self):
        t = RigidTransform(np.eye(2), np.array([1.0, 2.0]))
        h = t.homogeneous()
        assert h.shape == (3, 3)
        assert h[2].tolist() == [1.0, 2.0, 1.0]
        assert h[:2, 2].tolist() == [0.0, 0.0]
