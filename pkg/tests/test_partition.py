"""Isolation mechanisms: sampling, tree growth, cell assignment."""

import numpy as np
import pytest

from isokernel.dataset import Dataset, LabeledPoint, SparseVector, sq_distance
from isokernel.errors import SampleError
from isokernel.partition import ITree, VoronoiPartition, sample_psi

from helpers import rand_dataset, rand_sparse


def walk_tree(tree, x_dense):
    """Independent re-descent: follows the stored arrays with its own loop."""
    node = 0
    while tree.feature[node] >= 0:
        attr = tree.feature[node]
        v = x_dense[attr] if attr < len(x_dense) else 0.0
        node = tree.left[node] if v < tree.threshold[node] else tree.right[node]
    return int(tree.leaf_id[node])


class TestSamplePsi:
    def test_exhaustive_sample_is_permutation(self):
        rng = np.random.default_rng(0)
        ds = rand_dataset(rng, 12, 5)
        sample = sample_psi(ds, 12, np.random.default_rng(1))
        keys = sorted(tuple(p.indices.tolist() + p.values.tolist()) for p in sample)
        orig = sorted(
            tuple(p.x.indices.tolist() + p.x.values.tolist()) for p in ds
        )
        assert keys == orig

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(0)
        ds = rand_dataset(rng, 30, 5)
        s1 = sample_psi(ds, 7, np.random.default_rng(42))
        s2 = sample_psi(ds, 7, np.random.default_rng(42))
        assert all(a == b for a, b in zip(s1, s2))

    def test_uniform_without_replacement_frequencies(self):
        # psi=2 from 4 points: each point selected with probability 1/2;
        # 3-sigma binomial band around 0.5 over 10^4 draws
        points = [
            LabeledPoint(SparseVector([1], [float(i + 1)], 1), 1)
            for i in range(4)
        ]
        ds = Dataset(points, dim=1)
        rng = np.random.default_rng(7)
        n_draws = 10_000
        counts = np.zeros(4)
        for _ in range(n_draws):
            for p in sample_psi(ds, 2, rng):
                counts[int(p.values[0]) - 1] += 1
        freq = counts / n_draws
        sigma = np.sqrt(0.5 * 0.5 / n_draws)
        assert np.all(np.abs(freq - 0.5) <= 3 * sigma)

    def test_oversample_rejected(self):
        rng = np.random.default_rng(0)
        ds = rand_dataset(rng, 5, 3)
        with pytest.raises(SampleError):
            sample_psi(ds, 6, np.random.default_rng(0))


class TestITree:
    def test_single_point_single_leaf(self):
        rng = np.random.default_rng(0)
        sample = [rand_sparse(rng, 6)]
        tree = ITree.build(sample, np.random.default_rng(1))
        assert tree.n_cells == 1
        for _ in range(10):
            assert tree.assign(rand_sparse(rng, 6)) == 0

    def test_two_points_forced_split(self):
        a = SparseVector([1], [1.0], 2)
        b = SparseVector([1, 2], [1.0, 5.0], 2)  # differ only on attribute 2
        tree = ITree.build([a, b], np.random.default_rng(3))
        assert tree.n_cells == 2
        assert tree.feature[0] == 1  # 0-based: attribute 2
        assert tree.assign(a) != tree.assign(b)

    def test_full_isolation_of_distinct_points(self):
        rng = np.random.default_rng(5)
        sample = [rand_sparse(rng, 8, density=0.9) for _ in range(64)]
        tree = ITree.build(sample, np.random.default_rng(6))
        assert tree.n_cells == 64
        ids = {tree.assign(p) for p in sample}
        assert len(ids) == 64
        assert ids == set(range(64))

    def test_split_values_strictly_inside_node_ranges(self):
        rng = np.random.default_rng(11)
        sample = [rand_sparse(rng, 5, density=1.0) for _ in range(32)]
        tree = ITree.build(sample, np.random.default_rng(12))
        S = np.stack([p.densify(5) for p in sample])

        def check(node, rows):
            if tree.feature[node] < 0:
                return
            attr = tree.feature[node]
            split = tree.threshold[node]
            vals = S[rows, attr]
            assert vals.min() < split < vals.max()
            go_left = vals < split
            check(tree.left[node], rows[go_left])
            check(tree.right[node], rows[~go_left])

        check(0, np.arange(32))

    def test_duplicates_share_a_leaf_with_dense_ids(self):
        v = SparseVector([1], [2.0], 3)
        w = SparseVector([2], [1.0], 3)
        tree = ITree.build([v, v, w], np.random.default_rng(0))
        assert tree.n_cells == 2
        assert tree.assign(v) == tree.assign(v)
        assert tree.assign(v) != tree.assign(w)
        assert set(tree.leaf_id[tree.leaf_id >= 0]) == {0, 1}

    def test_assign_total_even_far_outside(self):
        rng = np.random.default_rng(21)
        sample = [rand_sparse(rng, 4, density=1.0) for _ in range(16)]
        tree = ITree.build(sample, np.random.default_rng(22))
        far = SparseVector([1, 2, 3, 4], [1e9, -1e9, 1e9, -1e9], 4)
        assert 0 <= tree.assign(far) < tree.n_cells

    def test_assign_matches_independent_walk(self):
        rng = np.random.default_rng(31)
        sample = [rand_sparse(rng, 6, density=0.8) for _ in range(40)]
        tree = ITree.build(sample, np.random.default_rng(32))
        for _ in range(1000):
            x = rand_sparse(rng, 6, density=rng.uniform(0.1, 1.0))
            assert tree.assign(x) == walk_tree(tree, x.densify(6))

    def test_batch_assign_matches_pointwise(self):
        rng = np.random.default_rng(41)
        sample = [rand_sparse(rng, 7, density=0.9) for _ in range(30)]
        tree = ITree.build(sample, np.random.default_rng(42))
        queries = [rand_sparse(rng, 7, density=0.5) for _ in range(200)]
        X = np.stack([q.densify(7) for q in queries])
        batch = tree.assign_many(X)
        point = np.array([tree.assign(q) for q in queries])
        assert np.array_equal(batch, point)

    def test_state_round_trip(self):
        rng = np.random.default_rng(51)
        sample = [rand_sparse(rng, 5) for _ in range(20)]
        tree = ITree.build(sample, np.random.default_rng(52))
        clone = ITree.from_state(tree.state())
        for key, arr in tree.state().items():
            assert np.array_equal(arr, clone.state()[key])


class TestVoronoi:
    def test_center_maps_to_itself(self):
        rng = np.random.default_rng(1)
        centers = [rand_sparse(rng, 5, density=1.0) for _ in range(12)]
        part = VoronoiPartition.build(centers)
        for k, z in enumerate(centers):
            assert part.assign(z) == k

    def test_tie_breaks_to_lowest_index(self):
        # centers 2 and 5 equidistant from the query (exact in floats)
        centers = [
            SparseVector([1], [10.0], 2),
            SparseVector([1], [-10.0], 2),
            SparseVector([1, 2], [2.0, 1.0], 2),
            SparseVector([2], [8.0], 2),
            SparseVector([2], [-8.0], 2),
            SparseVector([1, 2], [2.0, -1.0], 2),
        ]
        x = SparseVector([1], [2.0], 2)  # distance 1 to centers 2 and 5
        part = VoronoiPartition.build(centers)
        assert part.assign(x) == 2

    def test_matches_brute_force_distance_scan(self):
        rng = np.random.default_rng(9)
        centers = [rand_sparse(rng, 6, density=0.8) for _ in range(32)]
        part = VoronoiPartition.build(centers)
        for _ in range(1000):
            x = rand_sparse(rng, 6, density=rng.uniform(0.1, 1.0))
            dists = [sq_distance(x, z) for z in centers]
            assert part.assign(x) == int(np.argmin(dists))

    def test_three_term_expansion_matches_sq_distance(self):
        rng = np.random.default_rng(19)
        centers = [rand_sparse(rng, 8, density=0.7) for _ in range(16)]
        part = VoronoiPartition.build(centers)
        for _ in range(50):
            x = rand_sparse(rng, 8, density=0.5)
            expanded = part.cell_distances(x)
            direct = np.array([sq_distance(x, z) for z in centers])
            scale = np.maximum(direct, 1.0)
            assert np.all(np.abs(expanded - direct) / scale <= 1e-9)

    def test_batch_assign_matches_pointwise(self):
        rng = np.random.default_rng(29)
        centers = [rand_sparse(rng, 5, density=0.9) for _ in range(20)]
        part = VoronoiPartition.build(centers)
        queries = [rand_sparse(rng, 5, density=0.6) for _ in range(300)]
        X = np.stack([q.densify(5) for q in queries])
        batch = part.assign_many(X)
        point = np.array([part.assign(q) for q in queries])
        assert np.array_equal(batch, point)

    def test_totality(self):
        rng = np.random.default_rng(39)
        centers = [rand_sparse(rng, 4) for _ in range(8)]
        part = VoronoiPartition.build(centers)
        for scale in (1.0, 1e6, 1e-6):
            x = rand_sparse(rng, 4, density=1.0, scale=scale)
            assert 0 <= part.assign(x) < part.n_cells

    def test_distinct_points_get_distinct_cells(self):
        rng = np.random.default_rng(49)
        centers = [rand_sparse(rng, 6, density=1.0) for _ in range(24)]
        part = VoronoiPartition.build(centers)
        ids = {part.assign(z) for z in centers}
        assert len(ids) == 24

    def test_state_round_trip(self):
        rng = np.random.default_rng(59)
        centers = [rand_sparse(rng, 5, density=0.4) for _ in range(10)]
        part = VoronoiPartition.build(centers)
        clone = VoronoiPartition.from_state(part.state())
        assert clone.n_cells == part.n_cells
        for _ in range(50):
            x = rand_sparse(rng, 5)
            assert part.assign(x) == clone.assign(x)
