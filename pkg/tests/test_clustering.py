import numpy as np
import pytest

from partmap import (
    InvalidInputError,
    PointSet,
    closest_cluster,
    clusters_to_nodes,
    kmeans_fit,
    kmeanspp_seed,
    lloyd,
)


def two_blobs():
    return np.array([[0.0, 0.0], [0.1, 0.0], [10.0, 0.0], [10.1, 0.0]])


class TestSeeding:
    def test_k_equals_points(self):
        pts = np.array([[0.0, 0], [1, 0], [2, 0]])
        centers = kmeanspp_seed(pts, 3, rng_seed=4)
        assert sorted(map(tuple, centers)) == sorted(map(tuple, pts))

    def test_k_one_is_a_point(self):
        pts = np.array([[0.0, 1], [2, 3], [4, 5]])
        center = kmeanspp_seed(pts, 1, rng_seed=0)[0]
        assert any((center == p).all() for p in pts)

    def test_k_above_distinct_rejected(self):
        pts = np.array([[1.0, 1], [1, 1], [2, 2]])
        with pytest.raises(InvalidInputError):
            kmeanspp_seed(pts, 3, rng_seed=0)

    def test_separated_pairs_get_one_seed_each(self):
        # separation/spread = 100, so the second seed lands in the other
        # pair with probability 2*100^2 / (2*100^2 + 0.1^2) > 0.999999;
        # over 200 fixed seeds every draw picks one seed per blob.
        pts = two_blobs()
        for seed in range(200):
            centers = kmeanspp_seed(pts, 2, rng_seed=seed)
            sides = {int(c[0] > 5) for c in centers}
            assert sides == {0, 1}


class TestLloyd:
    def test_inertia_never_increases(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            pts = rng.standard_normal((40, 3))
            seeds = kmeanspp_seed(pts, 4, rng_seed=int(rng.integers(1000)))
            _, _, _, history = lloyd(pts, seeds)
            diffs = np.diff(history)
            assert (diffs <= 1e-9).all()

    def test_empty_cluster_repair(self):
        pts = np.array([[0.0], [1.0], [10.0]])
        # duplicate initial centers: one would stay empty without repair
        labels, centers, inertia, _ = lloyd(pts, np.array([[0.0], [0.0], [10.0]]))
        assert set(labels.tolist()) == {0, 1, 2}

    def test_convergence_state(self):
        pts = two_blobs()
        labels, centers, inertia, _ = lloyd(pts, np.array([[0.0, 0.0], [9.0, 0.0]]))
        for c in range(2):
            assert centers[c] == pytest.approx(pts[labels == c].mean(axis=0))


class TestKMeansFit:
    def test_two_blob_exact_centers(self):
        cl = kmeans_fit(two_blobs(), 2, rng_seed=0)
        got = sorted(map(tuple, cl.centers))
        assert got[0] == pytest.approx((0.05, 0.0), abs=1e-15)
        assert got[1] == pytest.approx((10.05, 0.0), abs=1e-15)

    def test_identical_points_zero_inertia(self):
        pts = np.tile([[3.0, 4.0]], (7, 1))
        cl = kmeans_fit(pts, 1, rng_seed=1)
        assert cl.inertia == 0.0

    def test_best_of_restarts(self):
        rng = np.random.default_rng(2)
        pts = rng.standard_normal((60, 2))
        best = kmeans_fit(pts, 5, rng_seed=10, restarts=8)
        singles = [kmeans_fit(pts, 5, rng_seed=10 + r, restarts=1) for r in range(8)]
        assert best.inertia <= min(s.inertia for s in singles) + 1e-12

    def test_fixed_seed_bitwise_reproducible(self):
        rng = np.random.default_rng(3)
        pts = rng.standard_normal((50, 4))
        a = kmeans_fit(pts, 4, rng_seed=7)
        b = kmeans_fit(pts, 4, rng_seed=7)
        assert (a.labels == b.labels).all()
        assert (a.centers == b.centers).all()
        assert a.inertia == b.inertia

    def test_coord_centers_from_coords(self):
        rng = np.random.default_rng(4)
        emb = rng.standard_normal((30, 6))
        coords = rng.standard_normal((30, 3))
        cl = kmeans_fit(emb, 3, rng_seed=0, coords=coords)
        for c in range(3):
            assert cl.coord_centers[c] == pytest.approx(
                coords[cl.labels == c].mean(axis=0)
            )


class TestClustersToNodes:
    def test_pairwise_mean(self):
        ps = PointSet(
            coords=np.array([[0.0, 0, 0], [1, 0, 0]]),
            embeddings=np.array([[1.0, 0], [0, 1]]),
        )
        cl = kmeans_fit(ps.embeddings, 1, rng_seed=0, coords=ps.coords)
        nodes, centroid = clusters_to_nodes(ps, cl)
        assert nodes[0].embedding == pytest.approx([0.5, 0.5])
        assert centroid == pytest.approx([0.5, 0.0, 0.0])

    def test_single_point_cluster(self):
        ps = PointSet(
            coords=np.array([[1.0, 2, 3], [4, 5, 6]]),
            embeddings=np.array([[1.0, 0], [0, 1]]),
        )
        cl = kmeans_fit(ps.embeddings, 2, rng_seed=0, coords=ps.coords)
        nodes, _ = clusters_to_nodes(ps, cl)
        for node in nodes:
            member = int(np.flatnonzero(cl.labels == node.id)[0])
            assert (node.embedding == ps.embeddings[member]).all()
            assert (node.coords == ps.coords[member]).all()

    def test_eight_clusters_shapes(self):
        rng = np.random.default_rng(5)
        ps = PointSet(
            coords=rng.standard_normal((200, 3)),
            embeddings=rng.standard_normal((200, 16)),
        )
        cl = kmeans_fit(ps.embeddings, 8, rng_seed=0, coords=ps.coords)
        nodes, centroid = clusters_to_nodes(ps, cl)
        assert len(nodes) == 8
        assert centroid == pytest.approx(ps.coords.mean(axis=0))

    def test_node_embedding_is_member_mean(self):
        rng = np.random.default_rng(6)
        ps = PointSet(
            coords=rng.standard_normal((50, 3)),
            embeddings=rng.standard_normal((50, 8)),
        )
        cl = kmeans_fit(ps.embeddings, 4, rng_seed=0, coords=ps.coords)
        nodes, _ = clusters_to_nodes(ps, cl)
        for node in nodes:
            mean = ps.embeddings[cl.labels == node.id].mean(axis=0)
            assert np.abs(node.embedding - mean).max() < 1e-12
            assert (node.embedding == cl.centers[node.id]).all()


class TestClosestCluster:
    def test_nearest(self):
        assert closest_cluster((0, 0), [(1, 0), (5, 0)]) == 0

    def test_tie_lowest_index(self):
        assert closest_cluster((3, 0), [(1, 0), (5, 0)]) == 0

    def test_exact_center(self):
        assert closest_cluster((5, 0), [(1, 0), (5, 0)]) == 1


class TestPointSet:
    def test_length_mismatch(self):
        with pytest.raises(InvalidInputError):
            PointSet(coords=np.zeros((3, 3)), embeddings=np.zeros((2, 4)))

    def test_empty(self):
        with pytest.raises(InvalidInputError):
            PointSet(coords=np.zeros((0, 3)), embeddings=np.zeros((0, 4)))
