import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dstok.core import Codebook, FeatureMatrix
from dstok.errors import DimMismatch, TooFewPoints
from dstok.quantize import (
    CHUNK_FRAMES,
    KMeansConfig,
    SplitMix64,
    inertia,
    kmeans_assign,
    kmeans_fit,
    kmeans_train,
)

from oracles import best_partition_cost, linear_scan_nearest, lloyd_local_optima


def fm(rows, utt="u", shift="1/50"):
    arr = np.asarray(rows, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    return FeatureMatrix(utt, shift, arr)


def test_splitmix64_reference_vectors():
    r = SplitMix64(1234567)
    assert [r.next_u64() for _ in range(3)] == [
        6457827717110365317, 3203168211198807973, 9817491932198370423,
    ]
    assert SplitMix64(0).next_u64() == 0xE220A8397B1DCDAF


def test_two_exact_clusters():
    cb = kmeans_train(fm([0, 0, 10, 10]), KMeansConfig(k=2))
    assert sorted(cb.centroids.ravel()) == [0.0, 10.0]
    assert cb.final_inertia == 0.0


def test_three_points_two_clusters():
    pts = [[0.0], [1.0], [9.0]]
    # frozen from the exhaustive 2-partition oracle
    assert best_partition_cost(pts, 2) == 0.5
    for seed in range(10):
        cb = kmeans_train(fm(pts), KMeansConfig(k=2, seed=seed))
        assert sorted(cb.centroids.ravel()) == [0.5, 9.0]
        assert cb.final_inertia == 0.5


def test_random_instance_hits_a_local_optimum():
    rng = np.random.default_rng(7)
    pts = fm(rng.normal(size=(8, 2))).values.astype(np.float64)
    optima = lloyd_local_optima(pts.tolist(), 3)
    res = kmeans_fit(fm(pts), KMeansConfig(k=3, seed=11, max_iters=1000, rel_tol=0.0))
    assert any(abs(res.codebook.final_inertia - o) <= 1e-9 * max(1.0, o) for o in optima)


def test_assign_examples():
    cb = Codebook([[0.5], [9.0]])
    assert kmeans_assign(fm([0.5]), cb).stream(0).tolist() == [0]
    assert kmeans_assign(fm([4.0]), cb).stream(0).tolist() == [0]
    # equidistant between centroids 2 and 5
    cb6 = Codebook([[100.0], [-100.0], [3.0], [50.0], [-50.0], [7.0]])
    assert kmeans_assign(fm([5.0]), cb6).stream(0).tolist() == [2]


def test_assign_stream_metadata():
    cb = Codebook([[0.0], [1.0], [2.0]])
    ts = kmeans_assign(fm([0.1, 1.9], shift="1/50"), cb)
    assert ts.frame_rate_hz == 50
    assert ts.vocab_sizes == (3,)


def test_inertia_examples():
    cb = Codebook([[0.5], [9.0]])
    assert inertia(fm([0.5, 9.0]), cb) == 0.0
    assert inertia(fm([0, 1, 9]), cb) == 0.5
    assert inertia(FeatureMatrix("u", "1/50", np.zeros((0, 1))), cb) == 0.0


def test_errors():
    with pytest.raises(TooFewPoints):
        kmeans_train(fm([0, 1]), KMeansConfig(k=3))
    with pytest.raises(DimMismatch):
        kmeans_train([fm([0, 1]), fm([[0, 1]])], KMeansConfig(k=1))
    with pytest.raises(DimMismatch):
        kmeans_assign(fm([[0, 1]]), Codebook([[0.0]]))
    with pytest.raises(DimMismatch):
        inertia(fm([[0, 1]]), Codebook([[0.0]]))


def test_multiple_matrices_concatenate():
    a, b = fm([0, 0]), fm([10, 10])
    cb = kmeans_train([a, b], KMeansConfig(k=2))
    assert sorted(cb.centroids.ravel()) == [0.0, 10.0]


def _blobs(rng, n, k, dims):
    centers = rng.normal(scale=10, size=(k, dims))
    return centers[rng.integers(0, k, n)] + rng.normal(size=(n, dims))


def test_deterministic_across_threads_and_runs():
    rng = np.random.default_rng(3)
    data = fm(_blobs(rng, 3 * CHUNK_FRAMES + 17, 6, 3))
    cfg = KMeansConfig(k=8, seed=42, max_iters=30)
    ref = kmeans_train(data, cfg, threads=1)
    for threads in (1, 2, 8):
        assert kmeans_train(data, cfg, threads=threads) == ref
    ts1 = kmeans_assign(data, ref, threads=1)
    assert kmeans_assign(data, ref, threads=8) == ts1


def test_inertia_trace_monotone_and_matches_final():
    rng = np.random.default_rng(5)
    data = fm(_blobs(rng, 500, 5, 2))
    res = kmeans_fit(data, KMeansConfig(k=7, seed=1))
    h = res.inertia_history
    assert all(b <= a for a, b in zip(h, h[1:]))
    assert h[-1] == res.codebook.final_inertia
    assert res.codebook.final_inertia == pytest.approx(inertia(data, res.codebook), rel=1e-12)


def test_empty_cluster_reseeded(monkeypatch):
    import dstok.quantize as q

    # a seed centroid far from every point starts (and would stay) empty
    monkeypatch.setattr(q, "kmeans_pp_init", lambda x, k, rng: np.array([[0.0], [5.0], [1000.0]]))
    pts = [0.0, 0.1, 0.2, 0.3, 5.0, 5.1]
    res = q.kmeans_fit(fm(pts), KMeansConfig(k=3, max_iters=50))
    labels = kmeans_assign(fm(pts), res.codebook).stream(0)
    assert set(labels.tolist()) == {0, 1, 2}
    assert 1000.0 not in res.codebook.centroids
    h = res.inertia_history
    assert all(b <= a for a, b in zip(h, h[1:]))


@settings(max_examples=60, deadline=None)
@given(
    n=st.integers(3, 8),
    k=st.integers(1, 3),
    dims=st.integers(1, 2),
    seed=st.integers(0, 2**64 - 1),
    data_seed=st.integers(0, 2**32 - 1),
)
def test_every_centroid_used_and_assign_matches_scan(n, k, dims, seed, data_seed):
    rng = np.random.default_rng(data_seed)
    pts = rng.normal(size=(n, dims))
    res = kmeans_fit(fm(pts), KMeansConfig(k=k, seed=seed))
    h = res.inertia_history
    assert all(b <= a for a, b in zip(h, h[1:]))
    labels = kmeans_assign(fm(pts), res.codebook).stream(0).tolist()
    assert labels == linear_scan_nearest(fm(pts).values.astype(float).tolist(),
                                         res.codebook.centroids.tolist())
    assert set(labels) == set(range(k))


def test_grouped_train_and_assign(rng):
    from dstok.quantize import kmeans_assign_groups, kmeans_train_groups, split_groups

    f = fm(rng.normal(size=(50, 4)))
    cbs = kmeans_train_groups([f], KMeansConfig(k=3, seed=5), groups=2)
    assert [cb.dims for cb in cbs] == [2, 2] and [cb.seed for cb in cbs] == [5, 6]
    left, right = split_groups(f, 2)
    assert cbs[0] == kmeans_train(left, KMeansConfig(k=3, seed=5))
    ts = kmeans_assign_groups(f, cbs)
    assert ts.vocab_sizes == (3, 3)
    assert ts.stream(0).tolist() == kmeans_assign(left, cbs[0]).stream(0).tolist()
    assert ts.stream(1).tolist() == kmeans_assign(right, cbs[1]).stream(0).tolist()
    with pytest.raises(DimMismatch):
        split_groups(f, 3)
    with pytest.raises(DimMismatch):
        kmeans_assign_groups(f, cbs[:1])
