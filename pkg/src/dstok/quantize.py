"""k-means codebooks: k-means++ seeding, Lloyd iterations, nearest-centroid assignment.

Results are reproducible bit-for-bit: the PRNG is splitmix64, distances are
accumulated dimension by dimension in float64, and per-cluster sums are
reduced over fixed-size frame chunks in chunk order, so the worker count
never changes the output.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .core import Codebook, FeatureMatrix, TokenStream
from .errors import DimMismatch, EmptyCorpus, InvariantViolation, TooFewPoints

MASK64 = (1 << 64) - 1

# Frames per accumulation chunk. Part of the numerical contract: changing it
# changes the float summation order and therefore the low bits of centroids.
CHUNK_FRAMES = 4096

# Rough cap on (rows x centroids) per distance block, for memory only.
_BLOCK_ELEMS = 1 << 20


class SplitMix64:
    """splitmix64 generator (Steele, Lea & Flood); 64-bit state, 64-bit output."""

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def next_float(self) -> float:
        """Uniform double in [0, 1) from the top 53 bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))


@dataclass(frozen=True)
class KMeansConfig:
    k: int
    seed: int = 0
    max_iters: int = 100
    rel_tol: float = 1e-6

    def __post_init__(self):
        if self.k < 1:
            raise InvariantViolation("k >= 1")
        if self.max_iters < 1:
            raise InvariantViolation("max_iters >= 1")
        if not self.rel_tol >= 0:
            raise InvariantViolation("rel_tol >= 0")
        if not 0 <= self.seed < 2**64:
            raise InvariantViolation("seed is a 64-bit unsigned integer")


@dataclass
class TrainResult:
    """Codebook plus the per-iteration inertia trace (first entry is after seeding)."""

    codebook: Codebook
    inertia_history: list[float] = field(default_factory=list)
    labels: np.ndarray | None = None


def _squared_distances(x: np.ndarray, c: np.ndarray) -> np.ndarray:
    # Accumulate over dimensions in order; matches a scalar linear scan exactly.
    d2 = np.zeros((x.shape[0], c.shape[0]), dtype=np.float64)
    for j in range(x.shape[1]):
        diff = x[:, j, None] - c[None, :, j]
        d2 += diff * diff
    return d2


def _nearest(x: np.ndarray, c: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Nearest centroid (lowest index on ties) and its squared distance, per row."""
    n = x.shape[0]
    labels = np.empty(n, dtype=np.int64)
    best = np.empty(n, dtype=np.float64)
    rows = max(1, _BLOCK_ELEMS // max(1, c.shape[0]))
    for lo in range(0, n, rows):
        d2 = _squared_distances(x[lo:lo + rows], c)
        # argmin returns the first minimum -> lowest index wins ties
        lab = np.argmin(d2, axis=1)
        labels[lo:lo + rows] = lab
        best[lo:lo + rows] = d2[np.arange(d2.shape[0]), lab]
    return labels, best


def _chunks(n: int):
    return [(lo, min(lo + CHUNK_FRAMES, n)) for lo in range(0, n, CHUNK_FRAMES)]


def _map_chunks(fn, chunks, threads: int):
    if threads <= 1 or len(chunks) <= 1:
        return [fn(ch) for ch in chunks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, chunks))


def _assign_all(x, c, threads):
    """Labels, per-frame distances and inertia with a chunk-ordered reduction."""
    parts = _map_chunks(lambda ch: _nearest(x[ch[0]:ch[1]], c), _chunks(x.shape[0]), threads)
    if not parts:
        return np.empty(0, np.int64), np.empty(0, np.float64), 0.0
    labels = np.concatenate([p[0] for p in parts])
    d2 = np.concatenate([p[1] for p in parts])
    total = 0.0
    for p in parts:
        total += float(np.sum(p[1]))
    return labels, d2, total


def _cluster_sums(x, labels, k, threads):
    def partial(ch):
        lo, hi = ch
        lab = labels[lo:hi]
        sums = np.empty((k, x.shape[1]), dtype=np.float64)
        for j in range(x.shape[1]):
            sums[:, j] = np.bincount(lab, weights=x[lo:hi, j], minlength=k)
        return sums, np.bincount(lab, minlength=k)

    sums = np.zeros((k, x.shape[1]), dtype=np.float64)
    counts = np.zeros(k, dtype=np.int64)
    for s, n in _map_chunks(partial, _chunks(x.shape[0]), threads):
        sums += s
        counts += n
    return sums, counts


def _stack(data) -> np.ndarray:
    if isinstance(data, FeatureMatrix):
        data = [data]
    data = list(data)
    if not data:
        raise EmptyCorpus("no feature matrices given")
    dims = {m.dims for m in data}
    if len(dims) != 1:
        raise DimMismatch(f"feature matrices disagree on dims: {sorted(dims)}")
    return np.concatenate([m.values for m in data], axis=0).astype(np.float64)


def kmeans_pp_init(x: np.ndarray, k: int, rng: SplitMix64) -> np.ndarray:
    """k-means++ seeding driven by ``rng``; returns a (k, dims) float64 array."""
    n = x.shape[0]
    idx = [min(int(rng.next_float() * n), n - 1)]
    mind = _squared_distances(x, x[idx[0]][None, :])[:, 0]
    for _ in range(1, k):
        cum = np.cumsum(mind)
        total = cum[-1]
        u = rng.next_float()
        if total > 0:
            i = int(np.searchsorted(cum, u * total, side="right"))
            i = min(i, n - 1)
        else:
            i = min(int(u * n), n - 1)
        idx.append(i)
        np.minimum(mind, _squared_distances(x, x[i][None, :])[:, 0], out=mind)
    return x[idx].copy()


def _reseed_empty(x, centroids, labels, d2, counts):
    """Move each empty centroid onto the farthest member of the current largest cluster."""
    counts = counts.copy()
    labels = labels.copy()
    dist = d2.copy()
    for e in np.flatnonzero(counts == 0):
        big = int(np.argmax(counts))
        if counts[big] <= 1:
            break
        members = np.flatnonzero(labels == big)
        far = int(members[np.argmax(dist[members])])
        centroids[e] = x[far]
        labels[far] = e
        dist[far] = 0.0
        counts[big] -= 1
        counts[e] += 1
    return centroids


def kmeans_fit(data, cfg: KMeansConfig, threads: int = 1) -> TrainResult:
    """Train a codebook and keep the inertia trace; see :func:`kmeans_train`."""
    x = _stack(data)
    n = x.shape[0]
    if n < cfg.k:
        raise TooFewPoints(f"{n} frames for k={cfg.k}")

    rng = SplitMix64(cfg.seed)
    centroids = kmeans_pp_init(x, cfg.k, rng)
    labels, d2, inertia = _assign_all(x, centroids, threads)
    history = [inertia]
    iterations = 0

    for it in range(1, cfg.max_iters + 1):
        sums, counts = _cluster_sums(x, labels, cfg.k, threads)
        new_c = centroids.copy()
        filled = counts > 0
        new_c[filled] = sums[filled] / counts[filled, None]
        if not filled.all():
            new_c = _reseed_empty(x, new_c, labels, d2, counts)
        new_labels, new_d2, new_inertia = _assign_all(x, new_c, threads)
        if new_inertia > inertia:
            # rounding-level regression; keep the better state
            break
        prev = inertia
        fixed_point = np.array_equal(new_labels, labels)
        centroids, labels, d2, inertia = new_c, new_labels, new_d2, new_inertia
        history.append(inertia)
        iterations = it
        if fixed_point or prev == 0 or (prev - inertia) / prev < cfg.rel_tol:
            break

    cb = Codebook(centroids, seed=cfg.seed, iterations_run=iterations, final_inertia=inertia)
    return TrainResult(cb, history, labels)


def kmeans_train(data: FeatureMatrix | Iterable[FeatureMatrix], cfg: KMeansConfig,
                 threads: int = 1) -> Codebook:
    """Train a k-means codebook on the concatenated frames of ``data``.

    Seeding is k-means++ with a splitmix64 stream seeded by ``cfg.seed``.
    Lloyd iterations stop after ``cfg.max_iters`` or when the relative
    inertia improvement drops below ``cfg.rel_tol``. A cluster that goes
    empty is moved to the member of the largest cluster farthest from its
    centroid. ``threads`` only affects speed.
    """
    return kmeans_fit(data, cfg, threads).codebook


def _check_dims(data: FeatureMatrix, cb: Codebook):
    if data.dims != cb.dims:
        raise DimMismatch(f"features have {data.dims} dims, codebook has {cb.dims}")


def nearest_centroids(vectors, cb: Codebook, threads: int = 1) -> np.ndarray:
    """Index of the nearest centroid for each row of ``vectors``."""
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim == 1:
        x = x.reshape(-1, 1) if cb.dims == 1 else x.reshape(1, -1)
    if x.shape[1] != cb.dims:
        raise DimMismatch(f"vectors have {x.shape[1]} dims, codebook has {cb.dims}")
    labels, _, _ = _assign_all(x, cb.centroids, threads)
    return labels


def kmeans_assign(data: FeatureMatrix, cb: Codebook, threads: int = 1) -> TokenStream:
    _check_dims(data, cb)
    labels = nearest_centroids(data.values, cb, threads)
    return TokenStream(data.utt_id, 1 / data.frame_shift_s, (cb.k,), labels.reshape(-1, 1))


def split_groups(data: FeatureMatrix, groups: int) -> list[FeatureMatrix]:
    """Split the feature dimensions into ``groups`` equal contiguous blocks."""
    if groups < 1 or data.dims % groups:
        raise DimMismatch(f"{data.dims} dims do not split into {groups} equal groups")
    w = data.dims // groups
    return [FeatureMatrix(data.utt_id, data.frame_shift_s, data.values[:, g * w:(g + 1) * w])
            for g in range(groups)]


def kmeans_train_groups(data: FeatureMatrix | Iterable[FeatureMatrix], cfg: KMeansConfig,
                        groups: int, threads: int = 1) -> list[Codebook]:
    """One codebook per dimension group; group ``g`` is seeded with ``cfg.seed + g``."""
    mats = [data] if isinstance(data, FeatureMatrix) else list(data)
    if not mats:
        raise TooFewPoints("no feature matrices")
    parts = [split_groups(m, groups) for m in mats]
    out = []
    for g in range(groups):
        gcfg = replace(cfg, seed=(cfg.seed + g) % 2**64)
        out.append(kmeans_train([p[g] for p in parts], gcfg, threads))
    return out


def kmeans_assign_groups(data: FeatureMatrix, codebooks: Sequence[Codebook],
                         threads: int = 1) -> TokenStream:
    """Quantize consecutive dimension blocks with one codebook each into a multi-stream TokenStream."""
    if not codebooks:
        raise DimMismatch("no codebooks")
    total = sum(cb.dims for cb in codebooks)
    if total != data.dims:
        raise DimMismatch(f"features have {data.dims} dims, codebooks cover {total}")
    streams, start = [], 0
    for cb in codebooks:
        block = data.values[:, start:start + cb.dims]
        streams.append((cb.k, nearest_centroids(block, cb, threads)))
        start += cb.dims
    return TokenStream.from_streams(data.utt_id, 1 / data.frame_shift_s, streams)


def inertia(data: FeatureMatrix, cb: Codebook, threads: int = 1) -> float:
    """Sum over frames of the squared distance to the nearest centroid."""
    _check_dims(data, cb)
    if data.frames == 0:
        return 0.0
    _, _, total = _assign_all(data.values.astype(np.float64), cb.centroids, threads)
    return total
