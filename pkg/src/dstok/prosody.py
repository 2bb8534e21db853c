"""Prosody-controller targets.

Frame-level prosody features (pitch, voicing probability, energy) are
extended with backward-difference deltas, mean-normalized with corpus
statistics, averaged over each phone, and clustered. The cluster index of
each phone is the training target.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .core import AlignmentTrack, Codebook, FeatureMatrix
from .errors import (
    DimMismatch,
    EmptyCorpus,
    EmptyMatrix,
    FrameShiftMismatch,
    InvariantViolation,
    LengthMismatch,
)
from .quantize import nearest_centroids


@dataclass(frozen=True)
class ProsodyConfig:
    base_dims: int = 3
    delta_orders: int = 2

    def __post_init__(self):
        if self.base_dims < 1:
            raise InvariantViolation("base_dims >= 1")
        if self.delta_orders not in (0, 1, 2):
            raise InvariantViolation("delta_orders in {0, 1, 2}")

    @property
    def output_dims(self) -> int:
        return self.base_dims * (1 + self.delta_orders)


def _backward_diff(x: np.ndarray) -> np.ndarray:
    d = np.zeros_like(x)
    d[1:] = x[1:] - x[:-1]
    return d


def add_deltas(f: FeatureMatrix, orders: int = 2) -> FeatureMatrix:
    """Append delta columns: ``[x, dx, ddx]`` with ``dx[t] = x[t] - x[t-1]`` and ``dx[0] = 0``."""
    if orders not in (0, 1, 2):
        raise InvariantViolation(f"orders in {{0, 1, 2}}, got {orders!r}")
    if f.frames == 0:
        raise EmptyMatrix(f"{f.utt_id!r} has no frames")
    cols = [f.values.astype(np.float64)]
    for _ in range(orders):
        cols.append(_backward_diff(cols[-1]))
    return FeatureMatrix(f.utt_id, f.frame_shift_s, np.concatenate(cols, axis=1))


def cmn_stats(corpus: Iterable[FeatureMatrix]) -> np.ndarray:
    """Per-dimension mean over every frame of every utterance (float64)."""
    corpus = list(corpus)
    if not corpus:
        raise EmptyCorpus("no feature matrices given")
    dims = {m.dims for m in corpus}
    if len(dims) != 1:
        raise DimMismatch(f"feature matrices disagree on dims: {sorted(dims)}")
    total = np.zeros(corpus[0].dims, dtype=np.float64)
    frames = 0
    for m in corpus:
        total += m.values.astype(np.float64).sum(axis=0)
        frames += m.frames
    if frames == 0:
        raise EmptyCorpus("corpus has no frames")
    return total / frames


def apply_cmn(f: FeatureMatrix, mean) -> FeatureMatrix:
    """Subtract ``mean`` from every frame. Not idempotent."""
    mean = np.asarray(mean, dtype=np.float64).reshape(-1)
    if mean.shape[0] != f.dims:
        raise DimMismatch(f"mean has {mean.shape[0]} dims, features have {f.dims}")
    return FeatureMatrix(f.utt_id, f.frame_shift_s, f.values.astype(np.float64) - mean)


def phone_average(f: FeatureMatrix, track: AlignmentTrack) -> np.ndarray:
    """Mean feature vector of each segment; shape (segments, dims), float64."""
    if track.frame_shift_s != f.frame_shift_s:
        raise FrameShiftMismatch(
            f"alignment shift {track.frame_shift_s} s != feature shift {f.frame_shift_s} s"
        )
    if track.total_frames != f.frames:
        raise LengthMismatch(f"alignment covers {track.total_frames} frames, features have {f.frames}")
    durs = np.asarray(track.durations, dtype=np.int64)
    if durs.size == 0:
        return np.zeros((0, f.dims))
    starts = np.concatenate([[0], np.cumsum(durs)[:-1]])
    sums = np.add.reduceat(f.values.astype(np.float64), starts, axis=0)
    return sums / durs[:, None]


def prosody_labels(seg_vectors, cb: Codebook) -> np.ndarray:
    """Nearest-centroid index per segment vector (lowest index on ties)."""
    x = np.asarray(seg_vectors, dtype=np.float64)
    if x.ndim != 2:
        raise DimMismatch(f"segment vectors must be 2-D, got ndim={x.ndim}")
    if x.shape[1] != cb.dims:
        raise DimMismatch(f"segment vectors have {x.shape[1]} dims, codebook has {cb.dims}")
    return nearest_centroids(x, cb)


def prosody_targets(f: FeatureMatrix, track: AlignmentTrack, mean, cb: Codebook,
                    orders: int = 2) -> np.ndarray:
    """Full chain for one utterance: deltas, CMN, phone averaging, cluster labels."""
    avg = phone_average(apply_cmn(add_deltas(f, orders), mean), track)
    return prosody_labels(avg, cb)
