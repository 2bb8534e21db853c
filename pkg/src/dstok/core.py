"""Domain types shared across the toolkit.

All types are frozen and validate themselves on construction, so an
instance that exists satisfies its invariants. Array payloads are copied
and marked read-only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import InvariantViolation

TOKEN_DTYPE = np.uint32
FEATURE_DTYPE = np.float32


def as_fraction(x) -> Fraction:
    """Convert an int, str ("1/86", "0.02"), float or Fraction to an exact Fraction.

    Floats go through their shortest repr so ``0.02`` becomes ``1/50``.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        if not math.isfinite(x):
            raise InvariantViolation(f"non-finite rational {x!r}")
        return Fraction(repr(x))
    try:
        return Fraction(x)
    except (ValueError, ZeroDivisionError, TypeError) as e:
        raise InvariantViolation(f"not a rational number: {x!r}") from e


def _frozen_array(a, dtype) -> np.ndarray:
    out = np.array(a, dtype=dtype, copy=True)
    out.flags.writeable = False
    return out


def _first_index(mask: np.ndarray):
    idx = np.argwhere(mask)
    return tuple(int(i) for i in idx[0])


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    utt_id: str
    frame_shift_s: Fraction
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "frame_shift_s", as_fraction(self.frame_shift_s))
        v = np.asarray(self.values)
        if v.ndim != 2:
            raise InvariantViolation(f"values must be 2-D (frames x dims), got ndim={v.ndim}")
        object.__setattr__(self, "values", _frozen_array(v, FEATURE_DTYPE))
        self.check()

    @property
    def frames(self) -> int:
        return self.values.shape[0]

    @property
    def dims(self) -> int:
        return self.values.shape[1]

    def check(self):
        if not isinstance(self.utt_id, str):
            raise InvariantViolation("utt_id must be a string")
        if self.frame_shift_s <= 0:
            raise InvariantViolation("frame_shift_s > 0")
        if self.dims < 1:
            raise InvariantViolation("dims >= 1")
        bad = ~np.isfinite(self.values)
        if bad.any():
            raise InvariantViolation("all values finite", _first_index(bad))

    def __eq__(self, other):
        if not isinstance(other, FeatureMatrix):
            return NotImplemented
        return (
            self.utt_id == other.utt_id
            and self.frame_shift_s == other.frame_shift_s
            and self.values.shape == other.values.shape
            and self.values.tobytes() == other.values.tobytes()
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class TokenStream:
    """Parallel token streams; ``tokens`` has shape (num_frames, num_streams)."""

    utt_id: str
    frame_rate_hz: Fraction
    vocab_sizes: tuple[int, ...]
    tokens: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "frame_rate_hz", as_fraction(self.frame_rate_hz))
        object.__setattr__(self, "vocab_sizes", tuple(int(v) for v in self.vocab_sizes))
        t = np.asarray(self.tokens)
        if t.ndim == 1:
            t = t.reshape(-1, 1)
        if t.ndim != 2:
            raise InvariantViolation(f"tokens must be 2-D (frames x streams), got ndim={t.ndim}")
        if t.size and not np.issubdtype(t.dtype, np.integer):
            raise InvariantViolation(f"tokens must be integers, got {t.dtype}")
        if t.size and t.min() < 0:
            raise InvariantViolation("tokens non-negative", _first_index(t < 0))
        object.__setattr__(self, "tokens", _frozen_array(t, TOKEN_DTYPE))
        self.check()

    @classmethod
    def from_streams(cls, utt_id, frame_rate_hz, streams: Sequence[tuple[int, Sequence[int]]]):
        """Build from a list of ``(vocab_size, tokens)`` pairs."""
        if not streams:
            raise InvariantViolation("at least one stream")
        lengths = {len(s) for _, s in streams}
        if len(lengths) != 1:
            raise InvariantViolation(f"all streams have equal length, got {sorted(lengths)}")
        arr = np.stack([np.asarray(s, dtype=np.int64) for _, s in streams], axis=1)
        return cls(utt_id, frame_rate_hz, tuple(v for v, _ in streams), arr)

    @property
    def num_frames(self) -> int:
        return self.tokens.shape[0]

    @property
    def num_streams(self) -> int:
        return self.tokens.shape[1]

    def stream(self, i: int) -> np.ndarray:
        return self.tokens[:, i]

    @property
    def streams(self) -> list[tuple[int, np.ndarray]]:
        return [(v, self.tokens[:, i]) for i, v in enumerate(self.vocab_sizes)]

    def check(self):
        if not isinstance(self.utt_id, str):
            raise InvariantViolation("utt_id must be a string")
        if self.frame_rate_hz <= 0:
            raise InvariantViolation("frame_rate_hz > 0")
        if not self.vocab_sizes:
            raise InvariantViolation("at least one stream")
        if len(self.vocab_sizes) != self.tokens.shape[1]:
            raise InvariantViolation(
                f"{len(self.vocab_sizes)} vocab sizes for {self.tokens.shape[1]} streams"
            )
        for s, v in enumerate(self.vocab_sizes):
            if v < 1:
                raise InvariantViolation("vocab_size >= 1", s)
            bad = self.tokens[:, s] >= v
            if bad.any():
                frame = int(np.argmax(bad))
                raise InvariantViolation(
                    f"token {int(self.tokens[frame, s])} < vocab_size {v}", (frame, s)
                )

    def __eq__(self, other):
        if not isinstance(other, TokenStream):
            return NotImplemented
        return (
            self.utt_id == other.utt_id
            and self.frame_rate_hz == other.frame_rate_hz
            and self.vocab_sizes == other.vocab_sizes
            and np.array_equal(self.tokens, other.tokens)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Codebook:
    centroids: np.ndarray
    seed: int = 0
    iterations_run: int = 0
    final_inertia: float = 0.0

    def __post_init__(self):
        c = np.asarray(self.centroids, dtype=np.float64)
        if c.ndim != 2:
            raise InvariantViolation(f"centroids must be 2-D (k x dims), got ndim={c.ndim}")
        object.__setattr__(self, "centroids", _frozen_array(c, np.float64))
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "iterations_run", int(self.iterations_run))
        object.__setattr__(self, "final_inertia", float(self.final_inertia))
        self.check()

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    @property
    def dims(self) -> int:
        return self.centroids.shape[1]

    def check(self):
        if self.k < 1:
            raise InvariantViolation("k >= 1")
        if self.dims < 1:
            raise InvariantViolation("dims >= 1")
        bad = ~np.isfinite(self.centroids)
        if bad.any():
            raise InvariantViolation("all centroids finite", _first_index(bad))
        if not 0 <= self.seed < 2**64:
            raise InvariantViolation("seed is a 64-bit unsigned integer")
        if self.iterations_run < 0:
            raise InvariantViolation("iterations_run >= 0")
        if not (math.isfinite(self.final_inertia) and self.final_inertia >= 0):
            raise InvariantViolation("final_inertia >= 0")

    def __eq__(self, other):
        if not isinstance(other, Codebook):
            return NotImplemented
        return (
            self.seed == other.seed
            and self.iterations_run == other.iterations_run
            and self.final_inertia == other.final_inertia
            and self.centroids.shape == other.centroids.shape
            and self.centroids.tobytes() == other.centroids.tobytes()
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class PairFoldTable:
    vocab_a: int
    vocab_b: int
    pairs: tuple[tuple[int, int], ...]
    forward: dict = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "vocab_a", int(self.vocab_a))
        object.__setattr__(self, "vocab_b", int(self.vocab_b))
        object.__setattr__(self, "pairs", tuple((int(a), int(b)) for a, b in self.pairs))
        if self.vocab_a < 1 or self.vocab_b < 1:
            raise InvariantViolation("vocab_a >= 1 and vocab_b >= 1")
        forward = {}
        for i, (a, b) in enumerate(self.pairs):
            if not (0 <= a < self.vocab_a and 0 <= b < self.vocab_b):
                raise InvariantViolation(f"pair ({a}, {b}) within ({self.vocab_a}, {self.vocab_b})", i)
            if (a, b) in forward:
                raise InvariantViolation(f"pair ({a}, {b}) listed twice", i)
            forward[(a, b)] = i
        object.__setattr__(self, "forward", forward)
        # sorted composite keys for vectorized lookup
        keys = self.keys_of(np.array([p[0] for p in self.pairs], dtype=np.uint64),
                            np.array([p[1] for p in self.pairs], dtype=np.uint64))
        order = np.argsort(keys, kind="stable")
        object.__setattr__(self, "_sorted_keys", _frozen_array(keys[order], np.uint64))
        object.__setattr__(self, "_sorted_ids", _frozen_array(order, np.int64))
        object.__setattr__(self, "_pair_array", _frozen_array(
            np.array(self.pairs, dtype=np.uint32).reshape(-1, 2), np.uint32))

    def keys_of(self, a, b) -> np.ndarray:
        return np.asarray(a, dtype=np.uint64) * np.uint64(self.vocab_b) + np.asarray(b, dtype=np.uint64)

    @property
    def folded_vocab(self) -> int:
        return len(self.pairs)

    def check(self):
        if self.folded_vocab > self.vocab_a * self.vocab_b:
            raise InvariantViolation("folded_vocab <= vocab_a * vocab_b")
        if len(self.forward) != len(self.pairs):
            raise InvariantViolation("forward map is injective")

    def __eq__(self, other):
        if not isinstance(other, PairFoldTable):
            return NotImplemented
        return (self.vocab_a, self.vocab_b, self.pairs) == (other.vocab_a, other.vocab_b, other.pairs)

    __hash__ = None


@dataclass(frozen=True)
class AlignmentTrack:
    utt_id: str
    frame_shift_s: Fraction
    segments: tuple[tuple[str, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "frame_shift_s", as_fraction(self.frame_shift_s))
        object.__setattr__(self, "segments", tuple((str(l), int(d)) for l, d in self.segments))
        self.check()

    @property
    def total_frames(self) -> int:
        return sum(d for _, d in self.segments)

    @property
    def labels(self) -> list[str]:
        return [l for l, _ in self.segments]

    @property
    def durations(self) -> list[int]:
        return [d for _, d in self.segments]

    def check(self):
        if not isinstance(self.utt_id, str):
            raise InvariantViolation("utt_id must be a string")
        if self.frame_shift_s <= 0:
            raise InvariantViolation("frame_shift_s > 0")
        for i, (_, d) in enumerate(self.segments):
            if d < 1:
                raise InvariantViolation("duration_frames >= 1", i)


@dataclass(frozen=True)
class BitrateReport:
    mode: str
    per_stream_bps: tuple[float, ...]
    total_bps: float
    frame_rate_hz: Fraction
    vocab_sizes: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "per_stream_bps", tuple(float(x) for x in self.per_stream_bps))
        object.__setattr__(self, "vocab_sizes", tuple(int(v) for v in self.vocab_sizes))
        object.__setattr__(self, "frame_rate_hz", as_fraction(self.frame_rate_hz))
        self.check()

    def check(self):
        if self.mode not in ("exact", "ceil"):
            raise InvariantViolation(f"mode in {{exact, ceil}}, got {self.mode!r}")
        if len(self.per_stream_bps) != len(self.vocab_sizes):
            raise InvariantViolation("one bitrate per stream")
        for i, (bps, v) in enumerate(zip(self.per_stream_bps, self.vocab_sizes)):
            if v < 1:
                raise InvariantViolation("vocab_size >= 1", i)
            if bps < 0:
                raise InvariantViolation("per-stream bps >= 0", i)
            if v == 1 and bps != 0:
                raise InvariantViolation("vocab_size 1 implies 0 bps", i)
        if not math.isclose(self.total_bps, math.fsum(self.per_stream_bps), rel_tol=1e-12, abs_tol=1e-12):
            raise InvariantViolation("total_bps = sum of per-stream bps")

    def as_dict(self) -> dict:
        return {
            "mode": self.mode,
            "frame_rate_hz": str(self.frame_rate_hz),
            "vocab_sizes": list(self.vocab_sizes),
            "per_stream_bps": list(self.per_stream_bps),
            "total_bps": self.total_bps,
        }


CoreValue = FeatureMatrix | TokenStream | Codebook | PairFoldTable | AlignmentTrack | BitrateReport


def validate(value):
    """Re-check every invariant of a core value; return it unchanged or raise."""
    check = getattr(value, "check", None)
    if check is None or not isinstance(
        value, (FeatureMatrix, TokenStream, Codebook, PairFoldTable, AlignmentTrack, BitrateReport)
    ):
        raise TypeError(f"not a core value: {type(value).__name__}")
    check()
    return value
