"""Frame-rate and duration arithmetic.

Token repetition and its inverse, seconds to frame counts, alignment
downsampling, and run-length expansion/compression of label tracks.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Hashable, Sequence

import numpy as np

from .core import AlignmentTrack, TokenStream, as_fraction
from .errors import (
    EmptySequence,
    InvariantViolation,
    LengthNotDivisible,
    NegativeDuration,
    NotBlockConstant,
)


def _check_factor(n: int, name: str = "n"):
    if int(n) != n or n < 1:
        raise InvariantViolation(f"{name} >= 1, got {n!r}")


def repeat_tokens(ts: TokenStream, n: int) -> TokenStream:
    """Repeat every frame ``n`` times; the frame rate grows by ``n``."""
    _check_factor(n)
    return TokenStream(ts.utt_id, ts.frame_rate_hz * n, ts.vocab_sizes, np.repeat(ts.tokens, n, axis=0))


def collapse_repeats(ts: TokenStream, n: int) -> TokenStream:
    """Undo :func:`repeat_tokens`. Every block of ``n`` frames must be constant."""
    _check_factor(n)
    if ts.num_frames % n:
        raise LengthNotDivisible(f"{ts.num_frames} frames not divisible by {n}")
    blocks = ts.tokens.reshape(-1, n, ts.num_streams)
    same = (blocks == blocks[:, :1, :]).all(axis=(1, 2))
    if not same.all():
        raise NotBlockConstant(int(np.argmin(same)) * n)
    return TokenStream(ts.utt_id, ts.frame_rate_hz / n, ts.vocab_sizes, blocks[:, 0, :])


def round_half_up(q: Fraction) -> int:
    return math.floor(q + Fraction(1, 2))


def seconds_to_frames(durations: Sequence, frame_shift_s) -> list[int]:
    """Convert durations in seconds to integer frame counts without drifting the total.

    Each duration's exact quota ``d / shift`` is floored, then the frames
    missing from ``round(sum(quotas))`` (half rounds up) go to the largest
    fractional remainders, lowest index first on ties.
    """
    shift = as_fraction(frame_shift_s)
    if shift <= 0:
        raise InvariantViolation("frame_shift_s > 0")
    quotas = []
    for i, d in enumerate(durations):
        d = as_fraction(d)
        if d < 0:
            raise NegativeDuration(f"duration {float(d)} at index {i} is negative")
        quotas.append(d / shift)
    floors = [math.floor(q) for q in quotas]
    missing = round_half_up(sum(quotas, Fraction(0))) - sum(floors)
    order = sorted(range(len(quotas)), key=lambda i: (-(quotas[i] - floors[i]), i))
    for i in order[:missing]:
        floors[i] += 1
    return floors


def downsample_alignment(labels: Sequence[Hashable], factor: int) -> list:
    """Keep the first frame of every block of ``factor`` frames."""
    _check_factor(factor, "factor")
    return list(labels[::factor])


def expand_labels(track: AlignmentTrack) -> list[str]:
    out = []
    for label, dur in track.segments:
        out.extend([label] * dur)
    return out


def compress_labels(labels: Sequence[str], frame_shift_s, utt_id: str = "") -> AlignmentTrack:
    """Run-length encode per-frame labels into a track."""
    if len(labels) == 0:
        raise EmptySequence("cannot compress an empty label sequence")
    segments = []
    for lab in labels:
        if segments and segments[-1][0] == lab:
            segments[-1][1] += 1
        else:
            segments.append([lab, 1])
    return AlignmentTrack(utt_id, frame_shift_s, tuple((l, d) for l, d in segments))


def downsample_track(track: AlignmentTrack, factor: int) -> AlignmentTrack:
    """Alignment at ``factor`` times the frame shift, via the first-frame rule."""
    frames = downsample_alignment(expand_labels(track), factor)
    return compress_labels(frames, track.frame_shift_s * factor, track.utt_id)
