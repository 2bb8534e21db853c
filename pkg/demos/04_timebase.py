"""
Frame rates, durations and alignments
=====================================

"""

# Models in a pipeline often disagree on frame rate. These helpers move tokens
# and labels between rates without losing or inventing frames.
from fractions import Fraction

import numpy as np

from dstok import AlignmentTrack, TokenStream, compress_labels, expand_labels
from dstok import collapse_repeats, repeat_tokens, seconds_to_frames
from dstok.timebase import downsample_alignment, downsample_track

# Phone durations in seconds become integer frame counts. The total is the
# rounded total duration, and the leftover frames go to the phones with the
# largest fractional parts, so no rounding error accumulates.
shift = Fraction(256, 22050)            # a vocoder hop of 256 samples at 22.05 kHz
durs = [0.12, 0.05, 0.31, 0.07, 0.2]
counts = seconds_to_frames(durs, shift)
print("frame counts:", counts, "sum", sum(counts), "vs", float(sum(map(Fraction, map(repr, durs))) / shift))

# Naive per-phone rounding drifts.
print("rounded one by one:", [round(d / float(shift)) for d in durs])

# A 10 ms forced alignment brought to a 20 ms model: keep the first of every
# two frames.
track = AlignmentTrack("utt", "1/100", [("sil", 7), ("h", 3), ("ə", 5), ("l", 4), ("oʊ", 9), ("sil", 2)])
coarse = downsample_track(track, 2)
print("10 ms:", track.segments)
print("20 ms:", coarse.segments, "total", coarse.total_frames)

labels = expand_labels(track)
print("per-frame labels:", labels[:12], "...")
print("compress(expand(x)) == x:", compress_labels(labels, track.frame_shift_s, "utt") == track)
print("downsample of labels:", downsample_alignment(labels, 2)[:6], "...")

# A 25 Hz codec stream repeated twice lines up with 50 Hz features, and 50 Hz
# tokens repeated twice give the 100 Hz rate an ASR front end expects.
codec = TokenStream("utt", 25, (1024,), np.array([5, 9, 9, 2]))
at50 = repeat_tokens(codec, 2)
print("25 Hz:", codec.stream(0), "-> 50 Hz:", at50.stream(0), at50.frame_rate_hz)
print("collapse back:", collapse_repeats(at50, 2) == codec)
