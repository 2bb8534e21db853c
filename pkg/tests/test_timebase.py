from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dstok.core import AlignmentTrack, TokenStream
from dstok.errors import EmptySequence, LengthNotDivisible, NegativeDuration, NotBlockConstant
from dstok.metrics import corpus_bitrate
from dstok.timebase import (
    collapse_repeats,
    compress_labels,
    downsample_alignment,
    downsample_track,
    expand_labels,
    repeat_tokens,
    seconds_to_frames,
)

from oracles import largest_remainder_ok


def ts1(tokens, rate=25, vocab=1024):
    return TokenStream("u", rate, (vocab,), tokens)


def test_repeat_examples():
    r = repeat_tokens(ts1([3, 9]), 2)
    assert r.stream(0).tolist() == [3, 3, 9, 9]
    assert r.frame_rate_hz == 50
    assert repeat_tokens(ts1([3, 9]), 1) == ts1([3, 9])


def test_repeat_two_streams_by_frame():
    ts = TokenStream.from_streams("u", 50, [(4, [0, 1]), (4, [2, 3])])
    r = repeat_tokens(ts, 3)
    assert r.tokens.tolist() == [[0, 2]] * 3 + [[1, 3]] * 3
    assert r.frame_rate_hz == 150


def test_collapse_examples():
    c = collapse_repeats(ts1([3, 3, 9, 9], rate=50), 2)
    assert c.stream(0).tolist() == [3, 9] and c.frame_rate_hz == 25
    with pytest.raises(NotBlockConstant) as e:
        collapse_repeats(ts1([1, 2, 2, 2]), 2)
    assert e.value.frame == 0
    with pytest.raises(NotBlockConstant) as e:
        collapse_repeats(ts1([1, 1, 2, 3]), 2)
    assert e.value.frame == 2
    with pytest.raises(LengthNotDivisible):
        collapse_repeats(ts1([1, 1, 2]), 2)


def test_seconds_to_frames_examples():
    assert seconds_to_frames([1.0], Fraction(1, 86)) == [86]
    assert seconds_to_frames([0.3, 0.3, 0.4], 0.02) == [15, 15, 20]
    # quotas 21.5, 21.5, 43 -> one extra frame, lowest index wins the tie
    assert seconds_to_frames([0.25, 0.25, 0.5], "1/86") == [22, 21, 43]
    assert seconds_to_frames([], "1/86") == []
    with pytest.raises(NegativeDuration):
        seconds_to_frames([0.1, -0.1], "1/50")


def test_seconds_to_frames_half_total_rounds_up():
    # total quota 2.5 -> 3 frames
    assert seconds_to_frames(["0.025", "0.025"], "1/50") == [2, 1]


def test_downsample_examples():
    assert downsample_alignment(list("ppqq"), 2) == ["p", "q"]
    assert downsample_alignment(list("pq"), 2) == ["p"]
    assert downsample_alignment(list("ppp"), 2) == ["p", "p"]


def test_expand_compress_examples():
    t = AlignmentTrack("u", "1/50", [("a", 2), ("b", 1)])
    assert expand_labels(t) == ["a", "a", "b"]
    assert expand_labels(AlignmentTrack("u", "1/50", [("x", 5)])) == ["x"] * 5
    assert compress_labels(["a", "a", "b"], "1/50", "u") == t
    assert compress_labels(["a"], "1/50").segments == (("a", 1),)
    with pytest.raises(EmptySequence):
        compress_labels([], "1/50")


def test_downsample_track():
    t = AlignmentTrack("u", "1/100", [("sil", 3), ("a", 4), ("b", 1)])
    d = downsample_track(t, 2)
    assert d.frame_shift_s == Fraction(1, 50)
    assert d.segments == (("sil", 2), ("a", 2))


tokens_st = st.lists(st.integers(0, 7), min_size=0, max_size=40)


@settings(max_examples=200, deadline=None)
@given(tokens=tokens_st, n=st.integers(1, 3))
def test_repeat_collapse_roundtrip(tokens, n):
    x = ts1(tokens, vocab=8)
    assert collapse_repeats(repeat_tokens(x, n), n) == x


def test_repeat_keeps_source_rate_bitrate():
    x = ts1(list(range(20)), rate=25, vocab=1024)
    back = collapse_repeats(repeat_tokens(x, 2), 2)
    assert corpus_bitrate([back]).total_bps == corpus_bitrate([x]).total_bps == 250.0


labels_st = st.lists(st.sampled_from(["a", "b", "c"]), min_size=1, max_size=40)


@settings(max_examples=200, deadline=None)
@given(labels=labels_st, factor=st.integers(1, 5))
def test_expand_compress_roundtrip_and_downsample_length(labels, factor):
    t = compress_labels(labels, "1/100")
    assert expand_labels(t) == labels
    assert compress_labels(expand_labels(t), "1/100") == t
    assert len(downsample_alignment(expand_labels(t), factor)) == -(-t.total_frames // factor)


@settings(max_examples=200, deadline=None)
@given(
    millis=st.lists(st.integers(0, 3000), max_size=20),
    shift=st.sampled_from([Fraction(1, 86), Fraction(1, 50), Fraction(1, 100), Fraction(3, 250)]),
)
def test_seconds_to_frames_apportionment(millis, shift):
    durs = [Fraction(m, 1000) for m in millis]
    counts = seconds_to_frames(durs, shift)
    assert largest_remainder_ok(durs, shift, counts)
    assert abs(sum(counts) - sum(durs, Fraction(0)) / shift) <= Fraction(1, 2)
