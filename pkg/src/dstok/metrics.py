"""Bitrate accounting and evaluation metrics (CER/WER, log-F0 RMSE)."""

from __future__ import annotations

import math
import re
import string
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Literal, Sequence

import numpy as np

from .core import BitrateReport, TokenStream, as_fraction
from .errors import (
    EmptyCorpus,
    EmptyReference,
    HeterogeneousCorpus,
    InvariantViolation,
    LengthMismatch,
    NoVoicedOverlap,
)

BitrateMode = Literal["exact", "ceil"]


def bits_per_token(vocab_size: int, mode: BitrateMode = "exact") -> float:
    """log2(vocab) in exact mode, ceil(log2(vocab)) in ceil mode."""
    if vocab_size < 1:
        raise InvariantViolation(f"vocab_size >= 1, got {vocab_size}")
    if mode == "exact":
        return math.log2(vocab_size)
    if mode == "ceil":
        return float((vocab_size - 1).bit_length())
    raise ValueError(f"mode must be 'exact' or 'ceil', got {mode!r}")


def stream_bitrate(frame_rate_hz, vocab_sizes: Sequence[int], mode: BitrateMode = "exact") -> BitrateReport:
    rate = as_fraction(frame_rate_hz)
    if rate <= 0:
        raise InvariantViolation("frame_rate_hz > 0")
    per = [float(rate) * bits_per_token(v, mode) for v in vocab_sizes]
    return BitrateReport(mode, per, math.fsum(per), rate, vocab_sizes)


def corpus_bitrate(corpus: Iterable[TokenStream], mode: BitrateMode = "exact") -> BitrateReport:
    """Total bits over total seconds.

    Utterances may have different frame rates; the result is then the
    duration-weighted mean, reported at the corpus' effective frame rate.
    """
    corpus = list(corpus)
    if not corpus:
        raise EmptyCorpus("no token streams given")
    vocabs = corpus[0].vocab_sizes
    frames = 0
    seconds = Fraction(0)
    for ts in corpus:
        if ts.vocab_sizes != vocabs:
            raise HeterogeneousCorpus(
                f"{ts.utt_id!r} has vocabularies {ts.vocab_sizes}, expected {vocabs}"
            )
        frames += ts.num_frames
        seconds += Fraction(ts.num_frames) / ts.frame_rate_hz
    if frames == 0:
        raise EmptyCorpus("corpus has no frames")
    return stream_bitrate(frames / seconds, vocabs, mode)


@dataclass(frozen=True)
class EditDistanceResult:
    substitutions: int
    insertions: int
    deletions: int
    ref_len: int

    @property
    def errors(self) -> int:
        return self.substitutions + self.insertions + self.deletions

    @property
    def rate(self) -> float:
        if self.ref_len == 0:
            raise EmptyReference("error rate undefined for an empty reference")
        return self.errors / self.ref_len

    def __add__(self, other: "EditDistanceResult") -> "EditDistanceResult":
        return EditDistanceResult(
            self.substitutions + other.substitutions,
            self.insertions + other.insertions,
            self.deletions + other.deletions,
            self.ref_len + other.ref_len,
        )


def edit_distance(ref: Sequence, hyp: Sequence) -> EditDistanceResult:
    """Levenshtein alignment with unit costs.

    The S/I/D breakdown follows one optimal path; when several moves tie
    the backtrace prefers substitution (or match), then deletion, then
    insertion.
    """
    n, m = len(ref), len(hyp)
    # dp[i][j]: distance between ref[:i] and hyp[:j]
    dp = [list(range(m + 1))]
    for i, r in enumerate(ref, 1):
        prev = dp[-1]
        row = [i]
        left = i
        for j, h in enumerate(hyp):
            v = prev[j] + (r != h)
            if prev[j + 1] < v:
                v = prev[j + 1] + 1
            if left < v:
                v = left + 1
            row.append(v)
            left = v
        dp.append(row)

    s = ins = dels = 0
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and dp[i][j] == dp[i - 1][j - 1] + (ref[i - 1] != hyp[j - 1]):
            s += ref[i - 1] != hyp[j - 1]
            i, j = i - 1, j - 1
        elif i > 0 and dp[i][j] == dp[i - 1][j] + 1:
            dels += 1
            i -= 1
        else:
            ins += 1
            j -= 1
    return EditDistanceResult(s, ins, dels, n)


_PUNCT = re.compile(f"[{re.escape(string.punctuation)}]")


@dataclass(frozen=True)
class TextNormalizer:
    lowercase: bool = True
    collapse_whitespace: bool = True
    strip_punctuation: bool = False

    def __call__(self, text: str) -> str:
        if self.lowercase:
            text = text.lower()
        if self.strip_punctuation:
            text = _PUNCT.sub("", text)
        if self.collapse_whitespace:
            text = " ".join(text.split())
        return text

    @classmethod
    def preset(cls, name: str) -> "TextNormalizer":
        if name == "none":
            return cls(False, False, False)
        if name == "basic":
            return cls()
        if name == "strict":
            return cls(strip_punctuation=True)
        raise ValueError(f"unknown normalization preset {name!r}")


DEFAULT_NORMALIZER = TextNormalizer()


def char_errors(ref: str, hyp: str, normalizer: TextNormalizer = DEFAULT_NORMALIZER) -> EditDistanceResult:
    return edit_distance(normalizer(ref), normalizer(hyp))


def word_errors(ref: str, hyp: str, normalizer: TextNormalizer = DEFAULT_NORMALIZER) -> EditDistanceResult:
    return edit_distance(normalizer(ref).split(), normalizer(hyp).split())


def cer(ref: str, hyp: str, normalizer: TextNormalizer = DEFAULT_NORMALIZER) -> float:
    """Character error rate after normalization; spaces count as characters."""
    return char_errors(ref, hyp, normalizer).rate


def wer(ref: str, hyp: str, normalizer: TextNormalizer = DEFAULT_NORMALIZER) -> float:
    return word_errors(ref, hyp, normalizer).rate


def relative_reduction(baseline: float, ours: float) -> float:
    """Relative reduction in percent, e.g. an error rate going from 2.31 to 2.01 is 12.99%."""
    if baseline == 0:
        raise ValueError("baseline must be non-zero")
    return (baseline - ours) / baseline * 100.0


def log_f0_rmse(f0_ref, f0_hyp) -> float:
    """RMSE of natural-log F0 over frames voiced (> 0) in both contours."""
    ref = np.asarray(f0_ref, dtype=np.float64).reshape(-1)
    hyp = np.asarray(f0_hyp, dtype=np.float64).reshape(-1)
    if ref.shape != hyp.shape:
        raise LengthMismatch(f"{ref.shape[0]} reference frames vs {hyp.shape[0]} hypothesis frames")
    if not (np.isfinite(ref).all() and np.isfinite(hyp).all()):
        raise InvariantViolation("F0 values must be finite")
    if (ref < 0).any() or (hyp < 0).any():
        raise InvariantViolation("F0 values must be >= 0 (0 marks unvoiced)")
    voiced = (ref > 0) & (hyp > 0)
    if not voiced.any():
        raise NoVoicedOverlap("no frame is voiced in both contours")
    d = np.log(ref[voiced]) - np.log(hyp[voiced])
    return float(np.sqrt(np.mean(d * d)))
