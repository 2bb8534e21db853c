"""Pair folding: collapse two parallel codebook groups into one vocabulary of observed pairs.

Two groups of sizes A and B admit A*B combinations, but a corpus usually
uses far fewer. Giving each observed pair its own id shrinks the
vocabulary (and the bitrate) without losing information.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Literal

import numpy as np

from .core import PairFoldTable, TokenStream
from .errors import NotInvertible, ShapeMismatch, UnseenPair

OOVMode = Literal["error", "reserve"]


@dataclass(frozen=True)
class PairStats:
    unique_pairs: int
    total_frames: int
    counts: dict  # (a, b) -> occurrences, in first-occurrence order
    coverage: float  # unique_pairs / (vocab_a * vocab_b)
    vocab_a: int
    vocab_b: int

    def as_dict(self) -> dict:
        return {
            "unique_pairs": self.unique_pairs,
            "total_frames": self.total_frames,
            "vocab_a": self.vocab_a,
            "vocab_b": self.vocab_b,
            "coverage": self.coverage,
        }


def _check_corpus(corpus: Iterable[TokenStream]) -> tuple[list[TokenStream], int, int]:
    corpus = list(corpus)
    if not corpus:
        raise ShapeMismatch("empty corpus")
    vocabs = None
    for i, ts in enumerate(corpus):
        if ts.num_streams != 2:
            raise ShapeMismatch(f"utterance {i} ({ts.utt_id!r}) has {ts.num_streams} streams, expected 2")
        if vocabs is None:
            vocabs = ts.vocab_sizes
        elif ts.vocab_sizes != vocabs:
            raise ShapeMismatch(f"utterance {i} ({ts.utt_id!r}) has vocabularies {ts.vocab_sizes}, expected {vocabs}")
    return corpus, vocabs[0], vocabs[1]


def _first_occurrence(keys: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Distinct keys in order of first appearance, and their counts."""
    uniq, first, counts = np.unique(keys, return_index=True, return_counts=True)
    order = np.argsort(first, kind="stable")
    return uniq[order], counts[order]


def _decode(key: int, vocab_b: int) -> tuple[int, int]:
    return divmod(int(key), vocab_b)


def pair_stats(corpus: Iterable[TokenStream]) -> PairStats:
    corpus, va, vb = _check_corpus(corpus)
    counts: dict[tuple[int, int], int] = {}
    total = 0
    for ts in corpus:
        total += ts.num_frames
        if ts.num_frames == 0:
            continue
        keys = ts.tokens[:, 0].astype(np.uint64) * np.uint64(vb) + ts.tokens[:, 1].astype(np.uint64)
        for key, n in zip(*_first_occurrence(keys)):
            pair = _decode(key, vb)
            counts[pair] = counts.get(pair, 0) + int(n)
    return PairStats(len(counts), total, counts, len(counts) / (va * vb), va, vb)


def build_pair_vocab(corpus: Iterable[TokenStream]) -> PairFoldTable:
    """Fold table over all pairs seen in ``corpus``; ids follow first occurrence."""
    stats = pair_stats(corpus)
    return PairFoldTable(stats.vocab_a, stats.vocab_b, tuple(stats.counts))


def _check_streams(ts: TokenStream, streams: int):
    if ts.num_streams != streams:
        raise ShapeMismatch(f"expected {streams} stream(s), got {ts.num_streams}")


def fold(ts: TokenStream, table: PairFoldTable, oov: OOVMode = "error") -> TokenStream:
    """Map each (a, b) frame to its folded id.

    With ``oov="reserve"`` unseen pairs map to ``table.folded_vocab`` and the
    output vocabulary grows by one; with ``"error"`` they raise UnseenPair.
    """
    if oov not in ("error", "reserve"):
        raise ValueError(f"oov must be 'error' or 'reserve', got {oov!r}")
    _check_streams(ts, 2)
    if ts.vocab_sizes != (table.vocab_a, table.vocab_b):
        raise ShapeMismatch(
            f"stream vocabularies {ts.vocab_sizes} != table ({table.vocab_a}, {table.vocab_b})"
        )
    keys = table.keys_of(ts.tokens[:, 0], ts.tokens[:, 1])
    sk, sid = table._sorted_keys, table._sorted_ids
    pos = np.searchsorted(sk, keys)
    pos_c = np.minimum(pos, max(len(sk) - 1, 0))
    hit = (pos < len(sk)) & (sk[pos_c] == keys) if len(sk) else np.zeros(len(keys), bool)
    out = np.full(len(keys), table.folded_vocab, dtype=np.int64)
    out[hit] = sid[pos_c[hit]]
    if oov == "error" and not hit.all():
        t = int(np.argmin(hit))
        raise UnseenPair(t, (int(ts.tokens[t, 0]), int(ts.tokens[t, 1])))
    # an empty table can only fold empty streams; a vocabulary must still be >= 1
    vocab = max(table.folded_vocab + (oov == "reserve"), 1)
    return TokenStream(ts.utt_id, ts.frame_rate_hz, (vocab,), out.reshape(-1, 1))


def unfold(ts: TokenStream, table: PairFoldTable) -> TokenStream:
    """Inverse of :func:`fold` for streams without reserved OOV ids."""
    _check_streams(ts, 1)
    tok = ts.tokens[:, 0]
    bad = tok >= table.folded_vocab
    if bad.any():
        t = int(np.argmax(bad))
        raise NotInvertible(f"token {int(tok[t])} at frame {t} has no pair (folded_vocab={table.folded_vocab})")
    pairs = table._pair_array[tok]
    return TokenStream(ts.utt_id, ts.frame_rate_hz, (table.vocab_a, table.vocab_b), pairs)
