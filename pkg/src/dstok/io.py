"""Binary and text file formats for the core types.

Binary layouts (all integers little-endian, every record starts with a
4-byte magic whose last byte is the format version):

``DSF1`` feature matrix::

    magic  u32 dims  u64 frames  u32 shift_num  u32 shift_den
    u16 id_len  id_len bytes UTF-8  frames*dims float32 (row-major)

``DST1`` token stream::

    magic  u32 rate_num  u32 rate_den  u16 num_streams
    num_streams * u32 vocab  u64 num_frames  u16 id_len  id bytes
    num_frames*num_streams u32 tokens (frame-major, streams interleaved)

``DSC1`` codebook::

    magic  u32 k  u32 dims  u64 seed  k*dims float64
    u32 iterations_run  float64 final_inertia

``DSP1`` pair table::

    magic  u32 vocab_a  u32 vocab_b  u32 count  count * (u32 a, u32 b)

A binary file may hold several records back to back. Text formats are
one utterance per line, TAB-separated; see ``docs/formats.md``.
"""

from __future__ import annotations

import struct
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .core import AlignmentTrack, Codebook, FeatureMatrix, PairFoldTable, TokenStream, as_fraction
from .errors import (
    BadMagic,
    DuplicatePair,
    FormatError,
    InvariantViolation,
    NonFiniteValue,
    RaggedStreams,
    TokenOutOfRange,
    TruncatedFile,
    ZeroDuration,
)

MAGIC_FEATURES = b"DSF1"
MAGIC_TOKENS = b"DST1"
MAGIC_CODEBOOK = b"DSC1"
MAGIC_PAIRS = b"DSP1"

U32_MAX = 2**32 - 1


class _Reader:
    """Cursor over a byte buffer that raises TruncatedFile with the offset."""

    def __init__(self, data: bytes, pos: int = 0):
        self.data = data
        self.pos = pos

    def at_end(self) -> bool:
        return self.pos >= len(self.data)

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise TruncatedFile(f"need {n} bytes, {len(self.data) - self.pos} left", self.pos)
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        fmt = "<" + fmt
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def magic(self, expected: bytes):
        start = self.pos
        got = self.take(4)
        if got != expected:
            raise BadMagic(f"expected magic {expected!r}, found {got!r}", start)

    def array(self, dtype, count: int) -> np.ndarray:
        dt = np.dtype(dtype).newbyteorder("<")
        return np.frombuffer(self.take(dt.itemsize * count), dtype=dt).astype(np.dtype(dtype).newbyteorder("="))

    def utt_id(self) -> str:
        (n,) = self.unpack("H")
        start = self.pos
        raw = self.take(n)
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError as e:
            raise FormatError(f"utt_id is not valid UTF-8: {e}", start) from e


def _rational_fields(x: Fraction, what: str) -> bytes:
    if not (0 < x.numerator <= U32_MAX and 0 < x.denominator <= U32_MAX):
        raise InvariantViolation(f"{what} {x} does not fit u32 numerator/denominator")
    return struct.pack("<II", x.numerator, x.denominator)


def _read_rational(r: _Reader, what: str) -> Fraction:
    start = r.pos
    num, den = r.unpack("II")
    if num == 0 or den == 0:
        raise FormatError(f"{what} {num}/{den} must be positive", start)
    return Fraction(num, den)


def _id_bytes(utt_id: str) -> bytes:
    raw = utt_id.encode("utf-8")
    if len(raw) > 0xFFFF:
        raise InvariantViolation("utt_id longer than 65535 bytes")
    return struct.pack("<H", len(raw)) + raw


def _read_all(src) -> bytes:
    if isinstance(src, (bytes, bytearray, memoryview)):
        return bytes(src)
    if isinstance(src, (str, Path)):
        return Path(src).read_bytes()
    return src.read()


def _text_lines(src) -> Iterator[tuple[int, str]]:
    # only LF (optionally CRLF) ends a line; str.splitlines would also split
    # on control characters that are legal inside an utterance id
    raw = _read_all(src)
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as e:
        raise FormatError("text file is not valid UTF-8", e.start) from e
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    for i, line in enumerate(lines, 1):
        yield i, line[:-1] if line.endswith("\r") else line


def _emit(dst, data: bytes):
    if dst is None:
        return data
    if isinstance(dst, (str, Path)):
        Path(dst).write_bytes(data)
    else:
        dst.write(data)
    return data


def _records(src, parse_one) -> list:
    r = _Reader(_read_all(src))
    out = [parse_one(r)]
    while not r.at_end():
        out.append(parse_one(r))
    return out


def _single(src, parse_one):
    r = _Reader(_read_all(src))
    value = parse_one(r)
    if not r.at_end():
        raise FormatError(f"{len(r.data) - r.pos} trailing bytes after record", r.pos)
    return value


# -- feature matrices ------------------------------------------------------

def feature_matrix_bytes(f: FeatureMatrix) -> bytes:
    head = MAGIC_FEATURES + struct.pack("<IQ", f.dims, f.frames)
    head += _rational_fields(f.frame_shift_s, "frame shift") + _id_bytes(f.utt_id)
    return head + np.ascontiguousarray(f.values, dtype="<f4").tobytes()


def _parse_feature_matrix(r: _Reader) -> FeatureMatrix:
    r.magic(MAGIC_FEATURES)
    dims, frames = r.unpack("IQ")
    if dims == 0:
        raise FormatError("dims must be >= 1", r.pos - 12)
    shift = _read_rational(r, "frame shift")
    utt = r.utt_id()
    start = r.pos
    values = r.array(np.float32, dims * frames).reshape(frames, dims)
    bad = ~np.isfinite(values)
    if bad.any():
        flat = int(np.argmax(bad.reshape(-1)))
        raise NonFiniteValue(f"non-finite value at frame {flat // dims}, dim {flat % dims}", start + 4 * flat)
    return FeatureMatrix(utt, shift, values)


def write_feature_matrix(f: FeatureMatrix, dst=None) -> bytes:
    return _emit(dst, feature_matrix_bytes(f))


def write_feature_matrices(fs: Iterable[FeatureMatrix], dst=None) -> bytes:
    return _emit(dst, b"".join(feature_matrix_bytes(f) for f in fs))


def read_feature_matrix(src) -> FeatureMatrix:
    return _single(src, _parse_feature_matrix)


def read_feature_matrices(src) -> list[FeatureMatrix]:
    return _records(src, _parse_feature_matrix)


# -- token streams ---------------------------------------------------------

def token_stream_bytes(ts: TokenStream) -> bytes:
    out = MAGIC_TOKENS + _rational_fields(ts.frame_rate_hz, "frame rate")
    out += struct.pack("<H", ts.num_streams)
    out += struct.pack(f"<{ts.num_streams}I", *ts.vocab_sizes)
    out += struct.pack("<Q", ts.num_frames) + _id_bytes(ts.utt_id)
    return out + np.ascontiguousarray(ts.tokens, dtype="<u4").tobytes()


def _parse_token_stream(r: _Reader) -> TokenStream:
    r.magic(MAGIC_TOKENS)
    rate = _read_rational(r, "frame rate")
    (ns,) = r.unpack("H")
    if ns == 0:
        raise FormatError("num_streams must be >= 1", r.pos - 2)
    vocab_at = r.pos
    vocabs = r.unpack(f"{ns}I")
    for s, v in enumerate(vocabs):
        if v == 0:
            raise FormatError(f"stream {s} has vocab 0", vocab_at + 4 * s)
    (frames,) = r.unpack("Q")
    utt = r.utt_id()
    start = r.pos
    tokens = r.array(np.uint32, frames * ns).reshape(frames, ns)
    bad = tokens >= np.asarray(vocabs, dtype=np.uint32)
    if bad.any():
        flat = int(np.argmax(bad.reshape(-1)))
        t, s = divmod(flat, ns)
        raise TokenOutOfRange(
            f"token {int(tokens[t, s])} >= vocab {vocabs[s]} (frame {t}, stream {s})", start + 4 * flat
        )
    return TokenStream(utt, rate, vocabs, tokens)


def write_token_stream(ts: TokenStream, dst=None) -> bytes:
    return _emit(dst, token_stream_bytes(ts))


def write_token_streams(streams: Iterable[TokenStream], dst=None) -> bytes:
    return _emit(dst, b"".join(token_stream_bytes(t) for t in streams))


def read_token_stream(src) -> TokenStream:
    return _single(src, _parse_token_stream)


def read_token_streams(src) -> list[TokenStream]:
    return _records(src, _parse_token_stream)


def _check_field(text: str, what: str):
    if not text or any(c in text for c in "\t\n\r"):
        raise InvariantViolation(f"{what} {text!r} must be non-empty and free of tabs/newlines")


def format_token_line(ts: TokenStream) -> str:
    _check_field(ts.utt_id, "utt_id")
    rate = ts.frame_rate_hz
    frames = " ".join(":".join(str(int(t)) for t in row) for row in ts.tokens)
    vocab = ",".join(str(v) for v in ts.vocab_sizes)
    return f"{ts.utt_id}\t{rate.numerator}/{rate.denominator}\t{vocab}\t{frames}"


def parse_token_line(line: str, lineno: int | None = None) -> TokenStream:
    fields = line.rstrip("\r\n").split("\t")
    if len(fields) == 3:
        fields.append("")
    if len(fields) != 4:
        raise FormatError(f"expected 4 TAB-separated fields, got {len(fields)}", line=lineno)
    utt, rate_s, vocab_s, frames_s = fields
    try:
        rate = Fraction(rate_s)
        vocabs = [int(v) for v in vocab_s.split(",")]
    except (ValueError, ZeroDivisionError) as e:
        raise FormatError(f"bad rate or vocab field: {e}", line=lineno) from e
    if rate <= 0 or any(v < 1 for v in vocabs):
        raise FormatError("rate and vocab sizes must be positive", line=lineno)
    rows = []
    for j, frame in enumerate(frames_s.split()):
        parts = frame.split(":")
        if len(parts) != len(vocabs):
            raise RaggedStreams(
                f"frame {j} has {len(parts)} tokens for {len(vocabs)} streams", line=lineno
            )
        try:
            row = [int(p) for p in parts]
        except ValueError as e:
            raise FormatError(f"frame {j}: {e}", line=lineno) from e
        for s, (t, v) in enumerate(zip(row, vocabs)):
            if not 0 <= t < v:
                raise TokenOutOfRange(f"token {t} not in [0, {v}) (frame {j}, stream {s})", line=lineno)
        rows.append(row)
    arr = np.array(rows, dtype=np.int64).reshape(len(rows), len(vocabs))
    return TokenStream(utt, rate, vocabs, arr)


def write_token_text(streams: Iterable[TokenStream], dst=None) -> str:
    text = "".join(format_token_line(t) + "\n" for t in streams)
    if dst is not None:
        _emit(dst, text.encode("utf-8"))
    return text


def read_token_text(src) -> list[TokenStream]:
    return [parse_token_line(line, i) for i, line in _text_lines(src) if line.strip()]


def read_tokens_any(src) -> list[TokenStream]:
    """Binary DST1 records or text lines, detected from the first four bytes."""
    data = _read_all(src)
    if isinstance(data, str):
        data = data.encode("utf-8")
    if data[:4] == MAGIC_TOKENS:
        return read_token_streams(data)
    return read_token_text(data)


# -- codebooks -------------------------------------------------------------

def codebook_bytes(cb: Codebook) -> bytes:
    out = MAGIC_CODEBOOK + struct.pack("<IIQ", cb.k, cb.dims, cb.seed)
    out += np.ascontiguousarray(cb.centroids, dtype="<f8").tobytes()
    return out + struct.pack("<Id", cb.iterations_run, cb.final_inertia)


def _parse_codebook(r: _Reader) -> Codebook:
    r.magic(MAGIC_CODEBOOK)
    k, dims, seed = r.unpack("IIQ")
    if k == 0 or dims == 0:
        raise FormatError("k and dims must be >= 1", r.pos - 16)
    start = r.pos
    c = r.array(np.float64, k * dims).reshape(k, dims)
    bad = ~np.isfinite(c)
    if bad.any():
        flat = int(np.argmax(bad.reshape(-1)))
        raise NonFiniteValue(f"non-finite centroid value at ({flat // dims}, {flat % dims})", start + 8 * flat)
    iters, inertia = r.unpack("Id")
    if not (np.isfinite(inertia) and inertia >= 0):
        raise FormatError(f"final_inertia {inertia} must be finite and >= 0", r.pos - 8)
    return Codebook(c, seed=seed, iterations_run=iters, final_inertia=inertia)


def write_codebook(cb: Codebook, dst=None) -> bytes:
    return _emit(dst, codebook_bytes(cb))


def read_codebook(src) -> Codebook:
    return _single(src, _parse_codebook)


def write_codebooks(cbs: Iterable[Codebook], dst=None) -> bytes:
    return _emit(dst, b"".join(codebook_bytes(cb) for cb in cbs))


def read_codebooks(src) -> list[Codebook]:
    return _records(src, _parse_codebook)


# -- pair tables -----------------------------------------------------------

def pair_table_bytes(t: PairFoldTable) -> bytes:
    out = MAGIC_PAIRS + struct.pack("<III", t.vocab_a, t.vocab_b, t.folded_vocab)
    return out + np.asarray(t.pairs, dtype="<u4").reshape(-1, 2).tobytes()


def _parse_pair_table(r: _Reader) -> PairFoldTable:
    r.magic(MAGIC_PAIRS)
    va, vb, count = r.unpack("III")
    if va == 0 or vb == 0:
        raise FormatError("vocab_a and vocab_b must be >= 1", r.pos - 12)
    start = r.pos
    arr = r.array(np.uint32, 2 * count).reshape(count, 2)
    seen = {}
    pairs = []
    for i, (a, b) in enumerate(arr.tolist()):
        off = start + 8 * i
        if a >= va or b >= vb:
            raise TokenOutOfRange(f"pair ({a}, {b}) outside vocabularies ({va}, {vb})", off)
        if (a, b) in seen:
            raise DuplicatePair(f"pair ({a}, {b}) repeats id {seen[(a, b)]}", off)
        seen[(a, b)] = i
        pairs.append((a, b))
    return PairFoldTable(va, vb, tuple(pairs))


def write_pair_table(t: PairFoldTable, dst=None) -> bytes:
    return _emit(dst, pair_table_bytes(t))


def read_pair_table(src) -> PairFoldTable:
    return _single(src, _parse_pair_table)


# -- alignments (text) -----------------------------------------------------

def format_alignment_line(track: AlignmentTrack) -> str:
    _check_field(track.utt_id, "utt_id")
    for label, _ in track.segments:
        if not label or any(c.isspace() for c in label):
            raise InvariantViolation(f"label {label!r} must be non-empty and free of whitespace")
    s = track.frame_shift_s
    segs = " ".join(f"{label}:{dur}" for label, dur in track.segments)
    return f"{track.utt_id}\t{s.numerator}/{s.denominator}\t{segs}"


def parse_alignment_line(line: str, lineno: int | None = None) -> AlignmentTrack:
    fields = line.rstrip("\r\n").split("\t")
    if len(fields) == 2:
        fields.append("")
    if len(fields) != 3:
        raise FormatError(f"expected 3 TAB-separated fields, got {len(fields)}", line=lineno)
    utt, shift_s, segs_s = fields
    try:
        shift = Fraction(shift_s)
    except (ValueError, ZeroDivisionError) as e:
        raise FormatError(f"bad frame shift {shift_s!r}", line=lineno) from e
    if shift <= 0:
        raise FormatError(f"frame shift {shift_s} must be positive", line=lineno)
    segments = []
    for j, item in enumerate(segs_s.split()):
        label, sep, dur_s = item.rpartition(":")
        if not sep or not label:
            raise FormatError(f"segment {j} {item!r} is not label:duration", line=lineno)
        try:
            dur = int(dur_s)
        except ValueError as e:
            raise FormatError(f"segment {j} duration {dur_s!r} is not an integer", line=lineno) from e
        if dur <= 0:
            raise ZeroDuration(f"segment {j} ({label}) has duration {dur}", line=lineno)
        segments.append((label, dur))
    return AlignmentTrack(utt, shift, tuple(segments))


def write_alignments(tracks: Iterable[AlignmentTrack], dst=None) -> str:
    text = "".join(format_alignment_line(t) + "\n" for t in tracks)
    if dst is not None:
        _emit(dst, text.encode("utf-8"))
    return text


def read_alignments(src) -> list[AlignmentTrack]:
    return [parse_alignment_line(line, i) for i, line in _text_lines(src) if line.strip()]


# -- per-frame label sequences (text) ---------------------------------------

def format_frame_labels(utt_id: str, frame_shift_s, labels) -> str:
    _check_field(utt_id, "utt_id")
    s = as_fraction(frame_shift_s)
    return f"{utt_id}\t{s.numerator}/{s.denominator}\t{' '.join(labels)}"


def parse_frame_labels(line: str, lineno: int | None = None) -> tuple[str, Fraction, list[str]]:
    fields = line.rstrip("\r\n").split("\t")
    if len(fields) == 2:
        fields.append("")
    if len(fields) != 3:
        raise FormatError(f"expected 3 TAB-separated fields, got {len(fields)}", line=lineno)
    try:
        shift = Fraction(fields[1])
    except (ValueError, ZeroDivisionError) as e:
        raise FormatError(f"bad frame shift {fields[1]!r}", line=lineno) from e
    if shift <= 0:
        raise FormatError(f"frame shift {fields[1]} must be positive", line=lineno)
    return fields[0], shift, fields[2].split()


# -- generic keyed text ("utt_id<TAB>payload") -------------------------------

def read_keyed_lines(src) -> Iterator[tuple[int, str, str]]:
    """Yield ``(lineno, key, payload)``; the key ends at the first TAB or space."""
    for i, line in _text_lines(src):
        if not line.strip():
            continue
        if "\t" in line:
            key, _, rest = line.partition("\t")
        else:
            key, _, rest = line.strip().partition(" ")
        yield i, key, rest

