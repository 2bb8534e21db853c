"""Exception hierarchy.

Every error raised on bad data derives from :class:`DstokError`, which is
itself a :class:`ValueError`. The CLI maps these to exit code 2.
"""


class DstokError(ValueError):
    pass


class InvariantViolation(DstokError):
    """A core value failed one of its invariants."""

    def __init__(self, invariant, index=None):
        self.invariant = invariant
        self.index = index
        msg = invariant if index is None else f"{invariant} (at index {index})"
        super().__init__(msg)


# quantize / prosody
class TooFewPoints(DstokError):
    pass


class DimMismatch(DstokError):
    pass


class EmptyMatrix(DstokError):
    pass


class EmptyCorpus(DstokError):
    pass


class LengthMismatch(DstokError):
    pass


class FrameShiftMismatch(DstokError):
    pass


# fold
class ShapeMismatch(DstokError):
    pass


class UnseenPair(DstokError):
    def __init__(self, frame, pair):
        self.frame = frame
        self.pair = pair
        super().__init__(f"pair {pair} at frame {frame} is not in the fold table")


class NotInvertible(DstokError):
    pass


# timebase
class NotBlockConstant(DstokError):
    def __init__(self, frame):
        self.frame = frame
        super().__init__(f"block starting at frame {frame} is not constant")


class LengthNotDivisible(DstokError):
    pass


class NegativeDuration(DstokError):
    pass


class EmptySequence(DstokError):
    pass


# metrics
class HeterogeneousCorpus(DstokError):
    pass


class EmptyReference(DstokError):
    pass


class NoVoicedOverlap(DstokError):
    pass


# io
class FormatError(DstokError):
    """Base for file-format errors.

    Binary readers set ``offset`` (byte offset of the bad field); text
    readers set ``line`` (1-based line number).
    """

    def __init__(self, msg, offset=None, line=None):
        self.offset = offset
        self.line = line
        if offset is not None:
            msg = f"{msg} (offset {offset})"
        if line is not None:
            msg = f"{msg} (line {line})"
        super().__init__(msg)


class BadMagic(FormatError):
    pass


class TruncatedFile(FormatError):
    pass


class NonFiniteValue(FormatError):
    pass


class TokenOutOfRange(FormatError):
    pass


class RaggedStreams(FormatError):
    pass


class DuplicatePair(FormatError):
    pass


class ZeroDuration(FormatError):
    pass
