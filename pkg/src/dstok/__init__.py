"""dstok: discrete speech token tooling.

k-means tokenization, pair folding of two-group codebooks, frame-rate and
duration arithmetic, prosody target preparation, bitrate accounting and
error-rate metrics, with bit-exact file formats and a batch CLI.
"""

from .core import (
    AlignmentTrack,
    BitrateReport,
    Codebook,
    FeatureMatrix,
    PairFoldTable,
    TokenStream,
    as_fraction,
    validate,
)
from .errors import DstokError, InvariantViolation
from .fold import build_pair_vocab, fold, pair_stats, unfold
from .metrics import (
    cer,
    corpus_bitrate,
    edit_distance,
    log_f0_rmse,
    relative_reduction,
    stream_bitrate,
    wer,
)
from .prosody import add_deltas, apply_cmn, cmn_stats, phone_average, prosody_labels
from .quantize import (
    KMeansConfig,
    inertia,
    kmeans_assign,
    kmeans_assign_groups,
    kmeans_train,
    kmeans_train_groups,
)
from .timebase import (
    collapse_repeats,
    compress_labels,
    downsample_alignment,
    expand_labels,
    repeat_tokens,
    seconds_to_frames,
)

__version__ = "0.1.0"

__all__ = [
    "AlignmentTrack", "BitrateReport", "Codebook", "FeatureMatrix", "PairFoldTable",
    "TokenStream", "as_fraction", "validate", "DstokError", "InvariantViolation",
    "build_pair_vocab", "fold", "pair_stats", "unfold",
    "cer", "corpus_bitrate", "edit_distance", "log_f0_rmse", "relative_reduction",
    "stream_bitrate", "wer",
    "add_deltas", "apply_cmn", "cmn_stats", "phone_average", "prosody_labels",
    "KMeansConfig", "inertia", "kmeans_assign", "kmeans_assign_groups", "kmeans_train",
    "kmeans_train_groups",
    "collapse_repeats", "compress_labels", "downsample_alignment", "expand_labels",
    "repeat_tokens", "seconds_to_frames",
]
