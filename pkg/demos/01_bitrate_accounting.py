"""
Bitrate accounting for discrete speech tokens
=============================================

"""

# A token stream costs frame_rate * log2(vocab) bits per second if every
# token is coded with its information content, or frame_rate * ceil(log2(vocab))
# if every token gets a whole number of bits.
from dstok import stream_bitrate, corpus_bitrate, TokenStream, repeat_tokens, collapse_repeats
import numpy as np

# A codec at 25 Hz with a single 1024-entry codebook: 25 * 10 bits.
r = stream_bitrate("25/1", [1024], "exact")
print("codec 25 Hz x 1024      :", f"{r.total_bps:.3f} bps")

# A self-supervised quantizer with 2 groups of 320 entries at 50 Hz.
r = stream_bitrate(50, [320, 320], "exact")
print("2 groups x 320 at 50 Hz :", f"{r.total_bps:.3f} bps", r.per_stream_bps)

# Only a fraction of the 320 * 320 = 102400 combinations ever occur. Folding the
# observed pairs into one vocabulary of 24686 entries lowers the rate.
r = stream_bitrate(50, [24686], "exact")
print("folded 24686 at 50 Hz   :", f"{r.total_bps:.3f} bps")

# Integer-bit accounting for 2000 k-means classes at 50 Hz: ceil(log2 2000) = 11.
r = stream_bitrate(50, [2000], "ceil")
print("k-means 2000, ceil mode :", f"{r.total_bps:.3f} bps")
print("same, exact mode        :", f"{stream_bitrate(50, [2000], 'exact').total_bps:.3f} bps")

# corpus_bitrate divides total bits by total seconds, so a corpus mixing frame
# rates is weighted by duration rather than by utterance.
a = TokenStream("a", 25, (1024,), np.zeros(50, dtype=int))   # 2 s
b = TokenStream("b", 50, (1024,), np.zeros(50, dtype=int))   # 1 s
print("mixed 25/50 Hz corpus   :", f"{corpus_bitrate([a, b]).total_bps:.3f} bps")

# Repeating each token twice doubles the frame rate a model sees, but the
# information is unchanged: collapsing recovers the source stream exactly.
rep = repeat_tokens(a, 2)
print("repeated stream rate    :", rep.frame_rate_hz, "Hz,",
      f"{corpus_bitrate([rep]).total_bps:.3f} bps nominal")
print("collapse(repeat(a)) == a:", collapse_repeats(rep, 2) == a)
