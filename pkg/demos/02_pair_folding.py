"""
Folding two codebook groups into one vocabulary
===============================================

"""

# Two parallel token streams (group A, group B) can be replaced by one stream
# whose vocabulary lists only the (a, b) pairs that were actually observed.
import numpy as np

from dstok import TokenStream, build_pair_vocab, corpus_bitrate, fold, pair_stats, unfold
from dstok.errors import UnseenPair

rng = np.random.default_rng(0)

# Synthetic 2 x 320 codes with strong dependence between the groups:
# b is mostly a function of a, with some noise.
def utterance(utt_id, frames, noise=12):
    a = rng.integers(0, 320, frames)
    b = (a * 7 + rng.integers(0, noise, frames)) % 320
    return TokenStream(utt_id, 50, (320, 320), np.stack([a, b], axis=1))

train = [utterance(f"train{i}", 2000) for i in range(20)]

stats = pair_stats(train)
print("frames              :", stats.total_frames)
print("unique pairs        :", stats.unique_pairs, "of", 320 * 320)
print("coverage            :", f"{stats.coverage:.4f}")

# Ids are assigned in first-occurrence order over the corpus, so rebuilding
# from the same files always gives the same table.
table = build_pair_vocab(train)
print("folded vocabulary   :", table.folded_vocab)
print("first five pairs    :", table.pairs[:5])

folded = [fold(ts, table) for ts in train]
print("2-group bitrate     :", f"{corpus_bitrate(train).total_bps:.2f} bps")
print("folded bitrate      :", f"{corpus_bitrate(folded).total_bps:.2f} bps")

# The transform is lossless for anything the table covers.
print("unfold(fold(x)) == x:", all(unfold(f, table) == ts for f, ts in zip(folded, train)))

# A held-out utterance may contain pairs the table never saw (here the noise
# is a little wider than in training). The default mode refuses them;
# "reserve" maps them all to one extra id.
test = utterance("test", 500, noise=14)
try:
    fold(test, table)
except UnseenPair as e:
    print("error mode          :", type(e).__name__, e)
reserved = fold(test, table, oov="reserve")
unseen = int((reserved.stream(0) == table.folded_vocab).sum())
print("reserve mode        :", unseen, "unseen frames mapped to id", table.folded_vocab)
