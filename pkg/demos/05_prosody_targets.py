"""
Prosody targets from phone-averaged features
============================================

"""

# A prosody controller predicts one discrete label per phone. The labels come
# from k-means over phone-averaged prosodic features with their deltas.
import numpy as np

from dstok import AlignmentTrack, FeatureMatrix, KMeansConfig, kmeans_train
from dstok.prosody import ProsodyConfig, add_deltas, apply_cmn, cmn_stats, phone_average, prosody_labels

rng = np.random.default_rng(5)
cfg = ProsodyConfig(base_dims=3, delta_orders=2)

# Three base features per 20 ms frame: log pitch, probability of voice and
# log energy. Each phone holds roughly steady values.
def utterance(utt_id, n_phones):
    durs = rng.integers(3, 12, n_phones)
    track = AlignmentTrack(utt_id, "1/50", [(f"p{i}", int(d)) for i, d in enumerate(durs)])
    level = np.stack([np.log(rng.uniform(90, 260, n_phones)), rng.uniform(0, 1, n_phones),
                      rng.uniform(3, 10, n_phones)], axis=1)
    frames = np.repeat(level, durs, axis=0) + 0.02 * rng.normal(size=(durs.sum(), 3))
    return FeatureMatrix(utt_id, "1/50", frames), track

data = [utterance(f"utt{i}", 40) for i in range(30)]

# First and second backward differences are appended: 3 dims become 9.
with_deltas = [add_deltas(f, cfg.delta_orders) for f, _ in data]
print("dims after deltas:", with_deltas[0].dims, "expected", cfg.output_dims)

# Mean normalization with statistics from the training set only.
mean = cmn_stats(with_deltas)
normed = [apply_cmn(f, mean) for f in with_deltas]
print("corpus mean after CMN:", np.abs(np.concatenate([f.values for f in normed]).mean(axis=0)).max())

# One vector per phone, then k-means over all phone vectors.
per_phone = [phone_average(f, track) for f, (_, track) in zip(normed, data)]
vectors = FeatureMatrix("phones", "1/50", np.concatenate(per_phone))
cb = kmeans_train(vectors, KMeansConfig(k=8, seed=0))
labels = prosody_labels(per_phone[0], cb)
print("phone labels of utt0:", labels.tolist())
print("label histogram:", np.bincount(prosody_labels(vectors.values, cb), minlength=8).tolist())
