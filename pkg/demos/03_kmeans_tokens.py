"""
Turning continuous features into k-means tokens
===============================================

"""

# Frames of a feature matrix are clustered with k-means; each frame's token is
# the index of its nearest centroid.
import io
import time

import numpy as np

from dstok import FeatureMatrix, KMeansConfig, inertia, kmeans_assign
from dstok import io as dio
from dstok.quantize import kmeans_fit

rng = np.random.default_rng(3)

# Stand-in for self-supervised features: 12 overlapping blobs in 16 dims,
# three utterances at a 20 ms frame shift.
centers = rng.normal(scale=0.8, size=(12, 16))
def utterance(utt_id, frames):
    which = rng.integers(0, 12, frames)
    return FeatureMatrix(utt_id, "1/50", centers[which] + rng.normal(size=(frames, 16)))

corpus = [utterance(f"utt{i}", 4000) for i in range(3)]

# Training is deterministic: k-means++ seeding driven by a splitmix64 stream,
# then Lloyd iterations until the relative improvement drops below rel_tol.
cfg = KMeansConfig(k=12, seed=0, max_iters=50, rel_tol=1e-6)
t0 = time.perf_counter()
result = kmeans_fit(corpus, cfg)
print("trained in", f"{time.perf_counter() - t0:.2f}s,", result.codebook.iterations_run, "iterations")
print("inertia per iteration:", [round(v, 1) for v in result.inertia_history])

cb = result.codebook
tokens = kmeans_assign(corpus[0], cb)
print("tokens:", tokens.stream(0)[:20], "... at", tokens.frame_rate_hz, "Hz, vocab", tokens.vocab_sizes)
print("inertia of utt0:", f"{inertia(corpus[0], cb):.1f}")

# The worker count only changes speed. Reductions run over fixed 4096-frame
# chunks in a fixed order, so the codebook bytes do not depend on it.
cb8 = kmeans_fit(corpus, cfg, threads=8).codebook
print("1 thread == 8 threads:", dio.write_codebook(cb) == dio.write_codebook(cb8))

# Codebooks serialize to a small binary record with the training metadata.
buf = io.BytesIO()
dio.write_codebook(cb, buf)
print("codebook file:", len(buf.getvalue()), "bytes; reloads equal:", dio.read_codebook(buf.getvalue()) == cb)
