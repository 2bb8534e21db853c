"""
Error rates and pitch error
===========================

"""

import numpy as np

from dstok import cer, edit_distance, log_f0_rmse, relative_reduction, wer
from dstok.metrics import TextNormalizer

# Edit distance with the substitution/insertion/deletion breakdown.
r = edit_distance("the cat sat on the mat".split(), "the cat sat in a mat".split())
print("S/I/D:", r.substitutions, r.insertions, r.deletions, "rate", f"{r.rate:.3f}")

# Normalization matters. The default lowercases and collapses whitespace;
# "strict" also drops punctuation; "none" compares raw strings.
ref, hyp = "Hello, world!", "hello world"
for name in ("none", "basic", "strict"):
    print(f"CER ({name:6s}):", f"{cer(ref, hyp, TextNormalizer.preset(name)):.3f}")
print("WER:", wer("turn the lights off", "turn lights of"))

# A drop from 2.31% to 2.01% CER is a 13% relative reduction.
print("relative reduction:", f"{relative_reduction(2.31, 2.01):.2f}%")

# Log-F0 RMSE compares natural-log pitch over frames voiced in both contours.
t = np.arange(200)
ref_f0 = np.where(t % 50 < 40, 120 + 20 * np.sin(t / 15), 0.0)
hyp_f0 = np.where(t % 50 < 38, ref_f0 * 1.05, 0.0)
print("log-F0 RMSE:", f"{log_f0_rmse(ref_f0, hyp_f0):.4f}", "(log 1.05 =", f"{np.log(1.05):.4f})")
