"""Fit sequences of any length to a fixed number of frames.

Run with ``python demos/temporal_alignment.py``.
"""

import numpy as np

from mgskel.core import SkeletonSequence
from mgskel.temporal import (
    AlignmentPolicy,
    align,
    interpolate_linear,
    random_crop,
    sample_indices_uniform,
    zero_pad,
)

# Uniform sampling picks evenly spaced frames and always keeps both ends.
print("10 -> 4 frames picks", sample_indices_uniform(10, 4))
print("4 -> 3 frames picks ", sample_indices_uniform(4, 3))
print("3 -> 7 frames picks ", sample_indices_uniform(3, 7), "(repeats when stretching)")

# A single joint moving along x makes the behaviour easy to read.
kp = np.zeros((2, 1, 3))
kp[:, 0, 2] = 1.0
kp[1, 0, 0] = 9.0
two = SkeletonSequence(kp, sample_id="two_frames")
print("\nlinear interpolation of x from 0 to 9 over 4 frames:",
      interpolate_linear(two, 4).keypoints[:, 0, 0].tolist())

# Confidence can follow the same convex blend, or take the weaker endpoint.
kp[1, 0, 2] = 0.2
weak = SkeletonSequence(kp)
print("confidence, linear:", interpolate_linear(weak, 4).keypoints[:, 0, 2].round(3).tolist())
print("confidence, min:   ", interpolate_linear(weak, 4, confidence_mode="min").keypoints[:, 0, 2].tolist())

# The two strategies side by side on a 30-frame clip aligned to 12 frames.
rng = np.random.default_rng(4)
clip = SkeletonSequence(np.c_[rng.normal(size=(30, 5, 2)), np.ones((30, 5, 1))].reshape(30, 5, 3))
for strategy in ("proposed", "baseline"):
    out = align(clip, AlignmentPolicy(target_length=12, strategy=strategy, rng_seed=1))
    print(f"{strategy:>9}: {clip.num_frames} -> {out.num_frames} frames")

# The baseline crops long clips at a seeded offset and zero-pads short ones.
short = SkeletonSequence(np.ones((5, 5, 3)))
padded = zero_pad(short, 8)
print("\nzero padding keeps", int(padded.keypoints[:, 0, 2].sum()), "real frames of", padded.num_frames)
a, b = random_crop(clip, 12, seed=7), random_crop(clip, 12, seed=7)
print("same seed, same crop:", a.same_frames(b))
