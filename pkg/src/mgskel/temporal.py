"""Temporal alignment of skeleton sequences to a fixed clip length.

Two strategies are provided. ``proposed`` keeps the whole temporal extent:
long sequences are subsampled at uniform intervals that always include the
first and last frame, short ones are stretched by linear interpolation.
``baseline`` crops a random contiguous window from long sequences and
zero-pads short ones.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import SkeletonSequence

DEFAULT_TARGET_LENGTH = 48
STRATEGIES = ("proposed", "baseline")


@dataclass(frozen=True)
class AlignmentPolicy:
    target_length: int = DEFAULT_TARGET_LENGTH
    strategy: str = "proposed"
    rng_seed: int = 0
    # "linear" or "min" (minimum of the bracketing confidences)
    confidence_mode: str = "linear"

    def __post_init__(self) -> None:
        if self.target_length < 1:
            raise ValueError(f"target_length must be >= 1, got {self.target_length}")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if self.rng_seed < 0:
            raise ValueError("rng_seed must be non-negative")
        if self.confidence_mode not in ("linear", "min"):
            raise ValueError(f"unknown confidence_mode {self.confidence_mode!r}")


def _check_lengths(n: int, t: int) -> None:
    if n <= 0:
        raise ValueError(f"source length must be >= 1, got {n}")
    if t <= 0:
        raise ValueError(f"target length must be >= 1, got {t}")


def sample_indices_uniform(n: int, t: int) -> list[int]:
    """Indices round_half_up(k * (n - 1) / (t - 1)) for k = 0..t-1.

    Evaluated in integer arithmetic, so the first index is 0 and the last
    is n - 1 exactly. ``t == 1`` gives ``[0]`` and ``n == 1`` gives t zeros.
    """
    _check_lengths(n, t)
    if t == 1:
        return [0]
    den = t - 1
    # floor(x + 1/2) with x = k(n-1)/den, i.e. floor((2k(n-1) + den) / (2 den))
    return [(2 * k * (n - 1) + den) // (2 * den) for k in range(t)]


def resample_uniform(seq: SkeletonSequence, t: int) -> SkeletonSequence:
    idx = sample_indices_uniform(seq.num_frames, t)
    return seq.with_keypoints(seq.keypoints[idx])


def interpolate_linear(
    seq: SkeletonSequence, t: int, confidence_mode: str = "linear"
) -> SkeletonSequence:
    """Stretch (or shrink) ``seq`` to ``t`` frames by linear interpolation.

    Output frame k sits at source position p = k (n - 1) / (t - 1) and blends
    frames floor(p) and floor(p) + 1 with weight p - floor(p). Frames that
    land on a source index are copied, which makes both endpoints (and the
    ``n == t`` case) bit-exact. With ``confidence_mode="min"`` blended frames
    take the smaller of the two confidences instead.
    """
    n = seq.num_frames
    _check_lengths(n, t)
    src = seq.keypoints
    if t == 1:
        return seq.with_keypoints(src[:1])
    if n == 1:
        return seq.with_keypoints(np.repeat(src, t, axis=0))

    den = t - 1
    num = np.arange(t, dtype=np.int64) * (n - 1)
    lo = num // den
    alpha = (num % den) / den
    hi = np.minimum(lo + 1, n - 1)

    a, b = src[lo], src[hi]
    w = alpha[:, None, None]
    # a + w (b - a) leaves a untouched when a == b; clipping absorbs the
    # last-ulp overshoot so results stay inside the bracketing interval
    out = np.clip(a + w * (b - a), np.minimum(a, b), np.maximum(a, b))
    if confidence_mode == "min":
        out[..., 2] = np.minimum(a[..., 2], b[..., 2])
    elif confidence_mode != "linear":
        raise ValueError(f"unknown confidence_mode {confidence_mode!r}")
    on_grid = alpha == 0
    out[on_grid] = a[on_grid]
    return seq.with_keypoints(out)


def random_crop(seq: SkeletonSequence, t: int, seed: int) -> SkeletonSequence:
    """Contiguous window of ``t`` frames at a seeded uniform offset."""
    n = seq.num_frames
    _check_lengths(n, t)
    if n < t:
        raise ValueError(
            f"random_crop needs at least {t} frames, got {n}; use zero_pad for short sequences"
        )
    offset = int(np.random.default_rng(seed).integers(0, n - t + 1))
    return seq.with_keypoints(seq.keypoints[offset : offset + t])


def zero_pad(seq: SkeletonSequence, t: int) -> SkeletonSequence:
    n = seq.num_frames
    _check_lengths(n, t)
    if n > t:
        raise ValueError(
            f"zero_pad needs at most {t} frames, got {n}; use random_crop for long sequences"
        )
    pad = np.zeros((t - n,) + seq.keypoints.shape[1:])
    return seq.with_keypoints(np.concatenate([seq.keypoints, pad]))


def align(seq: SkeletonSequence, policy: AlignmentPolicy = AlignmentPolicy()) -> SkeletonSequence:
    n, t = seq.num_frames, policy.target_length
    if n == t:
        return seq
    if policy.strategy == "proposed":
        if n > t:
            return resample_uniform(seq, t)
        return interpolate_linear(seq, t, policy.confidence_mode)
    if n > t:
        return random_crop(seq, t, policy.rng_seed)
    return zero_pad(seq, t)
