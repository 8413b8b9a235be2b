"""Shared domain types: keypoints, skeleton sequences and the class label map."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Optional, Sequence

import numpy as np

NUM_CLASSES = 33
NON_MG_CLASS = 32

# A frame is a (V, 3) float array of (x, y, confidence) rows.
Frame = np.ndarray


class Keypoint2D(NamedTuple):
    x: float
    y: float
    confidence: float

    @property
    def missing(self) -> bool:
        return self.confidence == 0


@dataclass(frozen=True, eq=False)
class SkeletonSequence:
    """A timed stack of 2D skeleton frames.

    ``keypoints`` has shape (N, V, 3) with the last axis holding
    (x, y, confidence). The array is copied to float64 and made read-only,
    so instances can be shared freely between workers.

    Construction only checks the array rank; the remaining invariants
    (joint count, confidence range, finiteness, N >= 1) are reported by
    :func:`validate_sequence` so that malformed inputs can be diagnosed
    instead of rejected outright.
    """

    keypoints: np.ndarray
    label: Optional[int] = None
    sample_id: str = ""
    fps: Optional[float] = None

    def __post_init__(self) -> None:
        arr = np.array(self.keypoints, dtype=np.float64, copy=True)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValueError(
                f"keypoints must have shape (N, V, 3), got {arr.shape}"
            )
        arr.flags.writeable = False
        object.__setattr__(self, "keypoints", arr)

    @property
    def num_frames(self) -> int:
        return self.keypoints.shape[0]

    @property
    def num_joints(self) -> int:
        return self.keypoints.shape[1]

    def __len__(self) -> int:
        return self.num_frames

    def frame(self, t: int) -> Frame:
        return self.keypoints[t]

    def keypoint(self, t: int, j: int) -> Keypoint2D:
        x, y, c = self.keypoints[t, j]
        return Keypoint2D(float(x), float(y), float(c))

    def with_keypoints(self, keypoints: np.ndarray) -> "SkeletonSequence":
        """Return a copy carrying new frames but the same metadata."""
        return SkeletonSequence(keypoints, self.label, self.sample_id, self.fps)

    def same_frames(self, other: "SkeletonSequence") -> bool:
        """Bit-exact comparison of the frame payloads."""
        return (
            self.keypoints.shape == other.keypoints.shape
            and self.keypoints.tobytes() == other.keypoints.tobytes()
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SkeletonSequence):
            return NotImplemented
        return (
            self.same_frames(other)
            and self.label == other.label
            and self.sample_id == other.sample_id
            and self.fps == other.fps
        )

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class Violation:
    kind: str
    frame: Optional[int]
    joint: Optional[int]
    message: str


@dataclass(frozen=True)
class ValidationReport:
    sample_id: str
    violations: tuple[Violation, ...] = ()

    @property
    def valid(self) -> bool:
        return not self.violations

    def count(self, kind: str) -> int:
        return sum(v.kind == kind for v in self.violations)

    def __str__(self) -> str:
        if self.valid:
            return f"{self.sample_id}: valid"
        lines = [f"{self.sample_id}: {len(self.violations)} violation(s)"]
        lines += [f"  [{v.kind}] {v.message}" for v in self.violations]
        return "\n".join(lines)


EMPTY_SEQUENCE = "empty-sequence"
JOINT_COUNT_MISMATCH = "joint-count-mismatch"
CONFIDENCE_OUT_OF_RANGE = "confidence-out-of-range"
NON_FINITE_COORDINATE = "non-finite-coordinate"


def validate_sequence(seq: SkeletonSequence, topo) -> ValidationReport:
    """Check ``seq`` against the invariants of the domain types.

    A joint-count mismatch is reported once per frame and suppresses the
    per-keypoint checks, since the joint indices are then meaningless.
    """
    out: list[Violation] = []
    n = seq.num_frames
    if n == 0:
        out.append(Violation(EMPTY_SEQUENCE, None, None, "sequence has no frames"))
        return ValidationReport(seq.sample_id, tuple(out))

    if seq.num_joints != topo.num_joints:
        for t in range(n):
            out.append(
                Violation(
                    JOINT_COUNT_MISMATCH,
                    t,
                    None,
                    f"frame {t} has {seq.num_joints} joints, "
                    f"topology {topo.name!r} expects {topo.num_joints}",
                )
            )
        return ValidationReport(seq.sample_id, tuple(out))

    conf = seq.keypoints[..., 2]
    # NaN confidence is out of range too
    bad_conf = ~((conf >= 0.0) & (conf <= 1.0))
    for t, j in zip(*np.nonzero(bad_conf)):
        out.append(
            Violation(
                CONFIDENCE_OUT_OF_RANGE,
                int(t),
                int(j),
                f"frame {t} joint {j}: confidence {conf[t, j]!r} outside [0, 1]",
            )
        )
    xy = seq.keypoints[..., :2]
    bad_xy = (conf > 0) & ~np.isfinite(xy).all(axis=-1)
    for t, j in zip(*np.nonzero(bad_xy)):
        out.append(
            Violation(
                NON_FINITE_COORDINATE,
                int(t),
                int(j),
                f"frame {t} joint {j}: non-finite coordinate "
                f"{tuple(xy[t, j])} with confidence {conf[t, j]}",
            )
        )
    return ValidationReport(seq.sample_id, tuple(out))


@dataclass(frozen=True)
class LabelMap:
    """Bijection between class ids 0..32 and class names."""

    names: tuple[str, ...] = field(
        default_factory=lambda: tuple(f"mg_{i:02d}" for i in range(NON_MG_CLASS))
        + ("non_mg",)
    )

    def __post_init__(self) -> None:
        names = tuple(self.names)
        if len(names) != NUM_CLASSES:
            raise ValueError(f"label map needs {NUM_CLASSES} entries, got {len(names)}")
        if len(set(names)) != len(names):
            raise ValueError("class names must be unique")
        object.__setattr__(self, "names", names)

    @classmethod
    def from_mapping(cls, mapping: Mapping[int, str]) -> "LabelMap":
        if sorted(mapping) != list(range(NUM_CLASSES)):
            raise ValueError(f"class ids must be exactly 0..{NUM_CLASSES - 1}")
        return cls(tuple(mapping[i] for i in range(NUM_CLASSES)))

    def __len__(self) -> int:
        return len(self.names)

    def __contains__(self, class_id: object) -> bool:
        return isinstance(class_id, (int, np.integer)) and 0 <= class_id < len(self.names)

    def name(self, class_id: int) -> str:
        return self.names[class_id]

    def id(self, name: str) -> int:
        return self.names.index(name)


@dataclass(frozen=True)
class ClassHistogram:
    counts: np.ndarray
    imbalance_ratio: float
    empty_classes: tuple[int, ...]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def as_dict(self) -> dict[int, int]:
        """Nonzero counts keyed by class id."""
        return {i: int(c) for i, c in enumerate(self.counts) if c}


def histogram_from_labels(labels: Iterable[int], num_classes: int = NUM_CLASSES) -> ClassHistogram:
    counts = np.zeros(num_classes, dtype=np.int64)
    for label, n in Counter(labels).items():
        counts[label] = n
    nonzero = counts[counts > 0]
    if nonzero.size == 0:
        ratio = 1.0
    else:
        ratio = float(nonzero.max()) / max(1, int(nonzero.min()))
    empty = tuple(int(i) for i in np.flatnonzero(counts == 0))
    return ClassHistogram(counts, ratio, empty)


def summarize_labels(
    seqs: Sequence[SkeletonSequence], labels: LabelMap = LabelMap()
) -> ClassHistogram:
    """Per-class counts of the labeled sequences.

    Unlabeled sequences (``label is None``) are skipped. An empty input
    yields an all-zero histogram with an imbalance ratio of 1.0.

    Raises:
        KeyError: a label is not a class id of ``labels``; the message names
            the offending sample.
    """
    found = []
    for seq in seqs:
        if seq.label is None:
            continue
        if seq.label not in labels:
            raise KeyError(
                f"sample {seq.sample_id!r} has unknown class id {seq.label}"
            )
        found.append(int(seq.label))
    return histogram_from_labels(found, len(labels))
