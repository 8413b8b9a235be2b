"""Late fusion of per-stream class scores and Top-1 evaluation."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .core import NUM_CLASSES


class AlignmentError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ScoreMatrix:
    """Class scores, one row per sample.

    Score files for the challenge carry 33 columns; the type itself accepts
    any positive class count.
    """

    sample_ids: tuple[str, ...]
    scores: np.ndarray

    def __post_init__(self) -> None:
        ids = tuple(str(s) for s in self.sample_ids)
        scores = np.array(self.scores, dtype=np.float64)
        if scores.ndim != 2:
            raise ValueError(f"scores must be 2-D, got shape {scores.shape}")
        if scores.shape[0] != len(ids):
            raise ValueError(f"{scores.shape[0]} score rows for {len(ids)} sample ids")
        if scores.shape[1] < 1:
            raise ValueError("scores need at least one class column")
        if not np.isfinite(scores).all():
            raise ValueError("scores contain non-finite values")
        scores.flags.writeable = False
        object.__setattr__(self, "sample_ids", ids)
        object.__setattr__(self, "scores", scores)

    @property
    def num_samples(self) -> int:
        return self.scores.shape[0]

    @property
    def num_classes(self) -> int:
        return self.scores.shape[1]


def softmax(x: np.ndarray) -> np.ndarray:
    z = x - x.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def fuse_scores(
    streams: Sequence[tuple[ScoreMatrix, float]], apply_softmax: bool = False
) -> ScoreMatrix:
    """Weighted mean of the stream score matrices, row by row.

    Args:
        streams: ``(scores, weight)`` pairs; every matrix must list the same
            sample ids in the same order.
        apply_softmax: turn each stream's rows into probabilities first.
    """
    if not streams:
        raise ValueError("need at least one stream")
    ref = streams[0][0]
    weights = [float(w) for _, w in streams]
    if any(not np.isfinite(w) or w < 0 for w in weights):
        raise ValueError(f"weights must be finite and non-negative, got {weights}")
    if not any(w > 0 for w in weights):
        raise ValueError("at least one weight must be positive")
    for k, (sm, _) in enumerate(streams[1:], 1):
        if sm.sample_ids != ref.sample_ids:
            raise AlignmentError(_divergence(ref.sample_ids, sm.sample_ids, k))
        if sm.num_classes != ref.num_classes:
            raise AlignmentError(
                f"stream {k} has {sm.num_classes} classes, stream 0 has {ref.num_classes}"
            )
    # normalizing the weights first keeps a lone stream, and common scaling
    # of all weights, exact
    total_w = sum(weights)
    fused = np.zeros_like(ref.scores)
    for (sm, _), w in zip(streams, weights):
        fused += (w / total_w) * (softmax(sm.scores) if apply_softmax else sm.scores)
    return ScoreMatrix(ref.sample_ids, fused)


def _divergence(a: Sequence[str], b: Sequence[str], k: int) -> str:
    for i, (x, y) in enumerate(zip(a, b)):
        if x != y:
            return f"stream {k} diverges at row {i}: sample id {y!r}, expected {x!r}"
    return f"stream {k} has {len(b)} samples, stream 0 has {len(a)}"


def predict(scores: ScoreMatrix) -> np.ndarray:
    """Row-wise argmax; ties go to the lowest class index."""
    return np.argmax(scores.scores, axis=1)


def _labels_array(scores: ScoreMatrix, labels) -> np.ndarray:
    if isinstance(labels, Mapping):
        missing = [s for s in scores.sample_ids if s not in labels]
        if missing:
            raise AlignmentError(f"no label for sample {missing[0]!r}")
        labels = [labels[s] for s in scores.sample_ids]
    arr = np.asarray(labels, dtype=np.int64)
    if arr.shape != (scores.num_samples,):
        raise AlignmentError(
            f"{arr.size} labels for {scores.num_samples} scored samples"
        )
    return arr


def top1_accuracy(scores: ScoreMatrix, labels) -> float:
    """Fraction of rows whose argmax equals the label.

    ``labels`` is a sequence aligned with the rows or a sample-id mapping.
    """
    y = _labels_array(scores, labels)
    if y.size == 0:
        raise ValueError("cannot score an empty matrix")
    return int((predict(scores) == y).sum()) / y.size


def confusion_matrix(scores: ScoreMatrix, labels, num_classes: Optional[int] = None) -> np.ndarray:
    """Counts indexed ``[true, predicted]``."""
    y = _labels_array(scores, labels)
    k = num_classes or scores.num_classes
    if y.size and (y.min() < 0 or y.max() >= k):
        raise ValueError(f"labels outside [0, {k})")
    out = np.zeros((k, k), dtype=np.int64)
    np.add.at(out, (y, predict(scores)), 1)
    return out


def read_scores(path: str | Path) -> ScoreMatrix:
    """Read a ``sample_id,c0,...,cK`` CSV."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"score file {path} is empty")
    header = rows[0]
    expected = ["sample_id"] + [f"c{i}" for i in range(len(header) - 1)]
    if header != expected or len(header) < 2:
        raise ValueError(f"score file {path}: header must be sample_id,c0,c1,...")
    ids, vals = [], []
    for lineno, row in enumerate(rows[1:], 2):
        if not row:
            continue
        if len(row) != len(header):
            raise ValueError(f"score file {path}, line {lineno}: expected {len(header)} fields")
        ids.append(row[0])
        try:
            vals.append([float(v) for v in row[1:]])
        except ValueError as exc:
            raise ValueError(f"score file {path}, line {lineno}: {exc}") from exc
    scores = np.array(vals, dtype=np.float64).reshape(len(ids), len(header) - 1)
    return ScoreMatrix(tuple(ids), scores)


def write_scores(sm: ScoreMatrix, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sample_id"] + [f"c{i}" for i in range(sm.num_classes)])
        for sid, row in zip(sm.sample_ids, sm.scores):
            w.writerow([sid] + [repr(float(v)) for v in row])


def read_labels(path: str | Path) -> dict[str, int]:
    """``sample_id,label`` rows; a header row is optional."""
    out: dict[str, int] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), 1):
            if not row:
                continue
            if lineno == 1 and row == ["sample_id", "label"]:
                continue
            if len(row) != 2:
                raise ValueError(f"label file {path}, line {lineno}: expected sample_id,label")
            if row[0] in out:
                raise ValueError(f"label file {path}: duplicate sample id {row[0]!r}")
            out[row[0]] = int(row[1])
    return out


@dataclass(frozen=True)
class EvalReport:
    top1: float
    num_samples: int
    confusion: np.ndarray
    weights: tuple[float, ...]

    def to_text(self) -> str:
        lines = [
            f"top1_accuracy: {self.top1:.6f}",
            f"samples: {self.num_samples}",
            f"weights: {':'.join(f'{w:g}' for w in self.weights)}",
            "confusion (rows = true class, columns = predicted class):",
        ]
        lines += [" ".join(str(int(v)) for v in row) for row in self.confusion]
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps(
            {
                "top1_accuracy": self.top1,
                "num_samples": self.num_samples,
                "weights": list(self.weights),
                "confusion_matrix": self.confusion.tolist(),
            },
            indent=2,
        ) + "\n"


def evaluate(
    streams: Sequence[tuple[ScoreMatrix, float]],
    labels,
    num_classes: int = NUM_CLASSES,
    apply_softmax: bool = False,
) -> EvalReport:
    fused = fuse_scores(streams, apply_softmax)
    k = max(num_classes, fused.num_classes)
    return EvalReport(
        top1_accuracy(fused, labels),
        fused.num_samples,
        confusion_matrix(fused, labels, k),
        tuple(float(w) for _, w in streams),
    )
