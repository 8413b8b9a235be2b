"""OpenPose keypoint documents, subject selection and dataset manifests."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .core import SkeletonSequence
from .topology import TopologySpec

BODY_POINTS = 25
FACE_POINTS = 70
SOURCES = {"body": BODY_POINTS, "face": FACE_POINTS}

MANIFEST_FIELDS = ("sample_id", "path", "label", "num_frames")


class PoseParseError(ValueError):
    """The document is not well-formed; ``offset`` is a byte offset into it."""

    def __init__(self, message: str, offset: int):
        self.offset = offset
        super().__init__(f"{message} (byte offset {offset})")


class PoseSchemaError(ValueError):
    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(message)


class MappingError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Person:
    body: np.ndarray  # (25, 3)
    face: Optional[np.ndarray] = None  # (70, 3)

    @property
    def body_confidence(self) -> float:
        return float(self.body[:, 2].sum())


@dataclass(frozen=True)
class RawPoseFrame:
    people: tuple[Person, ...] = ()


def _triples(values, field: str, count: int, label: str) -> np.ndarray:
    if not isinstance(values, list) or not all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in values
    ):
        raise PoseSchemaError(field, f"{label} must be a flat list of numbers")
    if len(values) != 3 * count:
        raise PoseSchemaError(
            field, f"{label} length {len(values)} not divisible into {count} triples"
        )
    return np.asarray(values, dtype=np.float64).reshape(count, 3)


def parse_pose_frame(text: str | bytes) -> RawPoseFrame:
    """Parse one OpenPose per-frame JSON document.

    Each entry of ``people`` needs ``pose_keypoints_2d`` with 75 numbers;
    ``face_keypoints_2d`` is optional (an empty list counts as absent) but
    must hold 210 numbers when given.

    Raises:
        PoseParseError: malformed JSON, with the byte offset of the fault.
        PoseSchemaError: a field is missing or has the wrong triple count.
    """
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise PoseParseError("invalid UTF-8", exc.start) from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[: exc.pos].encode("utf-8"))
        raise PoseParseError(exc.msg, offset) from exc
    if not isinstance(doc, dict) or "people" not in doc:
        raise PoseSchemaError("people", "document has no top-level 'people' array")
    if not isinstance(doc["people"], list):
        raise PoseSchemaError("people", "'people' must be an array")
    people = []
    for i, entry in enumerate(doc["people"]):
        if not isinstance(entry, dict) or "pose_keypoints_2d" not in entry:
            raise PoseSchemaError(
                "pose_keypoints_2d", f"person {i} has no 'pose_keypoints_2d'"
            )
        body = _triples(entry["pose_keypoints_2d"], "pose_keypoints_2d", BODY_POINTS, "body_points")
        face = entry.get("face_keypoints_2d")
        if face is not None and face != []:
            face = _triples(face, "face_keypoints_2d", FACE_POINTS, "face_points")
        else:
            face = None
        people.append(Person(body, face))
    return RawPoseFrame(tuple(people))


def select_person(raw: RawPoseFrame, min_confidence_sum: float = 0.0) -> Optional[int]:
    """Index of the person with the largest summed body confidence.

    Ties go to the lowest index. Returns None when nobody is detected or the
    best sum is below ``min_confidence_sum``.
    """
    if not raw.people:
        return None
    sums = [p.body_confidence for p in raw.people]
    best = max(range(len(sums)), key=lambda i: (sums[i], -i))
    if sums[best] < min_confidence_sum:
        return None
    return best


@dataclass(frozen=True)
class JointIndexMap:
    """Where each topology joint is read from: ``(source, index)`` pairs,
    source being ``"body"`` or ``"face"``."""

    entries: tuple[tuple[str, int], ...]

    def __post_init__(self) -> None:
        entries = tuple((str(s), int(i)) for s, i in self.entries)
        for j, (src, idx) in enumerate(entries):
            if src not in SOURCES:
                raise MappingError(f"joint {j}: unknown source array {src!r}")
            if not 0 <= idx < SOURCES[src]:
                raise MappingError(
                    f"joint {j}: {src} index {idx} out of range [0, {SOURCES[src]})"
                )
        object.__setattr__(self, "entries", entries)

    def __len__(self) -> int:
        return len(self.entries)

    @classmethod
    def for_topology(cls, topo: TopologySpec) -> "JointIndexMap":
        """The mapping declared in the topology file, else body points 0..V-1."""
        if topo.joint_sources is not None:
            return cls(topo.joint_sources)
        return cls(tuple(("body", j) for j in range(topo.num_joints)))


def frame_keypoints(raw: RawPoseFrame, mapping: JointIndexMap, min_confidence_sum: float = 0.0) -> np.ndarray:
    out = np.zeros((len(mapping), 3))
    who = select_person(raw, min_confidence_sum)
    if who is None:
        return out
    person = raw.people[who]
    for j, (src, idx) in enumerate(mapping.entries):
        if src == "body":
            out[j] = person.body[idx]
        elif person.face is not None:
            out[j] = person.face[idx]
    return out


def load_sequence(
    frame_documents: Sequence[str | bytes],
    topo: TopologySpec,
    mapping: Optional[JointIndexMap] = None,
    *,
    label: Optional[int] = None,
    sample_id: str = "",
    fps: Optional[float] = None,
    min_confidence_sum: float = 0.0,
) -> SkeletonSequence:
    """Build a sequence with one frame per document, joints ordered as in ``topo``.

    Frames without a selected person, and face joints of a person without
    face points, are filled with (0, 0, 0).
    """
    if mapping is None:
        mapping = JointIndexMap.for_topology(topo)
    if len(mapping) != topo.num_joints:
        raise MappingError(
            f"mapping covers {len(mapping)} joints, topology {topo.name!r} has {topo.num_joints}"
        )
    frames = [
        frame_keypoints(parse_pose_frame(doc), mapping, min_confidence_sum)
        for doc in frame_documents
    ]
    kp = np.stack(frames) if frames else np.zeros((0, topo.num_joints, 3))
    return SkeletonSequence(kp, label, sample_id, fps)


def read_frame_documents(path: str | Path) -> list[str]:
    """Per-frame documents of one sample.

    ``path`` is either a directory of ``*.json`` files (taken in sorted name
    order, as OpenPose writes them) or a ``.jsonl`` file holding one document
    per line.
    """
    path = Path(path)
    if path.is_dir():
        return [p.read_text(encoding="utf-8") for p in sorted(path.glob("*.json"))]
    return [line for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]


@dataclass(frozen=True)
class ManifestRow:
    sample_id: str
    path: str
    label: Optional[int]
    num_frames: int


def read_manifest(path: str | Path) -> list[ManifestRow]:
    """Rows of a ``sample_id,path,label,num_frames`` CSV; label -1 means unlabeled."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(MANIFEST_FIELDS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"manifest {path} lacks columns {sorted(missing)}")
        for lineno, rec in enumerate(reader, 2):
            try:
                label = int(rec["label"])
                rows.append(
                    ManifestRow(
                        rec["sample_id"],
                        rec["path"],
                        None if label < 0 else label,
                        int(rec["num_frames"]),
                    )
                )
            except (TypeError, ValueError) as exc:
                raise ValueError(f"manifest {path}, line {lineno}: {exc}") from exc
    return rows


def write_manifest(rows: Iterable[ManifestRow], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(MANIFEST_FIELDS)
        for r in rows:
            writer.writerow([r.sample_id, r.path, -1 if r.label is None else r.label, r.num_frames])
