"""Deterministic synthetic OpenPose data for tests, demos and the bundled mini-dataset.

Each sample is a seated upper body with a 70-point face performing one of a
few small, class-specific motions. Legs are occluded (confidence 0), a few
frames drop the detection entirely and some frames carry a faint second
person, which mimics press-conference footage closely enough to exercise
every branch of the pipeline.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .ingest import BODY_POINTS, FACE_POINTS, ManifestRow, write_manifest

# seated upper body in a 640 x 480 image; legs hidden behind a desk
_BODY = np.array(
    [
        [320, 150], [320, 215], [262, 220], [245, 300], [270, 370],
        [378, 220], [395, 300], [370, 370], [320, 360], [292, 360],
        [290, 440], [290, 520], [348, 360], [350, 440], [350, 520],
        [308, 138], [332, 138], [296, 145], [344, 145], [352, 540],
        [360, 540], [350, 525], [288, 540], [280, 540], [290, 525],
    ],
    dtype=np.float64,
)
_HIDDEN_BODY = [10, 11, 13, 14, 19, 20, 21, 22, 23, 24]


def _face_template() -> np.ndarray:
    cx, cy = 320.0, 150.0
    pts = np.zeros((FACE_POINTS, 2))
    a = np.linspace(np.pi * 0.95, np.pi * 0.05, 17)
    pts[0:17] = np.c_[cx - 30 * np.cos(a), cy - 10 + 34 * np.sin(a)]  # jaw
    pts[17:22] = np.c_[np.linspace(cx - 26, cx - 6, 5), cy - 22 - np.array([0, 3, 4, 3, 1])]
    pts[22:27] = np.c_[np.linspace(cx + 6, cx + 26, 5), cy - 22 - np.array([1, 3, 4, 3, 0])]
    pts[27:31] = np.c_[np.full(4, cx), np.linspace(cy - 16, cy - 2, 4)]
    pts[31:36] = np.c_[np.linspace(cx - 6, cx + 6, 5), np.full(5, cy + 2)]
    e = np.linspace(0, 2 * np.pi, 7)[:-1]
    pts[36:42] = np.c_[cx - 14 + 6 * np.cos(e), cy - 12 + 2.5 * np.sin(e)]
    pts[42:48] = np.c_[cx + 14 + 6 * np.cos(e), cy - 12 + 2.5 * np.sin(e)]
    m = np.linspace(np.pi, -np.pi, 13)[:-1]
    pts[48:60] = np.c_[cx + 12 * np.cos(m), cy + 14 - 5 * np.sin(m)]
    m = np.linspace(np.pi, -np.pi, 9)[:-1]
    pts[60:68] = np.c_[cx + 8 * np.cos(m), cy + 14 - 2 * np.sin(m)]
    pts[68] = [cx - 14, cy - 12]
    pts[69] = [cx + 14, cy - 12]
    return pts


_FACE = _face_template()

CLASS_MOTIONS = ("touch_face", "tilt_head", "shrug")


def _pose_at(label: int, phase: float, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    body = _BODY.copy()
    face = _FACE.copy()
    s = np.sin(np.pi * phase)  # 0 -> 1 -> 0 over the gesture
    motion = CLASS_MOTIONS[label % len(CLASS_MOTIONS)]
    if motion == "touch_face":
        target = _FACE[4]
        body[4] += s * (target - body[4])
        body[3] += 0.5 * s * (target - body[3]) * np.array([0.3, 1.0])
    elif motion == "tilt_head":
        ang = 0.25 * s
        rot = np.array([[np.cos(ang), -np.sin(ang)], [np.sin(ang), np.cos(ang)]])
        pivot = body[1]
        for pts, idx in ((body, [0, 15, 16, 17, 18]), (face, slice(None))):
            pts[idx] = (pts[idx] - pivot) @ rot.T + pivot
    else:
        lift = np.array([0.0, -18.0 * s])
        body[[2, 5]] += lift
        body[[3, 6]] += 0.6 * lift
        body[[0, 15, 16, 17, 18]] += 0.3 * lift
        face += 0.3 * lift
    body += rng.normal(0, 0.8, body.shape)
    face += rng.normal(0, 0.5, face.shape)
    bconf = np.clip(rng.normal(0.85, 0.08, BODY_POINTS), 0.05, 1.0)
    bconf[_HIDDEN_BODY] = 0.0
    fconf = np.clip(rng.normal(0.75, 0.1, FACE_POINTS), 0.05, 1.0)
    body_t = np.c_[body, bconf]
    body_t[bconf == 0, :2] = 0.0
    return body_t, np.c_[face, fconf]


def _person(body: np.ndarray, face: np.ndarray | None) -> dict:
    p = {"person_id": [-1], "pose_keypoints_2d": [round(float(v), 3) for v in body.ravel()]}
    p["face_keypoints_2d"] = [] if face is None else [round(float(v), 3) for v in face.ravel()]
    return p


def sample_documents(label: int, num_frames: int, seed: int) -> list[str]:
    """OpenPose JSON documents (one per frame) for one synthetic gesture."""
    rng = np.random.default_rng(seed)
    docs = []
    for t in range(num_frames):
        phase = t / max(1, num_frames - 1)
        people = []
        if rng.random() > 0.04:
            body, face = _pose_at(label, phase, rng)
            people.append(_person(body, face))
        if rng.random() < 0.15:
            # faint bystander at the frame edge
            ghost = np.c_[_BODY * 0.4 + [500, 40], np.full(BODY_POINTS, 0.1)]
            people.insert(int(rng.integers(0, len(people) + 1)), _person(ghost, None))
        docs.append(json.dumps({"version": 1.3, "people": people}, separators=(",", ":")))
    return docs


def write_mini_dataset(
    root: str | Path,
    num_classes: int = 3,
    per_class: int = 4,
    seed: int = 2025,
    length_range: tuple[int, int] = (20, 120),
) -> Path:
    """Write ``samples/*.jsonl`` and ``manifest.csv`` under ``root``; returns the manifest path."""
    root = Path(root)
    (root / "samples").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    rows = []
    for label in range(num_classes):
        for k in range(per_class):
            sid = f"s{label:02d}_{k:02d}"
            n = int(rng.integers(length_range[0], length_range[1] + 1))
            docs = sample_documents(label, n, int(rng.integers(0, 2**31)))
            rel = f"samples/{sid}.jsonl"
            (root / rel).write_text("\n".join(docs) + "\n", encoding="utf-8")
            rows.append(ManifestRow(sid, rel, label, n))
    manifest = root / "manifest.csv"
    write_manifest(rows, manifest)
    return manifest


def random_scores(
    rng: np.random.Generator, labels: np.ndarray, num_classes: int = 33, skill: float = 1.0
) -> np.ndarray:
    """Noisy logits whose argmax agrees with ``labels`` more often as ``skill`` grows."""
    logits = rng.normal(0, 1, (labels.size, num_classes))
    logits[np.arange(labels.size), labels] += skill
    return logits
