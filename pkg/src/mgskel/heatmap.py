"""Gaussian joint and limb heatmap volumes from aligned skeleton sequences."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from .core import SkeletonSequence
from .topology import TopologySpec, limbs

MODALITIES = ("joint", "limb")


class EmptySubjectError(ValueError):
    pass


@dataclass(frozen=True)
class RenderConfig:
    height: int = 56
    width: int = 56
    sigma: float = 0.6
    padding_ratio: float = 1.25
    confidence_floor: float = 0.0
    min_box_side: float = 1.0
    # zero out responses beyond 3 sigma; False evaluates the Gaussian everywhere
    truncate: bool = True

    def __post_init__(self) -> None:
        if self.height < 8 or self.width < 8:
            raise ValueError(f"heatmap grid must be at least 8x8, got {self.height}x{self.width}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if not self.padding_ratio >= 1:
            raise ValueError(f"padding_ratio must be >= 1, got {self.padding_ratio}")
        if not self.min_box_side > 0:
            raise ValueError("min_box_side must be positive")

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class CropBox:
    x_min: float
    y_min: float
    side: float

    def to_grid(self, xy: np.ndarray, cfg: RenderConfig) -> np.ndarray:
        """Map source (x, y) to grid (u, v); box edges land on the outer pixel centres."""
        xy = np.asarray(xy, dtype=np.float64)
        u = (xy[..., 0] - self.x_min) * ((cfg.width - 1) / self.side)
        v = (xy[..., 1] - self.y_min) * ((cfg.height - 1) / self.side)
        return np.stack([u, v], axis=-1)


@dataclass(frozen=True, eq=False)
class HeatmapVolume:
    data: np.ndarray  # float32, (T, C, H, W)
    modality: str
    sample_id: str = ""
    config_digest: str = ""
    topology: str = ""

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(self.data.shape)


def compute_crop_box(seq: SkeletonSequence, cfg: RenderConfig = RenderConfig()) -> CropBox:
    """Square box around every keypoint above the confidence floor, all frames.

    The tight box is scaled about its centre by ``padding_ratio`` and made
    square using the larger side (at least ``min_box_side``).
    """
    kp = seq.keypoints.reshape(-1, 3)
    pts = kp[kp[:, 2] > cfg.confidence_floor, :2]
    if pts.size == 0:
        raise EmptySubjectError(
            f"sample {seq.sample_id!r} has no keypoint with confidence above "
            f"{cfg.confidence_floor}"
        )
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    centre = (lo + hi) / 2
    side = max(float((hi - lo).max()) * cfg.padding_ratio, cfg.min_box_side)
    return CropBox(float(centre[0] - side / 2), float(centre[1] - side / 2), side)


def _grid(cfg: RenderConfig) -> tuple[np.ndarray, np.ndarray]:
    ys, xs = np.mgrid[0 : cfg.height, 0 : cfg.width]
    return xs.astype(np.float64), ys.astype(np.float64)


def _gaussian(d2: np.ndarray, scale: np.ndarray, cfg: RenderConfig) -> np.ndarray:
    out = scale * np.exp(-d2 / (2.0 * cfg.sigma**2))
    if cfg.truncate:
        out[d2 > (3.0 * cfg.sigma) ** 2] = 0.0
    return out


def render_joint_frame(frame: np.ndarray, box: CropBox, cfg: RenderConfig = RenderConfig()) -> np.ndarray:
    """(V, H, W) float32 slice; channel j peaks at keypoint j with height c_j."""
    frame = np.asarray(frame, dtype=np.float64)
    if frame.ndim != 2 or frame.shape[1] != 3:
        raise ValueError(f"frame must have shape (V, 3), got {frame.shape}")
    uv = box.to_grid(frame[:, :2], cfg)
    conf = frame[:, 2]
    live = conf > cfg.confidence_floor
    xs, ys = _grid(cfg)
    out = np.zeros((frame.shape[0], cfg.height, cfg.width))
    if live.any():
        du = xs[None] - uv[live, 0, None, None]
        dv = ys[None] - uv[live, 1, None, None]
        out[live] = _gaussian(du**2 + dv**2, conf[live, None, None], cfg)
    return out.astype(np.float32)


def segment_distance_sq(
    px: np.ndarray, py: np.ndarray, a: np.ndarray, b: np.ndarray
) -> np.ndarray:
    """Squared distance from grid points to segments a[e]-b[e].

    ``a`` and ``b`` are (E, 2); the result is (E, *px.shape). Zero-length
    segments reduce to point distances.
    """
    ab = b - a
    len2 = (ab**2).sum(axis=1)
    apx = px[None] - a[:, 0, None, None]
    apy = py[None] - a[:, 1, None, None]
    with np.errstate(invalid="ignore", divide="ignore"):
        t = (apx * ab[:, 0, None, None] + apy * ab[:, 1, None, None]) / len2[:, None, None]
    t = np.where(len2[:, None, None] > 0, np.clip(t, 0.0, 1.0), 0.0)
    dx = apx - t * ab[:, 0, None, None]
    dy = apy - t * ab[:, 1, None, None]
    return dx**2 + dy**2


def render_limb_frame(
    frame: np.ndarray,
    limb_list: Sequence[tuple[int, int]],
    box: CropBox,
    cfg: RenderConfig = RenderConfig(),
) -> np.ndarray:
    """(E, H, W) float32 slice; channel e is a Gaussian ridge along limb e
    scaled by the smaller endpoint confidence."""
    frame = np.asarray(frame, dtype=np.float64)
    if frame.ndim != 2 or frame.shape[1] != 3:
        raise ValueError(f"frame must have shape (V, 3), got {frame.shape}")
    out = np.zeros((len(limb_list), cfg.height, cfg.width))
    if not limb_list:
        return out.astype(np.float32)
    pairs = np.asarray(limb_list, dtype=np.int64)
    if pairs.min() < 0 or pairs.max() >= frame.shape[0]:
        raise ValueError(f"limb endpoint out of range for a {frame.shape[0]}-joint frame")
    uv = box.to_grid(frame[:, :2], cfg)
    conf = np.minimum(frame[pairs[:, 0], 2], frame[pairs[:, 1], 2])
    live = conf > cfg.confidence_floor
    if live.any():
        xs, ys = _grid(cfg)
        d2 = segment_distance_sq(xs, ys, uv[pairs[live, 0]], uv[pairs[live, 1]])
        out[live] = _gaussian(d2, conf[live, None, None], cfg)
    return out.astype(np.float32)


def render_volume(
    seq: SkeletonSequence,
    topo: TopologySpec,
    modality: str = "joint",
    cfg: RenderConfig = RenderConfig(),
    box: Optional[CropBox] = None,
) -> HeatmapVolume:
    """Render every frame with one shared crop box into a (T, C, H, W) volume."""
    if modality not in MODALITIES:
        raise ValueError(f"modality must be one of {MODALITIES}, got {modality!r}")
    if seq.num_joints != topo.num_joints:
        raise ValueError(
            f"sequence has {seq.num_joints} joints, topology {topo.name!r} has {topo.num_joints}"
        )
    if box is None:
        box = compute_crop_box(seq, cfg)
    if modality == "joint":
        frames = [render_joint_frame(f, box, cfg) for f in seq.keypoints]
        channels = topo.num_joints
    else:
        limb_list = limbs(topo)
        frames = [render_limb_frame(f, limb_list, box, cfg) for f in seq.keypoints]
        channels = len(limb_list)
    data = (
        np.stack(frames)
        if frames
        else np.zeros((0, channels, cfg.height, cfg.width), np.float32)
    )
    return HeatmapVolume(data, modality, seq.sample_id, cfg.digest(), topo.name)
