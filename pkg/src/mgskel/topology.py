"""Joint topologies, partitioned adjacency and a reference spatial graph step.

Topologies are stored as small line-oriented text files::

    name face41
    num_joints 41
    center 1
    joint 22 r_brow_outer face 17
    edge 0 1

``joint`` rows are optional and carry the joint name together with the
OpenPose array (``body`` or ``face``) and index it is read from. ``hop``
and ``mask`` rows, as written by :func:`dump_topology`, are ignored on load.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

ROOT, CENTRIPETAL, CENTRIFUGAL = 0, 1, 2
PARTITION_NAMES = ("root", "centripetal", "centrifugal")

BUILTIN_TOPOLOGIES = ("base22", "face41")


class TopologyError(ValueError):
    pass


class DisconnectedTopologyError(TopologyError):
    def __init__(self, name: str, unreachable: Sequence[int]):
        self.unreachable = tuple(unreachable)
        super().__init__(
            f"topology {name!r} is disconnected; joints unreachable from the "
            f"center: {list(self.unreachable)}"
        )


@dataclass(frozen=True)
class TopologySpec:
    """Named joint layout with an undirected edge list.

    Edges are stored normalized as ``(min, max)`` pairs in their original
    order. Endpoint range, self-loops, duplicates and the center index are
    checked at construction; connectivity is checked by
    :func:`hop_distances` (and therefore by anything that partitions).
    """

    name: str
    num_joints: int
    edges: tuple[tuple[int, int], ...]
    center: int = 0
    joint_names: Optional[tuple[str, ...]] = None
    # (source array, index) per joint, e.g. ("face", 48)
    joint_sources: Optional[tuple[tuple[str, int], ...]] = None

    def __post_init__(self) -> None:
        v = int(self.num_joints)
        if v < 1:
            raise TopologyError(f"num_joints must be >= 1, got {v}")
        seen = set()
        norm = []
        for a, b in self.edges:
            a, b = int(a), int(b)
            if not (0 <= a < v and 0 <= b < v):
                raise TopologyError(f"edge ({a}, {b}) out of range for {v} joints")
            if a == b:
                raise TopologyError(f"self-loop edge ({a}, {b})")
            e = (min(a, b), max(a, b))
            if e in seen:
                raise TopologyError(f"duplicate edge {e}")
            seen.add(e)
            norm.append(e)
        if not 0 <= self.center < v:
            raise TopologyError(f"center {self.center} out of range for {v} joints")
        if self.joint_names is not None and len(self.joint_names) != v:
            raise TopologyError("joint_names length differs from num_joints")
        if self.joint_sources is not None and len(self.joint_sources) != v:
            raise TopologyError("joint_sources length differs from num_joints")
        object.__setattr__(self, "num_joints", v)
        object.__setattr__(self, "edges", tuple(norm))
        if self.joint_names is not None:
            object.__setattr__(self, "joint_names", tuple(self.joint_names))
        if self.joint_sources is not None:
            object.__setattr__(
                self,
                "joint_sources",
                tuple((str(s), int(i)) for s, i in self.joint_sources),
            )

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def adjacency(self) -> np.ndarray:
        """Binary symmetric adjacency matrix without self-loops."""
        a = np.zeros((self.num_joints, self.num_joints))
        for i, j in self.edges:
            a[i, j] = a[j, i] = 1.0
        return a


def parse_topology(text: str) -> TopologySpec:
    name = None
    num_joints = None
    center = 0
    edges = []
    joints: dict[int, tuple[str, str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, *rest = line.split()
        try:
            if key == "name":
                name = rest[0]
            elif key == "num_joints":
                num_joints = int(rest[0])
            elif key == "center":
                center = int(rest[0])
            elif key == "edge":
                edges.append((int(rest[0]), int(rest[1])))
            elif key == "joint":
                idx = int(rest[0])
                if idx in joints:
                    raise TopologyError(f"line {lineno}: joint {idx} declared twice")
                joints[idx] = (rest[1], rest[2], int(rest[3]))
            elif key in ("hop", "mask"):
                continue
            else:
                raise TopologyError(f"line {lineno}: unknown key {key!r}")
        except (IndexError, ValueError) as exc:
            if isinstance(exc, TopologyError):
                raise
            raise TopologyError(f"line {lineno}: malformed row {raw!r}") from exc
    if name is None or num_joints is None:
        raise TopologyError("topology document needs 'name' and 'num_joints'")
    names = sources = None
    if joints:
        if sorted(joints) != list(range(num_joints)):
            raise TopologyError("joint rows must cover every index exactly once")
        names = tuple(joints[i][0] for i in range(num_joints))
        sources = tuple((joints[i][1], joints[i][2]) for i in range(num_joints))
    return TopologySpec(name, num_joints, tuple(edges), center, names, sources)


def format_topology(topo: TopologySpec) -> str:
    lines = [f"name {topo.name}", f"num_joints {topo.num_joints}", f"center {topo.center}"]
    if topo.joint_names is not None or topo.joint_sources is not None:
        for j in range(topo.num_joints):
            jname = topo.joint_names[j] if topo.joint_names else f"j{j}"
            src, idx = topo.joint_sources[j] if topo.joint_sources else ("body", j)
            lines.append(f"joint {j} {jname} {src} {idx}")
    lines += [f"edge {a} {b}" for a, b in topo.edges]
    return "\n".join(lines) + "\n"


def load_topology(path: str | Path) -> TopologySpec:
    topo = parse_topology(Path(path).read_text(encoding="utf-8"))
    hop_distances(topo)
    return topo


def builtin_topology(name: str) -> TopologySpec:
    if name not in BUILTIN_TOPOLOGIES:
        raise TopologyError(
            f"unknown topology {name!r}; available: {', '.join(BUILTIN_TOPOLOGIES)}"
        )
    text = resources.files("mgskel").joinpath("data").joinpath(f"{name}.topo").read_text("utf-8")
    return parse_topology(text)


def resolve_topology(name_or_path: str | Path) -> TopologySpec:
    """A builtin by name, otherwise a topology file path."""
    if str(name_or_path) in BUILTIN_TOPOLOGIES:
        return builtin_topology(str(name_or_path))
    path = Path(name_or_path)
    if not path.is_file():
        raise TopologyError(
            f"unknown topology {str(name_or_path)!r}; available: "
            f"{', '.join(BUILTIN_TOPOLOGIES)} or a topology file path"
        )
    return load_topology(path)


def limbs(topo: TopologySpec) -> list[tuple[int, int]]:
    """Edges sorted lexicographically by (min, max); the limb channel order."""
    return sorted((min(a, b), max(a, b)) for a, b in topo.edges)


def hop_distances(topo: TopologySpec) -> np.ndarray:
    """Breadth-first hop count from the center joint to every joint."""
    nbrs: list[list[int]] = [[] for _ in range(topo.num_joints)]
    for a, b in topo.edges:
        nbrs[a].append(b)
        nbrs[b].append(a)
    dist = np.full(topo.num_joints, -1, dtype=np.int64)
    dist[topo.center] = 0
    queue = deque([topo.center])
    while queue:
        u = queue.popleft()
        for w in nbrs[u]:
            if dist[w] < 0:
                dist[w] = dist[u] + 1
                queue.append(w)
    if (dist < 0).any():
        raise DisconnectedTopologyError(topo.name, np.flatnonzero(dist < 0).tolist())
    return dist


@dataclass(frozen=True, eq=False)
class PartitionedAdjacency:
    """Three normalized V x V matrices stacked as ``matrices[k]``.

    ``k`` follows ``ROOT``, ``CENTRIPETAL``, ``CENTRIFUGAL``.
    """

    matrices: np.ndarray

    def __post_init__(self) -> None:
        m = np.array(self.matrices, dtype=np.float64)
        if m.ndim != 3 or m.shape[0] != 3 or m.shape[1] != m.shape[2]:
            raise ValueError(f"expected shape (3, V, V), got {m.shape}")
        m.flags.writeable = False
        object.__setattr__(self, "matrices", m)

    @property
    def V(self) -> int:
        return self.matrices.shape[1]

    @property
    def root(self) -> np.ndarray:
        return self.matrices[ROOT]

    @property
    def centripetal(self) -> np.ndarray:
        return self.matrices[CENTRIPETAL]

    @property
    def centrifugal(self) -> np.ndarray:
        return self.matrices[CENTRIFUGAL]

    def masks(self) -> np.ndarray:
        return self.matrices != 0


def normalized_self_loop_adjacency(topo: TopologySpec) -> np.ndarray:
    """D^(-1/2) (A + I) D^(-1/2) with D the degree matrix of A + I."""
    a = topo.adjacency() + np.eye(topo.num_joints)
    d = 1.0 / np.sqrt(a.sum(axis=1))
    return d[:, None] * a * d[None, :]


def partition_masks(topo: TopologySpec) -> np.ndarray:
    """Boolean (3, V, V) masks splitting the support of A + I by hop distance."""
    hop = hop_distances(topo)
    support = (topo.adjacency() + np.eye(topo.num_joints)) > 0
    hi, hj = hop[:, None], hop[None, :]
    return np.stack(
        [support & (hj == hi), support & (hj < hi), support & (hj > hi)]
    )


def partition_adjacency(
    topo: TopologySpec, normalization: str = "symmetric"
) -> PartitionedAdjacency:
    """Split the normalized self-loop adjacency into root/centripetal/centrifugal.

    Entry (i, j) of A + I goes to root when joint j is as far from the
    center as i, centripetal when j is closer, centrifugal when farther.

    Args:
        normalization: ``"symmetric"`` masks one D^(-1/2)(A+I)D^(-1/2), so the
            three parts sum to it exactly. ``"per_partition"`` divides each
            masked matrix by its own column sums instead; the sum identity
            then no longer holds.
    """
    masks = partition_masks(topo)
    if normalization == "symmetric":
        norm = normalized_self_loop_adjacency(topo)
        return PartitionedAdjacency(masks * norm[None])
    if normalization == "per_partition":
        parts = []
        for m in masks.astype(np.float64):
            deg = m.sum(axis=0)
            inv = np.zeros_like(deg)
            inv[deg > 0] = 1.0 / deg[deg > 0]
            parts.append(m * inv[None, :])
        return PartitionedAdjacency(np.stack(parts))
    raise ValueError(f"unknown normalization {normalization!r}")


def spatial_graph_aggregate(
    features: np.ndarray, pa: PartitionedAdjacency, weights: Sequence[np.ndarray]
) -> np.ndarray:
    """out[t] = sum_k A_k @ features[t] @ W_k over the three partitions.

    ``features`` is (T, V, C); each of the three weight matrices is (C, C').
    """
    x = np.asarray(features, dtype=np.float64)
    w = np.stack([np.asarray(wk, dtype=np.float64) for wk in weights])
    if x.ndim != 3:
        raise ValueError(f"features must be (T, V, C), got shape {x.shape}")
    if x.shape[1] != pa.V:
        raise ValueError(f"joint axis: features have V={x.shape[1]}, adjacency has V={pa.V}")
    if w.ndim != 3 or w.shape[0] != 3:
        raise ValueError(f"weights: expected 3 matrices of shape (C, C'), got {w.shape}")
    if w.shape[1] != x.shape[2]:
        raise ValueError(f"channel axis: features have C={x.shape[2]}, weights expect C={w.shape[1]}")
    return np.einsum("kvw,twc,kcd->tvd", pa.matrices, x, w)


def dump_topology(topo: TopologySpec) -> str:
    """Topology document extended with hop and partition-mask rows.

    The output reloads through :func:`parse_topology` to the same spec.
    """
    hop = hop_distances(topo)
    masks = partition_masks(topo)
    out = [format_topology(topo).rstrip("\n")]
    out += [f"hop {j} {int(d)}" for j, d in enumerate(hop)]
    for k, pname in enumerate(PARTITION_NAMES):
        out += [f"mask {pname} {i} {j}" for i, j in zip(*np.nonzero(masks[k]))]
    return "\n".join(out) + "\n"


def random_connected_topology(
    rng: np.random.Generator, max_joints: int = 20, extra_edge_prob: float = 0.15
) -> TopologySpec:
    """Random spanning tree plus a few extra edges; used for property tests."""
    v = int(rng.integers(1, max_joints + 1))
    edges = set()
    for j in range(1, v):
        edges.add((int(rng.integers(0, j)), j))
    for i in range(v):
        for j in range(i + 1, v):
            if (i, j) not in edges and rng.random() < extra_edge_prob:
                edges.add((i, j))
    return TopologySpec(f"random{v}", v, tuple(sorted(edges)), int(rng.integers(0, v)))

