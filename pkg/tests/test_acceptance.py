"""Exit criteria. Each test is one criterion; results are summarised at the end of the run."""

import hashlib
import json
import math
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from mgskel import cli
from mgskel.container import (
    TensorBlob,
    decode_tensor,
    encode_tensor,
)
from mgskel.core import SkeletonSequence
from mgskel.fusion import ScoreMatrix, confusion_matrix, fuse_scores, predict, top1_accuracy
from mgskel.heatmap import CropBox, RenderConfig, render_joint_frame, render_limb_frame, render_volume
from mgskel.ingest import PoseSchemaError, parse_pose_frame
from mgskel.temporal import (
    AlignmentPolicy,
    align,
    interpolate_linear,
    resample_uniform,
    sample_indices_uniform,
)
from mgskel.topology import (
    CENTRIFUGAL,
    CENTRIPETAL,
    ROOT,
    builtin_topology,
    limbs,
    normalized_self_loop_adjacency,
    partition_adjacency,
    random_connected_topology,
    spatial_graph_aggregate,
)

from test_topology import aggregate_loops

MINI_MANIFEST = Path(__file__).resolve().parents[1] / "data" / "mini_imigue" / "manifest.csv"


def _seq(rng, n, v=3):
    kp = np.empty((n, v, 3))
    kp[..., :2] = rng.normal(0, 200, (n, v, 2))
    kp[..., 2] = rng.uniform(0, 1, (n, v))
    return SkeletonSequence(kp)


@pytest.mark.criterion("temporal suite: >=1000 random (N, T), all alignment invariants, < 10 s")
def test_temporal_suite():
    rng = np.random.default_rng(20250829)
    start = time.perf_counter()
    pairs = [(int(rng.integers(1, 501)), int(rng.integers(1, 129))) for _ in range(1200)]
    pairs += [(n, n) for n in (1, 2, 48, 128)] + [(1, 128), (500, 1), (500, 128), (2, 2)]
    for n, t in pairs:
        seq = _seq(rng, n)
        src = seq.keypoints

        idx = sample_indices_uniform(n, t)
        assert len(idx) == t
        assert all(b >= a for a, b in zip(idx, idx[1:]))
        if t <= n:
            assert all(b > a for a, b in zip(idx, idx[1:]))

        for policy in (AlignmentPolicy(t, "proposed"), AlignmentPolicy(t, "baseline", rng_seed=n * t)):
            assert align(seq, policy).num_frames == t

        res = resample_uniform(seq, t).keypoints
        itp = interpolate_linear(seq, t).keypoints
        if n >= 2 and t >= 2:
            assert res[0].tobytes() == src[0].tobytes()
            assert res[-1].tobytes() == src[-1].tobytes()
            assert np.abs(itp[0] - src[0]).max() <= 1e-12
            assert np.abs(itp[-1] - src[-1]).max() <= 1e-12
        if n == t:
            assert align(seq, AlignmentPolicy(t)).same_frames(seq)
            assert resample_uniform(seq, t).same_frames(seq)
            assert interpolate_linear(seq, t).same_frames(seq)

        if n >= 2 and t >= 2:
            for k in range(t):
                pos = Fraction(k * (n - 1), t - 1)
                i = math.floor(pos)
                j = min(i + 1, n - 1)
                lo = np.minimum(src[i], src[j])
                hi = np.maximum(src[i], src[j])
                assert (itp[k] >= lo).all() and (itp[k] <= hi).all()
    elapsed = time.perf_counter() - start
    assert len(pairs) >= 1000
    assert elapsed < 10.0, f"temporal suite took {elapsed:.1f}s"


@pytest.mark.criterion("hand-derived index vectors: (10,4), (4,3), interpolated endpoints 0/9")
def test_hand_derived_vectors():
    assert sample_indices_uniform(10, 4) == [0, 3, 6, 9]
    assert sample_indices_uniform(4, 3) == [0, 2, 3]
    kp = np.zeros((2, 1, 3))
    kp[1, 0, 0] = 9.0
    xs = interpolate_linear(SkeletonSequence(kp), 4).keypoints[:, 0, 0]
    assert xs.tolist() == [0.0, 3.0, 6.0, 9.0]


@pytest.mark.criterion("topology suite: builtins + 100 random graphs, partitions, sum identity 1e-9, aggregation oracle 1e-9")
def test_topology_suite():
    rng = np.random.default_rng(7)
    topos = [builtin_topology("base22"), builtin_topology("face41")]
    topos += [random_connected_topology(rng, max_joints=20) for _ in range(120)]
    for topo in topos:
        pa = partition_adjacency(topo)
        masks = pa.masks()
        support = (topo.adjacency() + np.eye(topo.num_joints)) > 0
        assert not (masks[ROOT] & masks[CENTRIPETAL]).any()
        assert not (masks[ROOT] & masks[CENTRIFUGAL]).any()
        assert not (masks[CENTRIPETAL] & masks[CENTRIFUGAL]).any()
        assert np.array_equal(masks[ROOT] | masks[CENTRIPETAL] | masks[CENTRIFUGAL], support)
        assert np.array_equal(masks[CENTRIPETAL], masks[CENTRIFUGAL].T)
        assert np.array_equal(masks[ROOT], masks[ROOT].T)
        assert (pa.matrices >= 0).all()
        assert np.abs(pa.matrices.sum(axis=0) - normalized_self_loop_adjacency(topo)).max() <= 1e-9

    for _ in range(25):
        topo = random_connected_topology(rng, max_joints=20)
        pa = partition_adjacency(topo)
        t = int(rng.integers(1, 9))
        c, c_out = int(rng.integers(1, 5)), int(rng.integers(1, 5))
        x = rng.normal(size=(t, topo.num_joints, c))
        w = [rng.normal(size=(c, c_out)) for _ in range(3)]
        got = spatial_graph_aggregate(x, pa, w)
        assert np.abs(got - aggregate_loops(x, pa.matrices, w)).max() <= 1e-9


@pytest.mark.criterion("heatmap suite: peak, 4-neighbour, on-segment limb, range, gating, determinism")
def test_heatmap_suite():
    box = CropBox(0.0, 0.0, 55.0)  # grid coordinates equal source coordinates
    cfg = RenderConfig(sigma=1.0)
    for c in (1.0, 0.73, 0.05):
        hm = render_joint_frame(np.array([[21.0, 34.0, c]]), box, cfg)[0]
        assert abs(hm.max() - c) <= 1e-6 and hm[34, 21] == hm.max()
        for dy, dx in ((0, 1), (0, -1), (1, 0), (-1, 0)):
            assert abs(hm[34 + dy, 21 + dx] - c * math.exp(-1 / 2)) <= 1e-6

    frame = np.array([[5.0, 40.0, 0.9], [50.0, 40.0, 0.4], [30.0, 30.0, 0.0]])
    limb = render_limb_frame(frame, [(0, 1), (0, 2)], box, cfg)
    for x in (5, 17, 30, 50):
        assert abs(limb[0, 40, x] - 0.4) <= 1e-6
    assert not limb[1].any()
    assert not render_joint_frame(frame, box, cfg)[2].any()

    rng = np.random.default_rng(3)
    topo = builtin_topology("face41")
    kp = np.empty((12, 41, 3))
    kp[..., :2] = rng.uniform(100, 400, (12, 41, 2))
    kp[..., 2] = rng.uniform(0, 1, (12, 41))
    kp[:, 5, 2] = 0.0
    seq = SkeletonSequence(kp)
    for modality in ("joint", "limb"):
        a = render_volume(seq, topo, modality)
        b = render_volume(seq, topo, modality)
        assert a.data.min() >= 0.0 and a.data.max() <= 1.0
        assert hashlib.sha256(a.data.tobytes()).digest() == hashlib.sha256(b.data.tobytes()).digest()
    joint = render_volume(seq, topo, "joint").data
    assert not joint[:, 5].any()
    limb_vol = render_volume(seq, topo, "limb").data
    for e, (p, q) in enumerate(limbs(topo)):
        if 5 in (p, q):
            assert not limb_vol[:, e].any()


@pytest.mark.criterion("I/O suite: randomized tensor round-trips (<=4 axes, <=1e6 elements); OpenPose parser")
def test_io_suite():
    rng = np.random.default_rng(11)
    shapes = [(1_000_000,), (100, 100, 100), (10, 10, 100, 100), (48, 41, 7, 7), (), (0, 3)]
    for _ in range(60):
        rank = int(rng.integers(0, 5))
        shapes.append(tuple(int(d) for d in rng.integers(0, 32, rank)))
    for dims in shapes:
        n = int(np.prod(dims)) if dims else 1
        assert n <= 1_000_000
        data = rng.integers(0, 2**32, n, dtype=np.uint32).view(np.float32)
        blob = TensorBlob(dims, data)
        back = decode_tensor(encode_tensor(blob))
        assert back == blob and back.dims == tuple(dims)

    good = {"people": [{"pose_keypoints_2d": [0.5] * 75, "face_keypoints_2d": [0.25] * 210}]}
    raw = parse_pose_frame(json.dumps(good))
    assert raw.people[0].body.shape == (25, 3) and raw.people[0].face.shape == (70, 3)
    assert parse_pose_frame('{"people": []}').people == ()
    for field, n, label in (("pose_keypoints_2d", 74, "body_points"), ("face_keypoints_2d", 209, "face_points")):
        bad = json.loads(json.dumps(good))
        bad["people"][0][field] = [0.0] * n
        with pytest.raises(PoseSchemaError) as info:
            parse_pose_frame(json.dumps(bad))
        assert info.value.field == field
        assert str(info.value).startswith(f"{label} length {n} not divisible")


@pytest.mark.criterion("fusion/metric suite: 1:1 example, argmax invariance, brute-force oracles, trace identity")
def test_fusion_suite():
    a = ScoreMatrix(("x",), [[0.2, 0.8]])
    b = ScoreMatrix(("x",), [[0.6, 0.4]])
    fused = fuse_scores([(a, 1), (b, 1)])
    assert np.abs(fused.scores - np.array([[0.4, 0.6]])).max() <= 1e-12

    rng = np.random.default_rng(99)
    ids = tuple(f"s{i}" for i in range(50))
    for _ in range(120):
        s1 = ScoreMatrix(ids, rng.normal(size=(50, 33)))
        s2 = ScoreMatrix(ids, rng.normal(size=(50, 33)))
        w1, w2 = rng.uniform(0.1, 5, 2)
        lam = float(rng.uniform(0.01, 100))
        base = predict(fuse_scores([(s1, w1), (s2, w2)]))
        scaled = predict(fuse_scores([(s1, lam * w1), (s2, lam * w2)]))
        assert np.array_equal(base, scaled)

    for _ in range(5):
        rows = rng.normal(size=(500, 33))
        labels = rng.integers(0, 33, 500)
        scores = ScoreMatrix(tuple(f"s{i}" for i in range(500)), rows)
        correct = 0
        cm = np.zeros((33, 33), dtype=np.int64)
        for row, y in zip(rows.tolist(), labels.tolist()):
            best = 0
            for k in range(1, 33):
                if row[k] > row[best]:
                    best = k
            correct += best == y
            cm[y, best] += 1
        assert top1_accuracy(scores, labels) == correct / 500
        got = confusion_matrix(scores, labels)
        assert np.array_equal(got, cm)
        assert np.trace(got) / 500 == top1_accuracy(scores, labels)


def _tree_digest(root: Path) -> dict[str, str]:
    return {
        str(p.relative_to(root)): hashlib.sha256(p.read_bytes()).hexdigest()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


@pytest.mark.criterion("end-to-end: 12-sample mini-dataset, face41, T=48, both modalities, deterministic, workers 1 == 4, < 30 s")
def test_end_to_end(tmp_path):
    common = [
        "preprocess", "--manifest", str(MINI_MANIFEST), "--topology", "face41",
        "--target-length", "48", "--modality", "both",
    ]
    for name, workers in (("run1", 1), ("run2", 1), ("run4", 4)):
        start = time.perf_counter()
        assert cli.main(common + ["--out-dir", str(tmp_path / name), "--workers", str(workers)]) == 0
        elapsed = time.perf_counter() - start
        assert elapsed < 30.0, f"{name} took {elapsed:.1f}s"

    tensors = sorted((tmp_path / "run1" / "tensors").iterdir())
    assert len(tensors) == 24
    e = len(limbs(builtin_topology("face41")))
    for path in tensors:
        dims = decode_tensor(path.read_bytes()).dims
        expected = (48, 41, 56, 56) if path.name.endswith(".joint.skt") else (48, e, 56, 56)
        assert dims == expected
    d1 = _tree_digest(tmp_path / "run1")
    assert d1 == _tree_digest(tmp_path / "run2")
    assert d1 == _tree_digest(tmp_path / "run4")
