import numpy as np
import pytest

from mgskel.ingest import JointIndexMap
from mgskel.topology import (
    CENTRIFUGAL,
    CENTRIPETAL,
    ROOT,
    DisconnectedTopologyError,
    TopologyError,
    TopologySpec,
    builtin_topology,
    dump_topology,
    format_topology,
    hop_distances,
    limbs,
    normalized_self_loop_adjacency,
    parse_topology,
    partition_adjacency,
    random_connected_topology,
    spatial_graph_aggregate,
)

PATH3 = TopologySpec("path3", 3, ((0, 1), (1, 2)), center=0)
SINGLE = TopologySpec("single", 1, (), center=0)


def floyd_warshall(topo):
    v = topo.num_joints
    d = np.full((v, v), np.inf)
    np.fill_diagonal(d, 0)
    for a, b in topo.edges:
        d[a, b] = d[b, a] = 1
    for k in range(v):
        for i in range(v):
            for j in range(v):
                if d[i, k] + d[k, j] < d[i, j]:
                    d[i, j] = d[i, k] + d[k, j]
    return d


def aggregate_loops(x, mats, weights):
    t_len, v, c = x.shape
    c_out = weights[0].shape[1]
    out = np.zeros((t_len, v, c_out))
    for t in range(t_len):
        for k in range(3):
            for i in range(v):
                for d in range(c_out):
                    acc = 0.0
                    for j in range(v):
                        for ci in range(c):
                            acc += mats[k][i, j] * x[t, j, ci] * weights[k][ci, d]
                    out[t, i, d] += acc
    return out


def test_builtin_base22():
    topo = builtin_topology("base22")
    assert topo.num_joints == 22
    assert topo.joint_names[topo.center] == "neck"
    assert hop_distances(topo).max() > 0  # connected, else it raises


def test_builtin_face41():
    base, face = builtin_topology("base22"), builtin_topology("face41")
    assert face.num_joints == 41
    assert face.num_edges > base.num_edges
    hop_distances(face)
    # the base skeleton is embedded unchanged
    assert set(base.edges) <= set(face.edges)
    assert face.joint_sources[:22] == base.joint_sources
    srcs = face.joint_sources[22:]
    assert len(srcs) == 19 and all(s == "face" for s, _ in srcs)
    # every added landmark reaches the nose without passing through the body
    face_only = TopologySpec(
        "face_part",
        20,
        tuple(
            (0 if a == 0 else a - 21, b - 21)
            for a, b in face.edges
            if (a == 0 or a >= 22) and b >= 22
        ),
        center=0,
    )
    assert (hop_distances(face_only) >= 0).all()


def test_unknown_builtin_lists_available():
    with pytest.raises(TopologyError, match="base22, face41"):
        builtin_topology("coco17")


@pytest.mark.parametrize(
    "edges",
    [((0, 3),), ((1, 1),), ((0, 1), (1, 0))],
    ids=["out-of-range", "self-loop", "duplicate"],
)
def test_spec_invariants(edges):
    with pytest.raises(TopologyError):
        TopologySpec("bad", 3, edges)


def test_limbs_ordering():
    topo = TopologySpec("t", 3, ((1, 0), (0, 2)))
    assert limbs(topo) == [(0, 1), (0, 2)]
    base = builtin_topology("base22")
    assert len(limbs(base)) == base.num_edges
    assert limbs(base) == limbs(base) == sorted(limbs(base))


def test_hop_distances_path():
    assert hop_distances(PATH3).tolist() == [0, 1, 2]
    assert hop_distances(builtin_topology("face41"))[1] == 0


def test_hop_distances_match_floyd_warshall(rng):
    for _ in range(50):
        topo = random_connected_topology(rng)
        expected = floyd_warshall(topo)[topo.center]
        assert hop_distances(topo).tolist() == expected.astype(int).tolist()


def test_disconnected_topology_names_unreachable():
    topo = TopologySpec("split", 4, ((0, 1), (2, 3)), center=0)
    with pytest.raises(DisconnectedTopologyError) as info:
        hop_distances(topo)
    assert info.value.unreachable == (2, 3)
    with pytest.raises(DisconnectedTopologyError):
        partition_adjacency(topo)


def test_partition_masks_path3():
    masks = partition_adjacency(PATH3).masks()
    assert set(zip(*np.nonzero(masks[CENTRIPETAL]))) == {(1, 0), (2, 1)}
    assert set(zip(*np.nonzero(masks[CENTRIFUGAL]))) == {(0, 1), (1, 2)}
    assert set(zip(*np.nonzero(masks[ROOT]))) == {(0, 0), (1, 1), (2, 2)}


def test_partition_values_path3():
    # degrees of A + I are (2, 3, 2)
    pa = partition_adjacency(PATH3)
    assert pa.root[1, 1] == pytest.approx(1 / 3)
    assert pa.centripetal[1, 0] == pytest.approx(1 / np.sqrt(6))
    assert pa.centrifugal[1, 2] == pytest.approx(1 / np.sqrt(6))


def test_single_joint():
    pa = partition_adjacency(SINGLE)
    assert pa.root.tolist() == [[1.0]]
    assert not pa.centripetal.any() and not pa.centrifugal.any()


def test_same_hop_neighbours_are_root():
    # triangle around the center: 1 and 2 share hop 1
    tri = TopologySpec("tri", 3, ((0, 1), (0, 2), (1, 2)), center=0)
    masks = partition_adjacency(tri).masks()
    assert masks[ROOT][1, 2] and masks[ROOT][2, 1]


def test_per_partition_normalization():
    pa = partition_adjacency(PATH3, normalization="per_partition")
    assert np.allclose(pa.root, np.eye(3))
    np.testing.assert_array_equal(pa.masks(), partition_adjacency(PATH3).masks())
    with pytest.raises(ValueError):
        partition_adjacency(PATH3, normalization="random_walk")


@pytest.mark.parametrize("name", ["base22", "face41"])
def test_partition_sum_identity_builtins(name):
    topo = builtin_topology(name)
    pa = partition_adjacency(topo)
    np.testing.assert_allclose(
        pa.matrices.sum(axis=0), normalized_self_loop_adjacency(topo), rtol=0, atol=1e-9
    )
    assert (pa.matrices >= 0).all()


def test_aggregate_zero_and_identity():
    pa = partition_adjacency(SINGLE)
    eye = [np.eye(2)] * 3
    f = np.array([[[1.5, -2.0]], [[0.25, 4.0]]])
    np.testing.assert_array_equal(spatial_graph_aggregate(f, pa, eye), f)
    pa3 = partition_adjacency(PATH3)
    assert not spatial_graph_aggregate(np.zeros((2, 3, 2)), pa3, eye).any()


def test_aggregate_matches_loops(rng):
    for _ in range(10):
        topo = random_connected_topology(rng, max_joints=12)
        pa = partition_adjacency(topo)
        t, c, c_out = rng.integers(1, 6), rng.integers(1, 4), rng.integers(1, 4)
        x = rng.normal(size=(t, topo.num_joints, c))
        w = [rng.normal(size=(c, c_out)) for _ in range(3)]
        np.testing.assert_allclose(
            spatial_graph_aggregate(x, pa, w), aggregate_loops(x, pa.matrices, w), atol=1e-9
        )


def test_aggregate_linearity(rng):
    pa = partition_adjacency(builtin_topology("face41"))
    f, g = rng.normal(size=(2, 4, 41, 3))
    w = [rng.normal(size=(3, 2)) for _ in range(3)]
    a, b = 0.7, -1.3
    np.testing.assert_allclose(
        spatial_graph_aggregate(a * f + b * g, pa, w),
        a * spatial_graph_aggregate(f, pa, w) + b * spatial_graph_aggregate(g, pa, w),
        atol=1e-9,
    )


def test_aggregate_shape_errors():
    pa = partition_adjacency(PATH3)
    w = [np.eye(2)] * 3
    with pytest.raises(ValueError, match="joint axis"):
        spatial_graph_aggregate(np.zeros((1, 4, 2)), pa, w)
    with pytest.raises(ValueError, match="channel axis"):
        spatial_graph_aggregate(np.zeros((1, 3, 5)), pa, w)
    with pytest.raises(ValueError):
        spatial_graph_aggregate(np.zeros((1, 3, 2)), pa, [np.eye(2), np.eye(2), np.eye(3)])


@pytest.mark.parametrize("name", ["base22", "face41"])
def test_dump_reloads_identically(name):
    topo = builtin_topology(name)
    text = dump_topology(topo)
    assert "hop 1 0" in text
    assert "mask centripetal" in text
    assert parse_topology(text) == topo
    assert parse_topology(format_topology(topo)) == topo


def test_parse_errors():
    with pytest.raises(TopologyError, match="num_joints"):
        parse_topology("name x\n")
    with pytest.raises(TopologyError, match="unknown key"):
        parse_topology("name x\nnum_joints 2\nbone 0 1\n")
    with pytest.raises(TopologyError, match="malformed"):
        parse_topology("name x\nnum_joints 2\nedge 0\n")


def test_face41_mapping_is_in_range():
    mapping = JointIndexMap.for_topology(builtin_topology("face41"))
    assert len(mapping) == 41
