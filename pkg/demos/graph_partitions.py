"""Walk through the skeleton graphs and their three-way adjacency split.

Run with ``python demos/graph_partitions.py``.
"""

import numpy as np

from mgskel.topology import (
    PARTITION_NAMES,
    builtin_topology,
    hop_distances,
    normalized_self_loop_adjacency,
    partition_adjacency,
    spatial_graph_aggregate,
)

np.set_printoptions(precision=3, suppress=True, linewidth=110)

# Two graphs ship with the package. base22 holds body joints only; face41
# adds 19 facial landmarks hanging off the nose.
for name in ("base22", "face41"):
    topo = builtin_topology(name)
    print(f"{name}: {topo.num_joints} joints, {len(topo.edges)} edges, center {topo.joint_names[topo.center]}")

topo = builtin_topology("face41")

# Hop distance from the center decides each neighbour's group:
# same distance -> root, closer -> centripetal, farther -> centrifugal.
hops = hop_distances(topo)
print("\nhop distance from the neck, first 10 joints:", hops[:10].tolist())
print("deepest joint sits", int(hops.max()), "hops out")

pa = partition_adjacency(topo)
for k, name in enumerate(PARTITION_NAMES):
    print(f"{name:>12}: {int((pa.matrices[k] > 0).sum())} nonzero entries")

# The three pieces add back up to the normalized A + I.
recombined = pa.matrices.sum(axis=0)
print("max |sum - normalized A+I| =", np.abs(recombined - normalized_self_loop_adjacency(topo)).max())

# Spatial aggregation: one weight matrix per group, summed over groups.
rng = np.random.default_rng(0)
x = rng.normal(size=(4, topo.num_joints, 3))       # (frames, joints, channels)
weights = [rng.normal(size=(3, 8)) for _ in range(3)]
y = spatial_graph_aggregate(x, pa, weights)
print("\naggregated features:", x.shape, "->", y.shape)

# A tiny chain shows the matrices in full.
from mgskel.topology import parse_topology

chain = parse_topology("name chain\nnum_joints 3\ncenter 1\nedge 0 1\nedge 1 2\n")
print("\nchain 0-1-2 centred on 1")
for name, mat in zip(PARTITION_NAMES, partition_adjacency(chain).matrices):
    print(name)
    print(mat)
