"""Render joint and limb heatmaps from a synthetic OpenPose clip.

Run with ``python demos/heatmaps.py``. If matplotlib is installed the
script also saves ``heatmaps.png`` next to where it is run.
"""

import numpy as np

from mgskel.heatmap import RenderConfig, compute_crop_box, render_volume
from mgskel.ingest import load_sequence
from mgskel.synthetic import sample_documents
from mgskel.temporal import AlignmentPolicy, align
from mgskel.topology import builtin_topology

topo = builtin_topology("face41")
docs = sample_documents(label=0, num_frames=60, seed=3)
seq = align(load_sequence(docs, topo, sample_id="demo"), AlignmentPolicy(target_length=16))
print(f"clip: {seq.num_frames} frames x {seq.num_joints} joints")

# One square crop box covers every confident joint in the clip.
cfg = RenderConfig(height=56, width=56, sigma=0.6)
box = compute_crop_box(seq, cfg)
print(f"crop box: x from {box.x_min:.1f}, y from {box.y_min:.1f}, side {box.side:.1f} px")

joint = render_volume(seq, topo, "joint", cfg, box)
limb = render_volume(seq, topo, "limb", cfg, box)
print("joint volume", joint.data.shape, joint.data.dtype, "max", float(joint.data.max()))
print("limb volume ", limb.data.shape, limb.data.dtype, "max", float(limb.data.max()))

# Hidden joints (the legs here) render nothing at all.
dark = [topo.joint_names[j] for j in range(topo.num_joints) if not joint.data[:, j].any()]
print("joints with empty maps:", ", ".join(dark))

# Collapsing the channel axis gives a quick picture of the pose.
joint_frame = joint.data[0].max(axis=0)
limb_frame = limb.data[0].max(axis=0)
for row in joint_frame[::4]:
    print("".join(" .:-=+*#"[min(7, int(v * 8))] for v in row[::2]))

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    pass
else:
    fig, axes = plt.subplots(1, 2, figsize=(6, 3))
    axes[0].imshow(joint_frame, cmap="magma")
    axes[0].set_title("joints")
    axes[1].imshow(limb_frame, cmap="magma")
    axes[1].set_title("limbs")
    for ax in axes:
        ax.axis("off")
    fig.savefig("heatmaps.png", dpi=120, bbox_inches="tight")
    print("saved heatmaps.png")
