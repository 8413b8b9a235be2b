"""Build a small dataset, preprocess it, and fuse scores, all through the CLI entry point.

Run with ``python demos/pipeline.py``. Everything is written to a
temporary directory that is removed afterwards.
"""

import tempfile
from pathlib import Path

import numpy as np

from mgskel import cli
from mgskel.container import read_tensor
from mgskel.fusion import ScoreMatrix, write_scores
from mgskel.synthetic import random_scores, write_mini_dataset

with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)

    # Six synthetic clips over three classes, stored as OpenPose JSON lines.
    manifest = write_mini_dataset(tmp / "raw", num_classes=3, per_class=2, seed=1)
    print("== stats")
    cli.main(["stats", "--manifest", str(manifest)])

    print("\n== validate")
    cli.main(["validate", "--manifest", str(manifest), "--topology", "face41"])

    print("\n== preprocess")
    out = tmp / "build"
    cli.main([
        "preprocess", "--manifest", str(manifest), "--topology", "face41",
        "--target-length", "32", "--modality", "both", "--out-dir", str(out), "--workers", "2",
    ])
    print((out / "manifest.csv").read_text().splitlines()[1])
    first = sorted((out / "tensors").iterdir())[0]
    print(first.name, "->", read_tensor(first).dims)

    # Stand-in classifier outputs for each stream, then late fusion.
    print("\n== fuse-eval")
    rng = np.random.default_rng(0)
    labels = np.array([0, 0, 1, 1, 2, 2])
    ids = tuple(f"s{y:02d}_{k:02d}" for y in range(3) for k in range(2))
    for name, skill in (("joint", 1.0), ("limb", 1.5)):
        write_scores(ScoreMatrix(ids, random_scores(rng, labels, 3, skill)), tmp / f"{name}.csv")
    (tmp / "labels.csv").write_text("sample_id,label\n" + "".join(f"{s},{y}\n" for s, y in zip(ids, labels)))
    cli.main([
        "fuse-eval", str(tmp / "joint.csv"), str(tmp / "limb.csv"),
        "--weights", "1:1", "--labels", str(tmp / "labels.csv"),
    ])
