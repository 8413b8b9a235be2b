"""Fuse two streams of class scores and measure Top-1 accuracy.

Run with ``python demos/score_fusion.py``.
"""

import numpy as np

from mgskel.core import NUM_CLASSES
from mgskel.fusion import ScoreMatrix, evaluate, fuse_scores, predict, top1_accuracy
from mgskel.synthetic import random_scores

# The smallest case: two streams, two classes, equal weights.
a = ScoreMatrix(("clip",), np.array([[0.2, 0.8]]))
b = ScoreMatrix(("clip",), np.array([[0.6, 0.4]]))
print("1:1 fusion of [0.2, 0.8] and [0.6, 0.4] ->", fuse_scores([(a, 1), (b, 1)]).scores[0].tolist())

# Two noisy streams over all 33 classes; the limb stream is a little better.
rng = np.random.default_rng(2025)
labels = rng.integers(0, NUM_CLASSES, 400)
ids = tuple(f"v{i:04d}" for i in range(labels.size))
joint = ScoreMatrix(ids, random_scores(rng, labels, skill=2.2))
limb = ScoreMatrix(ids, random_scores(rng, labels, skill=2.5))

print(f"\njoint alone: {top1_accuracy(joint, labels):.3f}")
print(f"limb alone:  {top1_accuracy(limb, labels):.3f}")
for w in ((1, 1), (1, 2), (2, 1)):
    fused = fuse_scores([(joint, w[0]), (limb, w[1])])
    print(f"fused {w[0]}:{w[1]}:   {top1_accuracy(fused, labels):.3f}")

# Scaling every weight by the same factor never changes a prediction.
same = np.array_equal(predict(fuse_scores([(joint, 1), (limb, 1)])),
                      predict(fuse_scores([(joint, 5), (limb, 5)])))
print("\n1:1 and 5:5 give the same predictions:", same)

# Softmax first turns each stream into probabilities before averaging.
print(f"fused 1:1 after softmax: {top1_accuracy(fuse_scores([(joint, 1), (limb, 1)], True), labels):.3f}")

report = evaluate([(joint, 1), (limb, 1)], labels)
print("\n" + report.to_text().splitlines()[0])
print("diagonal of the confusion matrix sums to", int(np.trace(report.confusion)))
