"""Load the bundled toy graph and look at what the policy sees.

Each node carries four flow features computed from the classifier's current
predictions: capped degree, normalized entropy, and the mean KL divergence to
and from its neighbours. Before any training the classifier is close to
uniform, so entropy sits near 1 and both divergences near 0.
"""

from pathlib import Path

import numpy as np

from gflowgnn import compute_flow_features, load_graph, normalized_adjacency, predict_proba, reset_classifier

TOY = Path(__file__).resolve().parents[1] / "src" / "gflowgnn" / "data" / "toy"

g = load_graph(TOY / "edges.txt", TOY / "features.csv", TOY / "labels.csv", TOY / "splits.json")
print(f"{g.n} nodes, {g.edge_list().shape[0]} edges, {g.C} classes, {g.d} features")
print("train / valid / test:", g.splits.train.tolist(), g.splits.valid.tolist(), g.splits.test.tolist())
print("degrees:", g.degrees.tolist())

A = normalized_adjacency(g)
print("row sums of the normalized adjacency (1 only for regular neighbourhoods):")
print(np.round(np.asarray(A.sum(axis=1)).ravel(), 3))

clf = reset_classifier(g, seed=0)
phi = compute_flow_features(g, predict_proba(clf))
np.set_printoptions(precision=3, suppress=True)
print("flow features [degree, entropy, KL out, KL in] of the first five nodes:")
print(phi[:5])
