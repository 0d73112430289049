"""Train the GCN-head policy on one graph and run it on a larger one.

The GCN head scores nodes with shared weights, so it works on any graph. The
MLP policy is tied to the node count it was built for and refuses.
With only 100 training epochs the transferred policy lands near random.
"""

from gflowgnn import BaselineKind, evaluate_policy, generate_sbm, init_policy
from gflowgnn.config import TrainConfig
from gflowgnn.errors import ShapeError
from gflowgnn.trainer import train

source = generate_sbm(60, 3, 0.15, 0.03, d=8, seed=1)
target = generate_sbm(120, 3, 0.08, 0.02, d=8, seed=2)
cfg = TrainConfig(policy_kind="gcn", epochs=100, beta=10.0)
policy, _ = train(cfg, source)

moved = policy.on(target)
s = evaluate_policy(moved, target, runs=10, seed=0, cfg=cfg)
r = evaluate_policy(BaselineKind("random"), target, runs=10, seed=0, cfg=cfg)
print(f"transferred GCN policy {s.mean:.3f} vs random {r.mean:.3f} on the {target.n}-node graph")

try:
    init_policy("mlp", source).on(target)
except ShapeError as exc:
    print("MLP refuses:", exc)
