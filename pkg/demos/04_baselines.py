"""Compare the heuristic selectors on a synthetic 150-node, 3-class graph.

All methods share the same classifier initialization in run i, so the
comparison is paired. Takes around ten seconds.
"""

from gflowgnn import BaselineKind, evaluate_policy, generate_sbm
from gflowgnn.config import TrainConfig

g = generate_sbm(150, 3, 0.08, 0.02, d=8, valid=45, test=45, seed=0)
cfg = TrainConfig()
print(f"budget {cfg.resolved_budget(g)} of {g.splits.train.size} training nodes")
for kind in ("random", "uncertainty", "centrality", "coreset"):
    s = evaluate_policy(BaselineKind(kind), g, runs=10, seed=0, cfg=cfg)
    print(f"{kind:12s} mean {s.mean:.3f}  std {s.std:.3f}  best {s.best_reward:.3f}")
