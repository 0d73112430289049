"""Walk one active-learning episode by hand.

Every step labels a training node, runs one classifier epoch, and refreshes
the features. The reward is the validation accuracy of a copy of the
classifier trained to convergence on the final label set.
"""

from gflowgnn import env as envlib
from gflowgnn.cli import bundled_config
from gflowgnn.config import load_config
from gflowgnn.graph import load_graph

cfg = load_config(bundled_config("toy"))
g = load_graph(cfg.edges, cfg.features, cfg.labels, cfg.splits)

e = envlib.reset(g, b=3, seed=0)
for node in g.splits.train[:3]:
    state = envlib.step(e, node)
    print(f"t={state.t} labeled={state.label_set()} mean entropy={state.phi[:, 1].mean():.3f}")
    for p in envlib.parents(e):
        print(f"   parent {p.vector.nonzero()[0].tolist()} + node {p.action}")

print("terminal reward:", envlib.terminal_reward(e))
print("test metrics:", envlib.clf_mod.evaluate(e.final_classifier, g.splits.test).to_json())
