"""Train a flow policy on the toy instance and check that it samples label
sets in proportion to their reward.

With 6 training nodes and a budget of 2 there are 15 terminal sets, so the
policy's exact terminal distribution can be enumerated and compared with the
normalized rewards. Takes about a minute.
"""

from gflowgnn.cli import bundled_config
from gflowgnn.config import load_config
from gflowgnn.graph import load_graph
from gflowgnn.policy import init_policy
from gflowgnn.trainer import policy_seed, proportionality_gap, terminal_rewards, train

cfg = load_config(bundled_config("toy"))
g = load_graph(cfg.edges, cfg.features, cfg.labels, cfg.splits)
rewards = terminal_rewards(g, cfg)

untrained = init_policy(cfg.policy_kind, g, policy_seed(cfg.seed))
print(f"untrained L1 gap: {proportionality_gap(g, untrained, cfg, rewards=rewards)['l1']:.3f}")

policy, log = train(cfg, g, callback=lambda r: r["epoch"] % 250 == 0 and print(
    f"epoch {r['epoch']:4d} loss {r['mean_loss']:.4f} reward {r['mean_reward']:.3f}"))
gap = proportionality_gap(g, policy, cfg, rewards=rewards)
print(f"trained L1 gap: {gap['l1']:.3f}")
print(" set      reward  target  policy")
for s, r, t, p in zip(gap["sets"], gap["rewards"], gap["target"], gap["probs"]):
    print(f" {str(s):8s} {r:.3f}   {t:.3f}   {p:.3f}")
