"""Multi-run evaluation of learned policies and baselines.

Run ``i`` of every method draws its classifier initialization from the same
derived seed, so summaries computed with one master seed are paired. A fixed
``classifier_seed`` in the config pins every run to that initialization.
"""

from __future__ import annotations

from dataclasses import replace

from .baselines import BaselineKind, run_baseline_episode
from .config import TrainConfig
from .metrics import EvalSummary
from .policy import PolicyNet
from .trainer import derived_seed, episode_seeds, rollout

EVAL_STREAM = 1_000_003


def run_policy_episode(policy: PolicyNet, graph, b: int, rng, clf_seed: int, cfg: TrainConfig,
                       greedy: bool = False):
    cfg = replace(cfg, budget=b)
    traj = rollout(graph, policy.on(graph), cfg, rng, clf_seed, greedy=greedy)
    return traj.actions, traj.reward


def evaluate_policy(selector, graph, runs: int, b: int | None = None, seed: int = 0,
                    cfg: TrainConfig | None = None, greedy: bool = False, thresholds=()) -> EvalSummary:
    """Run ``runs`` independent episodes and summarize their terminal rewards.

    ``selector`` is a :class:`PolicyNet` or a :class:`BaselineKind`.
    """
    if runs < 1:
        raise ValueError("runs must be at least 1")
    cfg = cfg if cfg is not None else TrainConfig()
    b = cfg.resolved_budget(graph) if b is None else b
    rewards, sets, seeds = [], [], []
    for i in range(runs):
        rng, clf_seed = episode_seeds(seed, EVAL_STREAM, i, cfg.classifier_seed)
        if isinstance(selector, BaselineKind):
            actions, r = run_baseline_episode(selector, graph, b, cfg=cfg, rng=rng, clf_seed=clf_seed)
        else:
            actions, r = run_policy_episode(selector, graph, b, rng, clf_seed, cfg, greedy)
        rewards.append(r)
        sets.append(sorted(actions))
        seeds.append(derived_seed(seed, EVAL_STREAM, i))
    mode = "baseline" if isinstance(selector, BaselineKind) else ("greedy" if greedy else "sampled")
    return EvalSummary(rewards, sets, tuple(thresholds), mode, seed, seeds)
