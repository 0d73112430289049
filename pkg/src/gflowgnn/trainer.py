"""Trajectory sampling, the flow-matching objective and the training loop.

For every non-initial state of a trajectory the loss compares the log inflow
(edge flows from all parents, evaluated on the parent vectors paired with the
features recorded one step earlier) against the log outflow over the state's
valid actions, or against the reward at the terminal state.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import env as envlib
from . import nn
from .config import TrainConfig
from .errors import PreconditionError, SizeError, TrainingError
from .graph import Graph
from .policy import PolicyNet, distribution_from_log_flows, draw, flow_gradients, greedy_action, init_policy, \
    log_flow, log_flow_batch, stack_inputs

log = logging.getLogger(__name__)

ENUMERATION_LIMIT = 10_000
_POLICY_STREAM = 0x5EED


@dataclass
class Trajectory:
    states: list
    actions: list
    parents: list
    reward: float | None
    seed: int
    classifier_seed: int
    train_mask: np.ndarray = field(repr=False, default=None)

    @property
    def length(self) -> int:
        return len(self.actions)

    @property
    def complete(self) -> bool:
        return self.reward is not None

    def label_set(self) -> list:
        return sorted(self.actions)

    def to_jsonl(self) -> str:
        lines = []
        for t, state in enumerate(self.states):
            rec = {"step": t, "action": self.actions[t - 1] if t else None,
                   "v": "".join(str(int(x)) for x in state.v)}
            if t == self.length and self.reward is not None:
                rec["reward"] = self.reward
            lines.append(json.dumps(rec))
        return "\n".join(lines) + "\n"


class RewardCache:
    """Memo of terminal rewards keyed by classifier seed and ordered actions.

    Episodes are deterministic given those two, so hits are exact.
    """

    def __init__(self):
        self._store = {}
        self.hits = 0

    def get(self, key):
        r = self._store.get(key)
        if r is not None:
            self.hits += 1
        return r

    def put(self, key, value):
        self._store[key] = value

    def __len__(self):
        return len(self._store)


def derived_seed(master: int, epoch: int, index: int) -> int:
    """Integer identifying one episode; also its classifier seed unless a
    fixed one is configured."""
    return int(np.random.SeedSequence([master, epoch, index]).generate_state(1)[0])


def episode_seeds(master: int, epoch: int, index: int, classifier_seed=None):
    """``(sampling rng, classifier seed)`` for one episode."""
    ss = np.random.SeedSequence([master, epoch, index])
    clf_seed = derived_seed(master, epoch, index) if classifier_seed is None else int(classifier_seed)
    return np.random.default_rng(ss), clf_seed


def rollout(graph: Graph, policy: PolicyNet, cfg: TrainConfig, rng, clf_seed: int, seed: int = 0,
            cache: RewardCache | None = None, greedy: bool = False, explore_eps: float = 0.0) -> Trajectory:
    """One complete episode under ``policy``."""
    b = cfg.resolved_budget(graph)
    env = envlib.reset(graph, b, cfg.alpha, clf_seed, **cfg.classifier_kwargs())
    states, actions, parent_sets = [env.state], [], []
    while not env.done:
        dist = distribution_from_log_flows(log_flow(policy, env.state), env.candidates())
        if greedy:
            a = greedy_action(dist)
        else:
            a = draw(dist, rng, explore_eps)
        envlib.step(env, a)
        actions.append(a)
        states.append(env.state)
        parent_sets.append(envlib.parents(env))
    key = (clf_seed, tuple(actions))
    reward = cache.get(key) if cache is not None else None
    if reward is None:
        reward = envlib.terminal_reward(env)
        if cache is not None:
            cache.put(key, reward)
    return Trajectory(states, actions, parent_sets, reward, seed, clf_seed, graph.train_mask)


def _rollout_job(args):
    graph, policy, cfg, master, epoch, j = args
    rng, clf_seed = episode_seeds(master, epoch, j, cfg.classifier_seed)
    return rollout(graph, policy, cfg, rng, clf_seed, seed=j, explore_eps=cfg.explore_eps)


def rollout_batch(graph: Graph, policy: PolicyNet, cfg: TrainConfig, epoch: int,
                  cache: RewardCache | None = None, executor=None) -> list:
    """``cfg.batch_size`` independent trajectories with derived seeds."""
    if executor is not None:
        jobs = [(graph, policy, cfg, cfg.seed, epoch, j) for j in range(cfg.batch_size)]
        return list(executor.map(_rollout_job, jobs))
    out = []
    for j in range(cfg.batch_size):
        rng, clf_seed = episode_seeds(cfg.seed, epoch, j, cfg.classifier_seed)
        out.append(rollout(graph, policy, cfg, rng, clf_seed, seed=j, cache=cache, explore_eps=cfg.explore_eps))
    return out


# --- flow matching ------------------------------------------------------------

@dataclass
class LossLayout:
    """Row bookkeeping for one trajectory's batched network evaluation.

    ``inflow[t]`` lists ``(row, action)`` pairs for the parents of state
    ``t + 1``; ``outflow[t]`` is ``(row, candidates)`` for interior states and
    None for the terminal one.
    """

    vectors: list
    phis: list
    inflow: list
    outflow: list


def trajectory_layout(traj: Trajectory) -> LossLayout:
    vectors, phis, inflow, outflow = [], [], [], []
    b = traj.length
    for t in range(1, b + 1):
        pairs = []
        for rec in traj.parents[t - 1]:
            pairs.append((len(vectors), rec.action))
            vectors.append(rec.vector)
            phis.append(rec.phi)
        inflow.append(pairs)
    for t in range(1, b + 1):
        if t == b:
            outflow.append(None)
            continue
        s = traj.states[t]
        cand = np.flatnonzero(traj.train_mask & (s.v == 0))
        outflow.append((len(vectors), cand))
        vectors.append(s.v)
        phis.append(s.phi)
    return LossLayout(vectors, phis, inflow, outflow)


def _log_eps_sum_exp(x, eps):
    """``log(eps + sum(exp(x)))`` and the weights ``exp(x) / (eps + sum)``."""
    m = x.max()
    s = np.exp(x - m).sum()
    total = m + math.log(s)
    if eps > 0:
        total = float(np.logaddexp(math.log(eps), total))
    return total, np.exp(x - total)


def loss_from_log_flows(L, layout: LossLayout, target: float, eps: float, clip: float = math.inf):
    """Flow-matching loss of one trajectory from raw log edge-flows ``L``
    (one row per layout row) and its gradient with respect to ``L``.

    ``target`` is the terminal flow (the possibly sharpened reward).
    """
    L = np.asarray(L, dtype=np.float64)
    Lc = np.clip(L, -clip, clip)
    live = (L >= -clip) & (L <= clip)
    G = np.zeros_like(L)
    loss = 0.0
    for pairs, out in zip(layout.inflow, layout.outflow):
        rows = np.array([p[0] for p in pairs])
        acts = np.array([p[1] for p in pairs])
        log_in, w_in = _log_eps_sum_exp(Lc[rows, acts], eps)
        if out is None:
            log_out = math.log(eps + target) if eps + target > 0 else -math.inf
            w_out = None
        else:
            row, cand = out
            log_out, w_out = _log_eps_sum_exp(Lc[row, cand], eps)
        diff = log_in - log_out
        loss += diff * diff
        np.add.at(G, (rows, acts), 2.0 * diff * w_in)
        if w_out is not None:
            G[row, cand] -= 2.0 * diff * w_out
    return loss, G * live


def flow_matching_loss(policy: PolicyNet, traj: Trajectory, eps_loss: float = 1e-8, beta: float = 1.0,
                       clip: float = 30.0):
    """Loss of one complete trajectory and its parameter gradients (None
    when the loss is not finite)."""
    if not traj.complete or traj.length == 0:
        raise PreconditionError("flow-matching loss needs a complete trajectory")
    layout = trajectory_layout(traj)
    X = stack_inputs(layout.vectors, layout.phis)
    L, cache = log_flow_batch(policy, X)
    loss, G = loss_from_log_flows(L, layout, traj.reward ** beta, eps_loss, clip)
    if not math.isfinite(loss):
        return loss, None
    return loss, flow_gradients(policy, cache, G)


# --- training -----------------------------------------------------------------

def policy_seed(master: int) -> int:
    return int(np.random.SeedSequence([master, _POLICY_STREAM]).generate_state(1)[0])


def train(cfg: TrainConfig, graph: Graph, policy: PolicyNet | None = None, callback=None, dump_dir=None):
    """Run the full training loop; returns ``(policy, log_records)``."""
    cfg.validate()
    b = cfg.resolved_budget(graph)
    if b > graph.splits.train.size:
        raise PreconditionError(f"budget {b} exceeds {graph.splits.train.size} training nodes")
    if policy is None:
        policy = init_policy(cfg.policy_kind, graph, policy_seed(cfg.seed))
    opt = nn.AdamState.for_params(policy.params)
    cache = RewardCache()
    records = []
    best_reward, best_set = -math.inf, []
    executor = ProcessPoolExecutor(cfg.jobs) if cfg.jobs > 1 else None
    try:
        for epoch in range(cfg.epochs):
            trajs = rollout_batch(graph, policy, cfg, epoch, cache, executor)
            grads = policy.params.zeros_like()
            losses = []
            for traj in trajs:
                loss, g = flow_matching_loss(policy, traj, cfg.eps_loss, cfg.beta, cfg.log_flow_clip)
                if not math.isfinite(loss):
                    raise TrainingError(_abort(traj, epoch, loss, dump_dir))
                losses.append(loss)
                for acc, gi in zip(grads, g):
                    acc += gi
            for acc in grads:
                acc /= len(trajs)
            nn.adam_step(policy.params, grads, opt, cfg.lr)
            rewards = [t.reward for t in trajs]
            i = int(np.argmax(rewards))
            if rewards[i] > best_reward:
                best_reward, best_set = rewards[i], trajs[i].label_set()
            rec = {"epoch": epoch, "mean_loss": float(np.mean(losses)), "mean_reward": float(np.mean(rewards)),
                   "best_reward": float(best_reward), "best_label_set": best_set}
            records.append(rec)
            if callback is not None:
                callback(rec)
    finally:
        if executor is not None:
            executor.shutdown()
    return policy, records


def _abort(traj, epoch, loss, dump_dir):
    msg = f"non-finite loss {loss} at epoch {epoch}"
    if dump_dir is not None:
        path = f"{dump_dir}/abort_trajectory.jsonl"
        with open(path, "w") as fh:
            fh.write(traj.to_jsonl())
        msg += f"; trajectory written to {path}"
    return msg


def write_train_log(records, path) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def write_curves(records, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "mean_loss", "mean_reward"])
        for rec in records:
            w.writerow([rec["epoch"], repr(rec["mean_loss"]), repr(rec["mean_reward"])])


# --- exact terminal distribution ----------------------------------------------

def enumeration_seed(cfg: TrainConfig) -> int:
    return int(cfg.classifier_seed) if cfg.classifier_seed is not None else int(cfg.seed)


def _check_enumerable(graph, b):
    size = math.comb(int(graph.splits.train.size), b)
    if size > ENUMERATION_LIMIT:
        raise SizeError(f"{size} terminal sets exceed the enumeration limit of {ENUMERATION_LIMIT}")


def enumerate_orderings(graph: Graph, policy: PolicyNet, cfg: TrainConfig, clf_seed: int | None = None,
                        with_rewards: bool = False, cache: RewardCache | None = None):
    """Every ordered action sequence with its exact probability under
    ``policy``, replaying the environment (classifier updates included) along
    each prefix. Yields ``(actions, probability, reward_or_None)``."""
    b = cfg.resolved_budget(graph)
    _check_enumerable(graph, b)
    clf_seed = enumeration_seed(cfg) if clf_seed is None else clf_seed
    root = envlib.reset(graph, b, cfg.alpha, clf_seed, **cfg.classifier_kwargs())

    def walk(e, prefix, prob):
        if e.done:
            reward = None
            if with_rewards:
                key = (clf_seed, tuple(prefix))
                reward = cache.get(key) if cache is not None else None
                if reward is None:
                    reward = envlib.terminal_reward(e)
                    if cache is not None:
                        cache.put(key, reward)
            yield tuple(prefix), prob, reward
            return
        dist = distribution_from_log_flows(log_flow(policy, e.state), e.candidates())
        for a in dist.support:
            child = e.clone()
            envlib.step(child, int(a))
            yield from walk(child, prefix + [int(a)], prob * dist.probs[a])

    yield from walk(root, [], 1.0)


def enumerate_terminal_distribution(graph: Graph, policy: PolicyNet, cfg: TrainConfig, clf_seed=None) -> dict:
    """Exact probability of each terminal label set (frozenset of nodes)."""
    probs = {}
    for actions, p, _ in enumerate_orderings(graph, policy, cfg, clf_seed):
        key = frozenset(actions)
        probs[key] = probs.get(key, 0.0) + p
    return probs


def terminal_rewards(graph: Graph, cfg: TrainConfig, clf_seed=None, cache=None, policy=None) -> dict:
    """Reward of every terminal set, averaged over the orderings that reach
    it (rewards depend slightly on the order of the per-step updates)."""
    policy = policy if policy is not None else init_policy(cfg.policy_kind, graph, 0)
    sums, counts = {}, {}
    for actions, _, r in enumerate_orderings(graph, policy, cfg, clf_seed, with_rewards=True, cache=cache):
        key = frozenset(actions)
        sums[key] = sums.get(key, 0.0) + r
        counts[key] = counts.get(key, 0) + 1
    return {k: sums[k] / counts[k] for k in sums}


def proportionality_gap(graph: Graph, policy: PolicyNet, cfg: TrainConfig, clf_seed=None, rewards=None) -> dict:
    """L1 distance between the exact terminal distribution and ``r**beta``
    normalized over all terminal sets."""
    probs = enumerate_terminal_distribution(graph, policy, cfg, clf_seed)
    if rewards is None:
        rewards = terminal_rewards(graph, cfg, clf_seed)
    keys = sorted(probs, key=lambda s: sorted(s))
    r = np.array([rewards[k] ** cfg.beta for k in keys])
    p = np.array([probs[k] for k in keys])
    target = r / r.sum()
    return {
        "l1": float(np.abs(p - target).sum()),
        "sets": [sorted(k) for k in keys],
        "probs": p.tolist(),
        "target": target.tolist(),
        "rewards": [rewards[k] for k in keys],
    }


__all__ = [
    "Trajectory", "RewardCache", "LossLayout", "episode_seeds", "rollout", "rollout_batch",
    "trajectory_layout", "loss_from_log_flows", "flow_matching_loss", "train", "policy_seed",
    "write_train_log", "write_curves", "enumerate_orderings", "enumerate_terminal_distribution",
    "terminal_rewards", "proportionality_gap",
]
