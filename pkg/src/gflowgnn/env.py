"""Active-learning MDP over label sets.

A state pairs the flow-node vector ``v`` (which training nodes are labeled)
with the flow-feature matrix ``phi`` derived from the classifier's current
predictions. Only ``v`` fixes the DAG structure; parents of a state reuse the
features recorded one step earlier instead of recomputing them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import classifier as clf_mod
from .errors import BudgetExhaustedError, ConfigurationError, InvalidActionError, PreconditionError
from .graph import Graph

DEFAULT_ALPHA = 10.0
PROB_FLOOR = 1e-10
N_FEATURES = 4


@dataclass(frozen=True)
class State:
    v: np.ndarray
    phi: np.ndarray
    t: int

    def label_set(self) -> list:
        return np.flatnonzero(self.v).tolist()


@dataclass(frozen=True)
class ParentRecord:
    vector: np.ndarray
    phi: np.ndarray
    action: int


def compute_flow_features(graph: Graph, proba, alpha: float = DEFAULT_ALPHA) -> np.ndarray:
    """Per-node ``[degree, entropy, KL(node||nbrs), KL(nbrs||node)]``.

    Degree is ``min(|N(v)| / alpha, 1)``; entropy is normalized by ``log C``;
    the divergences average over neighbours and are zero for isolated nodes.
    Probabilities are floored at ``PROB_FLOOR`` inside logarithms only.
    """
    if alpha <= 0:
        raise ConfigurationError("alpha must be positive")
    p = np.asarray(proba, dtype=np.float64)
    n, C = p.shape
    logp = np.log(np.clip(p, PROB_FLOOR, 1.0))
    deg = graph.degrees.astype(np.float64)
    phi = np.zeros((n, N_FEATURES))
    phi[:, 0] = np.minimum(deg / alpha, 1.0)
    if C > 1:
        phi[:, 1] = -(p * logp).sum(axis=1) / np.log(C)
    adj = graph.adjacency
    rows = np.repeat(np.arange(n), np.diff(adj.indptr))
    cols = adj.indices
    if cols.size:
        self_ent = (p * logp).sum(axis=1)
        kl_out = self_ent[rows] - (p[rows] * logp[cols]).sum(axis=1)
        kl_in = self_ent[cols] - (p[cols] * logp[rows]).sum(axis=1)
        has = deg > 0
        phi[:, 2] = np.bincount(rows, weights=kl_out, minlength=n)
        phi[:, 3] = np.bincount(rows, weights=kl_in, minlength=n)
        phi[has, 2] /= deg[has]
        phi[has, 3] /= deg[has]
    # KL is nonnegative; clip round-off below zero
    np.maximum(phi[:, 2:], 0.0, out=phi[:, 2:])
    phi.setflags(write=False)
    return phi


class Env:
    """One active-learning episode. Single writer; copy with :meth:`clone`."""

    def __init__(self, graph: Graph, budget: int, alpha: float, classifier, max_epochs, patience):
        self.graph = graph
        self.budget = budget
        self.alpha = alpha
        self.classifier = classifier
        self.max_epochs = max_epochs
        self.patience = patience
        self.labeled: list = []
        self.final_classifier = None
        self._unlabeled_train = graph.train_mask.copy()
        v = np.zeros(graph.n, dtype=np.int8)
        v.setflags(write=False)
        phi = compute_flow_features(graph, clf_mod.predict_proba(classifier), alpha)
        self.state = State(v, phi, 0)
        self.history = [phi]

    @property
    def t(self) -> int:
        return self.state.t

    @property
    def done(self) -> bool:
        return self.state.t >= self.budget

    def candidates(self) -> np.ndarray:
        return np.flatnonzero(self._unlabeled_train)

    def candidate_mask(self) -> np.ndarray:
        return self._unlabeled_train.copy()

    def clone(self) -> "Env":
        other = Env.__new__(Env)
        other.__dict__.update(self.__dict__)
        other.classifier = self.classifier.clone()
        other.labeled = list(self.labeled)
        other._unlabeled_train = self._unlabeled_train.copy()
        other.history = list(self.history)
        return other


def reset(graph: Graph, b: int, alpha: float = DEFAULT_ALPHA, seed: int = 0, *,
          hidden: int = clf_mod.DEFAULT_HIDDEN, lr: float = clf_mod.DEFAULT_LR,
          max_epochs: int = clf_mod.DEFAULT_MAX_EPOCHS, patience: int = clf_mod.DEFAULT_PATIENCE) -> Env:
    """Fresh episode with an empty label set and a classifier seeded by ``seed``."""
    if not 0 < b <= graph.splits.train.size:
        raise ConfigurationError(f"budget {b} infeasible for {graph.splits.train.size} training nodes")
    classifier = clf_mod.reset_classifier(graph, hidden, seed, lr)
    return Env(graph, b, alpha, classifier, max_epochs, patience)


def step(env: Env, action: int) -> State:
    """Label ``action``, train the classifier one epoch, refresh features."""
    if env.done:
        raise BudgetExhaustedError(f"budget of {env.budget} already spent")
    action = int(action)
    if not (0 <= action < env.graph.n) or not env._unlabeled_train[action]:
        raise InvalidActionError(f"node {action} is not an unlabeled training node")
    env._unlabeled_train[action] = False
    env.labeled.append(action)
    clf_mod.train_epoch(env.classifier, env.labeled)
    v = env.state.v.copy()
    v[action] = 1
    v.setflags(write=False)
    phi = compute_flow_features(env.graph, clf_mod.predict_proba(env.classifier), env.alpha)
    env.state = State(v, phi, env.state.t + 1)
    env.history.append(phi)
    return env.state


def parents(env: Env, state: State | None = None) -> list:
    """All parents of ``state``, each carrying the features recorded at t-1."""
    state = env.state if state is None else state
    if state.t < 1:
        raise PreconditionError("the initial state has no parents")
    phi = env.history[state.t - 1]
    records = []
    for a in np.flatnonzero(state.v):
        vec = state.v.copy()
        vec[a] = 0
        vec.setflags(write=False)
        records.append(ParentRecord(vec, phi, int(a)))
    return records


def terminal_reward(env: Env) -> float:
    """Validation accuracy after training a copy of the rollout classifier to
    convergence on the final label set."""
    if not env.done:
        raise PreconditionError(f"reward requested at step {env.t} of {env.budget}")
    clf = env.classifier.clone()
    clf_mod.train_to_convergence(clf, env.labeled, env.max_epochs, env.patience)
    env.final_classifier = clf
    return clf.best_valid_accuracy
