"""Heuristic node-selection baselines driven through the same environment."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.cluster import KMeans

from . import env as envlib
from .config import TrainConfig
from .errors import ConfigurationError, PreconditionError

RANDOM, UNCERTAINTY, CENTRALITY, CORESET = "random", "uncertainty", "centrality", "coreset"
KINDS = (RANDOM, UNCERTAINTY, CENTRALITY, CORESET)
KMEANS_RESTARTS = 3
KMEANS_MAX_ITER = 100


@dataclass(frozen=True)
class BaselineKind:
    tag: str
    k: int | None = None  # coreset clusters; None -> remaining budget

    def __post_init__(self):
        if self.tag not in KINDS:
            raise ConfigurationError(f"unknown baseline {self.tag!r}; valid kinds: {', '.join(KINDS)}")
        if self.k is not None and self.k < 1:
            raise ConfigurationError("coreset needs at least one cluster")


def _argmax_lowest(scores, candidates):
    # candidates are sorted ascending and np.argmax returns the first maximum
    return int(candidates[np.argmax(scores[candidates])])


def coreset_pick(embeddings, candidates, labeled, k, seed) -> int:
    """K-means on candidate embeddings; return the candidate nearest the
    centroid of the largest cluster that no labeled node falls into.

    Labeled nodes are assigned to their nearest centroid. If every cluster
    already holds one, the largest cluster overall is used.
    """
    X = embeddings[candidates]
    k = min(k, candidates.size)
    km = KMeans(n_clusters=k, n_init=KMEANS_RESTARTS, max_iter=KMEANS_MAX_ITER, random_state=seed).fit(X)
    centers = km.cluster_centers_
    sizes = np.bincount(km.labels_, minlength=k)
    d_cand = ((X[:, None, :] - centers[None]) ** 2).sum(axis=2)
    unclaimed = np.ones(k, dtype=bool)
    if len(labeled):
        L = embeddings[np.asarray(labeled)]
        d_lab = ((L[:, None, :] - centers[None]) ** 2).sum(axis=2)
        unclaimed[np.argmin(d_lab, axis=1)] = False
    pool = np.flatnonzero(unclaimed) if unclaimed.any() else np.arange(k)
    c = pool[np.argmax(sizes[pool])]
    return int(candidates[np.argmin(d_cand[:, c])])


def baseline_select(kind: BaselineKind, env: envlib.Env, rng) -> int:
    cand = env.candidates()
    if cand.size == 0:
        raise PreconditionError("no unlabeled training nodes left")
    if kind.tag == RANDOM:
        return int(cand[rng.integers(cand.size)])
    if kind.tag == UNCERTAINTY:
        return _argmax_lowest(env.state.phi[:, 1], cand)
    if kind.tag == CENTRALITY:
        return _argmax_lowest(env.graph.degrees, cand)
    k = kind.k if kind.k is not None else env.budget - env.t
    return coreset_pick(env.classifier.embeddings(), cand, env.labeled, k, int(rng.integers(2**31)))


def run_baseline_episode(kind: BaselineKind, graph, b: int, seed: int = 0, cfg: TrainConfig | None = None,
                         rng=None, clf_seed: int | None = None):
    """``b`` baseline selections with per-step classifier updates, then the
    terminal reward. Returns ``(label_set, reward)``."""
    cfg = cfg if cfg is not None else TrainConfig()
    rng = rng if rng is not None else np.random.default_rng(seed)
    clf_seed = seed if clf_seed is None else clf_seed
    env = envlib.reset(graph, b, cfg.alpha, clf_seed, **cfg.classifier_kwargs())
    while not env.done:
        envlib.step(env, baseline_select(kind, env, rng))
    return list(env.labeled), envlib.terminal_reward(env)
