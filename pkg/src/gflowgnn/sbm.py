"""Synthetic stochastic-block-model instances with Gaussian class features."""

from __future__ import annotations

import numpy as np

from .graph import Graph, adjacency_from_edges, split_nodes


def block_sizes(n: int, C: int, proportions=None) -> np.ndarray:
    """Integer class sizes summing to ``n`` (largest-remainder rounding)."""
    w = np.ones(C) if proportions is None else np.asarray(proportions, dtype=np.float64)
    w = w / w.sum()
    raw = w * n
    sizes = np.floor(raw).astype(np.int64)
    short = n - sizes.sum()
    order = np.argsort(-(raw - sizes), kind="stable")
    sizes[order[:short]] += 1
    return sizes


def generate_sbm(n: int, C: int, p_in: float, p_out: float, d: int = 8, mean_scale: float = 1.0,
                 noise: float = 1.0, valid: int | None = None, test: int | None = None,
                 proportions=None, seed: int = 0) -> Graph:
    """Sample a labeled SBM graph.

    Nodes are assigned to blocks in contiguous runs; each pair ``(u, v)``
    is joined with probability ``p_in`` inside a block and ``p_out`` across.
    Features are ``mu[y] + noise * N(0, I_d)`` with class means drawn from
    ``N(0, mean_scale**2 I_d)``. Splits default to 20% valid and 20% test.
    """
    rng = np.random.default_rng(seed)
    labels = np.repeat(np.arange(C), block_sizes(n, C, proportions))
    iu, ju = np.triu_indices(n, k=1)
    same = labels[iu] == labels[ju]
    prob = np.where(same, p_in, p_out)
    keep = rng.random(iu.size) < prob
    edges = np.stack([iu[keep], ju[keep]], axis=1)
    means = rng.normal(0.0, mean_scale, size=(C, d))
    features = means[labels] + noise * rng.normal(size=(n, d))
    valid = max(1, n // 5) if valid is None else valid
    test = max(1, n // 5) if test is None else test
    splits = split_nodes(labels, valid, test, seed=int(rng.integers(2**31)))
    return Graph(adjacency_from_edges(edges, n), features, labels, splits, C)
