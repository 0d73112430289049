"""Edge-flow estimators and the sampling policy they induce.

Both architectures read the ``n x 5`` state matrix ``[v | phi]`` and emit one
log edge-flow per node. The MLP flattens the matrix and is tied to one graph
size; the GCN head scores every node with shared weights and can be bound to
any graph via :meth:`PolicyNet.on`.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import nn
from .errors import PreconditionError, ShapeError, ValidationError
from .graph import Graph

MLP = "mlp"
GCN = "gcn"
KINDS = (MLP, GCN)
STATE_WIDTH = 5
MLP_HIDDEN = (128, 128)
GCN_HIDDEN = (8, 8)


@dataclass
class PolicyNet:
    kind: str
    params: nn.DenseParams
    graph: Graph

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown policy kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == MLP:
            self._check_n(self.graph.n)

    def _check_n(self, n):
        if self.params.in_dim != STATE_WIDTH * n or self.params.out_dim != n:
            raise ShapeError(
                f"MLP policy was built for {self.params.out_dim} nodes and cannot run on a graph with {n}")

    @property
    def adj(self):
        return self.graph.norm_adj

    def on(self, graph: Graph) -> "PolicyNet":
        """Same parameters bound to another graph."""
        if self.kind == MLP:
            self._check_n(graph.n)
        return replace(self, graph=graph)

    def manifest(self) -> dict:
        return {"kind": self.kind, "n": self.graph.n, **self.params.architecture()}


@dataclass(frozen=True)
class ActionDistribution:
    probs: np.ndarray
    support: np.ndarray


def init_policy(kind: str, graph: Graph, seed: int = 0) -> PolicyNet:
    if kind == MLP:
        n = graph.n
        params = nn.init_dense([STATE_WIDTH * n, *MLP_HIDDEN, n], ["relu", "relu", "identity"], seed=seed)
    elif kind == GCN:
        params = nn.init_dense([STATE_WIDTH, *GCN_HIDDEN, 1], ["relu", "relu", "identity"], seed=seed,
                               propagate=[True, True, False])
    else:
        raise ValueError(f"unknown policy kind {kind!r}; expected one of {KINDS}")
    return PolicyNet(kind, params, graph)


def state_matrix(state) -> np.ndarray:
    return np.column_stack([state.v.astype(np.float64), state.phi])


def stack_inputs(vectors, phis) -> np.ndarray:
    """Batch of state matrices, shape ``(K, n, 5)``."""
    v = np.asarray(vectors, dtype=np.float64)
    return np.concatenate([v[:, :, None], np.asarray(phis, dtype=np.float64)], axis=2)


def log_flow_batch(policy: PolicyNet, X):
    """Raw log edge-flows for a ``(K, n, 5)`` batch; returns ``(out, cache)``."""
    X = np.asarray(X, dtype=np.float64)
    K, n, w = X.shape
    if w != STATE_WIDTH:
        raise ShapeError(f"state matrices must have {STATE_WIDTH} columns, got {w}")
    if policy.kind == MLP:
        policy._check_n(n)
        out, cache = nn.forward(policy.params, X.reshape(K, n * STATE_WIDTH))
        return out, cache
    if n != policy.graph.n:
        raise ShapeError(f"GCN policy bound to a {policy.graph.n}-node graph got {n}-node states; use .on(graph)")
    out, cache = nn.forward(policy.params, X, policy.adj)
    return out[:, :, 0], cache


def log_flow(policy: PolicyNet, state) -> np.ndarray:
    out, _ = log_flow_batch(policy, state_matrix(state)[None])
    return out[0]


def flow_gradients(policy: PolicyNet, cache, upstream) -> list:
    """Parameter gradients of ``sum(log_flows * upstream)`` for a batch
    evaluated by :func:`log_flow_batch`."""
    g = np.asarray(upstream, dtype=np.float64)
    if policy.kind == MLP:
        return nn.backward(policy.params, cache, g)
    return nn.backward(policy.params, cache, g[:, :, None], policy.adj)


def distribution_from_log_flows(logf, candidates) -> ActionDistribution:
    candidates = np.asarray(candidates, dtype=np.int64)
    if candidates.size == 0:
        raise PreconditionError("no candidate actions")
    z = logf[candidates]
    e = np.exp(z - z.max())
    probs = np.zeros(logf.shape[0])
    probs[candidates] = e / e.sum()
    return ActionDistribution(probs, candidates)


def action_distribution(policy: PolicyNet, state, candidates) -> ActionDistribution:
    """Softmax of log edge-flows restricted to ``candidates``."""
    if len(candidates) == 0:
        raise PreconditionError("no candidate actions")
    return distribution_from_log_flows(log_flow(policy, state), candidates)


def draw(dist: ActionDistribution, rng, epsilon: float = 0.0) -> int:
    """One categorical draw consuming exactly one uniform from ``rng``."""
    p = dist.probs[dist.support]
    if epsilon > 0.0:
        p = (1.0 - epsilon) * p + epsilon / p.size
    cdf = np.cumsum(p)
    u = rng.random() * cdf[-1]
    i = min(int(np.searchsorted(cdf, u, side="right")), p.size - 1)
    return int(dist.support[i])


def sample_action(policy: PolicyNet, state, candidates, rng, epsilon: float = 0.0) -> int:
    return draw(action_distribution(policy, state, candidates), rng, epsilon)


def greedy_action(dist: ActionDistribution) -> int:
    # support is sorted, so argmax ties resolve to the lowest node index
    return int(dist.support[np.argmax(dist.probs[dist.support])])


def save_policy(path, policy: PolicyNet, extra: dict | None = None) -> None:
    manifest = dict(policy.manifest(), **(extra or {}))
    nn.save_checkpoint(path, policy.params.arrays(), manifest)


def load_policy(path, graph: Graph) -> PolicyNet:
    arrays, manifest = nn.load_checkpoint(path)
    kind = manifest.get("kind")
    if kind not in KINDS:
        raise ValidationError(f"{path}: unknown policy kind {kind!r}")
    params = nn.params_from_arrays(arrays, manifest["activations"], manifest["propagate"])
    if params.architecture()["dims"] != manifest["dims"]:
        raise ValidationError(f"{path}: array shapes disagree with the manifest")
    if kind == MLP and manifest["n"] != graph.n:
        raise ShapeError(f"MLP checkpoint was trained on {manifest['n']} nodes; graph has {graph.n}")
    return PolicyNet(kind, params, graph)
