"""Dense layers with explicit backward passes, Adam, finite-difference
gradient checking and a small binary checkpoint container.

A stack of layers is described by :class:`DenseParams`. Each layer computes
``act(P @ (h @ W) + b)`` where ``P`` is an optional sparse propagation
operator (the normalized adjacency for GCN layers) and the identity for
plain linear layers. Inputs to propagating stacks may be batched as
``(K, n, f)``; plain stacks accept any leading shape.

Checkpoint container layout (little endian)::

    b"GFCK"            magic
    uint32             format version (1)
    uint32             manifest byte length L
    L bytes            UTF-8 JSON manifest
    repeated per array, in manifest order:
        uint32         ndim
        uint64 * ndim  shape
        float64 * prod(shape)   row-major data
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ShapeError, TrainingError, ValidationError

ACTIVATIONS = ("relu", "identity")
CKPT_MAGIC = b"GFCK"
CKPT_VERSION = 1


@dataclass
class DenseParams:
    weights: list
    biases: list
    activations: list
    propagate: list = field(default=None)

    def __post_init__(self):
        if self.propagate is None:
            self.propagate = [False] * len(self.weights)
        if not (len(self.weights) == len(self.biases) == len(self.activations) == len(self.propagate)):
            raise ShapeError("weights, biases, activations and propagate flags must have equal length")
        for i, (W, b, act) in enumerate(zip(self.weights, self.biases, self.activations)):
            if act not in ACTIVATIONS:
                raise ValueError(f"unknown activation {act!r}")
            if W.ndim != 2 or b.shape != (W.shape[1],):
                raise ShapeError(f"layer {i}: weight {W.shape} and bias {b.shape} are incongruent")
            if i and self.weights[i - 1].shape[1] != W.shape[0]:
                raise ShapeError(f"layer {i} input width {W.shape[0]} != previous output {self.weights[i - 1].shape[1]}")

    @property
    def in_dim(self):
        return self.weights[0].shape[0]

    @property
    def out_dim(self):
        return self.weights[-1].shape[1]

    def arrays(self) -> list:
        """Flat ``[W0, b0, W1, b1, ...]`` view; arrays are shared, not copied."""
        out = []
        for W, b in zip(self.weights, self.biases):
            out += [W, b]
        return out

    def copy(self) -> "DenseParams":
        return DenseParams([W.copy() for W in self.weights], [b.copy() for b in self.biases],
                           list(self.activations), list(self.propagate))

    def zeros_like(self) -> list:
        return [np.zeros_like(a) for a in self.arrays()]

    def architecture(self) -> dict:
        return {
            "dims": [self.in_dim] + [W.shape[1] for W in self.weights],
            "activations": list(self.activations),
            "propagate": list(self.propagate),
        }


def init_dense(dims, activations, seed=None, propagate=None, rng=None) -> DenseParams:
    """Glorot-uniform weights, zero biases."""
    rng = rng if rng is not None else np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return DenseParams(weights, biases, list(activations), propagate)


def _propagate(op, z):
    if z.ndim == 2:
        return op @ z
    K, n, g = z.shape
    flat = np.ascontiguousarray(z.transpose(1, 0, 2)).reshape(n, K * g)
    return (op @ flat).reshape(n, K, g).transpose(1, 0, 2)


def forward(params: DenseParams, x, adj=None):
    """Forward pass returning ``(output, cache)``."""
    h = np.asarray(x, dtype=np.float64)
    if h.shape[-1] != params.in_dim:
        raise ShapeError(f"input width {h.shape[-1]} != first layer in-dimension {params.in_dim}")
    inputs, pres = [], []
    for W, b, act, prop in zip(params.weights, params.biases, params.activations, params.propagate):
        inputs.append(h)
        z = h @ W
        if prop:
            if adj is None:
                raise ShapeError("propagating layer needs an adjacency operator")
            if z.shape[-2] != adj.shape[0]:
                raise ShapeError(f"input has {z.shape[-2]} nodes, operator has {adj.shape[0]}")
            z = _propagate(adj, z)
        z = z + b
        pres.append(z)
        h = np.maximum(z, 0.0) if act == "relu" else z
    return h, {"inputs": inputs, "pres": pres}


def backward(params: DenseParams, cache, grad_output, adj=None) -> list:
    """Gradients of ``sum(output * grad_output)`` as a flat list congruent
    with ``params.arrays()``."""
    g = np.asarray(grad_output, dtype=np.float64)
    if len(cache["pres"]) != len(params.weights) or g.shape != cache["pres"][-1].shape:
        raise ShapeError("cache does not match these parameters or this upstream gradient")
    grads = [None] * (2 * len(params.weights))
    for i in reversed(range(len(params.weights))):
        W = params.weights[i]
        pre = cache["pres"][i]
        if params.activations[i] == "relu":
            g = g * (pre > 0)
        grads[2 * i + 1] = g.reshape(-1, W.shape[1]).sum(axis=0)
        if params.propagate[i]:
            g = _propagate(adj.T, g)
        h = cache["inputs"][i]
        grads[2 * i] = h.reshape(-1, W.shape[0]).T @ g.reshape(-1, W.shape[1])
        if i:
            g = g @ W.T
    return grads


def mlp_forward(params: DenseParams, x):
    if any(params.propagate):
        raise ShapeError("mlp_forward called on a propagating stack")
    return forward(params, x)


def mlp_backward(params: DenseParams, cache, grad_output) -> list:
    return backward(params, cache, grad_output)


def softmax(logits):
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(logits):
    z = logits - logits.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def softmax_cross_entropy(logits, targets):
    """Mean cross-entropy over rows and its gradient with respect to logits."""
    logits = np.atleast_2d(np.asarray(logits, dtype=np.float64))
    targets = np.asarray(targets, dtype=np.int64).ravel()
    m, C = logits.shape
    if targets.shape[0] != m:
        raise ShapeError(f"{m} logit rows but {targets.shape[0]} targets")
    if targets.size and (targets.min() < 0 or targets.max() >= C):
        raise IndexError(f"targets must lie in [0, {C})")
    logp = log_softmax(logits)
    rows = np.arange(m)
    loss = -logp[rows, targets].mean()
    grad = np.exp(logp)
    grad[rows, targets] -= 1.0
    return float(loss), grad / m


@dataclass
class AdamState:
    m: list
    v: list
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: DenseParams, **kw) -> "AdamState":
        return cls(params.zeros_like(), params.zeros_like(), **kw)

    def copy(self) -> "AdamState":
        return AdamState([a.copy() for a in self.m], [a.copy() for a in self.v],
                         self.t, self.beta1, self.beta2, self.eps)


def adam_step(params: DenseParams, grads, state: AdamState, lr: float):
    """Bias-corrected Adam update applied in place; returns ``(params, state)``."""
    arrays = params.arrays()
    if len(grads) != len(arrays):
        raise ShapeError(f"{len(grads)} gradients for {len(arrays)} parameter arrays")
    for i, (p, g) in enumerate(zip(arrays, grads)):
        if g.shape != p.shape:
            raise ShapeError(f"gradient {i} has shape {g.shape}, parameter has {p.shape}")
        if not np.all(np.isfinite(g)):
            raise TrainingError(f"non-finite gradient in layer {i // 2}", layer=i // 2)
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    for p, g, m, v in zip(arrays, grads, state.m, state.v):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return params, state


# --- finite differences -------------------------------------------------------

def numerical_gradient(f, arrays, h=1e-5) -> list:
    """Central differences of scalar ``f()`` with respect to each array, which
    is perturbed in place and restored."""
    out = []
    for a in arrays:
        g = np.zeros_like(a)
        it = np.nditer(a, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = a[idx]
            a[idx] = orig + h
            fp = f()
            a[idx] = orig - h
            fm = f()
            a[idx] = orig
            g[idx] = (fp - fm) / (2 * h)
        out.append(g)
    return out


def relative_error(analytic, numeric) -> float:
    """||a - n|| / max(||a||, ||n||), zero when both vanish."""
    a, n = np.ravel(analytic), np.ravel(numeric)
    scale = max(np.linalg.norm(a), np.linalg.norm(n))
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(a - n) / scale)


def gradient_check(f, arrays, analytic, h=1e-5) -> float:
    """Largest per-array relative error between ``analytic`` and central
    differences of ``f``."""
    numeric = numerical_gradient(f, arrays, h)
    return max(relative_error(a, n) for a, n in zip(analytic, numeric))


# --- checkpoints --------------------------------------------------------------

def save_checkpoint(path, arrays, manifest: dict) -> None:
    arrays = [np.ascontiguousarray(a, dtype="<f8") for a in arrays]
    manifest = dict(manifest, n_arrays=len(arrays), shapes=[list(a.shape) for a in arrays])
    meta = json.dumps(manifest, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CKPT_MAGIC)
        fh.write(struct.pack("<II", CKPT_VERSION, len(meta)))
        fh.write(meta)
        for a in arrays:
            fh.write(struct.pack("<I", a.ndim))
            fh.write(struct.pack(f"<{a.ndim}Q", *a.shape))
            fh.write(a.tobytes(order="C"))


def load_checkpoint(path):
    """Return ``(arrays, manifest)``."""
    data = Path(path).read_bytes()
    if data[:4] != CKPT_MAGIC:
        raise ValidationError(f"{path}: not a checkpoint container")
    version, mlen = struct.unpack_from("<II", data, 4)
    if version != CKPT_VERSION:
        raise ValidationError(f"{path}: unsupported checkpoint version {version}")
    off = 12
    manifest = json.loads(data[off:off + mlen].decode("utf-8"))
    off += mlen
    arrays = []
    for _ in range(manifest["n_arrays"]):
        (ndim,) = struct.unpack_from("<I", data, off)
        off += 4
        shape = struct.unpack_from(f"<{ndim}Q", data, off)
        off += 8 * ndim
        count = int(np.prod(shape)) if ndim else 1
        a = np.frombuffer(data, dtype="<f8", count=count, offset=off).reshape(shape).astype(np.float64)
        off += 8 * count
        arrays.append(a)
    if off != len(data):
        raise ValidationError(f"{path}: {len(data) - off} trailing bytes")
    return arrays, manifest


def params_from_arrays(arrays, activations, propagate=None) -> DenseParams:
    return DenseParams(list(arrays[0::2]), list(arrays[1::2]), list(activations), propagate)
