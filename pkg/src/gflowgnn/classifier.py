"""Two-layer GCN node classifier trained full-batch on the current label set."""

from __future__ import annotations

import numpy as np

from . import nn
from .errors import PreconditionError
from .graph import Graph
from .metrics import MetricReport, metric_report

DEFAULT_HIDDEN = 16
DEFAULT_LR = 0.01
DEFAULT_MAX_EPOCHS = 300
DEFAULT_PATIENCE = 20


class Classifier:
    """GCN ``softmax(Â · ReLU(Â X W0 + b0) · W1 + b1)`` with its own Adam state.

    One instance has a single writer; use :meth:`clone` to branch.
    """

    def __init__(self, graph: Graph, params: nn.DenseParams, lr: float = DEFAULT_LR):
        self.graph = graph
        self.adj = graph.norm_adj
        self.params = params
        self.lr = lr
        self.opt = nn.AdamState.for_params(params)
        self.epochs = 0
        self.best_valid_accuracy = None
        self._proba = None

    @property
    def hidden(self) -> int:
        return self.params.weights[0].shape[1]

    def clone(self) -> "Classifier":
        other = Classifier.__new__(Classifier)
        other.graph, other.adj, other.lr = self.graph, self.adj, self.lr
        other.params = self.params.copy()
        other.opt = self.opt.copy()
        other.epochs = self.epochs
        other.best_valid_accuracy = self.best_valid_accuracy
        other._proba = self._proba
        return other

    def logits(self, cache=False):
        out, c = nn.forward(self.params, self.graph.features, self.adj)
        return (out, c) if cache else out

    def embeddings(self) -> np.ndarray:
        """Post-ReLU hidden activations, one row per node."""
        W, b = self.params.weights[0], self.params.biases[0]
        return np.maximum(self.adj @ (self.graph.features @ W) + b, 0.0)


def reset_classifier(graph: Graph, hidden: int = DEFAULT_HIDDEN, seed: int = 0, lr: float = DEFAULT_LR) -> Classifier:
    if hidden < 1:
        raise ValueError("hidden width must be at least 1")
    params = nn.init_dense([graph.d, hidden, graph.C], ["relu", "identity"], seed=seed, propagate=[True, True])
    return Classifier(graph, params, lr)


def predict_proba(clf: Classifier) -> np.ndarray:
    if clf._proba is None:
        clf._proba = nn.softmax(clf.logits())
        clf._proba.setflags(write=False)
    return clf._proba


def _step(clf, logits, cache, labeled):
    loss, g_rows = nn.softmax_cross_entropy(logits[labeled], clf.graph.labels[labeled])
    grad_out = np.zeros_like(logits)
    grad_out[labeled] = g_rows
    grads = nn.backward(clf.params, cache, grad_out, clf.adj)
    nn.adam_step(clf.params, grads, clf.opt, clf.lr)
    clf.epochs += 1
    clf._proba = None
    return loss


def _check_labeled(clf, labeled):
    labeled = np.asarray(sorted(labeled), dtype=np.int64)
    if labeled.size == 0:
        raise PreconditionError("training needs a nonempty labeled set")
    if not np.all(clf.graph.train_mask[labeled]):
        raise PreconditionError("labeled nodes must belong to the training split")
    return labeled


def train_epoch(clf: Classifier, labeled) -> float:
    """One full-batch Adam step on the labeled rows; returns the pre-step loss."""
    labeled = _check_labeled(clf, labeled)
    logits, cache = clf.logits(cache=True)
    return _step(clf, logits, cache, labeled)


def _accuracy(logits, labels, nodes):
    return float(np.mean(np.argmax(logits[nodes], axis=1) == labels[nodes]))


def train_to_convergence(clf: Classifier, labeled, max_epochs: int = DEFAULT_MAX_EPOCHS,
                         patience: int = DEFAULT_PATIENCE) -> Classifier:
    """Early stopping on validation accuracy; best weights are restored.

    Training stops after ``patience`` consecutive epochs without strict
    improvement or after ``max_epochs``. The starting weights count as the
    first candidate, so ``patience=0`` leaves the classifier untouched.
    """
    labeled = _check_labeled(clf, labeled)
    valid = clf.graph.splits.valid
    labels = clf.graph.labels
    logits, cache = clf.logits(cache=True)
    best_acc = _accuracy(logits, labels, valid)
    best = (clf.params.copy(), clf.opt.copy())
    wait = 0
    for _ in range(max_epochs):
        if wait >= patience:
            break
        _step(clf, logits, cache, labeled)
        logits, cache = clf.logits(cache=True)
        acc = _accuracy(logits, labels, valid)
        if acc > best_acc:
            best_acc, wait = acc, 0
            best = (clf.params.copy(), clf.opt.copy())
        else:
            wait += 1
    clf.params, clf.opt = best
    clf._proba = None
    clf.best_valid_accuracy = best_acc
    return clf


def evaluate(clf: Classifier, nodes) -> MetricReport:
    nodes = np.asarray(nodes, dtype=np.int64)
    if nodes.size == 0:
        raise PreconditionError("evaluation needs at least one node")
    preds = np.argmax(predict_proba(clf)[nodes], axis=1)
    return metric_report(preds, clf.graph.labels[nodes], clf.graph.C)
