"""Node-classification graph instances: loading, validation, splits and the
symmetric normalized adjacency shared by every GCN in the package."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import ConfigurationError, ParseError, ValidationError

log = logging.getLogger(__name__)

DEFAULT_SPLIT_SEED = 0
SPLIT_RETRY_LIMIT = 100


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Splits:
    train: np.ndarray
    valid: np.ndarray
    test: np.ndarray

    def __post_init__(self):
        for name in ("train", "valid", "test"):
            object.__setattr__(self, name, _frozen(np.unique(getattr(self, name)), np.int64))

    def validate(self, n: int) -> None:
        parts = {"train": self.train, "valid": self.valid, "test": self.test}
        for name, idx in parts.items():
            if idx.size == 0:
                raise ValidationError(f"{name} split is empty")
            if idx.min() < 0 or idx.max() >= n:
                raise ValidationError(f"{name} split has indices outside [0, {n})")
        if (np.intersect1d(self.train, self.valid).size
                or np.intersect1d(self.train, self.test).size
                or np.intersect1d(self.valid, self.test).size):
            raise ValidationError("splits are not pairwise disjoint")

    def to_json(self) -> dict:
        return {"train": self.train.tolist(), "valid": self.valid.tolist(), "test": self.test.tolist()}

    def __eq__(self, other):
        if not isinstance(other, Splits):
            return NotImplemented
        return all(np.array_equal(getattr(self, k), getattr(other, k)) for k in ("train", "valid", "test"))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable node-classification instance.

    ``adjacency`` is a CSR matrix with sorted column indices, unit entries,
    symmetric storage and an empty diagonal. ``splits`` may be None for
    instances too small to partition; such graphs support structural queries
    only.
    """

    adjacency: sp.csr_matrix
    features: np.ndarray
    labels: np.ndarray
    splits: Splits | None
    num_classes: int = field(default=None)

    def __post_init__(self):
        n = self.labels.shape[0]
        adj = sp.csr_matrix(self.adjacency, dtype=np.float64)
        adj.sum_duplicates()
        adj.sort_indices()
        object.__setattr__(self, "adjacency", adj)
        object.__setattr__(self, "features", _frozen(np.atleast_2d(self.features), np.float64))
        object.__setattr__(self, "labels", _frozen(self.labels, np.int64))
        if self.num_classes is None:
            object.__setattr__(self, "num_classes", int(self.labels.max()) + 1)
        self._validate(n)

    def _validate(self, n):
        adj, C = self.adjacency, self.num_classes
        if adj.shape != (n, n):
            raise ValidationError(f"adjacency shape {adj.shape} does not match {n} labels")
        if self.features.shape[0] != n:
            raise ValidationError(f"features have {self.features.shape[0]} rows, expected {n}")
        if not np.all(np.isfinite(self.features)):
            raise ValidationError("features contain non-finite values")
        if adj.diagonal().any():
            raise ValidationError("adjacency stores self-loops")
        if np.any(adj.data != 1.0):
            raise ValidationError("adjacency must be binary")
        if (adj != adj.T).nnz:
            raise ValidationError("adjacency is not symmetric")
        if self.labels.min() < 0 or self.labels.max() >= C:
            raise ValidationError(f"labels must lie in [0, {C})")
        if self.splits is None:
            return
        self.splits.validate(n)
        missing = np.setdiff1d(np.arange(C), self.labels[self.splits.train])
        if missing.size:
            raise ValidationError(f"classes {missing.tolist()} absent from the training split")

    @property
    def n(self) -> int:
        return self.labels.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def C(self) -> int:
        return self.num_classes

    @cached_property
    def degrees(self) -> np.ndarray:
        return _frozen(np.diff(self.adjacency.indptr), np.int64)

    @cached_property
    def train_mask(self) -> np.ndarray:
        if self.splits is None:
            raise ValidationError("graph has no splits")
        mask = np.zeros(self.n, dtype=bool)
        mask[self.splits.train] = True
        mask.setflags(write=False)
        return mask

    @cached_property
    def norm_adj(self) -> sp.csr_matrix:
        return _normalize(self.adjacency)

    def edge_list(self) -> np.ndarray:
        """Undirected edges as ``(u, v)`` rows with ``u < v``."""
        upper = sp.triu(self.adjacency, k=1).tocoo()
        order = np.lexsort((upper.col, upper.row))
        return np.stack([upper.row[order], upper.col[order]], axis=1).astype(np.int64)

    def with_splits(self, splits: Splits | None) -> "Graph":
        return Graph(self.adjacency, self.features, self.labels, splits, self.num_classes)

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (self.num_classes == other.num_classes
                and np.array_equal(self.labels, other.labels)
                and np.array_equal(self.features, other.features)
                and self.adjacency.shape == other.adjacency.shape
                and (self.adjacency != other.adjacency).nnz == 0
                and ((self.splits is None and other.splits is None)
                     or (self.splits is not None and self.splits == other.splits)))

    __hash__ = None


def _normalize(adj):
    n = adj.shape[0]
    a_hat = adj + sp.identity(n, format="csr")
    deg = np.asarray(a_hat.sum(axis=1)).ravel()
    d_inv_sqrt = sp.diags(1.0 / np.sqrt(deg))
    out = sp.csr_matrix(d_inv_sqrt @ a_hat @ d_inv_sqrt)
    out.sort_indices()
    return out


def normalized_adjacency(graph: Graph) -> sp.csr_matrix:
    """D^-1/2 (A + I) D^-1/2 with degrees counted including the self-loop."""
    return graph.norm_adj


def neighbors(graph: Graph, v: int) -> list[int]:
    if not 0 <= v < graph.n:
        raise IndexError(f"node {v} out of range for graph with {graph.n} nodes")
    adj = graph.adjacency
    return adj.indices[adj.indptr[v]:adj.indptr[v + 1]].tolist()


def adjacency_from_edges(edges, n: int) -> sp.csr_matrix:
    """Symmetric binary CSR adjacency; duplicates merged, self-loops dropped."""
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if edges.size and (edges.min() < 0 or edges.max() >= n):
        raise ValidationError(f"edge endpoint outside [0, {n})")
    edges = edges[edges[:, 0] != edges[:, 1]]
    rows = np.concatenate([edges[:, 0], edges[:, 1]])
    cols = np.concatenate([edges[:, 1], edges[:, 0]])
    adj = sp.csr_matrix((np.ones(rows.size), (rows, cols)), shape=(n, n))
    adj.sum_duplicates()
    adj.data[:] = 1.0
    adj.sort_indices()
    return adj


def split_nodes(graph_or_labels, valid_size: int, test_size: int, seed: int = DEFAULT_SPLIT_SEED) -> Splits:
    """Random train/valid/test partition; the remainder becomes train.

    Redraws up to ``SPLIT_RETRY_LIMIT`` times until every class appears in
    train.
    """
    labels = graph_or_labels.labels if isinstance(graph_or_labels, Graph) else np.asarray(graph_or_labels)
    n = labels.shape[0]
    if valid_size < 1 or test_size < 1 or valid_size + test_size >= n:
        raise ConfigurationError(
            f"cannot split {n} nodes into valid={valid_size}, test={test_size} and a nonempty train set")
    classes = np.unique(labels)
    rng = np.random.default_rng(seed)
    for _ in range(SPLIT_RETRY_LIMIT):
        perm = rng.permutation(n)
        valid, test, train = perm[:valid_size], perm[valid_size:valid_size + test_size], perm[valid_size + test_size:]
        if np.setdiff1d(classes, labels[train]).size == 0:
            return Splits(train=train, valid=valid, test=test)
    raise ValidationError(f"no split within {SPLIT_RETRY_LIMIT} draws covers every class in train")


# --- file formats -----------------------------------------------------------

def _read_edges(path):
    pairs = []
    with open(path) as fh:
        for line_no, line in enumerate(fh, 1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            parts = s.split()
            if len(parts) != 2:
                raise ParseError(path, line_no, f"expected 'u v', got {s!r}")
            try:
                u, v = int(parts[0]), int(parts[1])
            except ValueError:
                raise ParseError(path, line_no, f"non-integer node index in {s!r}") from None
            if u < 0 or v < 0:
                raise ParseError(path, line_no, "negative node index")
            pairs.append((u, v))
    return np.array(pairs, dtype=np.int64).reshape(-1, 2)


def _check_edge_symmetry(pairs, path):
    # Either one line per undirected edge, or both directions for every edge.
    directed = {(u, v) for u, v in pairs if u != v}
    reversed_present = {(u, v) for (u, v) in directed if (v, u) in directed}
    if reversed_present and reversed_present != directed:
        missing = sorted(directed - reversed_present)[0]
        raise ValidationError(
            f"{path}: edge list is asymmetric; ({missing[0]}, {missing[1]}) lacks its reverse")


def _read_csv_matrix(path, dtype, width=None):
    rows = []
    with open(path, newline="") as fh:
        for line_no, row in enumerate(csv.reader(fh), 1):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                vals = [dtype(c) for c in row]
            except ValueError:
                raise ParseError(path, line_no, f"cannot parse {row!r} as {dtype.__name__}") from None
            if width is not None and len(vals) != width:
                raise ParseError(path, line_no, f"expected {width} column(s), got {len(vals)}")
            if rows and len(vals) != len(rows[0]):
                raise ParseError(path, line_no, f"ragged row: {len(vals)} columns, expected {len(rows[0])}")
            rows.append(vals)
    return rows


def load_graph(edges_path, features_path, labels_path, splits_path=None,
               num_classes=None, split_seed=DEFAULT_SPLIT_SEED, split=True) -> Graph:
    """Load and validate a graph from the plain-text interchange files.

    Without ``splits_path`` a split is drawn with ``split_nodes`` using
    ``split_seed`` and 20% of nodes each for validation and test. Pass
    ``split=False`` to load an unsplit graph instead.
    """
    labels = np.array([r[0] for r in _read_csv_matrix(labels_path, int, width=1)], dtype=np.int64)
    features = np.array(_read_csv_matrix(features_path, float), dtype=np.float64)
    n = labels.shape[0]
    if features.shape[0] != n:
        raise ValidationError(f"{features_path}: {features.shape[0]} rows but {n} labels")
    pairs = _read_edges(edges_path)
    _check_edge_symmetry(pairs.tolist(), edges_path)
    adj = adjacency_from_edges(pairs, n)
    C = int(num_classes) if num_classes is not None else int(labels.max()) + 1
    if labels.min() < 0 or labels.max() >= C:
        raise ValidationError(f"{labels_path}: labels must lie in [0, {C})")
    if splits_path is not None:
        with open(splits_path) as fh:
            raw = json.load(fh)
        try:
            splits = Splits(train=raw["train"], valid=raw["valid"], test=raw["test"])
        except KeyError as exc:
            raise ValidationError(f"{splits_path}: missing key {exc}") from None
    elif not split:
        splits = None
    else:
        k = max(1, n // 5)
        log.info("no splits file; drawing split with seed %d", split_seed)
        splits = split_nodes(labels, k, k, seed=split_seed)
    return Graph(adj, features, labels, splits, C)


def save_graph(graph: Graph, directory) -> dict:
    """Write ``edges.txt``, ``features.csv``, ``labels.csv`` and ``splits.json``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = {
        "edges": directory / "edges.txt",
        "features": directory / "features.csv",
        "labels": directory / "labels.csv",
        "splits": directory / "splits.json",
    }
    with open(paths["edges"], "w") as fh:
        fh.write(f"# {graph.n} nodes, {graph.C} classes\n")
        for u, v in graph.edge_list():
            fh.write(f"{u} {v}\n")
    with open(paths["features"], "w") as fh:
        for row in graph.features:
            fh.write(",".join(repr(float(x)) for x in row) + "\n")
    with open(paths["labels"], "w") as fh:
        fh.write("\n".join(str(int(y)) for y in graph.labels) + "\n")
    if graph.splits is None:
        del paths["splits"]
    else:
        with open(paths["splits"], "w") as fh:
            json.dump(graph.splits.to_json(), fh)
    return paths
