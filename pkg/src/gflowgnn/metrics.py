"""Classification metrics and multi-run summaries."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError


@dataclass(frozen=True)
class MetricReport:
    accuracy: float
    micro_f1: float
    macro_f1: float
    n_eval: int

    def to_json(self) -> dict:
        return {"accuracy": self.accuracy, "micro_f1": self.micro_f1, "macro_f1": self.macro_f1}


def _check(preds, labels):
    preds = np.asarray(preds, dtype=np.int64).ravel()
    labels = np.asarray(labels, dtype=np.int64).ravel()
    if preds.shape != labels.shape:
        raise ShapeError(f"{preds.size} predictions but {labels.size} labels")
    if preds.size == 0:
        raise ShapeError("metrics need at least one prediction")
    return preds, labels


def accuracy(preds, labels) -> float:
    preds, labels = _check(preds, labels)
    return float(np.mean(preds == labels))


def micro_f1(preds, labels) -> float:
    """F1 from true/false positives and false negatives pooled over classes."""
    preds, labels = _check(preds, labels)
    tp = np.sum(preds == labels)
    # in single-label classification every miss is one FP and one FN
    fp = fn = np.sum(preds != labels)
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return float(2 * precision * recall / (precision + recall))


def per_class_f1(preds, labels, C: int) -> np.ndarray:
    preds, labels = _check(preds, labels)
    if min(preds.min(), labels.min()) < 0 or max(preds.max(), labels.max()) >= C:
        raise IndexError(f"class index outside [0, {C})")
    scores = np.zeros(C)
    for c in range(C):
        tp = np.sum((preds == c) & (labels == c))
        fp = np.sum((preds == c) & (labels != c))
        fn = np.sum((preds != c) & (labels == c))
        # zero-support classes (absent from preds and labels) score 0
        if tp == 0:
            continue
        precision = tp / (tp + fp)
        recall = tp / (tp + fn)
        scores[c] = 2 * precision * recall / (precision + recall)
    return scores


def macro_f1(preds, labels, C: int) -> float:
    return float(per_class_f1(preds, labels, C).mean())


def metric_report(preds, labels, C: int) -> MetricReport:
    preds, labels = _check(preds, labels)
    return MetricReport(accuracy(preds, labels), micro_f1(preds, labels), macro_f1(preds, labels, C), int(preds.size))


def high_quality_count(rewards, threshold: float) -> int:
    """Number of rewards strictly above ``threshold``."""
    return int(np.sum(np.asarray(rewards, dtype=np.float64) > threshold))


@dataclass
class EvalSummary:
    rewards: list
    label_sets: list = field(default_factory=list)
    thresholds: tuple = ()
    mode: str = "sampled"
    seed: int = 0
    seeds: list = field(default_factory=list)

    @property
    def runs(self) -> int:
        return len(self.rewards)

    @property
    def mean(self) -> float:
        return float(np.mean(self.rewards))

    @property
    def std(self) -> float:
        return float(np.std(self.rewards))

    @property
    def high_quality(self) -> dict:
        return {float(t): high_quality_count(self.rewards, t) for t in self.thresholds}

    @property
    def best_index(self) -> int:
        return int(np.argmax(self.rewards))

    @property
    def best_reward(self) -> float:
        return float(self.rewards[self.best_index])

    @property
    def best_label_set(self) -> list:
        return list(self.label_sets[self.best_index]) if self.label_sets else []

    def to_json(self) -> dict:
        return {
            "runs": self.runs,
            "mode": self.mode,
            "seed": self.seed,
            "mean": self.mean,
            "std": self.std,
            "min": float(np.min(self.rewards)),
            "max": float(np.max(self.rewards)),
            "high_quality": {str(k): v for k, v in self.high_quality.items()},
            "best_reward": self.best_reward,
            "best_label_set": self.best_label_set,
            "rewards": [float(r) for r in self.rewards],
        }

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=2)

    def write_csv(self, path, kind=None) -> None:
        """Per-run rows ``(run, reward, label_set)``; with ``kind`` the
        baseline layout ``(kind, seed, reward, label_set)``."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            if kind is None:
                w.writerow(["run", "reward", "label_set"])
            else:
                w.writerow(["kind", "seed", "reward", "label_set"])
            for i, r in enumerate(self.rewards):
                nodes = ";".join(str(v) for v in self.label_sets[i]) if self.label_sets else ""
                if kind is None:
                    w.writerow([i, repr(float(r)), nodes])
                else:
                    run_seed = self.seeds[i] if self.seeds else i
                    w.writerow([kind, run_seed, repr(float(r)), nodes])


__all__ = [
    "MetricReport", "EvalSummary", "accuracy", "micro_f1", "macro_f1", "per_class_f1",
    "metric_report", "high_quality_count",
]
