"""1-NN classification with stratified k-fold and half-split holdout protocols."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

METRICS = ("euclidean", "l1")


class ProtocolError(ValueError):
    """Dataset and protocol are incompatible (e.g. a class smaller than k)."""


@dataclass(eq=False)
class LabeledDataset:
    ids: list
    X: np.ndarray
    labels: list

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        if self.X.ndim != 2:
            raise ValueError("features must form a 2-D array")
        if not (len(self.ids) == len(self.labels) == self.X.shape[0]):
            raise ValueError("ids, labels and feature rows differ in length")
        self.labels = [str(l) for l in self.labels]

    def __len__(self):
        return len(self.labels)

    @property
    def classes(self) -> list[str]:
        return sorted(set(self.labels))

    @property
    def class_count(self) -> int:
        return len(self.classes)

    @property
    def y(self) -> np.ndarray:
        lookup = {c: k for k, c in enumerate(self.classes)}
        return np.array([lookup[l] for l in self.labels], dtype=np.int64)

    def subset(self, columns) -> "LabeledDataset":
        return LabeledDataset(list(self.ids), self.X[:, columns], list(self.labels))


@dataclass
class EvalReport:
    protocol: str
    classes: list
    trial_ccrs: list
    counts: np.ndarray
    assignments: list = field(default_factory=list, repr=False)

    @property
    def trials(self) -> int:
        return len(self.trial_ccrs)

    @property
    def ccr_mean(self) -> float:
        return float(np.mean(self.trial_ccrs))

    @property
    def ccr_std(self) -> float:
        return float(np.std(self.trial_ccrs))

    @property
    def confusion(self) -> np.ndarray:
        """Row-normalised confusion matrix in percent (rows are true classes)."""
        rows = self.counts.sum(axis=1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            pct = np.where(rows > 0, 100.0 * self.counts / np.maximum(rows, 1), 0.0)
        return pct

    def summary(self) -> str:
        return f"{self.ccr_mean:.2f} (± {self.ccr_std:.2f})"

    def to_dict(self) -> dict:
        return {
            "protocol": self.protocol,
            "ccr_mean": self.ccr_mean,
            "ccr_std": self.ccr_std,
            "trials": self.trials,
            "trial_ccrs": list(map(float, self.trial_ccrs)),
            "classes": list(self.classes),
            "confusion_counts": self.counts.astype(int).tolist(),
            "confusion": self.confusion.tolist(),
            "summary": self.summary(),
        }

    def write_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    def write_confusion_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["true\\pred"] + list(self.classes))
            for c, row in zip(self.classes, self.confusion):
                w.writerow([c] + [f"{v:.4f}" for v in row])

    def table(self) -> str:
        width = max([len(c) for c in self.classes] + [6])
        lines = [f"protocol: {self.protocol}   trials: {self.trials}   CCR: {self.summary()}"]
        lines.append(" " * (width + 1) + " ".join(f"{c[:7]:>7}" for c in self.classes))
        for c, row in zip(self.classes, self.confusion):
            lines.append(f"{c:>{width}} " + " ".join(f"{v:7.2f}" for v in row))
        return "\n".join(lines)


def _distances(train: np.ndarray, query: np.ndarray, metric: str) -> np.ndarray:
    diff = train - query
    if metric == "euclidean":
        # squared distances keep the argmin and are exact for tie checks
        return np.einsum("ij,ij->i", diff, diff)
    if metric == "l1":
        return np.abs(diff).sum(axis=1)
    raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")


def nn1_predict(train_X: np.ndarray, train_y, query: np.ndarray, metric: str = "euclidean"):
    train_X = np.asarray(train_X, dtype=np.float64)
    query = np.asarray(query, dtype=np.float64)
    if len(train_X) == 0:
        raise ValueError("empty training set")
    if query.shape != train_X.shape[1:]:
        raise ValueError(f"query has dimension {query.shape}, training set {train_X.shape[1:]}")
    # argmin returns the first minimum: ties go to the lowest training index
    return train_y[int(np.argmin(_distances(train_X, query, metric)))]


def nn1_classify(train: LabeledDataset, query, metric: str = "euclidean") -> str:
    """Label of the nearest training item; ties broken by lowest index."""
    return nn1_predict(train.X, train.labels, query, metric)


def stratified_folds(y: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Fold index for every item.

    Items of each class are shuffled and dealt round-robin; each class starts
    where the previous one stopped, which keeps overall fold sizes balanced.
    """
    folds = np.empty(len(y), dtype=np.int64)
    start = 0
    for c in np.unique(y):
        members = np.flatnonzero(y == c)
        members = members[rng.permutation(len(members))]
        folds[members] = (start + np.arange(len(members))) % k
        start = (start + len(members)) % k
    return folds


def _trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(trial)])


def _score(data: LabeledDataset, train_idx, test_idx, metric, counts) -> int:
    y = data.y
    correct = 0
    for q in test_idx:
        pred = nn1_predict(data.X[train_idx], y[train_idx], data.X[q], metric)
        counts[y[q], pred] += 1
        correct += int(pred == y[q])
    return correct


def kfold_cv(data: LabeledDataset, k: int = 10, trials: int = 10, seed: int = 0,
             metric: str = "euclidean") -> EvalReport:
    """Stratified k-fold cross-validation repeated over ``trials`` shuffles.

    The CCR of a trial is the fraction of items predicted correctly when each
    fold in turn is the test set. Fold assignments are kept in the report.
    """
    if k < 2:
        raise ProtocolError(f"k must be >= 2, got {k}")
    y = data.y
    sizes = np.bincount(y, minlength=data.class_count)
    small = [c for c, n in zip(data.classes, sizes) if n < k]
    if small:
        raise ProtocolError(f"classes with fewer than k={k} items: {small}")
    if data.class_count == 1:
        log.warning("dataset has a single class; CCR is trivially 100%%")
    counts = np.zeros((data.class_count, data.class_count), dtype=np.int64)
    ccrs, assignments = [], []
    for trial in range(trials):
        folds = stratified_folds(y, k, _trial_rng(seed, trial))
        correct = 0
        for f in range(k):
            correct += _score(data, np.flatnonzero(folds != f), np.flatnonzero(folds == f), metric, counts)
        ccrs.append(100.0 * correct / len(y))
        assignments.append(folds)
    return EvalReport(f"kfold(k={k})", data.classes, ccrs, counts, assignments)


def half_split(y: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Boolean train mask taking floor(n/2) random items of every class."""
    train = np.zeros(len(y), dtype=bool)
    for c in np.unique(y):
        members = np.flatnonzero(y == c)
        members = members[rng.permutation(len(members))]
        train[members[: len(members) // 2]] = True
    return train


def holdout_trials(data: LabeledDataset, trials: int = 20, seed: int = 0,
                   metric: str = "euclidean") -> EvalReport:
    """Repeated half-split: floor(n/2) of each class trains, the rest tests."""
    y = data.y
    sizes = np.bincount(y, minlength=data.class_count)
    single = [c for c, n in zip(data.classes, sizes) if n < 2]
    if single:
        raise ProtocolError(f"classes with a single item cannot be split: {single}")
    if data.class_count == 1:
        log.warning("dataset has a single class; CCR is trivially 100%%")
    counts = np.zeros((data.class_count, data.class_count), dtype=np.int64)
    ccrs, assignments = [], []
    for trial in range(trials):
        train = half_split(y, _trial_rng(seed, trial))
        test_idx = np.flatnonzero(~train)
        correct = _score(data, np.flatnonzero(train), test_idx, metric, counts)
        ccrs.append(100.0 * correct / len(test_idx))
        assignments.append(train)
    return EvalReport("holdout(1/2)", data.classes, ccrs, counts, assignments)


def read_features_csv(path) -> LabeledDataset:
    """Parse a feature CSV (id, label, f0, f1, ...) written by the extractor."""
    ids, labels, rows = [], [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty feature file") from None
        if header[:2] != ["id", "label"]:
            raise ValueError(f"{path}: header must start with id,label")
        dim = len(header) - 2
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != dim + 2:
                raise ValueError(f"{path}:{lineno}: expected {dim + 2} fields, got {len(row)}")
            try:
                rows.append([float(v) for v in row[2:]])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            ids.append(row[0])
            labels.append(row[1])
    X = np.array(rows, dtype=np.float64).reshape(len(rows), dim)
    return LabeledDataset(ids, X, labels)
