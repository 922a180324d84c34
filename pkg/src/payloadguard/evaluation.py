"""Splitting, binary metrics, ROC analysis, per-family recall and feature-group ablation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from .features import BINDING, FEATURE_NAMES, SEMANTIC, STRUCTURAL
from .model import AttackKind
from .rng import derive_rng

ABLATION_SUBSETS: dict[str, tuple[str, ...]] = {
    "structural": STRUCTURAL,
    "semantic": SEMANTIC,
    "binding": BINDING,
    "all": FEATURE_NAMES,
}
MIN_CLASS_SIZE = 5


@dataclass(frozen=True)
class SplitAssignment:
    seed: int
    test_fraction: float
    train_ids: tuple[str, ...]
    test_ids: tuple[str, ...]

    def test_mask(self, ids: Sequence[str]) -> np.ndarray:
        test = set(self.test_ids)
        return np.array([i in test for i in ids], dtype=bool)

    def to_dict(self) -> dict[str, Any]:
        return {
            "seed": self.seed,
            "test_fraction": self.test_fraction,
            "train_ids": list(self.train_ids),
            "test_ids": list(self.test_ids),
        }

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "SplitAssignment":
        return cls(int(raw["seed"]), float(raw["test_fraction"]), tuple(raw["train_ids"]), tuple(raw["test_ids"]))


def stratified_split(ids: Sequence[str], labels: Sequence[int], seed: int, test_fraction: float = 0.2) -> SplitAssignment:
    """Per-class shuffle of the sorted ids; the first round(f * n_c) of each class go to test.

    Only the set of (id, label) pairs matters, never the order they were passed in.
    """
    if len(ids) != len(labels):
        raise ValueError("ids and labels differ in length")
    if len(set(ids)) != len(ids):
        raise ValueError("payload ids must be unique")
    by_class: dict[int, list[str]] = {0: [], 1: []}
    for pid, lab in zip(ids, labels):
        if int(lab) not in by_class:
            raise ValueError(f"labels must be 0 or 1, got {lab!r}")
        by_class[int(lab)].append(pid)
    test: list[str] = []
    train: list[str] = []
    for cls in (0, 1):
        members = sorted(by_class[cls])
        if len(members) < MIN_CLASS_SIZE:
            raise ValueError(f"class {cls} has {len(members)} members; need at least {MIN_CLASS_SIZE}")
        perm = derive_rng(seed, f"split/class{cls}").permutation(len(members))
        k = int(np.floor(test_fraction * len(members) + 0.5))
        test.extend(members[i] for i in perm[:k])
        train.extend(members[i] for i in perm[k:])
    return SplitAssignment(seed, test_fraction, tuple(sorted(train)), tuple(sorted(test)))


@dataclass(frozen=True)
class Confusion:
    tn: int
    fp: int
    fn: int
    tp: int

    @property
    def total(self) -> int:
        return self.tn + self.fp + self.fn + self.tp

    def to_dict(self) -> dict[str, int]:
        return {"tn": self.tn, "fp": self.fp, "fn": self.fn, "tp": self.tp}


def confusion(y_true, y_pred) -> Confusion:
    t = np.asarray(y_true).astype(int)
    p = np.asarray(y_pred).astype(int)
    if t.shape != p.shape:
        raise ValueError("y_true and y_pred differ in shape")
    return Confusion(
        tn=int(np.sum((t == 0) & (p == 0))),
        fp=int(np.sum((t == 0) & (p == 1))),
        fn=int(np.sum((t == 1) & (p == 0))),
        tp=int(np.sum((t == 1) & (p == 1))),
    )


def metrics_from_confusion(cm: Confusion) -> dict[str, float]:
    # zero denominators give 0 rather than nan
    precision = cm.tp / (cm.tp + cm.fp) if cm.tp + cm.fp else 0.0
    recall = cm.tp / (cm.tp + cm.fn) if cm.tp + cm.fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    accuracy = (cm.tp + cm.tn) / cm.total if cm.total else 0.0
    return {"accuracy": accuracy, "precision": precision, "recall": recall, "f1": f1}


def binary_metrics(y_true, y_pred) -> dict[str, Any]:
    cm = confusion(y_true, y_pred)
    return {"confusion": cm.to_dict(), **metrics_from_confusion(cm)}


def average_ranks(values) -> np.ndarray:
    """1-based ranks with ties sharing the mean of the ranks they span."""
    v = np.asarray(values, dtype=float)
    order = np.argsort(v, kind="mergesort")
    sorted_v = v[order]
    ranks = np.empty(len(v))
    start = 0
    while start < len(v):
        stop = start
        while stop + 1 < len(v) and sorted_v[stop + 1] == sorted_v[start]:
            stop += 1
        ranks[order[start : stop + 1]] = (start + stop) / 2.0 + 1.0
        start = stop + 1
    return ranks


def roc_auc(y_true, scores) -> float:
    """Mann-Whitney U / (n_pos * n_neg); a tied pair counts one half."""
    y = np.asarray(y_true).astype(int)
    s = np.asarray(scores, dtype=float)
    if y.shape != s.shape:
        raise ValueError("y_true and scores differ in shape")
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both classes in y_true")
    r = average_ranks(s)
    u = r[y == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def roc_curve(y_true, scores) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(thresholds, fpr, tpr) for the rule score >= threshold, from (0,0) to (1,1).

    The first threshold is +inf (nothing flagged); one point per distinct score after that.
    """
    y = np.asarray(y_true).astype(int)
    s = np.asarray(scores, dtype=float)
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC needs both classes in y_true")
    order = np.argsort(-s, kind="mergesort")
    s_sorted, y_sorted = s[order], y[order]
    last_of_run = np.r_[np.nonzero(np.diff(s_sorted))[0], len(s) - 1]
    tps = np.cumsum(y_sorted)[last_of_run]
    fps = (last_of_run + 1) - tps
    thresholds = np.r_[np.inf, s_sorted[last_of_run]]
    return thresholds, np.r_[0.0, fps / n_neg], np.r_[0.0, tps / n_pos]


def trapezoid_auc(fpr, tpr) -> float:
    x = np.asarray(fpr, dtype=float)
    y = np.asarray(tpr, dtype=float)
    return float(np.sum((x[1:] - x[:-1]) * (y[1:] + y[:-1]) / 2.0))


def per_attack_breakdown(attack_types: Sequence[str], y_true, y_pred) -> dict[str, float | None]:
    """Recall per attack family over the malicious rows; None when a family is absent."""
    t = np.asarray(y_true).astype(int)
    p = np.asarray(y_pred).astype(int)
    kinds = np.asarray(attack_types, dtype=object)
    out: dict[str, float | None] = {}
    for kind in AttackKind:
        rows = (t == 1) & (kinds == kind.value)
        out[kind.value] = float(p[rows].mean()) if rows.any() else None
    return out


def family_counts(attack_types: Sequence[str], y_true) -> dict[str, int]:
    t = np.asarray(y_true).astype(int)
    kinds = np.asarray(attack_types, dtype=object)
    return {k.value: int(np.sum((t == 1) & (kinds == k.value))) for k in AttackKind}


def ablation(
    X_train: np.ndarray,
    y_train: np.ndarray,
    X_test: np.ndarray,
    y_test: np.ndarray,
    train_fn: Callable[[np.ndarray, np.ndarray], Any],
    subsets: Mapping[str, Sequence[str]] | None = None,
    feature_names: Sequence[str] = FEATURE_NAMES,
) -> list[dict[str, Any]]:
    """Retrain the classifier on each column subset of the same split.

    ``train_fn(X, y)`` must return a model with ``predict_proba`` and
    ``threshold``; the caller hands it a fresh copy of the same RNG stream
    each time, so the ``all`` row reproduces the main run exactly. A row is
    flagged degenerate when no chosen column varies on the training rows or
    the scores come out constant.
    """
    subsets = dict(subsets or ABLATION_SUBSETS)
    names = list(feature_names)
    for name, cols in subsets.items():
        unknown = [c for c in cols if c not in names]
        if unknown:
            raise KeyError(f"ablation subset {name!r} has unknown columns {unknown}")
        if not cols:
            raise ValueError(f"ablation subset {name!r} is empty")
    rows = []
    for name, cols in subsets.items():
        idx = [names.index(c) for c in cols]
        Xtr, Xte = X_train[:, idx], X_test[:, idx]
        model = train_fn(Xtr, y_train)
        scores = model.predict_proba(Xte)
        pred = (scores >= model.threshold).astype(int)
        m = binary_metrics(y_test, pred)
        no_signal = not bool(np.any(Xtr.max(axis=0) > Xtr.min(axis=0)))
        rows.append(
            {
                "subset": name,
                "features": list(cols),
                "n_features": len(cols),
                "f1": m["f1"],
                "auc": roc_auc(y_test, scores),
                "accuracy": m["accuracy"],
                "precision": m["precision"],
                "recall": m["recall"],
                "degenerate": no_signal or bool(np.all(scores == scores[0])),
            }
        )
    return rows
