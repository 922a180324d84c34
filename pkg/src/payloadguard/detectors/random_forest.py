"""Random forest of fully grown class-weighted Gini trees.

Each tree fits a bootstrap sample; bootstrap multiplicities and the
balanced class weights N / (2 N_c) become per-row sample weights. At every
node ``max_features`` candidate features are drawn without replacement
(features constant within the node are skipped and do not count), and the
split with the lowest weighted child impurity wins. Ties go to the lowest
feature index, then the lowest threshold.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np


@dataclass
class DecisionTree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray  # weighted share of the positive class at each node

    def to_dict(self) -> dict[str, Any]:
        return {k: getattr(self, k).tolist() for k in ("feature", "threshold", "left", "right", "value")}

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "DecisionTree":
        return cls(
            np.asarray(raw["feature"], dtype=np.int64),
            np.asarray(raw["threshold"], dtype=float),
            np.asarray(raw["left"], dtype=np.int64),
            np.asarray(raw["right"], dtype=np.int64),
            np.asarray(raw["value"], dtype=float),
        )

    def apply(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=np.int64)
        active = self.feature[node] >= 0
        while active.any():
            idx = np.nonzero(active)[0]
            cur = node[idx]
            go_left = X[idx, self.feature[cur]] <= self.threshold[cur]
            node[idx] = np.where(go_left, self.left[cur], self.right[cur])
            active[idx] = self.feature[node[idx]] >= 0
        return node

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]


def _weighted_impurity(w_total: float, w_pos: float) -> float:
    # node weight times Gini impurity
    if w_total <= 0:
        return 0.0
    return w_total - (w_pos**2 + (w_total - w_pos) ** 2) / w_total


def build_tree(
    X: np.ndarray,
    y: np.ndarray,
    w: np.ndarray,
    counts: np.ndarray,
    rng: np.random.Generator,
    max_features: int,
    min_samples_leaf: int = 1,
    max_depth: int | None = None,
) -> tuple[DecisionTree, np.ndarray]:
    """Grow one tree on rows with positive weight; returns (tree, raw importance)."""
    n_features = X.shape[1]
    importance = np.zeros(n_features)
    feature, threshold, left, right, value = [], [], [], [], []
    wy = w * y

    def new_node(rows: np.ndarray) -> int:
        wt, wp = w[rows].sum(), wy[rows].sum()
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(wp / wt if wt > 0 else 0.0)
        return len(feature) - 1

    rows0 = np.nonzero(w > 0)[0]
    stack = [(new_node(rows0), rows0, 0)]
    while stack:
        node, rows, depth = stack.pop()
        if max_depth is not None and depth >= max_depth:
            continue
        if counts[rows].sum() < 2 * min_samples_leaf:
            continue
        w_node, wp_node = w[rows].sum(), wy[rows].sum()
        if wp_node <= 0 or wp_node >= w_node:
            continue
        Xn = X[rows]
        varying = Xn.max(axis=0) > Xn.min(axis=0)
        perm = rng.permutation(n_features)
        chosen = [int(f) for f in perm if varying[f]][:max_features]
        if not chosen:
            continue
        chosen.sort()
        sub = Xn[:, chosen]
        order = np.argsort(sub, axis=0, kind="stable")
        xs = np.take_along_axis(sub, order, axis=0)
        ws = w[rows][order]
        wps = wy[rows][order]
        cs = counts[rows][order]
        wl = np.cumsum(ws, axis=0)[:-1]
        wpl = np.cumsum(wps, axis=0)[:-1]
        cl = np.cumsum(cs, axis=0)[:-1]
        wr = w_node - wl
        wpr = wp_node - wpl
        c_node = counts[rows].sum()
        with np.errstate(divide="ignore", invalid="ignore"):
            imp = (wl - (wpl**2 + (wl - wpl) ** 2) / wl) + (wr - (wpr**2 + (wr - wpr) ** 2) / wr)
        valid = (xs[1:] > xs[:-1]) & (cl >= min_samples_leaf) & (c_node - cl >= min_samples_leaf)
        imp = np.where(valid, imp, np.inf)
        if not np.isfinite(imp).any():
            continue
        best_pos = np.argmin(imp, axis=0)  # lowest threshold per feature
        best_imp = imp[best_pos, np.arange(len(chosen))]
        j = int(np.argmin(best_imp))  # lowest feature index among ties
        i = int(best_pos[j])
        lo, hi = xs[i, j], xs[i + 1, j]
        thr = lo + (hi - lo) / 2.0
        if not lo <= thr < hi:
            thr = lo
        f = chosen[j]
        mask = Xn[:, f] <= thr
        l_rows, r_rows = rows[mask], rows[~mask]
        importance[f] += _weighted_impurity(w_node, wp_node) - float(best_imp[j])
        feature[node], threshold[node] = f, float(thr)
        left[node] = new_node(l_rows)
        right[node] = new_node(r_rows)
        stack.append((right[node], r_rows, depth + 1))
        stack.append((left[node], l_rows, depth + 1))
    tree = DecisionTree(
        np.asarray(feature, dtype=np.int64),
        np.asarray(threshold, dtype=float),
        np.asarray(left, dtype=np.int64),
        np.asarray(right, dtype=np.int64),
        np.asarray(value, dtype=float),
    )
    return tree, importance


@dataclass
class RandomForestModel:
    trees: list[DecisionTree] = field(default_factory=list)
    importances: np.ndarray = field(default_factory=lambda: np.zeros(0))
    class_weights: tuple[float, float] = (1.0, 1.0)
    max_features: int = 5
    threshold: float = 0.5
    feature_names: list[str] = field(default_factory=list)

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    def predict_proba(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        total = np.zeros(len(X))
        for tree in self.trees:
            total += tree.predict_proba(X)
        return total / len(self.trees)

    def predict(self, X) -> np.ndarray:
        return (self.predict_proba(X) >= self.threshold).astype(int)

    def to_dict(self) -> dict[str, Any]:
        return {
            "format": "random_forest",
            "version": 1,
            "class_weights": list(self.class_weights),
            "max_features": self.max_features,
            "threshold": self.threshold,
            "feature_names": list(self.feature_names),
            "importances": self.importances.tolist(),
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "RandomForestModel":
        return cls(
            trees=[DecisionTree.from_dict(t) for t in raw["trees"]],
            importances=np.asarray(raw["importances"], dtype=float),
            class_weights=tuple(raw["class_weights"]),
            max_features=int(raw["max_features"]),
            threshold=float(raw["threshold"]),
            feature_names=list(raw.get("feature_names", [])),
        )


def train_random_forest(
    rows,
    labels,
    rng: np.random.Generator,
    n_trees: int = 400,
    max_features: int = 5,
    min_samples_leaf: int = 1,
    max_depth: int | None = None,
    threshold: float = 0.5,
    feature_names: list[str] | None = None,
) -> RandomForestModel:
    X = np.asarray(rows, dtype=float)
    y = np.asarray(labels, dtype=float)
    if X.ndim != 2 or len(X) != len(y) or len(X) == 0:
        raise ValueError("rows must be a non-empty matrix aligned with labels")
    n = len(y)
    n_pos = int(y.sum())
    if n_pos == 0 or n_pos == n:
        raise ValueError("random forest needs both classes in the training labels")
    cw = (n / (2.0 * (n - n_pos)), n / (2.0 * n_pos))
    row_w = np.where(y == 1, cw[1], cw[0])
    k = min(max_features, X.shape[1])
    model = RandomForestModel(class_weights=cw, max_features=k, threshold=threshold, feature_names=list(feature_names or []))
    total_imp = np.zeros(X.shape[1])
    for _ in range(n_trees):
        counts = np.bincount(rng.integers(0, n, size=n), minlength=n).astype(float)
        tree, imp = build_tree(X, y, row_w * counts, counts, rng, k, min_samples_leaf, max_depth)
        model.trees.append(tree)
        if imp.sum() > 0:
            total_imp += imp / imp.sum()
    model.importances = total_imp / total_imp.sum() if total_imp.sum() > 0 else total_imp
    return model


def rf_predict(model: RandomForestModel, row) -> float | np.ndarray:
    arr = np.asarray(row, dtype=float)
    proba = model.predict_proba(arr)
    return float(proba[0]) if arr.ndim == 1 else proba


def rf_importances(model: RandomForestModel) -> np.ndarray:
    return model.importances.copy()
