"""Isolation forest: anomalies are the points random partitioning isolates quickly.

Each tree is grown on a subsample of size psi without replacement. A node
picks a split feature uniformly among the features that are not constant
within it and a split value uniformly in that feature's observed range;
growth stops at height ceil(log2 psi), at a single point, or when every
feature is constant. The anomaly score is s(x) = 2 ** (-E[h(x)] / c(psi)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

EULER_GAMMA = 0.5772156649015329


def average_path_length(n: int | np.ndarray) -> np.ndarray | float:
    """c(n): expected path length of an unsuccessful BST search over n points."""
    n_arr = np.asarray(n, dtype=float)
    out = np.zeros_like(n_arr)
    out[n_arr == 2] = 1.0
    big = n_arr > 2
    m = n_arr[big]
    out[big] = 2.0 * (np.log(m - 1.0) + EULER_GAMMA) - 2.0 * (m - 1.0) / m
    return float(out) if np.ndim(n) == 0 else out


@dataclass
class IsolationTree:
    # parallel node arrays; feature == -1 marks an external node
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    size: np.ndarray

    def to_dict(self) -> dict[str, Any]:
        return {k: getattr(self, k).tolist() for k in ("feature", "threshold", "left", "right", "size")}

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "IsolationTree":
        return cls(
            np.asarray(raw["feature"], dtype=np.int64),
            np.asarray(raw["threshold"], dtype=float),
            np.asarray(raw["left"], dtype=np.int64),
            np.asarray(raw["right"], dtype=np.int64),
            np.asarray(raw["size"], dtype=np.int64),
        )

    def path_lengths(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=np.int64)
        edges = np.zeros(len(X))
        active = self.feature[node] >= 0
        while active.any():
            idx = np.nonzero(active)[0]
            cur = node[idx]
            go_left = X[idx, self.feature[cur]] < self.threshold[cur]
            node[idx] = np.where(go_left, self.left[cur], self.right[cur])
            edges[idx] += 1
            active[idx] = self.feature[node[idx]] >= 0
        return edges + average_path_length(self.size[node])


def build_isolation_tree(X: np.ndarray, rng: np.random.Generator, height_limit: int) -> IsolationTree:
    feature, threshold, left, right, size = [], [], [], [], []

    def new_node(n: int) -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        size.append(n)
        return len(feature) - 1

    root = new_node(len(X))
    stack = [(root, np.arange(len(X)), 0)]
    while stack:
        node, rows, height = stack.pop()
        if height >= height_limit or len(rows) <= 1:
            continue
        sub = X[rows]
        lo, hi = sub.min(axis=0), sub.max(axis=0)
        candidates = np.nonzero(hi > lo)[0]
        if len(candidates) == 0:
            continue
        f = int(candidates[int(rng.integers(len(candidates)))])
        t = float(rng.uniform(lo[f], hi[f]))
        mask = sub[:, f] < t
        l_rows, r_rows = rows[mask], rows[~mask]
        feature[node], threshold[node] = f, t
        left[node] = new_node(len(l_rows))
        right[node] = new_node(len(r_rows))
        stack.append((right[node], r_rows, height + 1))
        stack.append((left[node], l_rows, height + 1))
    return IsolationTree(
        np.asarray(feature, dtype=np.int64),
        np.asarray(threshold, dtype=float),
        np.asarray(left, dtype=np.int64),
        np.asarray(right, dtype=np.int64),
        np.asarray(size, dtype=np.int64),
    )


@dataclass
class IsolationForestModel:
    subsample_size: int
    trees: list[IsolationTree] = field(default_factory=list)
    threshold: float = 0.5

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    @property
    def normalizer(self) -> float:
        return float(average_path_length(self.subsample_size))

    def expected_path_length(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        total = np.zeros(len(X))
        for tree in self.trees:
            total += tree.path_lengths(X)
        return total / len(self.trees)

    def score(self, X) -> np.ndarray:
        return np.power(2.0, -self.expected_path_length(X) / self.normalizer)

    def predict(self, X) -> np.ndarray:
        return (self.score(X) >= self.threshold).astype(int)

    def to_dict(self) -> dict[str, Any]:
        return {
            "format": "isolation_forest",
            "version": 1,
            "subsample_size": self.subsample_size,
            "threshold": self.threshold,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "IsolationForestModel":
        return cls(
            subsample_size=int(raw["subsample_size"]),
            trees=[IsolationTree.from_dict(t) for t in raw["trees"]],
            threshold=float(raw["threshold"]),
        )


def train_isolation_forest(
    rows,
    rng: np.random.Generator,
    n_trees: int = 300,
    max_samples: int = 256,
    threshold: float = 0.5,
) -> IsolationForestModel:
    X = np.asarray(rows, dtype=float)
    if X.ndim != 2 or len(X) < 2:
        raise ValueError("isolation forest needs at least 2 rows")
    psi = min(max_samples, len(X))
    limit = int(math.ceil(math.log2(psi)))
    model = IsolationForestModel(subsample_size=psi, threshold=threshold)
    for _ in range(n_trees):
        sample = rng.choice(len(X), size=psi, replace=False)
        model.trees.append(build_isolation_tree(X[sample], rng, limit))
    return model


def if_score(model: IsolationForestModel, row) -> float | np.ndarray:
    arr = np.asarray(row, dtype=float)
    scores = model.score(arr)
    return float(scores[0]) if arr.ndim == 1 else scores
