"""Per-feature z-score scaling fitted on training rows only."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np


@dataclass
class ScalerParams:
    mean: np.ndarray
    std: np.ndarray

    def to_dict(self) -> dict[str, Any]:
        return {"format": "scaler", "version": 1, "mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "ScalerParams":
        return cls(np.asarray(raw["mean"], dtype=float), np.asarray(raw["std"], dtype=float))


def fit_scaler(train_rows) -> ScalerParams:
    X = np.asarray(train_rows, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("fit_scaler needs a non-empty 2-D matrix")
    std = X.std(axis=0)
    # constant columns would divide by zero
    std[std == 0] = 1.0
    return ScalerParams(X.mean(axis=0), std)


def transform(params: ScalerParams, rows) -> np.ndarray:
    X = np.asarray(rows, dtype=float)
    return (X - params.mean) / params.std
