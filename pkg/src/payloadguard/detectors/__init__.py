"""Shared scaler and the three anomaly scorers."""

from .autoencoder import AutoencoderModel, ae_score, train_autoencoder
from .isolation_forest import IsolationForestModel, if_score, train_isolation_forest
from .random_forest import RandomForestModel, rf_importances, rf_predict, train_random_forest
from .scaler import ScalerParams, fit_scaler, transform

__all__ = [
    "AutoencoderModel",
    "IsolationForestModel",
    "RandomForestModel",
    "ScalerParams",
    "ae_score",
    "fit_scaler",
    "if_score",
    "rf_importances",
    "rf_predict",
    "train_autoencoder",
    "train_isolation_forest",
    "train_random_forest",
    "transform",
]
