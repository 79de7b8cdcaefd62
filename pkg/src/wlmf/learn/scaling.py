"""Feature vectors and z-score scaling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class FeatureVector:
    names: list
    values: np.ndarray
    label: int | None = None

    def __post_init__(self):
        self.names = list(self.names)
        self.values = np.asarray(self.values, dtype=float)
        if len(self.names) != self.values.size:
            raise ValueError(f"{len(self.names)} names for {self.values.size} values")
        if not np.all(np.isfinite(self.values)):
            bad = [n for n, v in zip(self.names, self.values) if not np.isfinite(v)]
            raise ValueError(f"non-finite feature values: {bad}")
        if self.label is not None and self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")


def stack(vectors) -> tuple:
    """``(X, y, names)`` from a sequence of :class:`FeatureVector`."""
    vectors = list(vectors)
    if not vectors:
        raise ValueError("no feature vectors")
    names = vectors[0].names
    for v in vectors[1:]:
        if v.names != names:
            raise ValueError("feature vectors have different name lists")
    X = np.vstack([v.values for v in vectors])
    y = np.array([-1 if v.label is None else v.label for v in vectors])
    return X, y, names


@dataclass
class ScalerParams:
    mean: np.ndarray
    std: np.ndarray
    constant: np.ndarray

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.mean.size:
            raise ValueError(f"expected {self.mean.size} features, got shape {X.shape}")
        scale = np.where(self.constant, 1.0, self.std)
        Z = (X - self.mean) / scale
        Z[:, self.constant] = 0.0
        return Z

    def to_dict(self) -> dict:
        return {
            "mean": self.mean.tolist(),
            "std": self.std.tolist(),
            "constant": self.constant.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ScalerParams":
        return cls(
            np.asarray(data["mean"], dtype=float),
            np.asarray(data["std"], dtype=float),
            np.asarray(data["constant"], dtype=bool),
        )


def fit_scaler(X) -> ScalerParams:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("empty feature matrix")
    if X.shape[0] < 2:
        raise ValueError("standardization needs at least two samples")
    # Exactly constant columns are flagged rather than divided by round-off.
    constant = np.ptp(X, axis=0) == 0
    # second pass removes the round-off left by the first mean
    mean = X.mean(axis=0)
    mean = mean + (X - mean).mean(axis=0)
    return ScalerParams(mean, X.std(axis=0), constant)


def standardize(X) -> tuple:
    """Z-score every column (population std); constant columns become 0.

    ``X`` is an ``(n, d)`` array or a sequence of :class:`FeatureVector`.
    Returns ``(Z, params)``.
    """
    if len(X) and isinstance(X[0], FeatureVector):
        X, _, _ = stack(X)
    params = fit_scaler(X)
    return params.transform(X), params
