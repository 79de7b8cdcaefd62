"""Stratified k-fold cross-validation and grid search over SVM settings."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .metrics import evaluate
from .scaling import fit_scaler
from .svm import KERNELS, WEIGHT_MODES, SvmParams, decision_scores, train_svm

DEFAULT_C = tuple(2.0**i for i in range(-1, 6))
# tie-break order: simpler kernels first
KERNEL_RANK = {"linear": 0, "rbf": 1, "poly": 2}
WEIGHT_RANK = {"equal": 0, "balanced": 1}
METRICS = ("precision", "recall", "f_beta", "auc")


@dataclass(frozen=True)
class GridSpec:
    kernels: tuple = ("poly", "rbf", "linear")
    C_set: tuple = DEFAULT_C
    weight_modes: tuple = WEIGHT_MODES

    def __post_init__(self):
        for name in ("kernels", "C_set", "weight_modes"):
            if not getattr(self, name):
                raise ValueError(f"grid {name} is empty")
        if any(k not in KERNELS for k in self.kernels):
            raise ValueError(f"unknown kernel in {self.kernels}")
        if any(w not in WEIGHT_MODES for w in self.weight_modes):
            raise ValueError(f"unknown weight mode in {self.weight_modes}")
        if any(not c > 0 for c in self.C_set):
            raise ValueError("C values must be > 0")

    def cells(self) -> list:
        return [
            (k, float(c), w) for k in self.kernels for c in self.C_set for w in self.weight_modes
        ]

    def to_dict(self) -> dict:
        return {k: list(v) for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, data: dict) -> "GridSpec":
        return cls(tuple(data["kernels"]), tuple(float(c) for c in data["C_set"]), tuple(data["weight_modes"]))


@dataclass
class CellResult:
    kernel: str
    C: float
    class_weight: str
    folds: dict
    mean: dict = field(default_factory=dict)
    std: dict = field(default_factory=dict)

    def __post_init__(self):
        for m in METRICS:
            values = np.asarray(self.folds[m], dtype=float)
            self.mean[m] = float(values.mean())
            self.std[m] = float(values.std())

    def rank_key(self) -> tuple:
        return (-self.mean["f_beta"], self.C, KERNEL_RANK[self.kernel], WEIGHT_RANK[self.class_weight])

    def params(self, **extra) -> SvmParams:
        return SvmParams(kernel=self.kernel, C=self.C, class_weight=self.class_weight, **extra)

    def to_dict(self) -> dict:
        return {
            "kernel": self.kernel,
            "C": self.C,
            "class_weight": self.class_weight,
            "folds": {m: list(v) for m, v in self.folds.items()},
            "mean": dict(self.mean),
            "std": dict(self.std),
        }


@dataclass
class GridReport:
    cells: list
    best_index: int
    k: int
    beta: float
    seed: int
    grid: GridSpec

    @property
    def best(self) -> CellResult:
        return self.cells[self.best_index]

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "beta": self.beta,
            "seed": self.seed,
            "grid": self.grid.to_dict(),
            "n_cells": len(self.cells),
            "best_index": self.best_index,
            "best": self.best.to_dict(),
            "cells": [c.to_dict() for c in self.cells],
        }


def stratified_folds(y, k: int = 5, seed: int = 0) -> list:
    """Test-index arrays of ``k`` stratified folds.

    Each class is shuffled with ``seed`` and dealt round-robin, so fold
    sizes per class differ by at most one.
    """
    y = np.asarray(y)
    if k < 2:
        raise ValueError("k must be >= 2")
    rng = np.random.default_rng(seed)
    folds = [[] for _ in range(k)]
    for label in np.unique(y):
        members = np.flatnonzero(y == label)
        if members.size < k:
            raise ValueError(f"class {label} has {members.size} samples, fewer than k={k}")
        members = rng.permutation(members)
        for pos, idx in enumerate(members):
            folds[pos % k].append(int(idx))
    return [np.array(sorted(f)) for f in folds]


def fold_scores(X, y, test_idx, params: SvmParams, beta: float) -> dict:
    train = np.setdiff1d(np.arange(len(y)), test_idx)
    scaler = fit_scaler(X[train])
    model = train_svm(scaler.transform(X[train]), y[train], params)
    report = evaluate(decision_scores(model, scaler.transform(X[test_idx])), y[test_idx], beta)
    return {m: getattr(report, m) for m in METRICS}


def cross_validate_grid(X, y, grid: GridSpec | None = None, k: int = 5, beta: float = 2.0, seed: int = 0) -> GridReport:
    """Evaluate every grid cell with the same stratified folds.

    The scaler is fitted on each training split.  The best cell has the
    highest mean F-beta; ties go to smaller C, then the simpler kernel
    (linear, rbf, poly), then equal weights.
    """
    grid = grid or GridSpec()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    folds = stratified_folds(y, k, seed)
    cells = []
    for kernel, C, weight in grid.cells():
        params = SvmParams(kernel=kernel, C=C, class_weight=weight)
        per_fold = [fold_scores(X, y, test, params, beta) for test in folds]
        cells.append(
            CellResult(kernel, C, weight, {m: [f[m] for f in per_fold] for m in METRICS})
        )
    best = min(range(len(cells)), key=lambda i: cells[i].rank_key())
    return GridReport(cells, best, k, float(beta), int(seed), grid)
