"""Threshold metrics, ROC curve and AUC."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass
class EvalReport:
    precision: float
    recall: float
    f_beta: float
    beta: float
    roc_points: list = field(repr=False)
    auc: float
    confusion: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f_beta": self.f_beta,
            "beta": self.beta,
            "auc": self.auc,
            "confusion": dict(self.confusion),
            "roc_points": [
                [fpr, tpr, "inf" if np.isinf(t) else t] for fpr, tpr, t in self.roc_points
            ],
        }


def _threshold_out(t: float):
    return "inf" if np.isinf(t) else repr(float(t))


def f_beta_score(precision: float, recall: float, beta: float = 2.0) -> float:
    """``(1 + b^2) P R / (b^2 P + R)``; 0 when both are 0."""
    b2 = beta * beta
    denom = b2 * precision + recall
    if denom == 0:
        return 0.0
    return (1.0 + b2) * precision * recall / denom


def _binary(y) -> np.ndarray:
    y = np.asarray(y)
    if not set(np.unique(y).tolist()) <= {0, 1, -1}:
        raise ValueError("labels must be binary")
    return y > 0


def roc_curve(scores, y) -> list:
    """``(fpr, tpr, threshold)`` points, predicting positive when ``score >= t``.

    Starts at ``(0, 0, inf)`` and adds one point per distinct score in
    decreasing order, so it ends at ``(1, 1, min(score))``.
    """
    s = np.asarray(scores, dtype=float)
    pos = _binary(y)
    n_pos = np.count_nonzero(pos)
    n_neg = pos.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC needs both classes")
    order = np.argsort(-s, kind="mergesort")
    s_sorted, pos_sorted = s[order], pos[order]
    tp = np.cumsum(pos_sorted)
    fp = np.cumsum(~pos_sorted)
    # last index of each run of equal scores
    last = np.flatnonzero(np.r_[s_sorted[1:] != s_sorted[:-1], True])
    points = [(0.0, 0.0, float("inf"))]
    for idx in last:
        points.append((fp[idx] / n_neg, tp[idx] / n_pos, float(s_sorted[idx])))
    return points


def trapezoid_auc(points) -> float:
    fpr = np.array([p[0] for p in points])
    tpr = np.array([p[1] for p in points])
    return float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))


def evaluate(scores, y, beta: float = 2.0, threshold: float = 0.0) -> EvalReport:
    """Precision, recall and F-beta at ``threshold``, plus ROC and AUC."""
    s = np.asarray(scores, dtype=float)
    pos = _binary(y)
    if s.shape != pos.shape:
        raise ValueError(f"{s.size} scores for {pos.size} labels")
    if pos.all() or not pos.any():
        raise ValueError("evaluation needs both classes")
    pred = s >= threshold
    tp = int(np.count_nonzero(pred & pos))
    fp = int(np.count_nonzero(pred & ~pos))
    fn = int(np.count_nonzero(~pred & pos))
    tn = int(np.count_nonzero(~pred & ~pos))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn)
    points = roc_curve(s, pos)
    return EvalReport(
        precision=precision,
        recall=recall,
        f_beta=f_beta_score(precision, recall, beta),
        beta=float(beta),
        roc_points=points,
        auc=trapezoid_auc(points),
        confusion={"tp": tp, "fp": fp, "fn": fn, "tn": tn},
    )


def write_roc_csv(points, path, comment: str | None = None) -> None:
    """Write ``fpr,tpr,threshold`` rows; ``comment`` goes on a leading ``#`` line."""
    with Path(path).open("w", newline="") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["fpr", "tpr", "threshold"])
        for fpr, tpr, t in points:
            writer.writerow([repr(float(fpr)), repr(float(tpr)), _threshold_out(float(t))])
