"""Soft-margin kernel SVM trained by sequential minimal optimization.

The dual is solved in the signed variables ``beta_i = y_i alpha_i``::

    max  sum_i y_i beta_i - 1/2 beta' K beta
    s.t. sum_i beta_i = 0,   A_i <= beta_i <= B_i

with ``A_i = min(0, y_i C_i)`` and ``B_i = max(0, y_i C_i)``.  Each step
moves the maximal violating pair, so the run is deterministic for a given
sample order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .scaling import ScalerParams

KERNELS = ("linear", "rbf", "poly")
WEIGHT_MODES = ("equal", "balanced")


class SvmConvergenceError(RuntimeError):
    def __init__(self, iterations: int, residual: float):
        super().__init__(
            f"SMO did not converge after {iterations} updates (KKT gap {residual:.3g})"
        )
        self.iterations = iterations
        self.residual = residual


@dataclass(frozen=True)
class Kernel:
    """Kernel function with resolved hyper-parameters."""

    kind: str = "linear"
    gamma: float = 1.0
    degree: int = 3
    coef0: float = 1.0

    def __call__(self, A, B) -> np.ndarray:
        A = np.atleast_2d(np.asarray(A, dtype=float))
        B = np.atleast_2d(np.asarray(B, dtype=float))
        if self.kind == "linear":
            return A @ B.T
        if self.kind == "poly":
            return (self.gamma * (A @ B.T) + self.coef0) ** self.degree
        sq = (
            np.sum(A**2, axis=1)[:, None]
            + np.sum(B**2, axis=1)[None, :]
            - 2.0 * (A @ B.T)
        )
        return np.exp(-self.gamma * np.maximum(sq, 0.0))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "gamma": self.gamma, "degree": self.degree, "coef0": self.coef0}


@dataclass(frozen=True)
class SvmParams:
    """Training settings.

    ``gamma = None`` resolves to ``1 / (n_features * X.var())`` on the
    training matrix (used by the rbf and poly kernels).
    """

    kernel: str = "linear"
    C: float = 1.0
    class_weight: str = "equal"
    gamma: float | None = None
    degree: int = 3
    coef0: float = 1.0
    tol: float = 1e-3
    max_iter: int = 10**6

    def __post_init__(self):
        if self.kernel not in KERNELS:
            raise ValueError(f"unknown kernel {self.kernel!r}")
        if not self.C > 0:
            raise ValueError("C must be > 0")
        if self.class_weight not in WEIGHT_MODES:
            raise ValueError(f"unknown class_weight {self.class_weight!r}")
        if self.gamma is not None and not self.gamma > 0:
            raise ValueError("gamma must be > 0")
        if self.degree < 1:
            raise ValueError("degree must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be > 0")

    def resolve_kernel(self, X: np.ndarray) -> Kernel:
        gamma = self.gamma
        if gamma is None:
            var = float(np.var(X))
            gamma = 1.0 / (X.shape[1] * var) if var > 0 else 1.0
        return Kernel(self.kernel, float(gamma), int(self.degree), float(self.coef0))


@dataclass
class SvmModel:
    kernel: Kernel
    params: SvmParams
    support_vectors: np.ndarray
    dual_coef: np.ndarray
    bias: float
    alpha: np.ndarray = field(repr=False)
    box: np.ndarray = field(repr=False)
    iterations: int = 0
    kkt_gap: float = 0.0
    scaler: ScalerParams | None = None

    @property
    def n_features(self) -> int:
        return self.support_vectors.shape[1]

    def to_dict(self) -> dict:
        params = self.params
        return {
            "kernel": self.kernel.to_dict(),
            "params": {
                "kernel": params.kernel,
                "C": params.C,
                "class_weight": params.class_weight,
                "gamma": params.gamma,
                "degree": params.degree,
                "coef0": params.coef0,
                "tol": params.tol,
                "max_iter": params.max_iter,
            },
            "support_vectors": self.support_vectors.tolist(),
            "dual_coef": self.dual_coef.tolist(),
            "bias": self.bias,
            "alpha": self.alpha.tolist(),
            "box": self.box.tolist(),
            "iterations": self.iterations,
            "kkt_gap": self.kkt_gap,
            "scaler": None if self.scaler is None else self.scaler.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SvmModel":
        k = data["kernel"]
        scaler = data.get("scaler")
        n_features = len(scaler["mean"]) if scaler else 0
        sv = np.asarray(data["support_vectors"], dtype=float)
        return cls(
            kernel=Kernel(k["kind"], float(k["gamma"]), int(k["degree"]), float(k["coef0"])),
            params=SvmParams(**data["params"]),
            support_vectors=sv.reshape(-1, sv.shape[1] if sv.size else n_features),
            dual_coef=np.asarray(data["dual_coef"], dtype=float),
            bias=float(data["bias"]),
            alpha=np.asarray(data["alpha"], dtype=float),
            box=np.asarray(data["box"], dtype=float),
            iterations=int(data["iterations"]),
            kkt_gap=float(data["kkt_gap"]),
            scaler=None if scaler is None else ScalerParams.from_dict(scaler),
        )


def signed_labels(y) -> np.ndarray:
    """Map {0, 1} (or {-1, 1}) labels to -1 / +1."""
    y = np.asarray(y)
    values = set(np.unique(y).tolist())
    if not values <= {0, 1} and not values <= {-1, 1}:
        raise ValueError(f"labels must be binary 0/1 or -1/+1, got {sorted(values)}")
    return np.where(y > 0, 1.0, -1.0)


def class_weights(y_signed: np.ndarray, mode: str) -> np.ndarray:
    """Per-sample ``omega_i``; balanced gives ``n / (2 n_c)`` so ``sum omega_i = n``."""
    if mode == "equal":
        return np.ones(y_signed.size)
    n = y_signed.size
    n_pos = np.count_nonzero(y_signed > 0)
    return np.where(y_signed > 0, n / (2.0 * n_pos), n / (2.0 * (n - n_pos)))


def smo(K: np.ndarray, y: np.ndarray, box: np.ndarray, tol: float, max_iter: int) -> tuple:
    """Solve the dual; returns ``(beta, gradient, iterations, gap)``."""
    n = y.size
    lower = np.minimum(0.0, y * box)
    upper = np.maximum(0.0, y * box)
    beta = np.zeros(n)
    grad = y.astype(float).copy()
    diag = np.diag(K)
    for it in range(max_iter + 1):
        up = beta < upper
        down = beta > lower
        i = int(np.argmax(np.where(up, grad, -np.inf)))
        j = int(np.argmin(np.where(down, grad, np.inf)))
        gap = grad[i] - grad[j]
        if not (up[i] and down[j]) or gap <= tol:
            return beta, grad, it, max(float(gap), 0.0) if up[i] and down[j] else 0.0
        if it == max_iter:
            raise SvmConvergenceError(it, float(gap))
        eta = max(diag[i] + diag[j] - 2.0 * K[i, j], 1e-12)
        room_i = upper[i] - beta[i]
        room_j = beta[j] - lower[j]
        step = min(room_i, room_j, gap / eta)
        beta[i] = upper[i] if step == room_i else min(beta[i] + step, upper[i])
        beta[j] = lower[j] if step == room_j else max(beta[j] - step, lower[j])
        grad -= step * (K[:, i] - K[:, j])
    raise AssertionError("unreachable")


def _bias(beta, grad, lower, upper) -> float:
    free = (beta > lower) & (beta < upper)
    if np.any(free):
        return float(np.mean(grad[free]))
    up = beta < upper
    down = beta > lower
    hi = np.max(grad[up]) if np.any(up) else np.max(grad)
    lo = np.min(grad[down]) if np.any(down) else np.min(grad)
    return float((hi + lo) / 2.0)


def train_svm(X, y, p: SvmParams | None = None, scaler: ScalerParams | None = None) -> SvmModel:
    """Fit a soft-margin SVM with per-sample box ``C_i = omega_i * C``.

    ``y`` holds 0/1 labels (1 is the positive class).  ``scaler`` is stored
    on the model for later use and is not applied here.
    """
    p = p or SvmParams()
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("X must be a 2D feature matrix")
    ys = signed_labels(y)
    if ys.size != X.shape[0]:
        raise ValueError(f"{X.shape[0]} samples but {ys.size} labels")
    if np.all(ys > 0) or np.all(ys < 0):
        raise ValueError("training needs both classes")
    kernel = p.resolve_kernel(X)
    K = kernel(X, X)
    box = p.C * class_weights(ys, p.class_weight)
    beta, grad, iterations, gap = smo(K, ys, box, p.tol, p.max_iter)
    lower = np.minimum(0.0, ys * box)
    upper = np.maximum(0.0, ys * box)
    bias = _bias(beta, grad, lower, upper)
    alpha = ys * beta
    sv = beta != 0
    return SvmModel(
        kernel=kernel,
        params=p,
        support_vectors=X[sv].copy(),
        dual_coef=beta[sv].copy(),
        bias=bias,
        alpha=alpha,
        box=box,
        iterations=iterations,
        kkt_gap=gap,
        scaler=scaler,
    )


def decision_scores(model: SvmModel, X) -> np.ndarray:
    """``sum_i beta_i k(x_i, x) + b`` for every row of ``X``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.n_features:
        raise ValueError(f"model expects {model.n_features} features, got {X.shape[1]}")
    if model.dual_coef.size == 0:
        return np.full(X.shape[0], model.bias)
    return model.kernel(X, model.support_vectors) @ model.dual_coef + model.bias


def predict(model: SvmModel, X) -> np.ndarray:
    return (decision_scores(model, X) >= 0).astype(int)


def kkt_residual(model: SvmModel, X, y) -> float:
    """Largest violation of the per-sample KKT conditions in margin units."""
    ys = signed_labels(y)
    margin = ys * decision_scores(model, X)
    alpha, box = model.alpha, model.box
    at_zero = alpha <= 0
    at_box = alpha >= box
    free = ~(at_zero | at_box)
    viol = np.zeros_like(margin)
    viol[at_zero] = np.maximum(0.0, 1.0 - margin[at_zero])
    viol[at_box] = np.maximum(0.0, margin[at_box] - 1.0)
    viol[free] = np.abs(margin[free] - 1.0)
    return float(viol.max())
