"""Wavelet-leader multifractal analysis of 2D fields.

The estimators follow the usual leader pipeline::

    dwt2 -> compute_leaders -> structure_functions -> fit_scaling
                            -> log_cumulants
                            -> legendre_parametric

All regressions are slopes against the scale index ``j`` (base-2 dyadic
scales) and are written as linear combinations ``sum_j w_j y_j`` of the
per-scale quantities, with weights from :func:`regression_weights`.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import logsumexp

from .wavelet import WaveletPyramid, dwt2, get_filters

EMBEDDING_DIM = 2
LOG2_E = 1.0 / math.log(2.0)

_CONFIG_KEYS = (
    "min_scale",
    "max_scale",
    "q",
    "wavelet_name",
    "normalization",
    "gamint",
    "n_cumulants",
)


class MfaError(ValueError):
    """Raised when a multifractal estimate is undefined for the given input."""


@dataclass
class MfaConfig:
    """Analyzer settings.

    ``normalization`` is the L^p normalization of the detail coefficients; with
    ``p = 1`` leader exponents coincide with Hölder exponents, while ``p = 2``
    (orthonormal) shifts every ``h`` and ``c1`` up by ``d/2 = 1``.

    ``integration`` selects where the fractional-integration factor
    ``2**(j*gamint)`` enters: ``'leaders'`` multiplies the scale-``j`` leaders
    (an exact shift of ``h(q)`` and ``c1``), ``'coefficients'`` multiplies the
    coefficients before the supremum is taken, which is the variant to use when
    ``h_min <= 0``.
    """

    min_scale: int = 2
    max_scale: int = 5
    q: list = field(default_factory=lambda: [2.0])
    wavelet_name: str = "db3"
    normalization: float = 1
    gamint: float = 0.0
    n_cumulants: int = 3
    weighting: str = "uniform"
    integration: str = "leaders"
    scale_mode: str = "fixed"
    feature_q_points: int = 5

    def __post_init__(self):
        self.q = [float(v) for v in np.atleast_1d(self.q)]
        self.min_scale = int(self.min_scale)
        self.max_scale = int(self.max_scale)
        self.n_cumulants = int(self.n_cumulants)
        if not 1 <= self.min_scale < self.max_scale:
            raise ValueError(
                f"need 1 <= min_scale < max_scale, got {self.min_scale}, {self.max_scale}"
            )
        if self.n_cumulants < 1:
            raise ValueError("n_cumulants must be >= 1")
        if self.normalization not in (1, 2):
            raise ValueError(f"normalization must be 1 or 2, got {self.normalization}")
        if not math.isfinite(self.gamint):
            raise ValueError("gamint must be finite")
        if self.weighting not in ("uniform", "nj"):
            raise ValueError(f"unknown weighting {self.weighting!r}")
        if self.integration not in ("leaders", "coefficients"):
            raise ValueError(f"unknown integration mode {self.integration!r}")
        if self.scale_mode not in ("fixed", "auto"):
            raise ValueError(f"unknown scale_mode {self.scale_mode!r}")
        if self.feature_q_points < 1:
            raise ValueError("feature_q_points must be >= 1")
        get_filters(self.wavelet_name)

    @property
    def scales(self) -> np.ndarray:
        return np.arange(self.min_scale, self.max_scale + 1)

    def replace(self, **changes) -> "MfaConfig":
        data = asdict(self)
        data.update(changes)
        return MfaConfig(**data)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "MfaConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown MfaConfig keys: {sorted(unknown)}")
        return cls(**data)

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            Path(path).write_text(text + "\n")
        return text

    @classmethod
    def from_json(cls, source) -> "MfaConfig":
        """Load from a JSON string or a path to a JSON document."""
        if isinstance(source, Path) or (
            isinstance(source, str) and not source.lstrip().startswith("{")
        ):
            source = Path(source).read_text()
        return cls.from_dict(json.loads(source))


@dataclass
class LeaderPyramid:
    """Leader fields ``L(j, k1, k2)`` for scales ``1..levels``."""

    leaders: dict
    gamint: float
    normalization: float
    integration: str = "leaders"

    @property
    def scales(self) -> list:
        return sorted(self.leaders)

    def __getitem__(self, j: int) -> np.ndarray:
        return self.leaders[j]

    def positive(self, j: int) -> np.ndarray:
        """Strictly positive leaders of scale ``j`` as a flat array."""
        values = self.leaders[j].ravel()
        return values[values > 0]


@dataclass
class StructureTable:
    """``log2 S(q, j)`` for every ``q`` (rows) and scale (columns)."""

    q: np.ndarray
    scales: np.ndarray
    log2_values: np.ndarray
    counts: np.ndarray

    @property
    def values(self) -> np.ndarray:
        return np.exp2(self.log2_values)


@dataclass
class ZetaFunction:
    q: np.ndarray
    zeta: np.ndarray
    r2: np.ndarray
    weights: np.ndarray
    scales: np.ndarray

    def second_differences(self) -> np.ndarray:
        """Forward differences of the slopes of ``zeta`` over sorted ``q``.

        On a uniform grid these are the usual second differences divided by
        the grid step; all entries ``<= 0`` means ``zeta`` is concave.
        """
        order = np.argsort(self.q)
        q, z = self.q[order], self.zeta[order]
        slopes = np.diff(z) / np.diff(q)
        return np.diff(slopes) * np.diff(q)[1:]

    def is_concave(self, tol: float = 1e-6) -> bool:
        return bool(np.all(self.second_differences() <= tol))


@dataclass
class CumulantTable:
    """Sample cumulants ``C_m(j)`` of ``ln L(j, .)``; row ``m - 1``."""

    scales: np.ndarray
    values: np.ndarray
    counts: np.ndarray


@dataclass
class SpectrumCurve:
    q: np.ndarray
    h: np.ndarray
    D: np.ndarray


@dataclass
class MultifractalFeatures:
    q: np.ndarray
    h: np.ndarray
    D: np.ndarray
    cumulants: np.ndarray

    def names(self) -> list:
        return (
            [f"h_q{v:.2f}" for v in self.q]
            + [f"D_q{v:.2f}" for v in self.q]
            + [f"c{m}" for m in range(1, len(self.cumulants) + 1)]
        )

    def values(self) -> np.ndarray:
        return np.concatenate([self.h, self.D, self.cumulants])

    def as_dict(self) -> dict:
        return dict(zip(self.names(), self.values().tolist()))


@dataclass
class MfaResult:
    """Everything computed by :func:`analyze` for one image."""

    config: MfaConfig
    scales: np.ndarray
    pyramid: WaveletPyramid
    leaders: LeaderPyramid
    structure: StructureTable
    zeta: ZetaFunction
    cumulants: np.ndarray
    cumulant_table: CumulantTable
    spectrum: SpectrumCurve
    hmin: float


# ---------------------------------------------------------------------------
# regression


def regression_weights(scales, counts=None) -> np.ndarray:
    """Weights ``w_j`` with ``sum_j w_j y_j`` equal to the weighted LS slope.

    ``counts`` gives per-scale regression weights (``None`` for ordinary least
    squares).  The weights satisfy ``sum w_j = 0`` and ``sum w_j j = 1``.
    """
    j = np.asarray(scales, dtype=float)
    if j.size < 2:
        raise MfaError("at least two scales are needed for a regression")
    b = np.ones_like(j) if counts is None else np.asarray(counts, dtype=float)
    centered = j - np.sum(b * j) / np.sum(b)
    denom = np.sum(b * centered**2)
    if denom <= 0:
        raise MfaError("degenerate scale range")
    return b * centered / denom


def _weighted_fit(scales, y, counts=None):
    """Slope, intercept and weighted R^2 of ``y`` (last axis) against ``scales``."""
    j = np.asarray(scales, dtype=float)
    b = np.ones_like(j) if counts is None else np.asarray(counts, dtype=float)
    w = regression_weights(j, b)
    y = np.asarray(y, dtype=float)
    slope = y @ w
    mean_j = np.sum(b * j) / np.sum(b)
    mean_y = (y @ b) / np.sum(b)
    intercept = mean_y - slope * mean_j
    fitted = intercept[..., None] + slope[..., None] * j if y.ndim > 1 else intercept + slope * j
    ss_res = ((y - fitted) ** 2) @ b
    ss_tot = ((y - np.expand_dims(mean_y, -1)) ** 2) @ b
    with np.errstate(invalid="ignore", divide="ignore"):
        r2 = np.where(ss_tot > 0, 1.0 - ss_res / np.where(ss_tot > 0, ss_tot, 1.0), 1.0)
    return slope, intercept, r2


def _regression_counts(cfg: MfaConfig, counts) -> np.ndarray | None:
    return np.asarray(counts, dtype=float) if cfg.weighting == "nj" else None


# ---------------------------------------------------------------------------
# leaders


def _neighborhood_max(a: np.ndarray) -> np.ndarray:
    # 3x3 union of dyadic neighbours, wrapped (periodized transform).
    rows = np.maximum(np.maximum(np.roll(a, 1, 0), a), np.roll(a, -1, 0))
    return np.maximum(np.maximum(np.roll(rows, 1, 1), rows), np.roll(rows, -1, 1))


def _children_max(finer: np.ndarray, shape: tuple) -> np.ndarray:
    h, w = shape
    padded = np.zeros((2 * h, 2 * w))
    padded[: finer.shape[0], : finer.shape[1]] = finer
    return padded.reshape(h, 2, w, 2).max(axis=(1, 3))


def compute_leaders(pyramid: WaveletPyramid, cfg: MfaConfig | None = None) -> LeaderPyramid:
    """Wavelet leaders of every scale of ``pyramid``.

    The leader at ``(j, k1, k2)`` is the supremum of ``|c^(m)(j', .)|`` over the
    three orientations, all scales ``j' <= j`` and all dyadic cells contained in
    the 3x3 block of scale-``j`` cells centred on ``(k1, k2)``.
    """
    cfg = cfg or MfaConfig()
    if pyramid.levels == 0:
        raise MfaError("empty pyramid")
    if pyramid.levels < cfg.max_scale and cfg.scale_mode == "fixed":
        raise MfaError(
            f"pyramid has {pyramid.levels} levels, max_scale is {cfg.max_scale}"
        )
    on_coefficients = cfg.integration == "coefficients"
    leaders = {}
    own_cells = None
    for j in range(1, pyramid.levels + 1):
        with np.errstate(over="ignore"):
            factor = np.exp2(j * cfg.gamint)
        mag = pyramid.magnitude(j)
        if on_coefficients:
            mag = mag * factor
        if own_cells is not None:
            mag = np.maximum(mag, _children_max(own_cells, mag.shape))
        own_cells = mag
        field_j = _neighborhood_max(mag)
        if not on_coefficients:
            field_j = field_j * factor
        if not np.all(np.isfinite(field_j)):
            raise MfaError(f"non-finite leaders at scale {j} (gamint={cfg.gamint})")
        leaders[j] = field_j
    return LeaderPyramid(leaders, cfg.gamint, pyramid.normalization, cfg.integration)


def estimate_hmin(pyramid: WaveletPyramid, scales=None) -> float:
    """Uniform regularity exponent: LS slope of ``log2 max_k |c(j, k)|`` vs ``j``."""
    scales = list(range(1, pyramid.levels + 1)) if scales is None else list(scales)
    if len(scales) < 2:
        raise MfaError("estimate_hmin needs at least two scales")
    sup = np.array([pyramid.magnitude(j).max() for j in scales])
    if np.any(sup <= 0):
        raise MfaError("all-zero coefficients at some scale; h_min undefined")
    slope, _, _ = _weighted_fit(scales, np.log2(sup))
    return float(slope)


def recommend_gamint(hmin: float, margin: float = 0.5) -> float:
    """Smallest safe fractional-integration order for a given ``h_min``."""
    if hmin > 0:
        return 0.0
    return float(math.ceil(-hmin) + margin)


# ---------------------------------------------------------------------------
# estimators


def _window(cfg: MfaConfig, leaders: LeaderPyramid) -> np.ndarray:
    if cfg.scale_mode == "auto":
        j1, j2 = select_scales(leaders, cfg)
        return np.arange(j1, j2 + 1)
    missing = [j for j in cfg.scales if j not in leaders.leaders]
    if missing:
        raise MfaError(f"leaders missing for scales {missing}")
    return cfg.scales


def structure_functions(leaders: LeaderPyramid, cfg: MfaConfig, scales=None, q=None) -> StructureTable:
    """``S(q, j) = mean_k L(j, k)**q`` over strictly positive leaders."""
    scales = _window(cfg, leaders) if scales is None else np.asarray(scales)
    q = np.asarray(cfg.q if q is None else q, dtype=float)
    log2_values = np.empty((q.size, scales.size))
    counts = np.empty(scales.size, dtype=int)
    for col, j in enumerate(scales):
        values = leaders.positive(int(j))
        if values.size == 0:
            raise MfaError(f"no positive leaders at scale {j}")
        counts[col] = values.size
        logs = np.log(values)
        log2_values[:, col] = (logsumexp(np.outer(q, logs), axis=1) - np.log(values.size)) * LOG2_E
    return StructureTable(q, np.asarray(scales), log2_values, counts)


def fit_scaling(table: StructureTable, cfg: MfaConfig) -> ZetaFunction:
    """``zeta(q)``: weighted LS slope of ``log2 S(q, j)`` against ``j``."""
    if table.scales.size < 2:
        raise MfaError("fewer than two usable scales")
    counts = _regression_counts(cfg, table.counts)
    slope, _, r2 = _weighted_fit(table.scales, table.log2_values, counts)
    w = regression_weights(table.scales, counts)
    return ZetaFunction(table.q, np.atleast_1d(slope), np.atleast_1d(r2), w, table.scales)


def cumulant_table(leaders: LeaderPyramid, cfg: MfaConfig, scales=None) -> CumulantTable:
    if cfg.n_cumulants > 3:
        raise MfaError("only the first three log-cumulants are supported")
    scales = _window(cfg, leaders) if scales is None else np.asarray(scales)
    values = np.empty((cfg.n_cumulants, scales.size))
    counts = np.empty(scales.size, dtype=int)
    for col, j in enumerate(scales):
        positive = leaders.positive(int(j))
        if positive.size < 2:
            raise MfaError(f"scale {j} has {positive.size} positive leaders; need >= 2")
        x = np.log(positive)
        mean = x.mean()
        centered = x - mean
        moments = [mean, np.mean(centered**2), np.mean(centered**3)]
        values[:, col] = moments[: cfg.n_cumulants]
        counts[col] = positive.size
    return CumulantTable(np.asarray(scales), values, counts)


def log_cumulants(leaders: LeaderPyramid, cfg: MfaConfig, table: CumulantTable | None = None) -> np.ndarray:
    """``c_m = log2(e) * sum_j w_j C_m(j)`` for ``m = 1..n_cumulants``."""
    table = table or cumulant_table(leaders, cfg)
    w = regression_weights(table.scales, _regression_counts(cfg, table.counts))
    return LOG2_E * (table.values @ w)


def legendre_parametric(leaders: LeaderPyramid, cfg: MfaConfig, q=None, scales=None) -> SpectrumCurve:
    """Parametric Legendre spectrum ``(h(q), D(q))`` from tilted leader averages.

    With ``R_q(j, k) = L(j, k)**q / sum_k L(j, k)**q``::

        V(j, q) = sum_k R_q log2 L
        U(j, q) = sum_k R_q log2 R_q + log2 n_j

    ``h(q) = sum_j w_j V(j, q)`` and ``D(q) = d + sum_j w_j U(j, q)`` with d = 2.
    """
    scales = _window(cfg, leaders) if scales is None else np.asarray(scales)
    q = np.asarray(cfg.q if q is None else q, dtype=float)
    V = np.empty((q.size, scales.size))
    U = np.empty((q.size, scales.size))
    counts = np.empty(scales.size, dtype=int)
    for col, j in enumerate(scales):
        values = leaders.positive(int(j))
        if values.size == 0:
            raise MfaError(f"no positive leaders at scale {j}")
        n = values.size
        logs = np.log(values)
        tilt = np.outer(q, logs)
        log_r = tilt - logsumexp(tilt, axis=1, keepdims=True)
        r = np.exp(log_r)
        V[:, col] = (r @ logs) * LOG2_E
        U[:, col] = np.sum(r * log_r, axis=1) * LOG2_E + math.log2(n)
        counts[col] = n
    w = regression_weights(scales, _regression_counts(cfg, counts))
    return SpectrumCurve(q, V @ w, EMBEDDING_DIM + U @ w)


def select_scales(leaders: LeaderPyramid, cfg: MfaConfig, min_length: int = 3, q: float = 2.0) -> tuple:
    """Scale window of length >= ``min_length`` where ``log2 S(q, j)`` is most linear.

    Ties go to the longer window, then to the finer one.
    """
    usable = [j for j in leaders.scales if leaders.positive(j).size >= 2]
    if len(usable) < min_length:
        raise MfaError(f"only {len(usable)} usable scales; need {min_length}")
    table = structure_functions(leaders, cfg, scales=usable, q=[q])
    best = None
    for start in range(len(usable)):
        for stop in range(start + min_length, len(usable) + 1):
            window = usable[start:stop]
            if window[-1] - window[0] != len(window) - 1:
                continue
            y = table.log2_values[0, start:stop]
            counts = _regression_counts(cfg, table.counts[start:stop])
            _, _, r2 = _weighted_fit(window, y, counts)
            key = (float(r2), len(window), -window[0])
            if best is None or key > best[0]:
                best = (key, (window[0], window[-1]))
    if best is None:
        raise MfaError("no contiguous scale window available")
    return best[1]


def analysis_levels(shape, cfg: MfaConfig) -> int:
    if cfg.scale_mode == "fixed":
        return cfg.max_scale
    return int(math.floor(math.log2(min(shape))))


def analyze(img, cfg: MfaConfig | None = None, q=None) -> MfaResult:
    """Run the full leader analysis of one image."""
    cfg = cfg or MfaConfig()
    x = np.asarray(img, dtype=float)
    if x.size and np.ptp(x) == 0:
        # every detail coefficient is zero up to round-off
        raise MfaError("constant image: no positive leaders at any scale")
    levels = analysis_levels(x.shape, cfg)
    if 2**levels > min(x.shape):
        raise MfaError(f"image {x.shape} too small for max_scale {levels}")
    pyramid = dwt2(x, cfg.wavelet_name, levels, cfg.normalization)
    leaders = compute_leaders(pyramid, cfg)
    scales = _window(cfg, leaders)
    table = structure_functions(leaders, cfg, scales=scales, q=q)
    zeta = fit_scaling(table, cfg)
    ctable = cumulant_table(leaders, cfg, scales=scales)
    cumulants = log_cumulants(leaders, cfg, ctable)
    spectrum = legendre_parametric(leaders, cfg, q=q, scales=scales)
    try:
        hmin = estimate_hmin(pyramid)
    except MfaError:
        hmin = float("nan")
    return MfaResult(cfg, scales, pyramid, leaders, table, zeta, cumulants, ctable, spectrum, hmin)


def feature_q_grid(cfg: MfaConfig) -> np.ndarray:
    return np.linspace(0.0, 2.0, cfg.feature_q_points)


def extract_mfa_features(img, cfg: MfaConfig | None = None) -> MultifractalFeatures:
    """``h(q)``, ``D(q)`` on a uniform grid over ``[0, 2]`` plus ``c_1..c_n``."""
    cfg = cfg or MfaConfig()
    q = feature_q_grid(cfg)
    result = analyze(img, cfg, q=q)
    features = MultifractalFeatures(q, result.spectrum.h, result.spectrum.D, result.cumulants)
    if not np.all(np.isfinite(features.values())):
        raise MfaError("non-finite multifractal features")
    return features
