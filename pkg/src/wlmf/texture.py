"""Gray-level co-occurrence matrices and six Haralick texture features."""

from __future__ import annotations

from dataclasses import astuple, dataclass, field

import numpy as np

FEATURE_NAMES = ("correlation", "asm", "homogeneity", "contrast", "dissimilarity", "energy")


@dataclass
class GlcmMatrix:
    """Normalized co-occurrence probabilities ``p(i, j)``.

    ``offset = (dx, dy)`` pairs pixel ``(row, col)`` with
    ``(row + dy, col + dx)``.
    """

    levels: int
    matrix: np.ndarray
    offset: tuple
    symmetric: bool = True


@dataclass(frozen=True)
class TextureFeatures:
    correlation: float
    asm: float
    homogeneity: float
    contrast: float
    dissimilarity: float
    energy: float

    @staticmethod
    def names() -> list:
        return [f"glcm_{name}" for name in FEATURE_NAMES]

    def values(self) -> np.ndarray:
        return np.array(astuple(self), dtype=float)


@dataclass(frozen=True)
class TextureConfig:
    levels: int = 32
    offsets: tuple = field(default=((1, 0), (0, 1)))
    symmetric: bool = True

    def __post_init__(self):
        if self.levels < 2:
            raise ValueError("levels must be >= 2")
        offsets = tuple(tuple(int(v) for v in o) for o in self.offsets)
        if not offsets or any(len(o) != 2 or o == (0, 0) for o in offsets):
            raise ValueError(f"invalid offsets {self.offsets!r}")
        object.__setattr__(self, "offsets", offsets)


def quantize(data: np.ndarray, levels: int, mask: np.ndarray | None = None) -> np.ndarray:
    """Linear min-max quantization into ``0..levels-1``.

    The range is taken over the masked pixels when a mask is given.
    """
    ref = data[mask] if mask is not None else data
    lo, hi = ref.min(), ref.max()
    if hi == lo:
        return np.zeros(data.shape, dtype=int)
    q = np.floor((data - lo) / (hi - lo) * levels).astype(int)
    return np.clip(q, 0, levels - 1)


def _pairs(a: np.ndarray, dx: int, dy: int) -> tuple:
    h, w = a.shape
    r0, r1 = max(0, -dy), min(h, h - dy)
    c0, c1 = max(0, -dx), min(w, w - dx)
    if r0 >= r1 or c0 >= c1:
        return a[:0, :0], a[:0, :0]
    return a[r0:r1, c0:c1], a[r0 + dy : r1 + dy, c0 + dx : c1 + dx]


def glcm(img, offset=(1, 0), levels: int = 32, mask=None, symmetric: bool = True) -> GlcmMatrix:
    """Co-occurrence matrix of ``img`` for one pixel displacement.

    Only pairs with both pixels inside ``mask`` count.  With ``symmetric``
    every pair is counted in both directions.
    """
    if levels < 2:
        raise ValueError("levels must be >= 2")
    dx, dy = (int(v) for v in offset)
    if dx == 0 and dy == 0:
        raise ValueError("offset must be nonzero")
    data = np.asarray(img, dtype=float)
    keep = None if mask is None else np.asarray(mask, dtype=bool)
    if keep is not None and keep.shape != data.shape:
        raise ValueError(f"image {data.shape} and mask {keep.shape} differ in size")
    if keep is not None and not keep.any():
        raise ValueError("mask is empty")
    q = quantize(data, levels, keep)
    first, second = _pairs(q, dx, dy)
    if keep is not None:
        m1, m2 = _pairs(keep, dx, dy)
        valid = m1 & m2
        first, second = first[valid], second[valid]
    first, second = first.ravel(), second.ravel()
    if first.size == 0:
        raise ValueError(f"no valid pixel pairs for offset {(dx, dy)}")
    counts = np.zeros((levels, levels))
    np.add.at(counts, (first, second), 1.0)
    if symmetric:
        counts = counts + counts.T
    return GlcmMatrix(levels, counts / counts.sum(), (dx, dy), symmetric)


def haralick_features(g: GlcmMatrix) -> TextureFeatures:
    p = np.asarray(g.matrix, dtype=float)
    i, j = np.indices(p.shape)
    diff = i - j
    contrast = float(np.sum(p * diff**2))
    dissimilarity = float(np.sum(p * np.abs(diff)))
    homogeneity = float(np.sum(p / (1.0 + diff**2)))
    asm = float(np.sum(p**2))
    mu_i = np.sum(i * p)
    mu_j = np.sum(j * p)
    sd_i = np.sqrt(np.sum(p * (i - mu_i) ** 2))
    sd_j = np.sqrt(np.sum(p * (j - mu_j) ** 2))
    if sd_i < 1e-15 or sd_j < 1e-15:
        correlation = 1.0
    else:
        correlation = float(np.sum(p * (i - mu_i) * (j - mu_j)) / (sd_i * sd_j))
        correlation = min(1.0, max(-1.0, correlation))
    return TextureFeatures(correlation, asm, homogeneity, contrast, dissimilarity, float(np.sqrt(asm)))


def texture_features(img, cfg: TextureConfig | None = None, mask=None) -> TextureFeatures:
    """Haralick features averaged over the configured offsets."""
    cfg = cfg or TextureConfig()
    per_offset = [
        haralick_features(glcm(img, o, cfg.levels, mask, cfg.symmetric)).values()
        for o in cfg.offsets
    ]
    return TextureFeatures(*np.mean(per_offset, axis=0).tolist())
