"""Synthetic 2D fields with known scaling, used as oracles for the estimators."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .wavelet import WaveletPyramid, get_filters, idwt2


def _check_size(size: int, minimum: int = 1) -> None:
    if size < minimum or size & (size - 1):
        raise ValueError(f"size must be a power of two >= {minimum}, got {size}")


@dataclass(frozen=True)
class FbmSpec:
    hurst: float
    size: int = 512
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.hurst < 1.0:
            raise ValueError(f"hurst must lie in (0, 1), got {self.hurst}")
        _check_size(self.size, 64)


@dataclass(frozen=True)
class CascadeSpec:
    """Log-normal cascade on the wavelet tree.

    ``mean_exponent`` is the mean of ``U`` in the multipliers ``W = 2**-U`` and
    equals ``c1`` of the field; ``exponent_std`` controls ``c2 = -s**2 ln 2``.
    """

    mean_exponent: float = 1.0
    exponent_std: float = 0.3
    size: int = 512
    seed: int = 0
    wavelet: str = "db3"

    def __post_init__(self):
        if self.exponent_std < 0:
            raise ValueError("exponent_std must be >= 0")
        _check_size(self.size, 2)


def fbm2d(spec: FbmSpec) -> np.ndarray:
    """Isotropic fractional Brownian surface by spectral synthesis.

    Gaussian white noise is filtered in Fourier space by ``|f|**-(H + 1)``
    (power spectrum ``|f|**-(2H + 2)``), the zero frequency is removed and the
    result shifted so its minimum is 0.
    """
    rng = np.random.default_rng(spec.seed)
    n = spec.size
    noise = rng.standard_normal((n, n))
    f = np.fft.fftfreq(n)
    radius = np.hypot(f[:, None], f[None, :])
    radius[0, 0] = 1.0
    amplitude = radius ** -(spec.hurst + 1.0)
    amplitude[0, 0] = 0.0
    field = np.real(np.fft.ifft2(np.fft.fft2(noise) * amplitude))
    field /= field.std()
    return field - field.min()


def cascade2d(spec: CascadeSpec) -> np.ndarray:
    """Multiplicative cascade built top-down on the dyadic wavelet tree.

    The single coarsest cell starts at 1; each of the four children of a cell
    multiplies its parent's value by an independent ``W = 2**-U`` with
    ``U ~ N(mean_exponent, exponent_std**2)``.  Cell values become the
    magnitudes of L^1-normalized detail coefficients (random signs, one draw
    per orientation) and the image is the inverse transform, shifted to be
    non-negative.  ``exponent_std = 0`` gives a monofractal field.
    """
    rng = np.random.default_rng(spec.seed)
    levels = int(np.log2(spec.size))
    cells = {levels: np.ones((1, 1))}
    for j in range(levels - 1, 0, -1):
        parent = np.kron(cells[j + 1], np.ones((2, 2)))
        exponents = rng.normal(spec.mean_exponent, spec.exponent_std, parent.shape)
        cells[j] = parent * np.exp2(-exponents)
    details = []
    for j in range(1, levels + 1):
        signs = rng.choice([-1.0, 1.0], size=(3,) + cells[j].shape)
        details.append(tuple(signs[m] * cells[j] for m in range(3)))
    shapes = [(spec.size >> (j - 1),) * 2 for j in range(1, levels + 1)]
    pyramid = WaveletPyramid(
        details=details,
        approximation=np.zeros((1, 1)),
        wavelet=get_filters(spec.wavelet),
        normalization=1,
        shapes=shapes,
    )
    field = idwt2(pyramid)
    return field - field.min()
