"""Separable 2D discrete wavelet transform with orthonormal Daubechies filters.

Boundaries are handled by periodization, so an ``n x n`` image with ``n`` a
power of two yields subbands of exactly ``n / 2**j`` samples per side.  Odd
sizes are padded to even by edge replication before each level; the padded
shapes are recorded in the pyramid and cropped away by :func:`idwt2`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from math import comb

import numpy as np

MAX_VANISHING_MOMENTS = 10


@dataclass(frozen=True)
class FilterPair:
    """Orthonormal quadrature-mirror filter pair.

    ``highpass[k] = (-1)**k * lowpass[L-1-k]``.
    """

    lowpass: np.ndarray
    highpass: np.ndarray
    vanishing_moments: int
    name: str = ""

    def __len__(self) -> int:
        return len(self.lowpass)


@lru_cache(maxsize=None)
def _daubechies_lowpass(n: int) -> tuple:
    # Spectral factorization of |m0|^2 = cos^{2n}(w/2) P(sin^2(w/2)), keeping
    # the roots inside the unit circle (minimum phase).
    if n == 1:
        return (2 ** -0.5, 2 ** -0.5)
    p_coeffs = [comb(n - 1 + k, k) for k in range(n)]
    y_roots = np.roots(p_coeffs[::-1])
    z_roots = []
    for y in y_roots:
        # (2 - z - 1/z)/4 = y  <=>  z^2 - (2 - 4y) z + 1 = 0
        pair = np.roots([1.0, -(2.0 - 4.0 * y), 1.0])
        z_roots.append(pair[np.argmin(np.abs(pair))])
    poly = np.real(np.poly(z_roots))
    for _ in range(n):
        poly = np.convolve(poly, [1.0, 1.0])
    poly = poly * (np.sqrt(2.0) / poly.sum())
    return tuple(poly)


def daubechies_filters(n_vanishing: int) -> FilterPair:
    """Return the orthonormal Daubechies filter with ``n_vanishing`` moments.

    Parameters
    ----------
    n_vanishing : int
        Number of vanishing moments of the wavelet, between 1 and 10.
        The lowpass filter has ``2 * n_vanishing`` taps.
    """
    if not isinstance(n_vanishing, (int, np.integer)) or not (
        1 <= n_vanishing <= MAX_VANISHING_MOMENTS
    ):
        raise ValueError(
            f"unsupported Daubechies order {n_vanishing!r}; "
            f"expected 1..{MAX_VANISHING_MOMENTS}"
        )
    lo = np.array(_daubechies_lowpass(int(n_vanishing)))
    signs = (-1.0) ** np.arange(len(lo))
    hi = signs * lo[::-1]
    lo.flags.writeable = False
    hi.flags.writeable = False
    return FilterPair(lo, hi, int(n_vanishing), f"db{n_vanishing}")


def get_filters(name: str) -> FilterPair:
    """Look up a filter pair by identifier (``'haar'``, ``'db1'`` .. ``'db10'``)."""
    key = name.strip().lower()
    if key == "haar":
        return daubechies_filters(1)
    match = re.fullmatch(r"db(\d+)", key)
    if not match:
        raise ValueError(f"unknown wavelet {name!r}")
    return daubechies_filters(int(match.group(1)))


def detail_scale_factor(j: int, normalization: float, dim: int = 2) -> float:
    """Factor turning an orthonormal scale-``j`` coefficient into an L^p one.

    The L^p-normalized wavelet is ``2**(-j*dim/p) psi(2**-j x - k)``; ``p = 2``
    is the orthonormal transform and leaves coefficients untouched.
    """
    return 2.0 ** (j * dim * (0.5 - 1.0 / normalization))


@dataclass
class WaveletPyramid:
    """Per-scale detail subbands of a 2D DWT.

    ``details[j - 1]`` holds the ``(horizontal, vertical, diagonal)`` subbands
    of scale ``j``, stored under the L^p ``normalization``.  ``shapes[j - 1]``
    is the (unpadded) shape of the signal that entered level ``j``.
    """

    details: list
    approximation: np.ndarray
    wavelet: FilterPair
    normalization: float = 2
    shapes: list = field(default_factory=list)

    @property
    def levels(self) -> int:
        return len(self.details)

    def subbands(self, j: int) -> tuple:
        if not 1 <= j <= self.levels:
            raise IndexError(f"scale {j} outside 1..{self.levels}")
        return self.details[j - 1]

    def magnitude(self, j: int) -> np.ndarray:
        """Pointwise max over orientations of ``|c^(m)(j, k1, k2)|``."""
        h, v, d = self.subbands(j)
        return np.maximum(np.maximum(np.abs(h), np.abs(v)), np.abs(d))

    def scaled(self, factor: float) -> "WaveletPyramid":
        return WaveletPyramid(
            details=[tuple(factor * b for b in bands) for bands in self.details],
            approximation=factor * self.approximation,
            wavelet=self.wavelet,
            normalization=self.normalization,
            shapes=list(self.shapes),
        )


def _analysis(x: np.ndarray, filt: np.ndarray, axis: int) -> np.ndarray:
    shift = len(filt) // 2 - 1
    out = np.zeros_like(x)
    for k, c in enumerate(filt):
        out += c * np.roll(x, -(k - shift), axis=axis)
    index = [slice(None)] * x.ndim
    index[axis] = slice(0, None, 2)
    return out[tuple(index)]


def _synthesis(lo: np.ndarray, hi: np.ndarray, fp: FilterPair, axis: int) -> np.ndarray:
    shape = list(lo.shape)
    shape[axis] *= 2
    up_lo = np.zeros(shape)
    up_hi = np.zeros(shape)
    index = [slice(None)] * lo.ndim
    index[axis] = slice(0, None, 2)
    up_lo[tuple(index)] = lo
    up_hi[tuple(index)] = hi
    shift = len(fp) // 2 - 1
    out = np.zeros(shape)
    for k in range(len(fp)):
        out += fp.lowpass[k] * np.roll(up_lo, k - shift, axis=axis)
        out += fp.highpass[k] * np.roll(up_hi, k - shift, axis=axis)
    return out


def _pad_even(x: np.ndarray) -> np.ndarray:
    pad = [(0, s % 2) for s in x.shape]
    if any(p for _, p in pad):
        return np.pad(x, pad, mode="edge")
    return x


def _as_wavelet(wavelet) -> FilterPair:
    return wavelet if isinstance(wavelet, FilterPair) else get_filters(wavelet)


def dwt2(img, filters="db3", levels: int = 1, normalization: float = 2) -> WaveletPyramid:
    """Mallat pyramid of ``img`` down to ``levels`` scales.

    Parameters
    ----------
    img : array_like
        2D image (a :class:`~wlmf.imaging.GrayImage` or any array).
    filters : FilterPair or str
        Mother wavelet, e.g. ``'db3'``.
    levels : int
        Number of decomposition levels; ``2**levels`` must not exceed the
        smaller image side.
    normalization : {1, 2}
        L^p normalization applied to the detail coefficients.

    Returns
    -------
    WaveletPyramid
    """
    fp = _as_wavelet(filters)
    x = np.asarray(img, dtype=float)
    if x.ndim != 2:
        raise ValueError(f"expected a 2D image, got shape {x.shape}")
    if levels < 1:
        raise ValueError("levels must be >= 1")
    if min(x.shape) < len(fp):
        raise ValueError(
            f"image {x.shape} smaller than filter length {len(fp)} of {fp.name}"
        )
    if 2 ** levels > min(x.shape):
        raise ValueError(
            f"image {x.shape} too small for {levels} levels (needs side >= {2 ** levels})"
        )
    if normalization <= 0:
        raise ValueError("normalization must be positive")

    details = []
    shapes = []
    approx = x
    for j in range(1, levels + 1):
        shapes.append(approx.shape)
        approx = _pad_even(approx)
        lo_x = _analysis(approx, fp.lowpass, axis=1)
        hi_x = _analysis(approx, fp.highpass, axis=1)
        horizontal = _analysis(lo_x, fp.highpass, axis=0)
        vertical = _analysis(hi_x, fp.lowpass, axis=0)
        diagonal = _analysis(hi_x, fp.highpass, axis=0)
        approx = _analysis(lo_x, fp.lowpass, axis=0)
        factor = detail_scale_factor(j, normalization)
        details.append((factor * horizontal, factor * vertical, factor * diagonal))
    return WaveletPyramid(details, approx, fp, normalization, shapes)


def idwt2(pyramid: WaveletPyramid) -> np.ndarray:
    """Inverse of :func:`dwt2`; returns the reconstructed 2D array."""
    fp = pyramid.wavelet
    approx = np.asarray(pyramid.approximation, dtype=float)
    if pyramid.levels == 0:
        raise ValueError("empty pyramid")
    shapes = pyramid.shapes or [None] * pyramid.levels
    for j in range(pyramid.levels, 0, -1):
        bands = pyramid.details[j - 1]
        if len(bands) != 3:
            raise ValueError(f"scale {j}: expected 3 subbands, got {len(bands)}")
        if any(np.shape(b) != approx.shape for b in bands):
            raise ValueError(
                f"scale {j}: subband shapes {[np.shape(b) for b in bands]} "
                f"do not match approximation {approx.shape}"
            )
        factor = detail_scale_factor(j, pyramid.normalization)
        horizontal, vertical, diagonal = (np.asarray(b, float) / factor for b in bands)
        lo_x = _synthesis(approx, horizontal, fp, axis=0)
        hi_x = _synthesis(vertical, diagonal, fp, axis=0)
        approx = _synthesis(lo_x, hi_x, fp, axis=1)
        target = shapes[j - 1]
        if target is not None:
            if any(t > s or s - t > 1 for t, s in zip(target, approx.shape)):
                raise ValueError(
                    f"scale {j}: recorded shape {target} inconsistent with {approx.shape}"
                )
            approx = approx[: target[0], : target[1]]
    return approx
