"""Image I/O, lung-mask application and affine data augmentation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage


class ImageLoadError(ValueError):
    """Base class for image decoding failures."""


class UnreadableImageError(ImageLoadError):
    pass


class RawSizeMismatchError(ImageLoadError):
    pass


class UnsupportedFormatError(ImageLoadError):
    pass


@dataclass
class GrayImage:
    """Grayscale image; ``data`` is indexed ``[row, column]``."""

    data: np.ndarray
    bit_depth: int = 8

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.ndim != 2 or min(self.data.shape) < 1:
            raise ValueError(f"GrayImage needs a non-empty 2D array, got {self.data.shape}")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("GrayImage intensities must be finite")
        if np.any(self.data < 0):
            raise ValueError("GrayImage intensities must be non-negative")

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)


@dataclass
class BinaryMask:
    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=bool)
        if self.data.ndim != 2:
            raise ValueError("mask must be 2D")
        if not self.data.any():
            raise ValueError("mask has no true pixel")

    @property
    def shape(self) -> tuple:
        return self.data.shape

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)


@dataclass(frozen=True)
class RawFormat:
    """Headerless 16-bit container layout (JSRT ``.IMG`` defaults)."""

    width: int = 2048
    height: int = 2048
    big_endian: bool = True
    significant_bits: int = 12


@dataclass(frozen=True)
class AugmentParams:
    shear: float = 0.02
    zoom: float = 0.02
    rotation: float = 5.0
    count_per_transform: int = 32

    def __post_init__(self):
        if self.shear < 0 or self.zoom < 0:
            raise ValueError("shear and zoom must be >= 0")
        if abs(self.rotation) >= 90:
            raise ValueError("|rotation| must be < 90 degrees")
        if self.count_per_transform < 0:
            raise ValueError("count_per_transform must be >= 0")


# ---------------------------------------------------------------------------
# I/O


def _pgm_tokens(raw: bytes):
    pos = 0
    n = len(raw)
    while True:
        while pos < n and raw[pos : pos + 1].isspace():
            pos += 1
        if pos < n and raw[pos : pos + 1] == b"#":
            while pos < n and raw[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not raw[pos : pos + 1].isspace() and raw[pos : pos + 1] != b"#":
            pos += 1
        if start == pos:
            return
        yield raw[start:pos], pos


def _read_pgm(path: Path) -> GrayImage:
    raw = path.read_bytes()
    tokens = _pgm_tokens(raw)
    try:
        magic, _ = next(tokens)
        if magic not in (b"P2", b"P5"):
            raise UnsupportedFormatError(f"{path}: not a P2/P5 PGM (magic {magic!r})")
        width, height, maxval = (int(next(tokens)[0]) for _ in range(3))
    except (StopIteration, ValueError) as exc:
        if isinstance(exc, ImageLoadError):
            raise
        raise UnreadableImageError(f"{path}: malformed PGM header") from exc
    if not 0 < maxval < 65536:
        raise UnreadableImageError(f"{path}: invalid maxval {maxval}")
    count = width * height
    if magic == b"P2":
        values = [int(tok) for tok, _ in tokens]
        if len(values) < count:
            raise UnreadableImageError(f"{path}: expected {count} samples, got {len(values)}")
        data = np.array(values[:count], dtype=float)
    else:
        # Single whitespace byte follows maxval.
        _, end = _pgm_header_end(raw)
        dtype = ">u2" if maxval > 255 else "u1"
        itemsize = np.dtype(dtype).itemsize
        body = raw[end : end + count * itemsize]
        if len(body) < count * itemsize:
            raise UnreadableImageError(f"{path}: truncated PGM raster")
        data = np.frombuffer(body, dtype=dtype).astype(float)
    bits = max(1, int(maxval).bit_length())
    return GrayImage(data.reshape(height, width), bit_depth=bits)


def _pgm_header_end(raw: bytes) -> tuple:
    tokens = _pgm_tokens(raw)
    pos = 0
    for _ in range(4):
        _, pos = next(tokens)
    return None, pos + 1


def _read_png(path: Path) -> GrayImage:
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode in ("I;16", "I;16B", "I;16L", "I"):
                data = np.array(im, dtype=float)
                bits = 16
            elif mode in ("L", "1", "P"):
                data = np.array(im.convert("L"), dtype=float)
                bits = 8
            elif mode in ("LA", "RGB", "RGBA"):
                data = np.array(im.convert("L"), dtype=float)
                bits = 8
            else:
                raise UnsupportedFormatError(f"{path}: unsupported PNG mode {mode}")
    except ImageLoadError:
        raise
    except (OSError, ValueError) as exc:
        raise UnreadableImageError(f"{path}: {exc}") from exc
    return GrayImage(data, bit_depth=bits)


def _read_raw16(path: Path, fmt: RawFormat) -> GrayImage:
    size = path.stat().st_size
    expected = fmt.width * fmt.height * 2
    if size != expected:
        raise RawSizeMismatchError(
            f"{path}: {size} bytes, expected {expected} for {fmt.width}x{fmt.height} raw16"
        )
    dtype = ">u2" if fmt.big_endian else "<u2"
    data = np.fromfile(path, dtype=dtype).astype(float).reshape(fmt.height, fmt.width)
    limit = 2**fmt.significant_bits - 1
    return GrayImage(np.minimum(data, limit), bit_depth=fmt.significant_bits)


def load_image(path, format_spec="auto") -> GrayImage:
    """Read a grayscale image.

    ``format_spec`` is ``'png'``, ``'pgm'``, a :class:`RawFormat` for headerless
    16-bit files, ``'raw16'`` for the default :class:`RawFormat`, or ``'auto'``
    to pick by file extension (``.img``/``.raw`` map to raw16).
    """
    path = Path(path)
    if not path.is_file():
        raise UnreadableImageError(f"{path}: no such file")
    if format_spec == "auto":
        suffix = path.suffix.lower()
        format_spec = {".png": "png", ".pgm": "pgm", ".img": "raw16", ".raw": "raw16"}.get(suffix)
        if format_spec is None:
            raise UnsupportedFormatError(f"{path}: cannot infer format from {suffix!r}")
    if isinstance(format_spec, RawFormat):
        return _read_raw16(path, format_spec)
    if format_spec == "raw16":
        return _read_raw16(path, RawFormat())
    if format_spec == "pgm":
        return _read_pgm(path)
    if format_spec == "png":
        return _read_png(path)
    raise UnsupportedFormatError(f"unsupported format {format_spec!r}")


def save_image(img, path, bit_depth: int | None = None) -> None:
    """Write ``img`` as PGM (P5) or PNG according to the file extension.

    Values are rounded and clipped to ``[0, 2**bit_depth - 1]``; PGM uses
    maxval ``2**bit_depth - 1`` and PNG uses 8- or 16-bit grayscale.
    """
    path = Path(path)
    data = np.asarray(img, dtype=float)
    if bit_depth is None:
        bit_depth = getattr(img, "bit_depth", None) or (8 if data.max() <= 255 else 16)
    maxval = 2**bit_depth - 1
    values = np.clip(np.rint(data), 0, maxval)
    suffix = path.suffix.lower()
    if suffix == ".pgm":
        dtype = ">u2" if maxval > 255 else "u1"
        header = f"P5\n{data.shape[1]} {data.shape[0]}\n{maxval}\n".encode()
        path.write_bytes(header + values.astype(dtype).tobytes())
    elif suffix == ".png":
        if maxval > 255:
            Image.fromarray(values.astype(np.uint16)).save(path)
        else:
            Image.fromarray(values.astype(np.uint8), mode="L").save(path)
    else:
        raise UnsupportedFormatError(f"cannot write {suffix!r} images")


def load_mask(path) -> BinaryMask:
    """Mask from a PNG/PGM file; nonzero pixels are inside."""
    return BinaryMask(np.asarray(load_image(path)) > 0)


# ---------------------------------------------------------------------------
# masking


def gaussian_kernel(sigma: float) -> np.ndarray:
    """1D Gaussian truncated at 3 sigma and renormalized to unit sum."""
    radius = int(math.ceil(3 * sigma))
    x = np.arange(-radius, radius + 1, dtype=float)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def apply_mask_smooth(img, mask, sigma: float = 2.0) -> np.ndarray:
    """Zero everything outside ``mask``, then blur with a Gaussian of ``sigma``.

    The separable kernel is truncated at 3 sigma and renormalized; borders
    are mirror-reflected.  ``sigma = 0`` skips the blur.
    """
    data = np.asarray(img, dtype=float)
    keep = np.asarray(mask, dtype=bool)
    if data.shape != keep.shape:
        raise ValueError(f"image {data.shape} and mask {keep.shape} differ in size")
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    out = np.where(keep, data, 0.0)
    if sigma == 0:
        return out
    kernel = gaussian_kernel(sigma)
    for axis in (0, 1):
        out = ndimage.correlate1d(out, kernel, axis=axis, mode="reflect")
    return out


# ---------------------------------------------------------------------------
# augmentation


def warp_affine(data: np.ndarray, matrix: np.ndarray) -> np.ndarray:
    """Resample ``data`` through ``matrix`` about the image centre.

    ``matrix`` maps output ``(row, col)`` offsets from the centre to input
    offsets.  Bilinear interpolation; samples outside the frame read as 0.
    """
    data = np.asarray(data, dtype=float)
    h, w = data.shape
    center = np.array([(h - 1) / 2.0, (w - 1) / 2.0])
    rows, cols = np.mgrid[0:h, 0:w].astype(float)
    offsets = np.stack([rows.ravel() - center[0], cols.ravel() - center[1]])
    src = np.asarray(matrix, dtype=float) @ offsets + center[:, None]
    # Snap round-off so exact grid hits stay in frame.
    snapped = np.rint(src)
    src = np.where(np.abs(src - snapped) < 1e-9, snapped, src)
    r0 = np.floor(src[0])
    c0 = np.floor(src[1])
    fr = src[0] - r0
    fc = src[1] - c0
    out = np.zeros(h * w)
    for dr, wr in ((0, 1 - fr), (1, fr)):
        for dc, wc in ((0, 1 - fc), (1, fc)):
            rr = (r0 + dr).astype(int)
            cc = (c0 + dc).astype(int)
            weight = wr * wc
            valid = (rr >= 0) & (rr < h) & (cc >= 0) & (cc < w) & (weight > 0)
            out[valid] += weight[valid] * data[rr[valid], cc[valid]]
    return out.reshape(h, w)


def shear_matrix(s: float) -> np.ndarray:
    return np.array([[1.0, 0.0], [s, 1.0]])


def zoom_matrix(z: float) -> np.ndarray:
    return np.eye(2) / (1.0 + z)


def rotation_matrix(degrees: float) -> np.ndarray:
    t = math.radians(degrees)
    return np.array([[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]])


TRANSFORMS = (
    ("shear", "shear", shear_matrix),
    ("zoom", "zoom", zoom_matrix),
    ("rotation", "rotation", rotation_matrix),
)


def augment(img, params: AugmentParams, seed: int = 0) -> list:
    """Shear, zoom and rotation variants of ``img``.

    Returns ``3 * params.count_per_transform`` arrays: first the sheared set,
    then the zoomed one, then the rotated one.  Each magnitude is drawn
    uniformly from ``[-p, p]``.
    """
    data = np.asarray(img, dtype=float)
    rng = np.random.default_rng(seed)
    out = []
    for _, attr, build in TRANSFORMS:
        limit = abs(getattr(params, attr))
        for value in rng.uniform(-limit, limit, params.count_per_transform):
            out.append(warp_affine(data, build(value)))
    return out


def rotate(img, degrees: float) -> np.ndarray:
    """Rotate about the image centre by ``degrees`` (bilinear, zero fill)."""
    return warp_affine(np.asarray(img, dtype=float), rotation_matrix(degrees))


def augment_dataset(images, params: AugmentParams, seed: int = 0) -> list:
    """Originals followed by the augmented variants of each, seeded per image."""
    seeds = np.random.SeedSequence(seed).spawn(len(images))
    out = []
    for img, ss in zip(images, seeds):
        out.append(np.asarray(img, dtype=float))
        out.extend(augment(img, params, int(ss.generate_state(1)[0])))
    return out
