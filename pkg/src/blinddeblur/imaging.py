"""Raster primitives shared by every solver.

Images are 2-D ``float64`` numpy arrays indexed ``[row, col]``. Kernels are
square arrays with odd side length whose centre sample ``[size // 2,
size // 2]`` is the origin. All convolutions are circular, so every linear
operator used here is diagonalized by the 2-D DFT.
"""

import numpy as np
from scipy import ndimage

from .errors import InvalidArgumentError, PyramidTooDeepError

MIN_LEVEL_SIZE = 16

# ITU-R BT.601 luma weights
LUMA_WEIGHTS = (0.299, 0.587, 0.114)


def as_image(img):
    """Return ``img`` as a finite 2-D float64 array (no copy when possible)."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2:
        raise InvalidArgumentError(f"expected a 2-D image, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError("image contains non-finite samples")
    return arr


def as_kernel(ker):
    arr = np.asarray(ker, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise InvalidArgumentError(f"kernel must be square, got shape {arr.shape}")
    if arr.shape[0] % 2 == 0:
        raise InvalidArgumentError(f"kernel size must be odd, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError("kernel contains non-finite samples")
    return arr


def dirac(size):
    """Odd ``size`` x ``size`` kernel with unit mass at the centre."""
    if size < 1 or size % 2 == 0:
        raise InvalidArgumentError(f"kernel size must be odd and >= 1, got {size}")
    k = np.zeros((size, size))
    k[size // 2, size // 2] = 1.0
    return k


def to_gray(rgb):
    """Luma of an ``(H, W, 3)`` array; 2-D input is returned as float."""
    arr = np.asarray(rgb, dtype=np.float64)
    if arr.ndim == 2:
        return arr
    if arr.ndim != 3 or arr.shape[2] < 3:
        raise InvalidArgumentError(f"cannot convert shape {arr.shape} to gray")
    return arr[..., :3] @ np.asarray(LUMA_WEIGHTS)


def pad_kernel(ker, shape):
    """Embed a centred kernel in a zero raster of ``shape`` with its origin at [0, 0]."""
    ker = np.asarray(ker, dtype=np.float64)
    kh, kw = ker.shape
    if kh > shape[0] or kw > shape[1]:
        raise InvalidArgumentError(
            f"kernel {ker.shape} does not fit in grid {tuple(shape)}")
    out = np.zeros(shape)
    out[:kh, :kw] = ker
    return np.roll(out, (-(kh // 2), -(kw // 2)), axis=(0, 1))


def crop_kernel(full, size):
    """Inverse of :func:`pad_kernel`: the central ``size`` window around [0, 0]."""
    r = size // 2
    shifted = np.roll(full, (r, r), axis=(0, 1))
    return shifted[:size, :size].copy()


def _difference_response(direction, shape):
    # impulse response of the forward difference x[n+1] - x[n] with wrap
    d = np.zeros(shape)
    d[0, 0] = -1.0
    if direction == "h":
        d[0, -1] += 1.0
    elif direction == "v":
        d[-1, 0] += 1.0
    else:
        raise InvalidArgumentError(f"direction must be 'h' or 'v', got {direction!r}")
    return d


def transfer_function(op, shape):
    """Frequency response of a circular operator on a grid of ``shape``.

    Args:
        op: a centred kernel array, or ``"h"`` / ``"v"`` for the forward
            difference operators used by :func:`gradient`.
        shape: ``(height, width)`` of the target grid.

    Returns:
        Complex array ``S`` such that ``ifft2(S * fft2(x)).real`` applies the
        operator to ``x``.
    """
    shape = tuple(int(s) for s in shape)
    if isinstance(op, str):
        if min(shape) < 2:
            raise InvalidArgumentError("difference operator needs a grid of at least 2x2")
        return np.fft.fft2(_difference_response(op, shape))
    return np.fft.fft2(pad_kernel(op, shape))


def apply_spectrum(img, spectrum):
    return np.real(np.fft.ifft2(np.fft.fft2(img) * spectrum))


def convolve_circular(img, ker):
    """Circular convolution ``ker * img`` with the kernel origin at its centre."""
    img = as_image(img)
    ker = np.asarray(ker, dtype=np.float64)
    if ker.shape[0] > min(img.shape) or ker.shape[1] > min(img.shape):
        raise InvalidArgumentError(
            f"kernel {ker.shape} larger than image {img.shape}")
    return apply_spectrum(img, transfer_function(ker, img.shape))


def gradient(img, direction):
    """Forward first-order difference with circular wrap.

    ``direction="h"`` differences along columns (``x[:, j+1] - x[:, j]``),
    ``"v"`` along rows.
    """
    img = np.asarray(img, dtype=np.float64)
    if direction == "h":
        return np.roll(img, -1, axis=1) - img
    if direction == "v":
        return np.roll(img, -1, axis=0) - img
    raise InvalidArgumentError(f"direction must be 'h' or 'v', got {direction!r}")


def gradient_adjoint(g, direction):
    """Adjoint of :func:`gradient` (a backward difference, negated)."""
    g = np.asarray(g, dtype=np.float64)
    if direction == "h":
        return np.roll(g, 1, axis=1) - g
    if direction == "v":
        return np.roll(g, 1, axis=0) - g
    raise InvalidArgumentError(f"direction must be 'h' or 'v', got {direction!r}")


def downsample(img, factor=2.0):
    """Bilinear resampling to ``round(shape / factor)``.

    Output pixel centres map onto input pixel centres, so for ``factor=2``
    each output sample is the mean of a 2x2 input block.
    """
    img = as_image(img)
    if factor <= 1:
        raise InvalidArgumentError(f"downsample factor must be > 1, got {factor}")
    h, w = img.shape
    oh, ow = int(round(h / factor)), int(round(w / factor))
    if oh < MIN_LEVEL_SIZE or ow < MIN_LEVEL_SIZE:
        raise PyramidTooDeepError(
            f"downsampling {h}x{w} by {factor} gives {oh}x{ow}, "
            f"below the {MIN_LEVEL_SIZE}px minimum")
    rows = (np.arange(oh) + 0.5) * (h / oh) - 0.5
    cols = (np.arange(ow) + 0.5) * (w / ow) - 0.5
    rr, cc = np.meshgrid(rows, cols, indexing="ij")
    return ndimage.map_coordinates(img, [rr, cc], order=1, mode="nearest")


def upsample_kernel(ker, new_size):
    """Bilinear upsampling of a kernel followed by projection onto the simplex.

    The ``size`` x ``size`` footprint is stretched onto ``new_size`` x
    ``new_size`` pixels; samples outside the old footprint read as zero.
    """
    from .osal import project_simplex

    ker = as_kernel(ker)
    if new_size % 2 == 0:
        raise InvalidArgumentError(f"new kernel size must be odd, got {new_size}")
    n = ker.shape[0]
    if new_size < n:
        raise InvalidArgumentError(f"new size {new_size} smaller than kernel size {n}")
    if new_size == n:
        return project_simplex(ker)
    coords = (np.arange(new_size) + 0.5) * (n / new_size) - 0.5
    rr, cc = np.meshgrid(coords, coords, indexing="ij")
    up = ndimage.map_coordinates(ker, [rr, cc], order=1, mode="grid-constant", cval=0.0)
    return project_simplex(up)


def taper_weights(shape, band):
    """Separable raised-cosine window: 1 in the interior, ramping to ~0 at the edges."""

    def ramp(n):
        w = np.ones(n)
        if band <= 0:
            return w
        d = np.minimum(np.arange(n), np.arange(n)[::-1])
        inside = d < band
        w[inside] = 0.5 - 0.5 * np.cos(np.pi * (d[inside] + 0.5) / (band + 0.5))
        return w

    return np.outer(ramp(shape[0]), ramp(shape[1]))


def edge_taper(img, ker):
    """Blend the border band of ``img`` toward its circular blur by ``ker``.

    The band is ``ker.shape[0] // 2`` pixels wide; outside it the image is
    returned bit-for-bit.
    """
    img = as_image(img)
    ker = as_kernel(ker)
    band = ker.shape[0] // 2
    if band == 0:
        return img.copy()
    band = min(band, min(img.shape) // 2)
    wts = taper_weights(img.shape, band)
    blurred = convolve_circular(img, ker)
    out = img.copy()
    edge = wts < 1.0
    out[edge] = wts[edge] * img[edge] + (1.0 - wts[edge]) * blurred[edge]
    return out
