"""Reading and writing images and kernels.

Images are PNG (8 or 16 bit, gray or RGB) or binary PGM. Samples are mapped
to [0, 1] on read; on write they are clamped and re-quantized. Kernels use a
small text format::

    size 3
    0 0 0
    0 1 0
    0 0 0
"""

from pathlib import Path

import numpy as np
from PIL import Image

from . import imaging
from .errors import DeblurError, InvalidArgumentError


class ImageIOError(DeblurError, OSError):
    """Raised when a file cannot be read, parsed or written."""


def read_image(path):
    """Load an image as float64 in [0, 1].

    Gray files give ``(H, W)``, color files ``(H, W, 3)``; alpha is dropped.
    """
    path = Path(path)
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode in ("I;16", "I;16B", "I;16L", "I"):
                arr = np.asarray(im, dtype=np.float64)
                peak = 65535.0
            elif mode in ("L", "RGB"):
                arr = np.asarray(im, dtype=np.float64)
                peak = 255.0
            elif mode == "LA":
                arr = np.asarray(im.convert("L"), dtype=np.float64)
                peak = 255.0
            else:
                arr = np.asarray(im.convert("RGB"), dtype=np.float64)
                peak = 255.0
    except (OSError, ValueError) as exc:
        raise ImageIOError(f"cannot read image {path}: {exc}") from exc
    return np.clip(arr / peak, 0.0, 1.0)


def write_image(path, img, bits=8):
    """Write ``img`` (values clamped to [0, 1]) as PNG or PGM, chosen by suffix."""
    path = Path(path)
    arr = np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0)
    if bits not in (8, 16):
        raise InvalidArgumentError(f"bits must be 8 or 16, got {bits}")
    if arr.ndim == 3 and bits == 16:
        raise InvalidArgumentError("16-bit output is only supported for gray images")
    if arr.ndim not in (2, 3):
        raise InvalidArgumentError(f"cannot write array of shape {arr.shape}")
    if bits == 8:
        im = Image.fromarray(np.round(arr * 255.0).astype(np.uint8))
    else:
        im = Image.fromarray(np.round(arr * 65535.0).astype(np.uint16))
    fmt = {".png": "PNG", ".pgm": "PPM", ".ppm": "PPM", ".pnm": "PPM"}.get(path.suffix.lower())
    if fmt is None:
        raise InvalidArgumentError(f"unsupported image suffix {path.suffix!r}")
    try:
        im.save(path, format=fmt)
    except OSError as exc:
        raise ImageIOError(f"cannot write image {path}: {exc}") from exc


def write_kernel(path, ker):
    ker = imaging.as_kernel(ker)
    lines = [f"size {ker.shape[0]}"]
    lines += [" ".join(repr(float(v)) for v in row) for row in ker]
    try:
        Path(path).write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise ImageIOError(f"cannot write kernel {path}: {exc}") from exc


def read_kernel(path):
    """Parse the text kernel format written by :func:`write_kernel`."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ImageIOError(f"cannot read kernel {path}: {exc}") from exc
    rows = [ln.split() for ln in text.splitlines() if ln.strip()]
    if not rows or len(rows[0]) != 2 or rows[0][0] != "size":
        raise ImageIOError(f"{path}: first line must be 'size N'")
    try:
        n = int(rows[0][1])
        ker = np.array([[float(v) for v in r] for r in rows[1:]])
    except ValueError as exc:
        raise ImageIOError(f"{path}: {exc}") from exc
    if ker.shape != (n, n):
        raise ImageIOError(f"{path}: expected {n}x{n} values, got shape {ker.shape}")
    return imaging.as_kernel(ker)


def kernel_preview(ker, zoom=5):
    """Max-normalized kernel enlarged ``zoom`` times by bilinear interpolation."""
    ker = np.asarray(ker, dtype=np.float64)
    if zoom < 1:
        raise InvalidArgumentError(f"zoom must be >= 1, got {zoom}")
    peak = ker.max()
    norm = ker / peak if peak > 0 else np.zeros_like(ker)
    if zoom == 1:
        return norm
    im = Image.fromarray(norm.astype(np.float32), mode="F")
    big = im.resize((ker.shape[1] * zoom, ker.shape[0] * zoom), Image.BILINEAR)
    return np.clip(np.asarray(big, dtype=np.float64), 0.0, 1.0)


def write_kernel_png(path, ker, zoom=5):
    write_image(path, kernel_preview(ker, zoom))
