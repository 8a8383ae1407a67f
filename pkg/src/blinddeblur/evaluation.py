"""Synthetic benchmark: blur generation, SSD error ratios and histograms."""

import csv
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from . import imaging
from .errors import InvalidArgumentError
from .nonblind import NonBlindParams, deconvolve
from .osal import project_simplex

TRIAL_HEADER = ("image", "kernel", "setting", "ssd_est", "ssd_true", "ratio",
                "psnr_db", "seconds")
SUCCESS_RATIO = 3.0
KERNEL_SETTINGS = {"true": 0, "medium": 8, "large": 16}


@dataclass(frozen=True)
class TrialRecord:
    image: str
    kernel: str
    setting: str
    ssd_est: float
    ssd_true: float
    ratio: float
    psnr_db: float
    seconds: float = 0.0
    variant: str = "R1"

    @property
    def success(self):
        return self.ratio < SUCCESS_RATIO


@dataclass(frozen=True)
class Histogram:
    bins: tuple
    fractions: tuple


def synth_blur(x, ker, noise_sigma=0.0, seed=0):
    """Circularly blur ``x`` by ``ker`` and add i.i.d. Gaussian noise."""
    if noise_sigma < 0:
        raise InvalidArgumentError("noise_sigma must be >= 0")
    y = imaging.convolve_circular(x, ker)
    if noise_sigma > 0:
        y = y + np.random.default_rng(seed).normal(0.0, noise_sigma, y.shape)
    return y


def make_trajectory_kernel(size, length, curvature=0.0, seed=0):
    """Rasterize a smooth random camera path into a ``size`` x ``size`` kernel.

    The path has arc length ``length`` pixels. Its heading drifts as a
    smoothed random walk whose strength is ``curvature`` (radians per pixel,
    roughly); ``curvature=0`` gives a straight segment. Samples are splatted
    bilinearly every 0.05 px. The path's mass centroid is placed on the
    kernel origin, nudged only if that would push the path out of the window.
    """
    if size < 1 or size % 2 == 0:
        raise InvalidArgumentError(f"size must be odd, got {size}")
    if not 0 <= length < size:
        raise InvalidArgumentError(f"length must lie in [0, size), got {length}")
    if length == 0:
        return imaging.dirac(size)
    rng = np.random.default_rng(seed)
    step = 0.05
    n = int(np.ceil(length / step)) + 1
    heading0 = rng.uniform(0, np.pi)
    turn = rng.normal(0.0, 1.0, n)
    turn = ndimage.gaussian_filter1d(turn, sigma=max(1.0, 2.0 / step), mode="nearest")
    turn /= max(np.std(turn), 1e-12)
    # second integration gives a smooth heading with occasional reversals of bend
    heading = heading0 + curvature * np.cumsum(turn) * step
    pts = np.zeros((n, 2))
    pts[1:, 0] = np.cumsum(np.sin(heading[:-1])) * step
    pts[1:, 1] = np.cumsum(np.cos(heading[:-1])) * step
    pts *= length / max((n - 1) * step, 1e-12)
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    extent = hi - lo
    limit = size - 1.0
    if np.any(extent > limit):
        pts = (pts - lo) * (limit / extent.max()) + lo
        lo, hi = pts.min(axis=0), pts.max(axis=0)
    centre = (size - 1) / 2.0
    offset = np.clip(centre - pts.mean(axis=0), -lo, limit - hi)
    pts += offset
    ker = np.zeros((size, size))
    r0 = np.floor(pts[:, 0]).astype(int)
    c0 = np.floor(pts[:, 1]).astype(int)
    fr, fc = pts[:, 0] - r0, pts[:, 1] - c0
    for dr, dc, wt in ((0, 0, (1 - fr) * (1 - fc)), (0, 1, (1 - fr) * fc),
                       (1, 0, fr * (1 - fc)), (1, 1, fr * fc)):
        rr, cc = np.clip(r0 + dr, 0, size - 1), np.clip(c0 + dc, 0, size - 1)
        np.add.at(ker, (rr, cc), wt)
    return project_simplex(ker)


def ssd(a, b, border_crop=0):
    """Sum of squared differences over the interior left after cropping ``border_crop`` px."""
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise InvalidArgumentError(f"shape mismatch {a.shape} vs {b.shape}")
    c = int(border_crop)
    if c:
        a, b = a[c:-c, c:-c], b[c:-c, c:-c]
    return float(np.sum((a - b) ** 2))


def psnr(a, b):
    """PSNR in dB for peak value 1; ``inf`` for identical inputs."""
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise InvalidArgumentError(f"shape mismatch {a.shape} vs {b.shape}")
    mse = np.mean((a - b) ** 2)
    if mse == 0:
        return float("inf")
    return float(10.0 * np.log10(1.0 / mse))


def kernel_correlation(k_est, k_true):
    """Circular cross-correlation ``c[s] = sum_n k_true[n] * k_est[n - s]``."""
    return np.real(np.fft.ifft2(np.fft.fft2(k_true) * np.conj(np.fft.fft2(k_est))))


def align_kernels(k_est, k_true):
    """Circularly shift ``k_est`` to the integer offset best correlated with ``k_true``."""
    k_est, k_true = np.asarray(k_est, dtype=np.float64), np.asarray(k_true, dtype=np.float64)
    if k_est.shape != k_true.shape:
        raise InvalidArgumentError(f"kernel shapes differ: {k_est.shape} vs {k_true.shape}")
    corr = kernel_correlation(k_est, k_true)
    best = corr.max()
    # prefer the smallest displacement among (numerical) ties
    h, w = corr.shape
    cand = np.argwhere(corr >= best - 1e-12 * max(abs(best), 1.0))
    wrap = lambda v, n: v - n if v > n // 2 else v  # noqa: E731
    shifts = [(wrap(r, h), wrap(c, w)) for r, c in cand]
    shift = min(shifts, key=lambda s: (s[0] ** 2 + s[1] ** 2, s))
    return np.roll(k_est, shift, axis=(0, 1)), shift


def embed_kernel(ker, size):
    """Zero-pad (centred) or crop a kernel to ``size`` x ``size``."""
    ker = np.asarray(ker, dtype=np.float64)
    n = ker.shape[0]
    if n == size:
        return ker.copy()
    if n < size:
        return np.pad(ker, (size - n) // 2)
    c = (n - size) // 2
    return ker[c:c + size, c:c + size].copy()


def error_ratio(x_true, y, k_est, k_true, nb=None, image_id="", kernel_id="",
                setting="true", border_crop=None, seconds=0.0, variant="R1"):
    """Score an estimated kernel by the SSD ratio of the two non-blind restorations.

    ``k_est`` is brought to the size of ``k_true`` and shift-aligned to it
    before deconvolution; both arms share the same non-blind parameters.
    """
    nb = NonBlindParams() if nb is None else nb
    k_true = project_simplex(k_true)
    size = k_true.shape[0]
    k_est = project_simplex(embed_kernel(k_est, size))
    k_est, _ = align_kernels(k_est, k_true)
    crop = size // 2 if border_crop is None else border_crop
    x_t = deconvolve(y, k_true, nb)
    if np.array_equal(k_est, k_true):
        x_e = x_t
    else:
        x_e = deconvolve(y, k_est, nb)
    ssd_true = ssd(x_t, x_true, crop)
    ssd_est = ssd(x_e, x_true, crop)
    ratio = ssd_est / ssd_true if ssd_true > 0 else (1.0 if ssd_est == 0 else np.inf)
    return TrialRecord(image=image_id, kernel=kernel_id, setting=setting,
                       ssd_est=ssd_est, ssd_true=ssd_true, ratio=float(ratio),
                       psnr_db=psnr(x_e, x_true), seconds=seconds, variant=variant)


def cumulative_histogram(records, max_bin=10):
    """Fraction of trials with error ratio below ``r`` for ``r = 1..max_bin``."""
    ratios = np.array([r.ratio if isinstance(r, TrialRecord) else float(r) for r in records])
    if ratios.size == 0:
        raise InvalidArgumentError("cannot build a histogram from no records")
    bins = tuple(range(1, int(max_bin) + 1))
    return Histogram(bins, tuple(float(np.mean(ratios < r)) for r in bins))


def write_trials_csv(records, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRIAL_HEADER)
        for r in records:
            writer.writerow([r.image, r.kernel, r.setting, repr(r.ssd_est),
                             repr(r.ssd_true), repr(r.ratio), repr(r.psnr_db),
                             f"{r.seconds:.3f}"])


def read_trials_csv(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != TRIAL_HEADER:
            raise InvalidArgumentError(f"unexpected trial header in {path}")
        return [TrialRecord(row["image"], row["kernel"], row["setting"],
                            float(row["ssd_est"]), float(row["ssd_true"]),
                            float(row["ratio"]), float(row["psnr_db"]),
                            float(row["seconds"])) for row in reader]


def write_histogram_csv(hist, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("bin", "fraction"))
        for b, f in zip(hist.bins, hist.fractions):
            writer.writerow((b, repr(f)))


# ------------------------------------------------------------- test corpus


def _smooth_noise(rng, shape, sigma):
    n = ndimage.gaussian_filter(rng.normal(size=shape), sigma, mode="wrap")
    return (n - n.min()) / max(np.ptp(n), 1e-12)


def _ellipses_image(rng, n):
    """Overlapping shaded ellipses: curved edges in every orientation."""
    rr, cc = np.mgrid[:n, :n].astype(float)
    img = 0.3 + 0.4 * _smooth_noise(rng, (n, n), n / 5)
    for _ in range(40):
        r0, c0 = rng.uniform(0, n, 2)
        a, b = rng.uniform(n / 30, n / 7, 2)
        th = rng.uniform(0, np.pi)
        u = (rr - r0) * np.cos(th) + (cc - c0) * np.sin(th)
        v = -(rr - r0) * np.sin(th) + (cc - c0) * np.cos(th)
        mask = (u / a) ** 2 + (v / b) ** 2 < 1
        shade = rng.uniform(0.05, 0.95) + 0.1 * (u / a)
        img[mask] = shade[mask]
    return img


def _polygons_image(rng, n):
    """Rotated rectangles and triangles, like facades and roofs."""
    rr, cc = np.mgrid[:n, :n].astype(float)
    img = 0.5 + 0.3 * (_smooth_noise(rng, (n, n), n / 4) - 0.5)
    for _ in range(30):
        r0, c0 = rng.uniform(0, n, 2)
        th = rng.uniform(0, np.pi)
        u = (rr - r0) * np.cos(th) + (cc - c0) * np.sin(th)
        v = -(rr - r0) * np.sin(th) + (cc - c0) * np.cos(th)
        h, w = rng.uniform(n / 25, n / 5, 2)
        if rng.random() < 0.6:
            mask = (np.abs(u) < h) & (np.abs(v) < w)
        else:
            mask = (u > -h) & (np.abs(v) < (h - u) * w / (2 * h)) & (u < h)
        img[mask] = rng.uniform(0.05, 0.95)
    return img


def _levelset_image(rng, n):
    """Quantized smooth noise: irregular region boundaries plus fine texture."""
    base = _smooth_noise(rng, (n, n), n / 16)
    levels = np.quantile(base, np.sort(rng.uniform(0.1, 0.9, 6)))
    vals = rng.uniform(0.05, 0.95, levels.size + 1)
    img = vals[np.searchsorted(levels, base)]
    return img + 0.12 * (_smooth_noise(rng, (n, n), 1.0) - 0.5)


def _mosaic_image(rng, n):
    """Voronoi cells with shading and texture."""
    seeds = rng.uniform(0, n, (40, 2))
    vals = rng.uniform(0.05, 0.95, 40)
    rr, cc = np.mgrid[:n, :n]
    d = (rr[..., None] - seeds[:, 0]) ** 2 + (cc[..., None] - seeds[:, 1]) ** 2
    img = vals[np.argmin(d, axis=2)]
    img = img + 0.15 * (_smooth_noise(rng, (n, n), n / 10) - 0.5)
    return img + 0.08 * (_smooth_noise(rng, (n, n), 1.5) - 0.5)


_GENERATORS = (_ellipses_image, _polygons_image, _levelset_image, _mosaic_image)

CORPUS_KERNEL_SIZES = (9, 11, 13, 13, 15, 15, 17, 19)


def corpus_images(n=128, seed=2024):
    """Four procedurally generated test images with sharp edges and mild texture."""
    out = {}
    for i, gen in enumerate(_GENERATORS):
        rng = np.random.default_rng(seed + i)
        img = ndimage.gaussian_filter(gen(rng, n), 0.5, mode="wrap")
        out[f"im{i + 1:02d}"] = np.clip(img, 0.0, 1.0)
    return out


def corpus_kernels(sizes=CORPUS_KERNEL_SIZES, seed=7, curvature=0.12):
    """Eight curved trajectory kernels; ``sizes`` may be an int for a uniform size."""
    if np.isscalar(sizes):
        sizes = (int(sizes),) * 8
    out = {}
    for i, size in enumerate(sizes):
        length = 0.75 * (size - 1)
        out[f"k{i + 1:02d}"] = make_trajectory_kernel(size, length, curvature, seed + i)
    return out


def setting_size(true_size, setting):
    try:
        return true_size + KERNEL_SETTINGS[setting]
    except KeyError:
        raise InvalidArgumentError(f"unknown kernel-size setting {setting!r}") from None


def run_trial(x, k_true, params, nb=None, noise_sigma=0.005, seed=0, setting="true",
              image_id="", kernel_id="", oracle=False):
    """Blur ``x`` with ``k_true``, run blind estimation and score the kernel.

    With ``oracle=True`` the estimation is skipped and the true kernel is
    scored against itself, which must give a ratio of exactly 1.
    """
    from .pipeline import estimate_kernel

    y = synth_blur(x, k_true, noise_sigma, seed)
    size = setting_size(k_true.shape[0], setting)
    t0 = time.perf_counter()
    if oracle:
        k_est = k_true
    else:
        k_est, _, _ = estimate_kernel(y, params.replace(kernel_size=size))
    elapsed = time.perf_counter() - t0
    return error_ratio(x, y, k_est, k_true, nb, image_id, kernel_id, setting,
                       seconds=elapsed, variant=params.variant)


def _trial_job(args):
    return run_trial(*args[:-3], image_id=args[-3], kernel_id=args[-2], oracle=args[-1])


def run_trials(images, kernels, params, nb=None, settings=("true",), noise_sigma=0.005,
               seed=0, jobs=1, oracle=False):
    """Run every (image, kernel, setting) combination; rows sorted by id.

    Trials are independent, so ``jobs > 1`` fans them out over processes.
    The noise seed of each trial depends only on its ids, never on ``jobs``.
    """
    tasks = []
    for iid in sorted(images):
        for j, kid in enumerate(sorted(kernels)):
            for setting in settings:
                trial_seed = seed + 1000 * j + sum(map(ord, iid))
                tasks.append((images[iid], kernels[kid], params, nb, noise_sigma,
                              trial_seed, setting, iid, kid, oracle))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_trial_job, tasks))
    else:
        records = [_trial_job(t) for t in tasks]
    order = {s: i for i, s in enumerate(KERNEL_SETTINGS)}
    return sorted(records, key=lambda r: (r.image, r.kernel, r.variant, order.get(r.setting, 9)))


def summarize(records):
    ratios = np.array([r.ratio for r in records])
    return {"mean_ratio": float(ratios.mean()),
            "successes": int(np.sum(ratios < SUCCESS_RATIO)),
            "count": int(ratios.size)}

