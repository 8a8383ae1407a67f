"""Alternating kernel estimation and the coarse-to-fine driver."""

import dataclasses
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import imaging
from .errors import InvalidArgumentError, NumericalDivergenceError
from .nonblind import NonBlindParams, deconvolve
from .osal import (InnerParams, image_energy, image_energy_terms,
                   kernel_energy_terms, solve_image, solve_kernel)

log = logging.getLogger(__name__)

VARIANTS = ("R1", "R2", "R3")


@dataclass(frozen=True)
class SolverParams:
    """Every scalar of the blind stage. Defaults are the published settings.

    ``variant`` selects the regularizer: ``"R1"`` is the full l0 + l2 prior
    on image gradients and kernel, ``"R2"`` drops the image l2 term, ``"R3"``
    additionally drops the kernel l0 term.
    """

    lam: float = 100.0
    alpha_x: float = 0.25
    beta_x: float = 5.0
    alpha_k: float = 0.25
    beta_k: float = 5.0
    gamma_x: float = 100.0
    gamma_k: float = 1e6
    c_x: float = 2.0 / 3.0
    c_k: float = 4.0 / 5.0
    outer_iters: int = 10
    inner_iters_x: int = 10
    inner_iters_k: int = 10
    scales: int = 4
    kernel_size: int = 27
    variant: str = "R1"
    pyramid_factor: float = 2.0

    def __post_init__(self):
        if self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise InvalidArgumentError(
                f"kernel_size must be odd, got {self.kernel_size}")
        if self.variant not in VARIANTS:
            raise InvalidArgumentError(f"variant must be one of {VARIANTS}")
        for name in ("c_x", "c_k"):
            if not 0 < getattr(self, name) <= 1:
                raise InvalidArgumentError(f"{name} must lie in (0, 1]")
        for name in ("outer_iters", "inner_iters_x", "inner_iters_k", "scales"):
            if getattr(self, name) < 1:
                raise InvalidArgumentError(f"{name} must be >= 1")
        if self.pyramid_factor <= 1:
            raise InvalidArgumentError("pyramid_factor must be > 1")

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def image_params(self, i):
        beta = 0.0 if self.variant in ("R2", "R3") else self.beta_x
        return InnerParams(alpha=self.alpha_x, beta=beta, lam=self.lam,
                           gamma=self.gamma_x, continuation=self.c_x ** i,
                           iters=self.inner_iters_x)

    def kernel_params(self, i):
        alpha = 0.0 if self.variant == "R3" else self.alpha_k
        return InnerParams(alpha=alpha, beta=self.beta_k, lam=self.lam,
                           gamma=self.gamma_k, continuation=self.c_k ** i,
                           iters=self.inner_iters_k)


def load_params(source=None, base=None, **overrides):
    """Build :class:`SolverParams` from defaults, a JSON file/dict and keyword overrides.

    Precedence is ``overrides`` > ``source`` > ``base`` (defaults when omitted).
    Unknown keys raise :class:`InvalidArgumentError`.
    """
    params = base or SolverParams()
    merged = {}
    if source is not None:
        if isinstance(source, (str, Path)):
            try:
                merged.update(json.loads(Path(source).read_text()))
            except json.JSONDecodeError as exc:
                raise InvalidArgumentError(f"bad params file {source}: {exc}") from exc
        else:
            merged.update(source)
    merged.update({k: v for k, v in overrides.items() if v is not None})
    known = {f.name for f in dataclasses.fields(SolverParams)}
    unknown = set(merged) - known
    if unknown:
        raise InvalidArgumentError(f"unknown parameter(s): {', '.join(sorted(unknown))}")
    return params.replace(**merged)


@dataclass
class ScaleTrace:
    """Energies for one pyramid level.

    ``image_terms[i]`` / ``kernel_terms[i]`` hold (misfit, l0, l2) after outer
    iteration ``i``; ``image_inner`` / ``kernel_inner`` hold the per-inner
    energies of each outer iteration.
    """

    scale: int
    shape: tuple
    kernel_size: int
    image_terms: list = field(default_factory=list)
    kernel_terms: list = field(default_factory=list)
    image_energy: list = field(default_factory=list)
    kernel_energy: list = field(default_factory=list)
    image_inner: list = field(default_factory=list)
    kernel_inner: list = field(default_factory=list)
    kernels: list = field(default_factory=list)

    def image_energy_at(self, i, params, continuation):
        """Image energy of outer iteration ``i`` under a fixed continuation multiplier."""
        return image_energy(self.image_terms[i], params.image_params(0), continuation)

    def to_dict(self):
        return {
            "scale": self.scale,
            "shape": list(self.shape),
            "kernel_size": self.kernel_size,
            "image_energy": list(map(float, self.image_energy)),
            "kernel_energy": list(map(float, self.kernel_energy)),
            "image_inner": [list(map(float, e)) for e in self.image_inner],
            "kernel_inner": [list(map(float, e)) for e in self.kernel_inner],
        }


@dataclass(frozen=True)
class DeblurResult:
    kernel: np.ndarray
    intermediate: np.ndarray
    restored: Optional[np.ndarray]
    traces: tuple
    elapsed: float

    def to_dict(self):
        return {"elapsed_seconds": self.elapsed,
                "kernel_size": int(self.kernel.shape[0]),
                "scales": [t.to_dict() for t in self.traces]}


def estimate_scale(y_s, k0, params, x0=None, kernel_size=None, scale=0):
    """Run the outer alternating loop on one pyramid level.

    Args:
        y_s: blurred image of this level (already edge-tapered).
        k0: initial kernel; its size is the kernel size of the level unless
            ``kernel_size`` is given.
        params: :class:`SolverParams`.
        x0: initial sharp image, zeros when omitted.
        kernel_size: kernel size for this level.
        scale: level index, only used for traces and error context.

    Returns:
        ``(x, k, trace)``.
    """
    y_s = imaging.as_image(y_s)
    k = imaging.as_kernel(k0)
    size = k.shape[0] if kernel_size is None else kernel_size
    if k.shape[0] < size:
        pad = (size - k.shape[0]) // 2
        k = np.pad(k, pad)
    x = np.zeros_like(y_s) if x0 is None else imaging.as_image(x0).copy()
    trace = ScaleTrace(scale=scale, shape=y_s.shape, kernel_size=size)
    for i in range(params.outer_iters):
        ip, kp = params.image_params(i), params.kernel_params(i)
        try:
            # split variables and multipliers restart from zero every outer iteration
            x, e_img, st = solve_image(y_s, k, ip, x)
            k, e_ker, _ = solve_kernel(x, y_s, size, kp, k)
        except NumericalDivergenceError as exc:
            exc.scale, exc.outer = scale, i
            raise
        k_spec = imaging.transfer_function(k, y_s.shape)
        trace.image_terms.append(image_energy_terms(x, y_s, k_spec, st.w_h, st.w_v))
        trace.image_energy.append(image_energy(trace.image_terms[-1], ip))
        xh = np.fft.fft2(imaging.gradient(x, "h"))
        xv = np.fft.fft2(imaging.gradient(x, "v"))
        terms = kernel_energy_terms(imaging.pad_kernel(k, y_s.shape), xh, xv,
                                    imaging.gradient(y_s, "h"), imaging.gradient(y_s, "v"))
        trace.kernel_terms.append(terms)
        trace.kernel_energy.append(image_energy(terms, kp))
        trace.image_inner.append(e_img)
        trace.kernel_inner.append(e_ker)
        trace.kernels.append(k)
    return x, k, trace


def nearest_odd(v):
    return int(2 * np.floor((v - 1) / 2 + 0.5) + 1)


def level_kernel_sizes(kernel_size, scales, factor=2.0):
    """Kernel size per level, coarsest first."""
    return [max(3, nearest_odd(kernel_size / factor ** (scales - 1 - s)))
            if s < scales - 1 else kernel_size
            for s in range(scales)]


def build_pyramid(y, scales, factor=2.0):
    """Blurred images per level, coarsest first; each level resamples the previous one."""
    levels = [imaging.as_image(y)]
    for _ in range(scales - 1):
        levels.append(imaging.downsample(levels[-1], factor))
    return levels[::-1]


def estimate_kernel(y, params):
    """Coarse-to-fine kernel estimation on a gray image.

    Returns ``(kernel, intermediate, traces)``.
    """
    y = imaging.as_image(y)
    if params.kernel_size < 3:
        raise InvalidArgumentError("kernel_size must be >= 3")
    pyramid = build_pyramid(y, params.scales, params.pyramid_factor)
    sizes = level_kernel_sizes(params.kernel_size, params.scales, params.pyramid_factor)
    if sizes[-1] > min(y.shape) or any(sz > min(lv.shape) for sz, lv in zip(sizes, pyramid)):
        raise InvalidArgumentError("kernel does not fit the image at some pyramid level")
    k = imaging.dirac(sizes[0])
    x0 = None
    traces = []
    x = None
    for s, (y_s, size) in enumerate(zip(pyramid, sizes)):
        if s > 0:
            k = imaging.upsample_kernel(k, size)
            x0 = y_s
        y_t = imaging.edge_taper(y_s, k)
        t0 = time.perf_counter()
        x, k, trace = estimate_scale(y_t, k, params, x0=x0, kernel_size=size, scale=s)
        log.info("scale %d/%d %dx%d kernel %d: %.2fs", s + 1, params.scales,
                 y_s.shape[0], y_s.shape[1], size, time.perf_counter() - t0)
        traces.append(trace)
    return k, x, tuple(traces)


def deblur_blind(y, params=None, nonblind=None, restore=True):
    """Estimate the kernel of ``y`` and restore it.

    ``y`` may be gray ``(H, W)`` or color ``(H, W, 3)`` with samples in [0, 1];
    the kernel is estimated on the luma and shared by all channels.
    """
    params = SolverParams() if params is None else params
    nonblind = NonBlindParams() if nonblind is None else nonblind
    t0 = time.perf_counter()
    y = np.asarray(y, dtype=np.float64)
    gray = imaging.to_gray(y)
    k, x, traces = estimate_kernel(gray, params)
    restored = None
    if restore:
        taper = imaging.edge_taper
        if y.ndim == 3:
            y_t = np.stack([taper(y[..., c], k) for c in range(y.shape[2])], axis=2)
        else:
            y_t = taper(y, k)
        restored = deconvolve(y_t, k, nonblind)
    return DeblurResult(kernel=k, intermediate=x, restored=restored, traces=traces,
                        elapsed=time.perf_counter() - t0)
