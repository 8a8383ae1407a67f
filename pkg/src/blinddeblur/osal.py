"""Operator-splitting / augmented-Lagrangian solvers for the two subproblems.

Image step::

    min_x  lam * ||k * x - y||^2 + c * (alpha * ||grad x||_0 + beta * ||grad x||^2)

Kernel step (gradient domain, d in {h, v})::

    min_k  lam * sum_d ||grad_d x * k - grad_d y||^2 + c * (alpha * ||k||_0 + beta * ||k||^2)

``c`` is the continuation multiplier of the current outer iteration. Both are
split with an auxiliary variable for the l0 term (``w = grad x`` resp.
``g = k``), which is updated by hard thresholding, while the primal update is
a single division in the Fourier domain.

Continuation is applied by dividing the whole functional by ``c``: the data
weight becomes ``lam / c`` and ``alpha``, ``beta`` and the penalty ``gamma``
are used unscaled. The hard threshold is therefore ``sqrt(2 alpha / gamma)``
throughout.
"""

from dataclasses import dataclass, field

import numpy as np

from . import imaging
from .errors import DegenerateKernelError, InvalidArgumentError, NumericalDivergenceError


@dataclass(frozen=True)
class InnerParams:
    """Weights for one call of :func:`solve_image` or :func:`solve_kernel`.

    ``alpha`` and ``beta`` may be zero (the degenerate regularizer variants);
    ``lam``, ``gamma`` must be positive and ``continuation`` in (0, 1].
    """

    alpha: float
    beta: float
    lam: float
    gamma: float
    continuation: float = 1.0
    iters: int = 10

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise InvalidArgumentError("alpha and beta must be non-negative")
        if self.lam <= 0 or self.gamma <= 0:
            raise InvalidArgumentError("lam and gamma must be positive")
        if not 0 < self.continuation <= 1:
            raise InvalidArgumentError(
                f"continuation must lie in (0, 1], got {self.continuation}")
        if self.iters < 1:
            raise InvalidArgumentError("iters must be >= 1")

    @property
    def fidelity(self):
        """Data weight after dividing the functional by the continuation factor."""
        return self.lam / self.continuation

    @property
    def threshold(self):
        return np.sqrt(2.0 * self.alpha / self.gamma)


@dataclass
class SplitState:
    """Auxiliary variables and scaled-free multipliers of the two OSAL loops."""

    w_h: np.ndarray
    w_v: np.ndarray
    mu_h: np.ndarray
    mu_v: np.ndarray
    g: np.ndarray = field(default=None)
    mu_k: np.ndarray = field(default=None)

    @classmethod
    def zeros(cls, image_shape, kernel_grid_shape=None):
        kshape = image_shape if kernel_grid_shape is None else kernel_grid_shape
        z = lambda s: np.zeros(s)  # noqa: E731
        return cls(z(image_shape), z(image_shape), z(image_shape), z(image_shape),
                   z(kshape), z(kshape))


def hard_threshold(value, threshold):
    """l0 proximal map: keep ``value`` where ``|value| >= threshold``, else 0.

    Works elementwise on arrays; ties are kept.
    """
    if np.any(np.asarray(threshold) < 0):
        raise InvalidArgumentError("threshold must be non-negative")
    value = np.asarray(value, dtype=np.float64)
    out = np.where(np.abs(value) >= threshold, value, 0.0)
    return out if out.ndim else float(out)


def project_simplex(raw):
    """Project a kernel onto {k >= 0, sum k = 1} by clipping then normalizing."""
    raw = np.asarray(raw, dtype=np.float64)
    if raw.ndim != 2 or raw.shape[0] != raw.shape[1]:
        raise InvalidArgumentError(f"kernel must be square, got shape {raw.shape}")
    if not np.all(np.isfinite(raw)):
        raise NumericalDivergenceError("kernel contains non-finite samples")
    k = np.clip(raw, 0.0, None)
    total = k.sum()
    if not total > 0:
        raise DegenerateKernelError("kernel has no positive mass to normalize")
    k = k / total
    # one more pass absorbs the rounding residue of the division
    return k / k.sum()


def _check_finite(arrays, iteration, what):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise NumericalDivergenceError(
                f"non-finite values in {what} solver", iteration=iteration)


# ---------------------------------------------------------------- image step


def image_energy_terms(x, y, ker_spec, w_h=None, w_v=None):
    """Data misfit, l0 count and squared gradient norm of an image estimate.

    The linear solve never yields exact zeros in ``grad x``, so when the split
    variables are given the l0 count is taken from them instead.
    """
    gh, gv = imaging.gradient(x, "h"), imaging.gradient(x, "v")
    resid = imaging.apply_spectrum(x, ker_spec) - y
    if w_h is None:
        w_h, w_v = gh, gv
    l0 = np.count_nonzero(w_h) + np.count_nonzero(w_v)
    return float(np.sum(resid ** 2)), float(l0), float(np.sum(gh ** 2) + np.sum(gv ** 2))


def image_energy(terms, params, continuation=None):
    """Combine :func:`image_energy_terms` with the weights of ``params``.

    ``continuation`` overrides ``params.continuation`` so energies from
    different outer iterations can be compared on one scale.
    """
    c = params.continuation if continuation is None else continuation
    fid, l0, l2 = terms
    return params.lam * fid + c * (params.alpha * l0 + params.beta * l2)


class _ImageSystem:
    """Fourier-domain factors of the x-update normal equations."""

    def __init__(self, y, ker, params):
        self.params = params
        self.K = imaging.transfer_function(ker, y.shape)
        self.Dh = imaging.transfer_function("h", y.shape)
        self.Dv = imaging.transfer_function("v", y.shape)
        fid = params.fidelity
        self.num_data = fid * np.conj(self.K) * np.fft.fft2(y)
        self.denom = (fid * np.abs(self.K) ** 2
                      + (params.beta + params.gamma / 2)
                      * (np.abs(self.Dh) ** 2 + np.abs(self.Dv) ** 2))

    def solve(self, w_h, w_v, mu_h, mu_v):
        g = self.params.gamma
        rhs = self.num_data + (g / 2) * (
            np.conj(self.Dh) * np.fft.fft2(w_h - mu_h / g)
            + np.conj(self.Dv) * np.fft.fft2(w_v - mu_v / g))
        return np.real(np.fft.ifft2(rhs / self.denom))


def image_update(y, ker, params, w_h, w_v, mu_h, mu_v):
    """One x-update: solve the quadratic subproblem for fixed splits and multipliers.

    Solves ``(f K^T K + (beta + gamma/2) D^T D) x = f K^T y
    + gamma/2 D^T (w - mu/gamma)`` with ``f = lam / continuation``.
    """
    return _ImageSystem(imaging.as_image(y), ker, params).solve(w_h, w_v, mu_h, mu_v)


def solve_image(y, ker, params, init_x, state=None):
    """Estimate the sharp image for a fixed kernel.

    Args:
        y: observed (blurred) image.
        ker: current kernel, assumed to lie on the simplex.
        params: weights and inner iteration count.
        init_x: starting image, same shape as ``y``. Each inner step solves
            for x first from the incoming split, so with a zero ``state`` the
            result does not depend on ``init_x``.
        state: split variables / multipliers to start from. Zeros if omitted.

    Returns:
        ``(x, energies, state)`` where ``energies[l]`` is the image energy
        (with the continuation of ``params``) after inner iteration ``l``.

    Raises:
        NumericalDivergenceError: if any iterate becomes non-finite.
    """
    y = imaging.as_image(y)
    x = imaging.as_image(init_x).copy()
    if x.shape != y.shape:
        raise InvalidArgumentError(f"init_x shape {x.shape} != y shape {y.shape}")
    if state is None:
        state = SplitState.zeros(y.shape)
    system = _ImageSystem(y, ker, params)
    gamma, thr = params.gamma, params.threshold
    w_h, w_v, mu_h, mu_v = state.w_h, state.w_v, state.mu_h, state.mu_v
    energies = np.empty(params.iters)
    for it in range(params.iters):
        # the quadratic solve reads the split carried over from the previous step
        x = system.solve(w_h, w_v, mu_h, mu_v)
        gh, gv = imaging.gradient(x, "h"), imaging.gradient(x, "v")
        w_h = hard_threshold(gh + mu_h / gamma, thr)
        w_v = hard_threshold(gv + mu_v / gamma, thr)
        mu_h = mu_h + gamma * (gh - w_h)
        mu_v = mu_v + gamma * (gv - w_v)
        _check_finite((x, mu_h, mu_v), it, "image")
        energies[it] = image_energy(
            image_energy_terms(x, y, system.K, w_h, w_v), params)
    state = SplitState(w_h, w_v, mu_h, mu_v, state.g, state.mu_k)
    return x, energies, state


# --------------------------------------------------------------- kernel step


def kernel_energy_terms(k_full, xh_spec, xv_spec, y_h, y_v, g=None):
    """Gradient-domain misfit, l0 count and squared norm of a full-grid kernel."""
    K = np.fft.fft2(k_full)
    rh = np.real(np.fft.ifft2(xh_spec * K)) - y_h
    rv = np.real(np.fft.ifft2(xv_spec * K)) - y_v
    l0 = np.count_nonzero(k_full if g is None else g)
    return float(np.sum(rh ** 2) + np.sum(rv ** 2)), float(l0), float(np.sum(k_full ** 2))


kernel_energy = image_energy


class _KernelSystem:
    def __init__(self, x, y, params):
        self.params = params
        self.y_h, self.y_v = imaging.gradient(y, "h"), imaging.gradient(y, "v")
        self.Xh = np.fft.fft2(imaging.gradient(x, "h"))
        self.Xv = np.fft.fft2(imaging.gradient(x, "v"))
        fid = params.fidelity
        self.num_data = fid * (np.conj(self.Xh) * np.fft.fft2(self.y_h)
                               + np.conj(self.Xv) * np.fft.fft2(self.y_v))
        self.denom = (fid * (np.abs(self.Xh) ** 2 + np.abs(self.Xv) ** 2)
                      + params.beta + params.gamma / 2)

    def solve(self, g, mu):
        gam = self.params.gamma
        rhs = self.num_data + (gam / 2) * np.fft.fft2(g - mu / gam)
        return np.real(np.fft.ifft2(rhs / self.denom))


def kernel_update(x, y, params, g, mu):
    """One full-grid k-update for fixed ``g`` and multiplier ``mu``.

    Solves ``(f sum_d X_d^T X_d + (beta + gamma/2) I) k = f sum_d X_d^T y_d
    + gamma/2 (g - mu/gamma)`` where ``X_d`` convolves with ``grad_d x``.
    The result has its origin at ``[0, 0]``.
    """
    return _KernelSystem(imaging.as_image(x), imaging.as_image(y), params).solve(g, mu)


def solve_kernel(x, y, size, params, init_k, state=None):
    """Estimate a ``size`` x ``size`` kernel from a sharp/blurred image pair.

    The iteration runs on the full image grid; the central window is cropped
    afterwards and projected onto the simplex.

    Returns:
        ``(kernel, energies, state)``.
    """
    x, y = imaging.as_image(x), imaging.as_image(y)
    if x.shape != y.shape:
        raise InvalidArgumentError(f"x shape {x.shape} != y shape {y.shape}")
    if size % 2 == 0 or size < 1:
        raise InvalidArgumentError(f"kernel size must be odd, got {size}")
    if size > min(x.shape):
        raise InvalidArgumentError(f"kernel size {size} exceeds image {x.shape}")
    init_k = imaging.as_kernel(init_k)
    if init_k.shape[0] > size:
        raise InvalidArgumentError("init_k larger than requested size")
    if state is None or state.g is None:
        state = SplitState.zeros(x.shape)
    system = _KernelSystem(x, y, params)
    gamma, thr = params.gamma, params.threshold
    k = imaging.pad_kernel(init_k, x.shape)
    g, mu = state.g, state.mu_k
    energies = np.empty(params.iters)
    for it in range(params.iters):
        g = hard_threshold(k + mu / gamma, thr)
        k = system.solve(g, mu)
        mu = mu + gamma * (k - g)
        _check_finite((k, mu), it, "kernel")
        energies[it] = kernel_energy(
            kernel_energy_terms(k, system.Xh, system.Xv, system.y_h, system.y_v, g),
            params)
    kernel = project_simplex(imaging.crop_kernel(k, size))
    state = SplitState(state.w_h, state.w_v, state.mu_h, state.mu_v, g, mu)
    return kernel, energies, state
