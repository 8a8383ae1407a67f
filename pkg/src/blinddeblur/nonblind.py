"""Non-blind deconvolution under a hyper-Laplacian gradient prior.

Minimizes ``(f/2) ||k * x - y||^2 + sum |grad x|^p`` by half-quadratic
splitting: the gradients are replaced by auxiliary ``w`` tied to ``grad x``
with a penalty that grows geometrically. Each round solves the per-pixel
``l_p`` prox in closed form and then the quadratic x-problem with FFTs.
"""

from dataclasses import dataclass

import numpy as np

from . import imaging
from .errors import InvalidArgumentError, NumericalDivergenceError
from .osal import project_simplex

SUPPORTED_EXPONENTS = (0.5, 2.0 / 3.0, 2.0)


@dataclass(frozen=True)
class NonBlindParams:
    fidelity_weight: float = 2000.0
    prior_exponent: float = 2.0 / 3.0
    hq_iters: int = 4
    penalty_init: float = 1.0
    penalty_rate: float = 4.0

    def __post_init__(self):
        if self.fidelity_weight <= 0:
            raise InvalidArgumentError("fidelity_weight must be positive")
        if not any(np.isclose(self.prior_exponent, p) for p in SUPPORTED_EXPONENTS):
            raise InvalidArgumentError(
                f"prior_exponent must be one of 1/2, 2/3, 2; got {self.prior_exponent}")
        if self.hq_iters < 1:
            raise InvalidArgumentError("hq_iters must be >= 1")
        if self.penalty_init <= 0 or self.penalty_rate <= 1:
            raise InvalidArgumentError("penalties must be positive and strictly increasing")

    @property
    def penalties(self):
        return self.penalty_init * self.penalty_rate ** np.arange(self.hq_iters)


def _cubic_largest_root(p, q):
    """Largest real root of ``t^3 + p t + q = 0`` (elementwise, ``p < 0`` where used)."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    disc = (q / 2) ** 2 + (p / 3) ** 3
    out = np.empty(np.broadcast(p, q).shape)
    p, q, disc = np.broadcast_arrays(p, q, disc)
    one = disc > 0
    sq = np.sqrt(disc[one])
    out[one] = np.cbrt(-q[one] / 2 + sq) + np.cbrt(-q[one] / 2 - sq)
    three = ~one
    pp, qq = p[three], q[three]
    m = 2.0 * np.sqrt(-pp / 3)
    arg = np.clip(3 * qq / (pp * m), -1.0, 1.0)
    out[three] = m * np.cos(np.arccos(arg) / 3)
    return out


def _stationary_half(a, tau):
    # w - a + (tau/2) w^(-1/2) = 0, u = sqrt(w): u^3 - a u + tau/2 = 0
    p, q = -a, np.full_like(a, tau / 2)
    disc = (q / 2) ** 2 + (p / 3) ** 3
    u = np.zeros_like(a)
    ok = (disc <= 0) & (a > 0)
    u[ok] = _cubic_largest_root(p[ok], q[ok])
    return u ** 2


def _stationary_two_thirds(a, tau):
    # w - a + (2 tau / 3) w^(-1/3) = 0, u = w^(1/3): u^4 - a u + r = 0, r = 2 tau / 3.
    # Ferrari: (u^2 + s)^2 = 2 s (u + a / (4 s))^2 where s^3 - r s - a^2 / 8 = 0.
    r = 2.0 * tau / 3.0
    s = _cubic_largest_root(-r * np.ones_like(a), -(a ** 2) / 8)
    w = np.zeros_like(a)
    pos = s > 0
    rs = np.sqrt(2 * s[pos])
    inner = 2 * a[pos] / rs - 2 * s[pos]
    u = np.where(inner >= 0, (rs + np.sqrt(np.maximum(inner, 0))) / 2, 0.0)
    w[pos] = u ** 3
    return w


def lp_prox(v, weight, penalty, p):
    """Minimizer of ``(penalty/2) (w - v)^2 + weight |w|^p`` for each entry of ``v``.

    Closed form for ``p`` in {1/2, 2/3} via the real roots of the stationary
    polynomial, compared against ``w = 0``; linear shrinkage for ``p = 2``.
    """
    v = np.asarray(v, dtype=np.float64)
    if penalty <= 0 or weight < 0:
        raise InvalidArgumentError("penalty must be positive and weight non-negative")
    tau = weight / penalty
    if np.isclose(p, 2.0):
        return v / (1.0 + 2.0 * tau)
    a = np.abs(v)
    if np.isclose(p, 0.5):
        w = _stationary_half(a, tau)
    elif np.isclose(p, 2.0 / 3.0):
        w = _stationary_two_thirds(a, tau)
    else:
        raise InvalidArgumentError(f"unsupported exponent {p}")
    w = np.clip(w, 0.0, a)
    keep = 0.5 * (w - a) ** 2 + tau * w ** p < 0.5 * a ** 2
    return np.where(keep, np.sign(v) * w, 0.0)


def _deconvolve_channel(y, ker, params, violations=None):
    K = imaging.transfer_function(ker, y.shape)
    Dh = imaging.transfer_function("h", y.shape)
    Dv = imaging.transfer_function("v", y.shape)
    lam = params.fidelity_weight
    num_data = lam * np.conj(K) * np.fft.fft2(y)
    KtK = lam * np.abs(K) ** 2
    DtD = np.abs(Dh) ** 2 + np.abs(Dv) ** 2
    x = y.copy()
    for it, beta in enumerate(params.penalties):
        w_h = lp_prox(imaging.gradient(x, "h"), 1.0, beta, params.prior_exponent)
        w_v = lp_prox(imaging.gradient(x, "v"), 1.0, beta, params.prior_exponent)
        rhs = num_data + beta * (np.conj(Dh) * np.fft.fft2(w_h)
                                 + np.conj(Dv) * np.fft.fft2(w_v))
        x = np.real(np.fft.ifft2(rhs / (KtK + beta * DtD)))
        if not np.all(np.isfinite(x)):
            raise NumericalDivergenceError("non-finite values in non-blind deconvolution",
                                           iteration=it)
        if violations is not None:
            violations.append(float(np.sqrt(np.sum((w_h - imaging.gradient(x, "h")) ** 2)
                                             + np.sum((w_v - imaging.gradient(x, "v")) ** 2))))
    return x


def deconvolve(y, ker, params=None, clamp=True, violations=None):
    """Restore ``y`` given a kernel on the simplex.

    ``y`` may be ``(H, W)`` or ``(H, W, C)``; channels are processed
    independently with the same kernel. The output is clamped to [0, 1]
    unless ``clamp`` is false. If ``violations`` is a list, the split
    residual ``||w - grad x||`` after each round is appended to it (gray
    input only).
    """
    params = NonBlindParams() if params is None else params
    ker = project_simplex(imaging.as_kernel(ker))
    y = np.asarray(y, dtype=np.float64)
    if y.ndim == 3:
        out = np.stack([_deconvolve_channel(imaging.as_image(y[..., c]), ker, params)
                        for c in range(y.shape[2])], axis=2)
    else:
        out = _deconvolve_channel(imaging.as_image(y), ker, params, violations)
    return np.clip(out, 0.0, 1.0) if clamp else out
