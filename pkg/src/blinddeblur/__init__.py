"""Blind motion deblurring with l0 + l2 regularization of image gradients and kernel."""

from .errors import (DeblurError, DegenerateKernelError, InvalidArgumentError,
                     NumericalDivergenceError, PyramidTooDeepError)
from .imaging import (convolve_circular, downsample, edge_taper, gradient,
                      gradient_adjoint, to_gray, transfer_function, upsample_kernel)
from .nonblind import NonBlindParams, deconvolve, lp_prox
from .osal import InnerParams, SplitState, hard_threshold, project_simplex, solve_image, solve_kernel
from .pipeline import DeblurResult, SolverParams, deblur_blind, estimate_kernel, estimate_scale

__version__ = "0.1.0"

__all__ = [
    "DeblurError", "DegenerateKernelError", "InvalidArgumentError", "NumericalDivergenceError",
    "PyramidTooDeepError", "convolve_circular", "downsample", "edge_taper", "gradient",
    "gradient_adjoint", "to_gray", "transfer_function", "upsample_kernel", "NonBlindParams",
    "deconvolve", "lp_prox", "InnerParams", "SplitState", "hard_threshold", "project_simplex",
    "solve_image", "solve_kernel", "DeblurResult", "SolverParams", "deblur_blind",
    "estimate_kernel", "estimate_scale",
]
