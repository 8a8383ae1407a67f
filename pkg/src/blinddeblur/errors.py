"""Exception types raised by the deblurring routines."""


class DeblurError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgumentError(DeblurError, ValueError):
    pass


class PyramidTooDeepError(InvalidArgumentError):
    """Raised when a downsampled level would be smaller than 16 px."""


class DegenerateKernelError(DeblurError):
    """Raised when a kernel has no positive mass left to normalize."""


class NumericalDivergenceError(DeblurError, FloatingPointError):
    """Non-finite values appeared inside an iterative solver.

    The failing inner iteration is kept in ``iteration``; the pipeline fills
    in ``scale`` and ``outer`` when it re-raises.
    """

    def __init__(self, message, iteration=None, scale=None, outer=None):
        super().__init__(message)
        self.iteration = iteration
        self.scale = scale
        self.outer = outer

    def __str__(self):
        ctx = []
        if self.scale is not None:
            ctx.append(f"scale={self.scale}")
        if self.outer is not None:
            ctx.append(f"outer={self.outer}")
        if self.iteration is not None:
            ctx.append(f"inner={self.iteration}")
        base = super().__str__()
        return f"{base} ({', '.join(ctx)})" if ctx else base
