"""Exception hierarchy shared by all modules."""


class MarylandError(Exception):
    """Base class for every error raised by this package."""


class RationalInput(MarylandError, ValueError):
    """The frequency has a terminating continued fraction."""


class PrecisionExhausted(MarylandError, ValueError):
    """A decimal frequency cannot certify the requested number of terms."""


class TargetOutOfRange(MarylandError, ValueError):
    """An IDS target outside the open interval (0, 1)."""


class DegeneratePhase(MarylandError, ValueError):
    """A phase on the singular lattice 1/2 + alpha*Z + Z, or an exact-zero IDS target."""


class SingularityHit(MarylandError, ArithmeticError):
    """An orbit point landed within the guard of a pole of tan(pi*x)."""

    def __init__(self, index, theta=None, message=None):
        self.index = index
        self.theta = theta
        if message is None:
            message = f"orbit index {index} hits the tangent singularity"
            if theta is not None:
                message += f" (phase {theta!r})"
        super().__init__(message)


class SmallDivisorBreakdown(MarylandError, ArithmeticError):
    """A cohomological coefficient exceeds the target exponential envelope."""

    def __init__(self, k, value=None, bound=None):
        self.k = k
        self.value = value
        self.bound = bound
        msg = f"small divisor breakdown at Fourier mode k={k}"
        if value is not None:
            msg += f": |psi_k|={value:.3e} > {bound:.3e}"
        super().__init__(msg)


class IllConditionedSolve(MarylandError, ArithmeticError):
    """The tridiagonal elimination grew beyond the configured bound."""
