"""Exception hierarchy shared by all modules."""


class HinfError(Exception):
    """Base class for every error raised by :mod:`hinfsdp`."""


class InputError(HinfError, ValueError):
    """Malformed input: bad dimensions, bad band, violated precondition."""


class StabilityError(HinfError):
    """The system matrix ``A`` is not Schur stable (with margin)."""


class NumericalError(HinfError):
    """A linear-algebra kernel failed or produced an unusable result."""


class NotPSDError(NumericalError):
    """A matrix expected to be positive semidefinite has a negative eigenvalue."""


class DegenerateDilationError(NumericalError):
    """``I - Delta`` is numerically singular in the Cayley transform."""


class DegenerateCertificateError(NumericalError):
    """No rank-one piece carries usable input energy."""


class ExtractionError(NumericalError):
    """The extracted sinusoid does not satisfy the certificate invariants."""


class SolverError(HinfError):
    """The conic solver did not return a usable solution."""

    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution
