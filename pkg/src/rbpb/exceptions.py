"""Exception hierarchy for rbpb."""


class RBPBError(Exception):
    """Base class for all rbpb errors."""


class SingularMatrix(RBPBError):
    """A pivot fell below the singularity threshold during LU factorization."""


class NoConvergence(RBPBError):
    """An iterative method hit its iteration cap without meeting its tolerance."""

    def __init__(self, message, iterations=None, last_delta=None):
        super().__init__(message)
        self.iterations = iterations
        self.last_delta = last_delta


class Rejected(RBPBError):
    """A snapshot was (numerically) linearly dependent on the current basis."""

    def __init__(self, message, remainder_norm=None):
        super().__init__(message)
        self.remainder_norm = remainder_norm


class InvalidGrid(RBPBError, ValueError):
    pass


class InvalidParameter(RBPBError, ValueError):
    pass


class Overflow(RBPBError, FloatingPointError):
    """An iterate grew past the cosh overflow guard; the iteration diverged."""


class IncompatibleSpace(RBPBError):
    """An RB space was used with a problem built on a different grid."""


class EmptyTrainingSet(RBPBError, ValueError):
    pass


class FormatVersionMismatch(RBPBError):
    """An RB space file has a wrong/unknown header or is truncated."""


class FingerprintMismatch(RBPBError):
    """An RB space file was built for a different grid than requested."""


class TooFewPoints(RBPBError, ValueError):
    pass


class SweepFailure(RBPBError):
    """A solver failed at one voltage of a capacitance sweep."""

    def __init__(self, message, V=None):
        super().__init__(message)
        self.V = V
