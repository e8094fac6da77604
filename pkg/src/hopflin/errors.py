"""Exception hierarchy. The CLI maps these onto exit codes."""


class HopfError(Exception):
    """Base class for all errors raised by hopflin."""


class InvalidInputError(HopfError, ValueError):
    """Malformed input data (files, schemas, arguments)."""


class BasisMismatchError(InvalidInputError):
    """Two jets live on different monomial bases."""


class SingularLinearPartError(HopfError, ValueError):
    """The linear part of a map at the origin is not invertible."""


class NotAContractionError(HopfError):
    """The map fails a contraction check."""


class IllConditionedError(HopfError):
    """A numerical step is too ill-conditioned to be trusted."""


class NotDiagonalizableError(HopfError, ValueError):
    """A linear contraction has a nontrivial Jordan block."""


class VerificationError(HopfError):
    """A verification step produced a failing verdict."""
