"""Exception types shared across the package."""


class CrdistillError(Exception):
    """Base class for all package errors."""


class NonHermitianInput(CrdistillError):
    pass


class NegativeEigenvalue(CrdistillError):
    pass


class DimensionMismatch(CrdistillError):
    pass


class SizeMismatch(CrdistillError):
    pass


class InvalidState(CrdistillError):
    pass


class InvalidPovm(CrdistillError):
    pass


class UnknownName(CrdistillError):
    pass


class BadParam(CrdistillError):
    pass


class DomainError(CrdistillError):
    pass


class BadPartition(CrdistillError):
    pass


class NotPure(CrdistillError):
    pass


class NotPureEnsemble(CrdistillError):
    pass


class EnvelopeExceeded(CrdistillError):
    pass


class LengthMismatch(CrdistillError):
    pass


class ParseError(CrdistillError):
    pass


class ExtractionStalled(CrdistillError):
    pass
