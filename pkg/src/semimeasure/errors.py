"""Named domain errors.

Every failure a caller can provoke through the public API maps to one of
these; the CLI turns them into exit code 1.
"""


class DomainError(Exception):
    """Base class for all domain errors."""


class DivisionUnsupported(DomainError):
    pass


class DimensionMismatch(DomainError):
    pass


class NotInjective(DomainError):
    pass


class NotSurjective(DomainError):
    pass


class NotPositiveDefinite(DomainError):
    pass


class NotAdmissible(DomainError):
    pass


class NotNested(DomainError):
    pass


class SpaceMismatch(DomainError):
    pass


class TaggedMeasure(DomainError):
    pass


class TagMismatch(DomainError):
    pass


class MissingEntry(DomainError):
    pass


class IncoherentInput(DomainError):
    pass


class VectorOutsideLattice(DomainError):
    pass


class ParityViolation(DomainError):
    pass


class IndexOutsideWindow(DomainError):
    pass


class NotComplexWindow(DomainError):
    pass


class IncoherentOrientation(DomainError):
    pass


class NotAComplex(DomainError):
    pass


class SingularCompression(DomainError):
    """The U-block of a window automorphism is singular, so no comparison
    normalized at U exists on this window."""


class SchemaError(DomainError):
    pass
