"""Exception hierarchy shared by every module."""


class CoordError(Exception):
    """Base class for all errors raised by coordcert."""


class ValidationError(CoordError, ValueError):
    """Input failed a precondition (bad arity, malformed file, bad parameter)."""


class InvalidArityError(ValidationError):
    pass


class DomainError(ValidationError):
    """Input lies outside the set an operation is defined on."""


class SupportViolationError(ValidationError):
    """A witness touches a moment-matrix entry that is not known."""


class IncompleteBundleError(ValidationError):
    pass


class OutOfRegionError(DomainError):
    """A squared lower bound is used where the bound itself is negative."""


class UnsupportedVariantError(ValidationError):
    pass


class InvariantError(CoordError, RuntimeError):
    """An internal consistency check failed; indicates a bug or a falsified claim."""
