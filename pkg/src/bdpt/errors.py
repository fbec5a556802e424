"""Exception types shared across the package."""


class BdptError(Exception):
    """Base class for every error raised by this package."""


class DomainError(BdptError, ValueError):
    """An argument lies outside the operation's documented domain."""


class SizeCapError(BdptError, RuntimeError):
    """An exhaustive enumeration would exceed its configured point cap."""


class PreconditionError(BdptError, ValueError):
    """A documented precondition of the operation does not hold."""


class UnsupportedFamilyError(BdptError, ValueError):
    """The bounding family lies outside the class this operation supports."""
