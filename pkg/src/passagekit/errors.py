"""Exception types shared across the package."""


class PassageKitError(Exception):
    """Base class for all passagekit errors."""


class ParseError(PassageKitError):
    """An input file is syntactically malformed."""


class ValidationError(PassageKitError):
    """Well-formed input violates a documented invariant."""
