"""Exception types shared across the package.

Plain ``ValueError`` is used for ordinary bad arguments; the classes here
exist where callers need to tell failure modes apart (file corruption vs.
configuration vs. instance size).
"""


class EmptyInputError(ValueError):
    """An operation that needs at least one element received none."""


class FormatError(ValueError):
    """A binary or serialized artifact is malformed.

    The message names the file offset or record where parsing failed.
    """


class ConfigError(ValueError):
    """Configuration is incomplete or inconsistent (e.g. missing parameter id)."""


class ValidationError(ValueError):
    """Cross-file consistency check failed (e.g. prediction/manifest id mismatch)."""


class CapacityError(RuntimeError):
    """An exact/exhaustive routine was asked to handle an instance above its cap."""
