"""Error kinds raised across the toolkit.

The CLI maps them onto exit codes: input problems exit with 2, everything
else that escapes a command is logged and re-raised.
"""
from typing import Iterable, List


class CanningsError(Exception):
    """Base class for all toolkit errors."""


class InvalidArgumentError(CanningsError, ValueError):
    """An argument is malformed or outside its admissible range."""


class EnumerationCapError(InvalidArgumentError):
    """Exact enumeration was requested beyond the configured cap."""


class DomainViolationError(CanningsError):
    """A quantity is requested outside the domain where it is defined,
    e.g. more ancestral lineages of a type than individuals of that type."""


class UnsupportedError(CanningsError):
    """The operation is not available for this offspring law."""


class IncompleteTableError(CanningsError):
    """A finite table lacks entries needed by a recursion or a generator."""

    def __init__(self, message: str, missing: Iterable[str] = ()):
        self.missing: List[str] = list(missing)
        if self.missing:
            shown = ', '.join(self.missing[:10])
            more = f" (+{len(self.missing) - 10} more)" if len(self.missing) > 10 else ""
            message = f"{message}: missing {shown}{more}"
        super().__init__(message)
