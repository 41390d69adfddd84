"""Exception hierarchy shared across the package."""

from __future__ import annotations


class ResCoError(Exception):
    """Base class for every error raised by this package."""


class FormatError(ResCoError, ValueError):
    """A vector file, corpus file or JSON artifact does not follow its format."""

    def __init__(self, message: str, *, line: int | None = None, position: int | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if position is not None:
            where.append(f"record {position}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.line = line
        self.position = position


class EmptyStoreError(ResCoError, LookupError):
    """Lookup attempted against a store that holds no vectors."""


class DegenerateDocumentError(ResCoError, ValueError):
    """The document is too short for the requested computation (n < 2)."""


class CorpusError(ResCoError):
    """The corpus directory is missing required files or has no usable pairs."""
