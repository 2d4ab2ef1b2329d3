"""Exception hierarchy.

Every failure raised on purpose derives from SplitZipError so callers (and the
CLI) can distinguish classified errors from genuine bugs. Container parsing
and codec decoding never let a malformed input escape as a bare IndexError or
struct.error.
"""

from __future__ import annotations

__all__ = [
    "SplitZipError",
    "ConfigError",
    "EmptyInputError",
    "CodeRangeError",
    "MalformedStreamError",
    "CorruptionError",
    "ContainerError",
    "BadMagicError",
    "UnsupportedVersionError",
    "TruncatedError",
    "LengthMismatchError",
]


class SplitZipError(Exception):
    """Base class for all classified errors."""


class ConfigError(SplitZipError):
    """Invalid or inconsistent configuration (format mismatch, bad flag combo)."""


class EmptyInputError(SplitZipError):
    """An operation that requires at least one element received none."""


class CodeRangeError(SplitZipError):
    """A symbol handed to the bit packer does not fit in the code width."""


class MalformedStreamError(SplitZipError):
    """A packed stream's length is inconsistent with the declared element count."""


class CorruptionError(SplitZipError):
    """Decoded streams are internally inconsistent.

    ``chunk`` carries the index of the offending escape chunk when the
    inconsistency is chunk-local, else None.
    """

    def __init__(self, message: str, chunk: int | None = None):
        if chunk is not None:
            message = f"{message} (chunk {chunk})"
        super().__init__(message)
        self.chunk = chunk


class ContainerError(SplitZipError):
    """Base class for file-level parse failures."""


class BadMagicError(ContainerError):
    """File does not start with the expected magic bytes."""


class UnsupportedVersionError(ContainerError):
    """File declares a version this reader does not understand."""


class TruncatedError(ContainerError):
    """File ends before a declared section is complete.

    ``section`` names the section that could not be read in full.
    """

    def __init__(self, message: str, section: str):
        super().__init__(f"{message} (section: {section})")
        self.section = section


class LengthMismatchError(ContainerError):
    """File length disagrees with the section lengths computed from the header."""
