"""Bit-exact field splitting and packing for BF16 and FP8 element words.

Words are opaque bit patterns: NaN, Inf, and denormal encodings receive no
special treatment anywhere in this module. Every element word splits into an
exponent field and a sign-mantissa unit with the sign bit hoisted to the top
of the unit:

    BF16  (16-bit): e = (x >> 7) & 0xFF,  a = ((x >> 8) & 0x80) | (x & 0x7F)
    E5M2  ( 8-bit): e = (x >> 2) & 0x1F,  a = ((x >> 7) << 2)   | (x & 0x03)
    E4M3  ( 8-bit): e = (x >> 3) & 0x0F,  a = ((x >> 7) << 3)   | (x & 0x07)

Packing conventions (fixed so containers are byte-deterministic and
cross-implementation reproducible):

- 4-bit codes: element 2i in the low nibble, element 2i+1 in the high nibble
  of byte i.
- 3-bit codes: a dense little-endian bit stream; code i occupies stream bits
  [3i, 3i+3) and stream bit j is bit (j % 8) of byte (j // 8).
- Unused trailing bits are always written as zero.
"""

from __future__ import annotations

import enum
from typing import NamedTuple

import numpy as np

from .errors import CodeRangeError, ConfigError, MalformedStreamError

__all__ = [
    "ElementFormat",
    "SplitFields",
    "RawTensorStream",
    "split_fields",
    "reconstruct",
    "pack_codes",
    "unpack_codes",
]


class ElementFormat(enum.Enum):
    """Supported element word layouts.

    Each value carries (cli name, word bits, exponent bits, sign+mantissa bits);
    the two field widths always partition the word.
    """

    BF16 = ("bf16", 16, 8, 8)
    FP8_E5M2 = ("e5m2", 8, 5, 3)
    FP8_E4M3 = ("e4m3", 8, 4, 4)

    def __init__(self, cli_name: str, word_bits: int, exp_bits: int, sm_bits: int):
        self.cli_name = cli_name
        self.word_bits = word_bits
        self.exp_bits = exp_bits
        self.sm_bits = sm_bits
        assert exp_bits + sm_bits == word_bits

    @property
    def exp_bins(self) -> int:
        """Histogram bin count: one per representable exponent value."""
        return 1 << self.exp_bits

    @property
    def word_dtype(self) -> np.dtype:
        return np.dtype(np.uint16 if self.word_bits == 16 else np.uint8)

    @property
    def word_nbytes(self) -> int:
        return self.word_bits // 8

    @classmethod
    def from_name(cls, name: str) -> "ElementFormat":
        for fmt in cls:
            if fmt.cli_name == name.lower():
                return fmt
        raise ConfigError(f"unknown element format {name!r} "
                          f"(expected one of {[f.cli_name for f in cls]})")


class SplitFields(NamedTuple):
    """Exponent and sign-mantissa fields of one word (or arrays of them)."""

    exponent: np.ndarray | int
    sign_mantissa: np.ndarray | int


class RawTensorStream(NamedTuple):
    """A flat sequence of element words with its format tag."""

    fmt: ElementFormat
    words: np.ndarray

    @property
    def n_elements(self) -> int:
        return int(self.words.size)

    @property
    def raw_bytes(self) -> int:
        return self.n_elements * self.fmt.word_nbytes

    def to_bytes(self) -> bytes:
        """Little-endian payload bytes."""
        return np.ascontiguousarray(self.words, dtype=self.fmt.word_dtype).tobytes()

    @classmethod
    def from_words(cls, fmt: ElementFormat, words) -> "RawTensorStream":
        arr = np.ascontiguousarray(words, dtype=fmt.word_dtype).ravel()
        return cls(fmt, arr)


def split_fields(word, fmt: ElementFormat) -> SplitFields:
    """Split word(s) into (exponent, sign_mantissa).

    Accepts a Python int, numpy scalar, or numpy array; output mirrors the
    input shape. Total over the word domain: every bit pattern is valid.
    """
    x = np.asarray(word, dtype=fmt.word_dtype)
    if fmt is ElementFormat.BF16:
        e = (x >> 7) & np.uint16(0xFF)
        a = ((x >> 8) & np.uint16(0x80)) | (x & np.uint16(0x7F))
    elif fmt is ElementFormat.FP8_E5M2:
        e = (x >> 2) & np.uint8(0x1F)
        a = ((x >> 7) << 2) | (x & np.uint8(0x03))
    else:  # FP8_E4M3
        e = (x >> 3) & np.uint8(0x0F)
        a = ((x >> 7) << 3) | (x & np.uint8(0x07))
    e = e.astype(np.uint8)
    a = a.astype(np.uint8)
    if np.isscalar(word) or np.ndim(word) == 0:
        return SplitFields(int(e), int(a))
    return SplitFields(e, a)


def reconstruct(fields: SplitFields, fmt: ElementFormat):
    """Exact inverse of :func:`split_fields` for the same format."""
    e = np.asarray(fields.exponent)
    a = np.asarray(fields.sign_mantissa)
    if fmt is ElementFormat.BF16:
        e16 = e.astype(np.uint16)
        a16 = a.astype(np.uint16)
        x = ((a16 & np.uint16(0x80)) << 8) | (e16 << 7) | (a16 & np.uint16(0x7F))
        x = x.astype(np.uint16)
    elif fmt is ElementFormat.FP8_E5M2:
        x = ((a.astype(np.uint8) >> 2) << 7) | (e.astype(np.uint8) << 2) \
            | (a.astype(np.uint8) & np.uint8(0x03))
        x = x.astype(np.uint8)
    else:  # FP8_E4M3
        x = ((a.astype(np.uint8) >> 3) << 7) | (e.astype(np.uint8) << 3) \
            | (a.astype(np.uint8) & np.uint8(0x07))
        x = x.astype(np.uint8)
    if x.ndim == 0:
        return int(x)
    return x


def _as_code_array(codes, code_bits: int) -> np.ndarray:
    arr = np.asarray(codes, dtype=np.uint8).ravel()
    if arr.size and int(arr.max()) >= (1 << code_bits):
        bad = int(np.argmax(arr >= (1 << code_bits)))
        raise CodeRangeError(
            f"code {int(arr[bad])} at index {bad} does not fit in {code_bits} bits")
    return arr


def pack_codes(codes, code_bits: int) -> bytes:
    """Pack fixed-width symbols into a dense byte stream.

    Only 3- and 4-bit symbols are supported; see the module docstring for the
    bit order. Output length is ceil(n * code_bits / 8) bytes with zeroed
    trailing bits.
    """
    if code_bits not in (3, 4):
        raise ConfigError(f"code_bits must be 3 or 4, got {code_bits}")
    arr = _as_code_array(codes, code_bits)
    n = arr.size
    if n == 0:
        return b""
    if code_bits == 4:
        if n % 2:
            arr = np.concatenate([arr, np.zeros(1, dtype=np.uint8)])
        return (arr[0::2] | (arr[1::2] << 4)).astype(np.uint8).tobytes()
    # 3-bit: expand each code to its three bits, then pack LSB-first.
    bits = np.empty((n, 3), dtype=np.uint8)
    bits[:, 0] = arr & 1
    bits[:, 1] = (arr >> 1) & 1
    bits[:, 2] = (arr >> 2) & 1
    return np.packbits(bits.ravel(), bitorder="little").tobytes()


def packed_nbytes(n: int, code_bits: int) -> int:
    """Byte length of ``n`` packed ``code_bits``-wide symbols."""
    return (n * code_bits + 7) // 8


def unpack_codes(data: bytes, n: int, code_bits: int) -> np.ndarray:
    """Exact inverse of :func:`pack_codes`.

    ``data`` must be exactly ceil(n * code_bits / 8) bytes; trailing pad bits
    are ignored here (the codec validates they are zero before trusting a
    container).
    """
    if code_bits not in (3, 4):
        raise ConfigError(f"code_bits must be 3 or 4, got {code_bits}")
    expected = packed_nbytes(n, code_bits)
    if len(data) != expected:
        raise MalformedStreamError(
            f"packed stream is {len(data)} bytes, expected {expected} "
            f"for {n} codes of {code_bits} bits")
    if n == 0:
        return np.zeros(0, dtype=np.uint8)
    buf = np.frombuffer(data, dtype=np.uint8)
    if code_bits == 4:
        codes = np.empty(2 * buf.size, dtype=np.uint8)
        codes[0::2] = buf & 0x0F
        codes[1::2] = buf >> 4
        return codes[:n]
    bits = np.unpackbits(buf, bitorder="little", count=3 * n).reshape(n, 3)
    return (bits[:, 0] | (bits[:, 1] << 1) | (bits[:, 2] << 2)).astype(np.uint8)


def trailing_bits_zero(data: bytes, n: int, code_bits: int) -> bool:
    """True when every pad bit beyond the n*code_bits payload is zero."""
    used = n * code_bits
    total = len(data) * 8
    if used == total:
        return True
    buf = np.frombuffer(data, dtype=np.uint8)
    bits = np.unpackbits(buf, bitorder="little")
    return not bits[used:].any()
