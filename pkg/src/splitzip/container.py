"""Bit-exact file formats for compressed artifacts, codebooks, and raw dumps.

All fields are little-endian. Every declared length is validated before any
payload is touched, so malformed files produce classified errors instead of
crashes, and a file's length must equal the header-derived size exactly.

Compressed container ("SPLZ", version 1):

    offset  size  field
    0       4     magic "SPLZ"
    4       1     version (1)
    5       1     element format (0=bf16, 1=e5m2, 2=e4m3)
    6       1     mode (0=explicit/chunked, 1=sentinel, 2=explicit/absolute)
    7       1     code bits (3 or 4)
    8       4     chunk size (u32)
    12      8     element count N (u64)
    20      8     escape count M (u64)
    28      ...   codebook record (see below)
    then payload sections, in this order, each of a length recomputable
    from the header alone:
        per-chunk escape counts   u32 * ceil(N / chunk_size)   (mode 0 only)
        packed codes              ceil(N * code_bits / 8)
        sign-mantissa             N for bf16, ceil(N * sm_bits / 8) for fp8
        escape positions          M * {1, 2, 4} bytes (modes 0, 0, 2)
        escape values             ceil(M * exp_bits / 8)

Codebook record ("SZCB", version 1), also stored standalone as a codebook
file:

    magic "SZCB" | version u8 | format u8 | code bits u8 | mode u8 |
    entry count u8 | entries, one exponent byte each

Raw tensor dump ("SZRW", version 1):

    magic "SZRW" | version u8 | format u8 | element count u64 |
    element words, little-endian
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .calibration import CodebookMode, ExponentCodebook
from .codec import CodecConfig, EncodedStreams, PositionMode, _unpack_values
from .errors import (
    BadMagicError,
    ConfigError,
    ContainerError,
    CorruptionError,
    LengthMismatchError,
    TruncatedError,
    UnsupportedVersionError,
)
from .formats import ElementFormat, RawTensorStream, packed_nbytes

__all__ = [
    "CONTAINER_MAGIC",
    "RAW_MAGIC",
    "CODEBOOK_MAGIC",
    "container_to_bytes",
    "container_from_bytes",
    "write_container",
    "read_container",
    "raw_tensor_to_bytes",
    "raw_tensor_from_bytes",
    "write_raw_tensor",
    "read_raw_tensor",
    "codebook_record_bytes",
    "codebook_from_bytes",
    "write_codebook",
    "read_codebook",
    "codebook_text",
]

CONTAINER_MAGIC = b"SPLZ"
RAW_MAGIC = b"SZRW"
CODEBOOK_MAGIC = b"SZCB"
FORMAT_VERSION = 1

_FMT_CODES = {ElementFormat.BF16: 0, ElementFormat.FP8_E5M2: 1,
              ElementFormat.FP8_E4M3: 2}
_FMT_FROM_CODE = {v: k for k, v in _FMT_CODES.items()}

_MODE_EXPLICIT_CHUNKED = 0
_MODE_SENTINEL = 1
_MODE_EXPLICIT_ABS32 = 2


class _Cursor:
    """Sequential reader that raises classified errors on short reads."""

    def __init__(self, data: bytes):
        self.data = data
        self.offset = 0

    def take(self, n: int, section: str) -> bytes:
        if self.offset + n > len(self.data):
            raise TruncatedError(
                f"file ends at byte {len(self.data)} while reading "
                f"{n} bytes at offset {self.offset}", section=section)
        out = self.data[self.offset:self.offset + n]
        self.offset += n
        return out

    def u8(self, section: str) -> int:
        return self.take(1, section)[0]

    def u32(self, section: str) -> int:
        return struct.unpack("<I", self.take(4, section))[0]

    def u64(self, section: str) -> int:
        return struct.unpack("<Q", self.take(8, section))[0]


def _mode_byte(config: CodecConfig) -> int:
    if config.mode is CodebookMode.TOP15_SENTINEL:
        return _MODE_SENTINEL
    if config.position_mode == PositionMode.ABSOLUTE_32:
        return _MODE_EXPLICIT_ABS32
    return _MODE_EXPLICIT_CHUNKED


# -- codebook record ---------------------------------------------------------

def codebook_record_bytes(codebook: ExponentCodebook) -> bytes:
    entries = bytes(codebook.entries)
    return (CODEBOOK_MAGIC
            + bytes([FORMAT_VERSION,
                     _FMT_CODES[codebook.fmt],
                     codebook.code_bits,
                     0 if codebook.mode is CodebookMode.TOPK_EXPLICIT else 1,
                     len(entries)])
            + entries)


def _parse_codebook_record(cur: _Cursor) -> ExponentCodebook:
    magic = cur.take(4, "codebook")
    if magic != CODEBOOK_MAGIC:
        raise BadMagicError(f"bad codebook magic {magic!r}")
    version = cur.u8("codebook")
    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(f"unsupported codebook version {version}")
    fmt_code = cur.u8("codebook")
    if fmt_code not in _FMT_FROM_CODE:
        raise ContainerError(f"unknown element format code {fmt_code}")
    code_bits = cur.u8("codebook")
    mode_code = cur.u8("codebook")
    if mode_code not in (0, 1):
        raise ContainerError(f"unknown codebook mode code {mode_code}")
    count = cur.u8("codebook")
    entries = cur.take(count, "codebook")
    try:
        return ExponentCodebook(
            _FMT_FROM_CODE[fmt_code], tuple(entries), code_bits,
            CodebookMode.TOPK_EXPLICIT if mode_code == 0
            else CodebookMode.TOP15_SENTINEL)
    except ConfigError as exc:
        raise CorruptionError(f"inconsistent codebook record: {exc}") from exc


def codebook_from_bytes(data: bytes) -> ExponentCodebook:
    cur = _Cursor(data)
    codebook = _parse_codebook_record(cur)
    if cur.offset != len(data):
        raise LengthMismatchError(
            f"{len(data) - cur.offset} unexpected bytes after the codebook record")
    return codebook


def write_codebook(codebook: ExponentCodebook, sink) -> int:
    data = codebook_record_bytes(codebook)
    Path(sink).write_bytes(data)
    return len(data)


def read_codebook(source) -> ExponentCodebook:
    return codebook_from_bytes(Path(source).read_bytes())


def codebook_text(codebook: ExponentCodebook) -> str:
    """Human-readable dump of the codebook and its reserved codes."""
    lines = [
        f"format:    {codebook.fmt.cli_name}",
        f"code bits: {codebook.code_bits}",
        f"mode:      {codebook.mode.value}",
        f"entries:   {len(codebook.entries)}",
        "code  exponent",
    ]
    for code, exp in enumerate(codebook.entries):
        lines.append(f"{code:>4}  0x{exp:02X} ({exp})")
    if codebook.mode is CodebookMode.TOP15_SENTINEL:
        lines.append(f"{codebook.sentinel_code:>4}  (escape sentinel)")
    return "\n".join(lines) + "\n"


# -- compressed container ----------------------------------------------------

def container_to_bytes(streams: EncodedStreams, config: CodecConfig,
                       codebook: ExponentCodebook) -> bytes:
    header = CONTAINER_MAGIC + struct.pack(
        "<BBBBIQQ",
        FORMAT_VERSION,
        _FMT_CODES[config.fmt],
        _mode_byte(config),
        config.code_bits,
        config.chunk_size,
        streams.n_elements,
        streams.n_escapes,
    )
    parts = [header, codebook_record_bytes(codebook)]
    parts.extend(data for _, data in streams.section_bytes())
    return b"".join(parts)


def write_container(streams: EncodedStreams, config: CodecConfig,
                    codebook: ExponentCodebook, sink) -> int:
    data = container_to_bytes(streams, config, codebook)
    Path(sink).write_bytes(data)
    return len(data)


def container_from_bytes(data: bytes) -> tuple[EncodedStreams, CodecConfig,
                                               ExponentCodebook]:
    cur = _Cursor(data)
    magic = cur.take(4, "header")
    if magic != CONTAINER_MAGIC:
        raise BadMagicError(f"bad container magic {magic!r}")
    version = cur.u8("header")
    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(f"unsupported container version {version}")
    fmt_code = cur.u8("header")
    if fmt_code not in _FMT_FROM_CODE:
        raise ContainerError(f"unknown element format code {fmt_code}")
    fmt = _FMT_FROM_CODE[fmt_code]
    mode_code = cur.u8("header")
    if mode_code not in (_MODE_EXPLICIT_CHUNKED, _MODE_SENTINEL,
                         _MODE_EXPLICIT_ABS32):
        raise ContainerError(f"unknown container mode code {mode_code}")
    code_bits = cur.u8("header")
    chunk_size = cur.u32("header")
    n_elements = cur.u64("header")
    n_escapes = cur.u64("header")

    codebook = _parse_codebook_record(cur)
    try:
        config = CodecConfig(
            fmt=fmt,
            code_bits=code_bits,
            mode=(CodebookMode.TOP15_SENTINEL if mode_code == _MODE_SENTINEL
                  else CodebookMode.TOPK_EXPLICIT),
            chunk_size=chunk_size,
            position_mode=(PositionMode.ABSOLUTE_32
                           if mode_code == _MODE_EXPLICIT_ABS32
                           else PositionMode.CHUNK_RELATIVE),
            codebook=codebook,
        )
    except ConfigError as exc:
        raise CorruptionError(f"inconsistent container header: {exc}") from exc
    if n_elements < 1:
        raise CorruptionError("container declares zero elements")
    if n_escapes > n_elements:
        raise CorruptionError("container declares more escapes than elements")

    n_chunks = config.n_chunks(n_elements)
    counts_raw = cur.take(4 * n_chunks, "chunk_counts")
    packed_codes = cur.take(packed_nbytes(n_elements, code_bits), "packed_codes")
    sm_len = (n_elements if fmt.sm_bits == 8
              else packed_nbytes(n_elements, fmt.sm_bits))
    sign_mantissa = cur.take(sm_len, "sign_mantissa")
    if config.mode is CodebookMode.TOPK_EXPLICIT:
        pos_len = n_escapes * config.position_nbytes
    else:
        pos_len = 0
    positions_raw = cur.take(pos_len, "escape_positions")
    values_raw = cur.take(packed_nbytes(n_escapes, fmt.exp_bits), "escape_values")
    if cur.offset != len(data):
        raise LengthMismatchError(
            f"{len(data) - cur.offset} unexpected trailing bytes "
            f"after the escape values")

    pos_dtype = {1: "<u1", 2: "<u2", 4: "<u4"}[config.position_nbytes]
    streams = EncodedStreams(
        n_elements=n_elements,
        n_escapes=n_escapes,
        packed_codes=packed_codes,
        sign_mantissa=sign_mantissa,
        chunk_counts=np.frombuffer(counts_raw, dtype="<u4"),
        escape_positions=(np.frombuffer(positions_raw, dtype=pos_dtype)
                          if pos_len else np.zeros(0, dtype=pos_dtype)),
        escape_values=_unpack_values(values_raw, n_escapes, fmt),
        codebook=codebook,
    )
    return streams, config, codebook


def read_container(source) -> tuple[EncodedStreams, CodecConfig, ExponentCodebook]:
    return container_from_bytes(Path(source).read_bytes())


# -- raw tensor dumps --------------------------------------------------------

def raw_tensor_to_bytes(stream: RawTensorStream) -> bytes:
    header = RAW_MAGIC + struct.pack(
        "<BBQ", FORMAT_VERSION, _FMT_CODES[stream.fmt], stream.n_elements)
    return header + stream.to_bytes()


def raw_tensor_from_bytes(data: bytes) -> RawTensorStream:
    cur = _Cursor(data)
    magic = cur.take(4, "header")
    if magic != RAW_MAGIC:
        raise BadMagicError(f"bad raw-tensor magic {magic!r}")
    version = cur.u8("header")
    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(f"unsupported raw-tensor version {version}")
    fmt_code = cur.u8("header")
    if fmt_code not in _FMT_FROM_CODE:
        raise ContainerError(f"unknown element format code {fmt_code}")
    fmt = _FMT_FROM_CODE[fmt_code]
    n_elements = cur.u64("header")
    payload = cur.take(n_elements * fmt.word_nbytes, "payload")
    if cur.offset != len(data):
        raise LengthMismatchError(
            f"{len(data) - cur.offset} unexpected bytes after the payload")
    words = np.frombuffer(payload, dtype=fmt.word_dtype.newbyteorder("<"))
    return RawTensorStream(fmt, words.astype(fmt.word_dtype))


def write_raw_tensor(stream: RawTensorStream, sink) -> int:
    data = raw_tensor_to_bytes(stream)
    Path(sink).write_bytes(data)
    return len(data)


def read_raw_tensor(source) -> RawTensorStream:
    return raw_tensor_from_bytes(Path(source).read_bytes())
