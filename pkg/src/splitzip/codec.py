"""Lossless encode/decode of element-word streams.

The encode path has two stages. Stage one is dense and uniform: split every
word into (exponent, sign-mantissa), map the exponent through the codebook's
encode table, pack the fixed-width codes, and store the sign-mantissa units
exactly. Stage two compacts the rare exponents the codebook does not cover
into a sparse escape stream.

Escape representation depends on the mode:

- explicit (default): the escaped element receives dummy code 0 in the dense
  stream and an (element position, raw exponent) record. Positions are
  chunk-relative (1 byte when chunk_size <= 256, else 2 bytes) with one
  32-bit escape count per chunk, or 4-byte absolute indices when chunked
  positions are disabled.
- sentinel: the top code is reserved to mark escapes in-band; only the raw
  exponent values are stored, in element order.

Decoding reverses the dense transform for every element through one lookup
table, then overwrites escaped elements from the sparse stream. Both modes
reconstruct the input bit-for-bit; they differ only in payload size and in
how much validation work the decoder performs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .calibration import (
    CodebookMode,
    ExponentCodebook,
    build_histogram,
    select_codebook,
)
from .errors import ConfigError, CorruptionError, EmptyInputError
from .formats import (
    ElementFormat,
    RawTensorStream,
    SplitFields,
    pack_codes,
    packed_nbytes,
    reconstruct,
    split_fields,
    trailing_bits_zero,
    unpack_codes,
)

__all__ = [
    "PositionMode",
    "CodecConfig",
    "EscapeChunk",
    "EncodedStreams",
    "RoundtripReport",
    "resolve_codebook",
    "encode",
    "encode_quad",
    "decode",
    "compressed_payload_bytes",
    "compression_ratio",
    "verify_roundtrip",
    "compare_streams",
]

DUMMY_CODE = 0  # dense placeholder for escaped elements in explicit mode
CHUNK_COUNT_NBYTES = 4  # per-chunk escape counts are stored as uint32


class PositionMode:
    """How explicit escape positions are addressed."""

    CHUNK_RELATIVE = "chunk"
    ABSOLUTE_32 = "abs32"

    _ALL = (CHUNK_RELATIVE, ABSOLUTE_32)

    @classmethod
    def validate(cls, value: str) -> str:
        if value not in cls._ALL:
            raise ConfigError(f"unknown position mode {value!r}")
        return value


@dataclass(frozen=True)
class CodecConfig:
    """Everything that determines the compressed representation.

    ``codebook`` of None selects dynamic calibration: the encoder rebuilds the
    codebook from the input's own histogram on every call (slower, but needs
    no offline step).
    """

    fmt: ElementFormat
    code_bits: int = 4
    mode: CodebookMode = CodebookMode.TOPK_EXPLICIT
    chunk_size: int = 1024
    position_mode: str = PositionMode.CHUNK_RELATIVE
    codebook: ExponentCodebook | None = None

    def __post_init__(self):
        if self.code_bits not in (3, 4):
            raise ConfigError(f"code_bits must be 3 or 4, got {self.code_bits}")
        PositionMode.validate(self.position_mode)
        if self.chunk_size < 1:
            raise ConfigError(f"chunk_size must be >= 1, got {self.chunk_size}")
        if (self.position_mode == PositionMode.CHUNK_RELATIVE
                and self.chunk_size > 65536):
            raise ConfigError("chunk-relative positions require chunk_size <= 65536")
        if self.codebook is not None:
            if self.codebook.fmt is not self.fmt:
                raise ConfigError("codebook format does not match codec format")
            if self.codebook.code_bits != self.code_bits:
                raise ConfigError("codebook code width does not match codec")
            if self.codebook.mode is not self.mode:
                raise ConfigError("codebook mode does not match codec mode")

    @property
    def position_nbytes(self) -> int:
        """Bytes per stored escape position (explicit mode)."""
        if self.position_mode == PositionMode.ABSOLUTE_32:
            return 4
        return 1 if self.chunk_size <= 256 else 2

    @property
    def chunked(self) -> bool:
        """True when escape metadata is organized per chunk."""
        return (self.mode is CodebookMode.TOPK_EXPLICIT
                and self.position_mode == PositionMode.CHUNK_RELATIVE)

    def n_chunks(self, n_elements: int) -> int:
        if not self.chunked:
            return 0
        return -(-n_elements // self.chunk_size)


@dataclass(frozen=True)
class EscapeChunk:
    """Escapes that fall inside one chunk, positions relative to its start."""

    index: int
    positions: np.ndarray
    values: np.ndarray

    @property
    def count(self) -> int:
        return int(self.positions.size)


@dataclass
class EncodedStreams:
    """The compressed representation of one stream, before serialization."""

    n_elements: int
    n_escapes: int
    packed_codes: bytes
    sign_mantissa: bytes
    chunk_counts: np.ndarray   # uint32; empty unless explicit chunked
    escape_positions: np.ndarray  # uint8/uint16/uint32 per config; empty in sentinel
    escape_values: np.ndarray  # uint8 raw exponents, escape order
    codebook: ExponentCodebook = field(repr=False)

    def escape_chunks(self) -> Iterator[EscapeChunk]:
        """Iterate explicit chunked escapes as per-chunk views."""
        offset = 0
        for index, count in enumerate(self.chunk_counts):
            count = int(count)
            yield EscapeChunk(
                index,
                self.escape_positions[offset:offset + count],
                self.escape_values[offset:offset + count],
            )
            offset += count

    def section_bytes(self) -> list[tuple[str, bytes]]:
        """Payload sections in serialization order."""
        return [
            ("chunk_counts", self.chunk_counts.astype("<u4").tobytes()),
            ("packed_codes", self.packed_codes),
            ("sign_mantissa", self.sign_mantissa),
            ("escape_positions", np.ascontiguousarray(self.escape_positions).tobytes()),
            ("escape_values", _pack_values(self.escape_values, self.codebook.fmt)),
        ]

    @property
    def payload_nbytes(self) -> int:
        return sum(len(data) for _, data in self.section_bytes())


@dataclass(frozen=True)
class RoundtripReport:
    """Outcome of a bitwise comparison between two streams."""

    ok: bool
    n: int
    mismatch_count: int
    first_mismatch_index: int | None


def resolve_codebook(stream: RawTensorStream, config: CodecConfig) -> ExponentCodebook:
    """The codebook encode will use: precalibrated, or rebuilt from the input."""
    if config.codebook is not None:
        return config.codebook
    return select_codebook(build_histogram(stream), config.code_bits, config.mode)


def _check_stream(stream: RawTensorStream, config: CodecConfig) -> None:
    if stream.fmt is not config.fmt:
        raise ConfigError(
            f"stream format {stream.fmt.cli_name} does not match codec "
            f"format {config.fmt.cli_name}")
    if stream.n_elements == 0:
        raise EmptyInputError("cannot encode an empty stream")
    if (config.position_mode == PositionMode.ABSOLUTE_32
            and stream.n_elements > 1 << 32):
        raise ConfigError("absolute 32-bit positions cap streams at 2^32 elements")


def _pack_sign_mantissa(sm: np.ndarray, fmt: ElementFormat) -> bytes:
    if fmt.sm_bits == 8:
        return sm.astype(np.uint8).tobytes()
    return pack_codes(sm, fmt.sm_bits)


def _unpack_sign_mantissa(data: bytes, n: int, fmt: ElementFormat) -> np.ndarray:
    if fmt.sm_bits == 8:
        if len(data) != n:
            raise CorruptionError(
                f"sign-mantissa stream is {len(data)} bytes, expected {n}")
        return np.frombuffer(data, dtype=np.uint8)
    expected = packed_nbytes(n, fmt.sm_bits)
    if len(data) != expected:
        raise CorruptionError(
            f"sign-mantissa stream is {len(data)} bytes, expected {expected}")
    if not trailing_bits_zero(data, n, fmt.sm_bits):
        raise CorruptionError("nonzero padding bits in sign-mantissa stream")
    return unpack_codes(data, n, fmt.sm_bits)


def _pack_values(values: np.ndarray, fmt: ElementFormat) -> bytes:
    """Escape exponent values at their native width (byte stream for BF16)."""
    if fmt.exp_bits == 8:
        return values.astype(np.uint8).tobytes()
    return _pack_bits(values, fmt.exp_bits)


def _unpack_values(data: bytes, m: int, fmt: ElementFormat) -> np.ndarray:
    expected = packed_nbytes(m, fmt.exp_bits)
    if len(data) != expected:
        raise CorruptionError(
            f"escape-value stream is {len(data)} bytes, expected {expected}")
    if fmt.exp_bits == 8:
        return np.frombuffer(data, dtype=np.uint8)
    if not trailing_bits_zero(data, m, fmt.exp_bits):
        raise CorruptionError("nonzero padding bits in escape-value stream")
    return _unpack_bits(data, m, fmt.exp_bits)


def _pack_bits(values: np.ndarray, width: int) -> bytes:
    """Dense little-endian packing for widths the public packer doesn't cover."""
    arr = np.asarray(values, dtype=np.uint8).ravel()
    if arr.size == 0:
        return b""
    bits = ((arr[:, None] >> np.arange(width)) & 1).astype(np.uint8)
    return np.packbits(bits.ravel(), bitorder="little").tobytes()


def _unpack_bits(data: bytes, n: int, width: int) -> np.ndarray:
    if n == 0:
        return np.zeros(0, dtype=np.uint8)
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8),
                         bitorder="little", count=n * width).reshape(n, width)
    return (bits << np.arange(width)).sum(axis=1).astype(np.uint8)


def _position_dtype(config: CodecConfig) -> np.dtype:
    return np.dtype({1: np.uint8, 2: np.uint16, 4: np.uint32}[config.position_nbytes])


def _collect_escapes(escape_idx: np.ndarray, exponents: np.ndarray,
                     n: int, config: CodecConfig):
    """Stage two: turn escape indices into (chunk_counts, positions, values)."""
    values = exponents[escape_idx].astype(np.uint8)
    if config.mode is CodebookMode.TOP15_SENTINEL:
        counts = np.zeros(0, dtype=np.uint32)
        positions = np.zeros(0, dtype=np.uint8)
    elif config.position_mode == PositionMode.ABSOLUTE_32:
        counts = np.zeros(0, dtype=np.uint32)
        positions = escape_idx.astype(np.uint32)
    else:
        n_chunks = config.n_chunks(n)
        chunk_ids = escape_idx // config.chunk_size
        counts = np.bincount(chunk_ids, minlength=n_chunks).astype(np.uint32)
        positions = (escape_idx % config.chunk_size).astype(_position_dtype(config))
    return counts, positions, values


def encode(stream: RawTensorStream, config: CodecConfig) -> EncodedStreams:
    """Compress a stream. ``decode`` inverts the result bit-exactly."""
    _check_stream(stream, config)
    codebook = resolve_codebook(stream, config)
    exponents, sm = split_fields(stream.words, config.fmt)
    member = codebook.member_table[exponents]
    escape_code = (codebook.sentinel_code
                   if config.mode is CodebookMode.TOP15_SENTINEL else DUMMY_CODE)
    codes = np.where(member, codebook.encode_table[exponents],
                     np.uint8(escape_code))
    escape_idx = np.flatnonzero(~member)
    counts, positions, values = _collect_escapes(
        escape_idx, exponents, stream.n_elements, config)
    return EncodedStreams(
        n_elements=stream.n_elements,
        n_escapes=int(escape_idx.size),
        packed_codes=pack_codes(codes, config.code_bits),
        sign_mantissa=_pack_sign_mantissa(sm, config.fmt),
        chunk_counts=counts,
        escape_positions=positions,
        escape_values=values,
        codebook=codebook,
    )


def encode_quad(stream: RawTensorStream, config: CodecConfig) -> EncodedStreams:
    """Dense-path variant that processes four BF16 words per 64-bit load.

    Produces output byte-identical to :func:`encode`; it only reorganizes the
    dense transform (wider loads, marked lookup table, fused escape marking).
    Configurations other than 4-bit BF16 fall back to the scalar path.
    """
    if config.fmt is not ElementFormat.BF16 or config.code_bits != 4:
        return encode(stream, config)
    _check_stream(stream, config)
    codebook = resolve_codebook(stream, config)
    n = stream.n_elements
    n_head = (n // 4) * 4

    escape_code = (codebook.sentinel_code
                   if config.mode is CodebookMode.TOP15_SENTINEL else DUMMY_CODE)
    # Marked table: low nibble is the dense code, bit 4 flags an escape.
    marked = np.where(codebook.member_table, codebook.encode_table,
                      np.uint8(0x10 | escape_code))

    words = np.ascontiguousarray(stream.words, dtype="<u2")
    quads = words[:n_head].view("<u8")

    lane_e = []
    lane_m = []
    lane_a = []
    for j in range(4):
        shift = 16 * j
        e = ((quads >> np.uint64(shift + 7)) & np.uint64(0xFF)).astype(np.uint8)
        a = (((quads >> np.uint64(shift + 8)) & np.uint64(0x80))
             | ((quads >> np.uint64(shift)) & np.uint64(0x7F))).astype(np.uint8)
        lane_e.append(e)
        lane_a.append(a)
        lane_m.append(marked[e])

    pair = (
        (lane_m[0] & np.uint16(0x0F)).astype(np.uint16)
        | ((lane_m[1] & np.uint16(0x0F)).astype(np.uint16) << 4)
        | ((lane_m[2] & np.uint16(0x0F)).astype(np.uint16) << 8)
        | ((lane_m[3] & np.uint16(0x0F)).astype(np.uint16) << 12)
    )
    quad_sm = (
        lane_a[0].astype(np.uint32)
        | (lane_a[1].astype(np.uint32) << 8)
        | (lane_a[2].astype(np.uint32) << 16)
        | (lane_a[3].astype(np.uint32) << 24)
    )

    exponents = np.empty(n, dtype=np.uint8)
    escaped = np.empty(n, dtype=bool)
    for j in range(4):
        exponents[j:n_head:4] = lane_e[j]
        escaped[j:n_head:4] = lane_m[j] >= 0x10

    packed_codes = pair.astype("<u2").tobytes()
    sign_mantissa = quad_sm.astype("<u4").tobytes()
    if n_head < n:  # scalar tail, byte boundaries stay aligned (4 | n_head)
        tail_e, tail_a = split_fields(words[n_head:], config.fmt)
        tail_member = codebook.member_table[tail_e]
        tail_codes = np.where(tail_member, codebook.encode_table[tail_e],
                              np.uint8(escape_code))
        exponents[n_head:] = tail_e
        escaped[n_head:] = ~tail_member
        packed_codes += pack_codes(tail_codes, config.code_bits)
        sign_mantissa += tail_a.astype(np.uint8).tobytes()

    escape_idx = np.flatnonzero(escaped)
    counts, positions, values = _collect_escapes(escape_idx, exponents, n, config)
    return EncodedStreams(
        n_elements=n,
        n_escapes=int(escape_idx.size),
        packed_codes=packed_codes,
        sign_mantissa=sign_mantissa,
        chunk_counts=counts,
        escape_positions=positions,
        escape_values=values,
        codebook=codebook,
    )


def _decode_dense(codes: np.ndarray, codebook: ExponentCodebook,
                  skip: np.ndarray | None = None) -> np.ndarray:
    """Map dense codes to exponents through a padded table, validating range."""
    n_entries = len(codebook.entries)
    in_range = codes < n_entries
    if skip is not None:
        in_range |= skip
    if not in_range.all():
        bad = int(np.argmin(in_range))
        raise CorruptionError(
            f"dense code {int(codes[bad])} at element {bad} exceeds the "
            f"{n_entries}-entry codebook")
    padded = np.zeros(1 << codebook.code_bits, dtype=np.uint8)
    padded[:n_entries] = codebook.decode_table
    return padded[codes]


def decode(streams: EncodedStreams, config: CodecConfig,
           codebook: ExponentCodebook) -> RawTensorStream:
    """Reconstruct the original stream, validating internal consistency.

    Raises CorruptionError when any declared length, position, code, or value
    contradicts the config/codebook; a valid encode output always decodes.
    """
    fmt = config.fmt
    n = streams.n_elements
    m = streams.n_escapes
    if n < 1:
        raise CorruptionError("container declares zero elements")
    if m > n:
        raise CorruptionError(f"{m} escapes exceed {n} elements")

    expected_codes = packed_nbytes(n, config.code_bits)
    if len(streams.packed_codes) != expected_codes:
        raise CorruptionError(
            f"code stream is {len(streams.packed_codes)} bytes, "
            f"expected {expected_codes}")
    if not trailing_bits_zero(streams.packed_codes, n, config.code_bits):
        raise CorruptionError("nonzero padding bits in code stream")
    codes = unpack_codes(streams.packed_codes, n, config.code_bits)
    sm = _unpack_sign_mantissa(streams.sign_mantissa, n, fmt)

    if len(streams.escape_values) != m:
        raise CorruptionError(
            f"{len(streams.escape_values)} escape values for {m} declared escapes")
    values = streams.escape_values
    if values.size:
        if int(values.max()) >= fmt.exp_bins:
            raise CorruptionError("escape value outside the exponent domain")
        if codebook.member_table[values].any():
            bad = int(np.argmax(codebook.member_table[values]))
            raise CorruptionError(
                "escape value is inside the codebook",
                chunk=_chunk_of_escape(streams, config, bad))

    if config.mode is CodebookMode.TOP15_SENTINEL:
        sentinel = codebook.sentinel_code
        is_escape = codes == sentinel
        found = int(is_escape.sum())
        if found != m:
            raise CorruptionError(
                f"dense stream marks {found} escapes, header declares {m}")
        exponents = _decode_dense(codes, codebook, skip=is_escape)
        exponents[is_escape] = values
    else:
        escape_idx = _escape_indices(streams, config, n)
        exponents = _decode_dense(codes, codebook)
        if escape_idx.size:
            if (codes[escape_idx] != DUMMY_CODE).any():
                bad = int(np.argmax(codes[escape_idx] != DUMMY_CODE))
                raise CorruptionError(
                    "escaped element carries a non-dummy dense code",
                    chunk=_chunk_of_escape(streams, config, bad))
            exponents[escape_idx] = values

    words = reconstruct(SplitFields(exponents, sm), fmt)
    return RawTensorStream(fmt, words)


def _chunk_of_escape(streams: EncodedStreams, config: CodecConfig,
                     escape_ordinal: int) -> int | None:
    if not config.chunked or streams.chunk_counts.size == 0:
        return None
    cumulative = np.cumsum(streams.chunk_counts)
    return int(np.searchsorted(cumulative, escape_ordinal, side="right"))


def _escape_indices(streams: EncodedStreams, config: CodecConfig,
                    n: int) -> np.ndarray:
    """Validate explicit escape metadata and return absolute element indices."""
    m = streams.n_escapes
    positions = streams.escape_positions
    if len(positions) != m:
        raise CorruptionError(
            f"{len(positions)} escape positions for {m} declared escapes")

    if config.position_mode == PositionMode.ABSOLUTE_32:
        idx = positions.astype(np.int64)
        if idx.size:
            if int(idx.max()) >= n:
                raise CorruptionError("absolute escape position beyond the stream")
            if (np.diff(idx) <= 0).any():
                raise CorruptionError("absolute escape positions not strictly increasing")
        return idx

    n_chunks = config.n_chunks(n)
    if streams.chunk_counts.size != n_chunks:
        raise CorruptionError(
            f"{streams.chunk_counts.size} chunk counts, expected {n_chunks}")
    if int(streams.chunk_counts.sum()) != m:
        raise CorruptionError("chunk escape counts do not add up to the header total")
    if (positions.astype(np.int64) >= config.chunk_size).any():
        bad = int(np.argmax(positions.astype(np.int64) >= config.chunk_size))
        raise CorruptionError(
            f"escape position {int(positions[bad])} exceeds the chunk size",
            chunk=_chunk_of_escape(streams, config, bad))
    starts = np.repeat(
        np.arange(n_chunks, dtype=np.int64) * config.chunk_size,
        streams.chunk_counts.astype(np.int64))
    idx = starts + positions.astype(np.int64)
    if idx.size:
        if int(idx.max()) >= n:
            bad = int(np.argmax(idx >= n))
            raise CorruptionError(
                "escape position beyond the end of the stream",
                chunk=_chunk_of_escape(streams, config, bad))
        deltas = np.diff(idx)
        if (deltas <= 0).any():
            bad = int(np.argmax(deltas <= 0)) + 1
            raise CorruptionError(
                "escape positions not strictly increasing",
                chunk=_chunk_of_escape(streams, config, bad))
    return idx


def compressed_payload_bytes(n: int, m: int, config: CodecConfig) -> int:
    """Exact serialized payload size (all sections, header excluded)."""
    if m > n:
        raise ConfigError(f"escape count {m} exceeds element count {n}")
    fmt = config.fmt
    total = packed_nbytes(n, config.code_bits)
    total += n if fmt.sm_bits == 8 else packed_nbytes(n, fmt.sm_bits)
    total += CHUNK_COUNT_NBYTES * config.n_chunks(n)
    if config.mode is CodebookMode.TOPK_EXPLICIT:
        total += m * config.position_nbytes
    total += packed_nbytes(m, fmt.exp_bits)
    return total


def compression_ratio(n: int, m: int, config: CodecConfig) -> float:
    """Formula-level ratio: raw bits over dense + escape bits.

    Excludes per-chunk count overhead and the container header, matching the
    closed-form size model; strictly decreasing in the escape rate.
    """
    if n <= 0:
        raise ConfigError(f"element count must be positive, got {n}")
    if m > n:
        raise ConfigError(f"escape count {m} exceeds element count {n}")
    fmt = config.fmt
    dense_bits = n * (fmt.sm_bits + config.code_bits)
    if config.mode is CodebookMode.TOPK_EXPLICIT:
        escape_bits = m * (8 * config.position_nbytes + fmt.exp_bits)
    else:
        escape_bits = m * fmt.exp_bits
    return (n * fmt.word_bits) / (dense_bits + escape_bits)


def compare_streams(expected: RawTensorStream,
                    actual: RawTensorStream) -> RoundtripReport:
    """Bitwise comparison; never raises on mismatch."""
    if expected.fmt is not actual.fmt or expected.n_elements != actual.n_elements:
        return RoundtripReport(False, expected.n_elements,
                               expected.n_elements, 0)
    diff = expected.words != actual.words
    count = int(diff.sum())
    first = int(np.argmax(diff)) if count else None
    return RoundtripReport(count == 0, expected.n_elements, count, first)


def verify_roundtrip(stream: RawTensorStream, config: CodecConfig) -> RoundtripReport:
    """Encode then decode, reporting any bit-level disagreement."""
    streams = encode(stream, config)
    decoded = decode(streams, config, streams.codebook)
    return compare_streams(stream, decoded)
