"""Lossless BF16/FP8 stream compression with calibrated exponent codebooks.

The package splits every element word into its exponent and an exact
sign-mantissa unit, codes the common exponents with fixed-width symbols from
a calibrated top-k codebook, and routes the rare remainder through a sparse
escape stream. Round trips are bit-exact for every input, including NaN/Inf
payloads. A small analytic model covers transfer pipelining and codec-hiding
bandwidth for the compressed-transfer use case.
"""

from .calibration import (
    CalibrationStats,
    CodebookMode,
    ExponentCodebook,
    build_histogram,
    coverage_by_group,
    entropy_bits,
    merge_stats,
    select_codebook,
    top_k_coverage,
)
from .codec import (
    CodecConfig,
    EncodedStreams,
    EscapeChunk,
    PositionMode,
    RoundtripReport,
    compare_streams,
    compressed_payload_bytes,
    compression_ratio,
    decode,
    encode,
    encode_quad,
    resolve_codebook,
    verify_roundtrip,
)
from .container import (
    read_codebook,
    read_container,
    read_raw_tensor,
    write_codebook,
    write_container,
    write_raw_tensor,
)
from .datagen import ExponentSpec, generate, ingest_raw
from .errors import (
    BadMagicError,
    CodeRangeError,
    ConfigError,
    ContainerError,
    CorruptionError,
    EmptyInputError,
    LengthMismatchError,
    MalformedStreamError,
    SplitZipError,
    TruncatedError,
    UnsupportedVersionError,
)
from .formats import (
    ElementFormat,
    RawTensorStream,
    SplitFields,
    pack_codes,
    reconstruct,
    split_fields,
    unpack_codes,
)
from .pipeline import (
    PipelineParams,
    TransferBreakdown,
    breakdown_from_params,
    hiding_bandwidth,
    pipeline_time,
    stage_times,
    sweep_simulation,
    transfer_breakdown,
)

__version__ = "0.1.0"

__all__ = [
    "ElementFormat",
    "RawTensorStream",
    "SplitFields",
    "split_fields",
    "reconstruct",
    "pack_codes",
    "unpack_codes",
    "CalibrationStats",
    "CodebookMode",
    "ExponentCodebook",
    "build_histogram",
    "merge_stats",
    "entropy_bits",
    "top_k_coverage",
    "select_codebook",
    "coverage_by_group",
    "CodecConfig",
    "PositionMode",
    "EncodedStreams",
    "EscapeChunk",
    "RoundtripReport",
    "encode",
    "encode_quad",
    "decode",
    "resolve_codebook",
    "compressed_payload_bytes",
    "compression_ratio",
    "verify_roundtrip",
    "compare_streams",
    "read_container",
    "write_container",
    "read_raw_tensor",
    "write_raw_tensor",
    "read_codebook",
    "write_codebook",
    "ExponentSpec",
    "generate",
    "ingest_raw",
    "PipelineParams",
    "TransferBreakdown",
    "stage_times",
    "pipeline_time",
    "hiding_bandwidth",
    "transfer_breakdown",
    "breakdown_from_params",
    "sweep_simulation",
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
