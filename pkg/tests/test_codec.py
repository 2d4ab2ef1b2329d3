"""Codec contracts: losslessness, sizes, escapes, determinism, validation."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from splitzip import (
    CodebookMode,
    CodecConfig,
    ConfigError,
    CorruptionError,
    ElementFormat,
    EmptyInputError,
    ExponentCodebook,
    PositionMode,
    RawTensorStream,
    SplitFields,
    build_histogram,
    compare_streams,
    compressed_payload_bytes,
    compression_ratio,
    decode,
    encode,
    encode_quad,
    reconstruct,
    select_codebook,
    split_fields,
    verify_roundtrip,
)
from splitzip.codec import EncodedStreams
from tests.conftest import designated_config, exact_stream, random_words

BF16 = ElementFormat.BF16
E5M2 = ElementFormat.FP8_E5M2
E4M3 = ElementFormat.FP8_E4M3

ALL_CONFIGS = [
    CodecConfig(fmt, code_bits=cb, mode=mode, chunk_size=chunk,
                position_mode=pos)
    for fmt in ElementFormat
    for cb in (3, 4)
    for mode, pos in [
        (CodebookMode.TOPK_EXPLICIT, PositionMode.CHUNK_RELATIVE),
        (CodebookMode.TOPK_EXPLICIT, PositionMode.ABSOLUTE_32),
        (CodebookMode.TOP15_SENTINEL, PositionMode.CHUNK_RELATIVE),
    ]
    for chunk in (256, 1024)
]


def book_config(stream: RawTensorStream, **kwargs) -> CodecConfig:
    """Config whose codebook is precalibrated on the stream itself."""
    base = CodecConfig(stream.fmt, **kwargs)
    codebook = select_codebook(build_histogram(stream), base.code_bits, base.mode)
    return CodecConfig(stream.fmt, base.code_bits, base.mode, base.chunk_size,
                       base.position_mode, codebook)


def assert_streams_identical(a: EncodedStreams, b: EncodedStreams):
    assert a.n_elements == b.n_elements
    assert a.n_escapes == b.n_escapes
    assert a.packed_codes == b.packed_codes
    assert a.sign_mantissa == b.sign_mantissa
    assert np.array_equal(a.chunk_counts, b.chunk_counts)
    assert np.array_equal(a.escape_positions, b.escape_positions)
    assert np.array_equal(a.escape_values, b.escape_values)
    assert a.codebook.entries == b.codebook.entries


class TestEncodeBasics:
    def test_no_escape_sizes(self):
        words = np.full(4, 0x3F80, dtype=np.uint16)
        stream = RawTensorStream(BF16, words)
        enc = encode(stream, CodecConfig(BF16))
        assert enc.n_escapes == 0
        assert len(enc.packed_codes) == 2
        assert len(enc.sign_mantissa) == 4
        assert enc.escape_positions.size == 0
        assert enc.escape_values.size == 0

    def test_single_escape_location(self):
        stream = exact_stream(BF16, 1024, 0.0, seed=6)
        words = stream.words.copy()
        words[700] = reconstruct(SplitFields(0x10, 0x55), BF16)
        stream = RawTensorStream(BF16, words)
        config = book_config(exact_stream(BF16, 1024, 0.0, seed=6))
        enc = encode(stream, config)
        assert enc.n_escapes == 1
        assert enc.chunk_counts.tolist() == [1]
        assert enc.escape_positions.tolist() == [700]
        assert enc.escape_values.tolist() == [0x10]
        # The escaped element carries dummy code 0 in the dense stream:
        # element 700 is even, so it sits in the low nibble of byte 350.
        assert enc.packed_codes[350] & 0x0F == 0
        decoded = decode(enc, config, enc.codebook)
        assert np.array_equal(decoded.words, words)
        chunks = list(enc.escape_chunks())
        assert chunks[0].count == 1 and chunks[0].index == 0

    def test_fmt_mismatch_rejected(self):
        stream = random_words(E5M2, 16, seed=0)
        with pytest.raises(ConfigError):
            encode(stream, CodecConfig(BF16))

    def test_empty_rejected(self):
        stream = RawTensorStream(BF16, np.zeros(0, dtype=np.uint16))
        with pytest.raises(EmptyInputError):
            encode(stream, CodecConfig(BF16))

    def test_escape_accounting(self):
        stream = exact_stream(BF16, 50_000, 0.0123, seed=8)
        # Pinned codebook: the exact-count escape rate survives encoding.
        enc = encode(stream, designated_config(BF16))
        assert enc.n_escapes == round(0.0123 * 50_000)
        # Dynamic codebook: escapes still equal the non-member count exactly.
        dyn = encode(stream, CodecConfig(BF16))
        exps, _ = split_fields(stream.words, BF16)
        member = dyn.codebook.member_table[exps]
        assert dyn.n_escapes == int((~member).sum())

    def test_determinism(self):
        stream = random_words(BF16, 30_000, seed=10)
        config = CodecConfig(BF16)
        assert_streams_identical(encode(stream, config), encode(stream, config))


class TestDecode:
    def test_hand_built_streams(self):
        book = ExponentCodebook(BF16, (0x7F,), 4, CodebookMode.TOPK_EXPLICIT)
        config = CodecConfig(BF16, codebook=book)
        streams = EncodedStreams(
            n_elements=2,
            n_escapes=0,
            packed_codes=bytes([0x00]),
            sign_mantissa=bytes([0x00, 0x80]),
            chunk_counts=np.zeros(1, dtype=np.uint32),
            escape_positions=np.zeros(0, dtype=np.uint16),
            escape_values=np.zeros(0, dtype=np.uint8),
            codebook=book,
        )
        decoded = decode(streams, config, book)
        assert decoded.words.tolist() == [0x3F80, 0xBF80]

    def test_zero_escape_pure_dense(self):
        stream = exact_stream(BF16, 2048, 0.0, seed=9)
        config = book_config(stream)
        enc = encode(stream, config)
        assert enc.n_escapes == 0
        decoded = decode(enc, config, enc.codebook)
        assert np.array_equal(decoded.words, stream.words)

    @pytest.mark.parametrize("mode", list(CodebookMode))
    def test_roundtrip_examples(self, mode):
        for seed in (0, 1, 2):
            stream = exact_stream(BF16, 5000, 0.01, seed=seed)
            config = CodecConfig(BF16, mode=mode)
            report = verify_roundtrip(stream, config)
            assert report.ok and report.mismatch_count == 0


class TestDecodeValidation:
    def setup_method(self):
        self.stream = exact_stream(BF16, 3000, 0.01, seed=12)
        self.config = book_config(self.stream)

    def test_position_beyond_chunk(self):
        enc = encode(self.stream, self.config)
        positions = enc.escape_positions.copy()
        positions[0] = self.config.chunk_size  # >= chunk_size
        bad = EncodedStreams(enc.n_elements, enc.n_escapes, enc.packed_codes,
                             enc.sign_mantissa, enc.chunk_counts, positions,
                             enc.escape_values, enc.codebook)
        with pytest.raises(CorruptionError):
            decode(bad, self.config, enc.codebook)

    def test_escape_value_inside_codebook(self):
        enc = encode(self.stream, self.config)
        values = enc.escape_values.copy()
        values[0] = enc.codebook.entries[0]
        bad = EncodedStreams(enc.n_elements, enc.n_escapes, enc.packed_codes,
                             enc.sign_mantissa, enc.chunk_counts,
                             enc.escape_positions, values, enc.codebook)
        with pytest.raises(CorruptionError) as excinfo:
            decode(bad, self.config, enc.codebook)
        assert "chunk" in str(excinfo.value)

    def test_length_mismatch(self):
        enc = encode(self.stream, self.config)
        bad = EncodedStreams(enc.n_elements + 1, enc.n_escapes, enc.packed_codes,
                             enc.sign_mantissa, enc.chunk_counts,
                             enc.escape_positions, enc.escape_values,
                             enc.codebook)
        with pytest.raises(CorruptionError):
            decode(bad, self.config, enc.codebook)

    def test_positions_not_increasing(self):
        stream = exact_stream(BF16, 1024, 0.01, seed=13)  # one chunk, ~10 escapes
        config = book_config(stream)
        enc = encode(stream, config)
        positions = enc.escape_positions.copy()
        positions[:2] = positions[:2][::-1]
        bad = EncodedStreams(enc.n_elements, enc.n_escapes, enc.packed_codes,
                             enc.sign_mantissa, enc.chunk_counts, positions,
                             enc.escape_values, enc.codebook)
        with pytest.raises(CorruptionError):
            decode(bad, config, enc.codebook)

    def test_nondummy_code_at_escape(self):
        enc = encode(self.stream, self.config)
        first_escape = int(np.repeat(
            np.arange(enc.chunk_counts.size) * self.config.chunk_size,
            enc.chunk_counts)[0] + enc.escape_positions[0])
        codes = bytearray(enc.packed_codes)
        byte_i, low = divmod(first_escape, 2)
        codes[byte_i] |= 0x05 if low == 0 else 0x50
        bad = EncodedStreams(enc.n_elements, enc.n_escapes, bytes(codes),
                             enc.sign_mantissa, enc.chunk_counts,
                             enc.escape_positions, enc.escape_values,
                             enc.codebook)
        with pytest.raises(CorruptionError):
            decode(bad, self.config, enc.codebook)


def _config_id(c: CodecConfig) -> str:
    return (f"{c.fmt.cli_name}-{c.code_bits}b-{c.mode.value}-"
            f"{c.position_mode}-c{c.chunk_size}")


class TestUniversalLosslessness:
    @pytest.mark.parametrize("idx,config", list(enumerate(ALL_CONFIGS)),
                             ids=lambda v: _config_id(v) if isinstance(
                                 v, CodecConfig) else None)
    def test_random_words_roundtrip(self, idx, config):
        stream = random_words(config.fmt, 20_000, seed=idx)
        report = verify_roundtrip(stream, config)
        assert report.ok, report

    def test_zero_coverage_codebook(self):
        # Codebook that covers nothing: every element escapes.
        stream = exact_stream(BF16, 4096, 0.0, seed=14)
        book = ExponentCodebook(BF16, (0x01, 0x02), 4, CodebookMode.TOPK_EXPLICIT)
        config = CodecConfig(BF16, codebook=book)
        enc = encode(stream, config)
        assert enc.n_escapes == enc.n_elements
        decoded = decode(enc, config, book)
        assert np.array_equal(decoded.words, stream.words)

    def test_nan_inf_patterns_opaque(self):
        words = np.array([0x7FC0, 0x7F80, 0xFF80, 0xFFFF, 0x0001], dtype=np.uint16)
        stream = RawTensorStream(BF16, words)
        assert verify_roundtrip(stream, CodecConfig(BF16)).ok

    @given(st.integers(1, 3000), st.integers(0, 2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_roundtrip_property(self, n, seed):
        stream = random_words(BF16, n, seed=seed)
        assert verify_roundtrip(stream, CodecConfig(BF16)).ok


class TestQuadPath:
    @pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 7, 1023, 1024, 1025, 40_000])
    def test_equivalence_boundaries(self, n):
        stream = random_words(BF16, n, seed=n)
        config = CodecConfig(BF16)
        assert_streams_identical(encode(stream, config),
                                 encode_quad(stream, config))

    @pytest.mark.parametrize("mode", list(CodebookMode))
    def test_equivalence_modes(self, mode):
        stream = exact_stream(BF16, 10_007, 0.05, seed=21)
        config = CodecConfig(BF16, mode=mode)
        assert_streams_identical(encode(stream, config),
                                 encode_quad(stream, config))

    def test_fallback_for_other_configs(self):
        stream = random_words(E5M2, 1000, seed=3)
        config = CodecConfig(E5M2)
        assert_streams_identical(encode(stream, config),
                                 encode_quad(stream, config))


class TestSizesAndRatios:
    def test_payload_formula_bf16(self):
        # 1024 elements, no escapes, one chunk: N + N/2 + one 4-byte count.
        config = CodecConfig(BF16)
        assert compressed_payload_bytes(1024, 0, config) == 1540

    @pytest.mark.parametrize("config", ALL_CONFIGS, ids=_config_id)
    def test_payload_matches_serialized(self, config):
        stream = random_words(config.fmt, 12_345, seed=17)
        enc = encode(stream, config)
        assert enc.payload_nbytes == compressed_payload_bytes(
            enc.n_elements, enc.n_escapes, config)

    def test_ratio_asymptote(self):
        assert compression_ratio(1000, 0, CodecConfig(BF16)) == pytest.approx(4 / 3)

    def test_ratio_formula_values(self):
        config = CodecConfig(BF16)
        n = 1_000_000
        assert compression_ratio(n, round(0.0016 * n), config) == pytest.approx(
            2 / (1.5 + 3 * 0.0016), rel=1e-6)
        top8 = CodecConfig(BF16, code_bits=3)
        assert compression_ratio(n, round(0.0789 * n), top8) == pytest.approx(
            2 / (1 + 3 / 8 + 3 * 0.0789), rel=1e-6)
        sent = CodecConfig(BF16, mode=CodebookMode.TOP15_SENTINEL)
        assert compression_ratio(n, round(0.0027 * n), sent) == pytest.approx(
            2 / (1.5 + 0.0027), rel=1e-6)

    def test_ratio_monotone_in_escapes(self):
        config = CodecConfig(BF16)
        ratios = [compression_ratio(10_000, m, config) for m in range(0, 5000, 100)]
        assert all(b < a for a, b in zip(ratios, ratios[1:]))

    def test_position_width_rule(self):
        n, m = 10_000, 100
        r256 = CodecConfig(BF16, chunk_size=256)
        r1024 = CodecConfig(BF16, chunk_size=1024)
        abs32 = CodecConfig(BF16, position_mode=PositionMode.ABSOLUTE_32)
        assert r256.position_nbytes == 1
        assert r1024.position_nbytes == 2
        assert abs32.position_nbytes == 4
        # Size deltas are exactly M bytes per extra position byte (minus the
        # chunk-count bookkeeping difference).
        base = compressed_payload_bytes(n, m, r1024)
        small = compressed_payload_bytes(n, m, r256)
        n_chunk_diff = (-(-n // 256)) - (-(-n // 1024))
        assert base - small == m - 4 * n_chunk_diff
        assert compressed_payload_bytes(n, m, abs32) - base == \
            2 * m - 4 * (-(-n // 1024))


class TestModeEquivalence:
    @pytest.mark.parametrize("fmt", list(ElementFormat))
    def test_same_plaintext(self, fmt):
        stream = random_words(fmt, 9999, seed=23)
        explicit = CodecConfig(fmt, mode=CodebookMode.TOPK_EXPLICIT)
        sentinel = CodecConfig(fmt, mode=CodebookMode.TOP15_SENTINEL)
        enc_e = encode(stream, explicit)
        enc_s = encode(stream, sentinel)
        out_e = decode(enc_e, explicit, enc_e.codebook)
        out_s = decode(enc_s, sentinel, enc_s.codebook)
        assert np.array_equal(out_e.words, out_s.words)
        assert np.array_equal(out_e.words, stream.words)


class TestVerifyRoundtrip:
    def test_report_shape(self, bf16_stream):
        report = verify_roundtrip(bf16_stream, CodecConfig(BF16))
        assert report.ok
        assert report.n == bf16_stream.n_elements
        assert report.mismatch_count == 0
        assert report.first_mismatch_index is None

    def test_compare_locates_mismatch(self, bf16_stream):
        tampered = bf16_stream.words.copy()
        tampered[42] ^= 1
        report = compare_streams(bf16_stream,
                                 RawTensorStream(BF16, tampered))
        assert not report.ok
        assert report.mismatch_count == 1
        assert report.first_mismatch_index == 42
