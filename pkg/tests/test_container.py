"""File format round-trips, determinism, and malformed-input rejection."""

from __future__ import annotations

import numpy as np
import pytest

from splitzip import (
    BadMagicError,
    CodebookMode,
    CodecConfig,
    ContainerError,
    ElementFormat,
    LengthMismatchError,
    PositionMode,
    RawTensorStream,
    SplitZipError,
    TruncatedError,
    UnsupportedVersionError,
    compare_streams,
    decode,
    encode,
    read_codebook,
    read_container,
    read_raw_tensor,
    select_codebook,
    build_histogram,
    write_codebook,
    write_container,
    write_raw_tensor,
)
from splitzip.container import (
    codebook_from_bytes,
    codebook_record_bytes,
    codebook_text,
    container_from_bytes,
    container_to_bytes,
    raw_tensor_from_bytes,
    raw_tensor_to_bytes,
)
from tests.conftest import designated_config, exact_stream, random_words

BF16 = ElementFormat.BF16


def small_container() -> tuple[RawTensorStream, CodecConfig, bytes]:
    """A compact container where every byte is load-bearing.

    All 16 codebook entries are used by the dense stream and escapes land in
    chunks past the first, so any single-byte corruption must either fail a
    classified check or change the decoded words.
    """
    book = tuple((0x70 + i, 1.0) for i in range(16))
    stream = exact_stream(BF16, 128, 0.0625, seed=42,
                          book=book, escapes=(0x10, 0x20))
    config = designated_config(BF16, book=book, chunk_size=32)
    enc = encode(stream, config)
    assert enc.n_escapes == 8
    assert len(enc.codebook.entries) == 16
    # Every code is exercised and escapes reach chunks past the first.
    assert np.unique(np.frombuffer(enc.packed_codes, np.uint8)).size > 8
    assert enc.chunk_counts[1:].sum() > 0
    data = container_to_bytes(enc, config, enc.codebook)
    return stream, config, data


class TestContainerRoundtrip:
    @pytest.mark.parametrize("fmt", list(ElementFormat))
    @pytest.mark.parametrize("mode", list(CodebookMode))
    def test_write_read_decode(self, tmp_path, fmt, mode):
        stream = random_words(fmt, 4001, seed=31)
        config = CodecConfig(fmt, mode=mode)
        enc = encode(stream, config)
        path = tmp_path / "t.splz"
        n_bytes = write_container(enc, config, enc.codebook, path)
        assert n_bytes == path.stat().st_size
        streams2, config2, codebook2 = read_container(path)
        decoded = decode(streams2, config2, codebook2)
        assert compare_streams(stream, decoded).ok

    def test_reread_equal_sections(self):
        _, config, data = small_container()
        streams2, config2, codebook2 = container_from_bytes(data)
        assert container_to_bytes(streams2, config2, codebook2) == data

    def test_deterministic_bytes(self):
        stream = exact_stream(BF16, 2000, 0.01, seed=7)
        config = CodecConfig(BF16)
        enc1 = encode(stream, config)
        enc2 = encode(stream, config)
        assert container_to_bytes(enc1, config, enc1.codebook) == \
            container_to_bytes(enc2, config, enc2.codebook)

    def test_header_plus_payload_size(self):
        stream = exact_stream(BF16, 1024, 0.0, seed=1)
        config = CodecConfig(BF16)
        enc = encode(stream, config)
        data = container_to_bytes(enc, config, enc.codebook)
        header = 28 + (9 + len(enc.codebook.entries))
        assert len(data) == header + 1540

    def test_abs32_positions(self):
        stream = exact_stream(BF16, 3000, 0.01, seed=3)
        config = CodecConfig(BF16, position_mode=PositionMode.ABSOLUTE_32)
        enc = encode(stream, config)
        data = container_to_bytes(enc, config, enc.codebook)
        streams2, config2, codebook2 = container_from_bytes(data)
        assert config2.position_mode == PositionMode.ABSOLUTE_32
        assert streams2.escape_positions.dtype == np.uint32
        assert compare_streams(stream, decode(streams2, config2, codebook2)).ok


class TestContainerRejection:
    def test_bad_magic(self):
        _, _, data = small_container()
        with pytest.raises(BadMagicError):
            container_from_bytes(b"XXXX" + data[4:])

    def test_bad_version(self):
        _, _, data = small_container()
        with pytest.raises(UnsupportedVersionError):
            container_from_bytes(data[:4] + bytes([99]) + data[5:])

    def test_unknown_format_code(self):
        _, _, data = small_container()
        with pytest.raises(ContainerError):
            container_from_bytes(data[:5] + bytes([7]) + data[6:])

    def test_trailing_garbage(self):
        _, _, data = small_container()
        with pytest.raises(LengthMismatchError):
            container_from_bytes(data + b"\x00")

    def test_truncation_every_offset(self):
        _, _, data = small_container()
        for cut in range(len(data)):
            with pytest.raises((TruncatedError, SplitZipError)):
                container_from_bytes(data[:cut])

    def test_truncation_names_section(self):
        _, _, data = small_container()
        with pytest.raises(TruncatedError) as excinfo:
            container_from_bytes(data[:-1])
        assert excinfo.value.section == "escape_values"

    def test_corruption_harness(self):
        stream, _, data = small_container()
        rng = np.random.default_rng(2024)
        outcomes = {"error": 0, "mismatch": 0}
        for _ in range(1500):
            pos = int(rng.integers(0, len(data)))
            bit = int(rng.integers(0, 8))
            mutated = bytearray(data)
            mutated[pos] ^= 1 << bit
            try:
                streams, config, codebook = container_from_bytes(bytes(mutated))
                decoded = decode(streams, config, codebook)
            except SplitZipError:
                outcomes["error"] += 1
                continue
            report = compare_streams(stream, decoded)
            assert not report.ok, (
                f"corrupting byte {pos} bit {bit} went undetected")
            outcomes["mismatch"] += 1
        assert outcomes["error"] > 0 and outcomes["mismatch"] > 0


class TestRawTensorFile:
    @pytest.mark.parametrize("fmt", list(ElementFormat))
    def test_roundtrip(self, tmp_path, fmt):
        stream = random_words(fmt, 777, seed=5)
        path = tmp_path / "t.szrw"
        n_bytes = write_raw_tensor(stream, path)
        assert n_bytes == 14 + stream.raw_bytes
        back = read_raw_tensor(path)
        assert back.fmt is fmt
        assert np.array_equal(back.words, stream.words)

    def test_bad_magic(self):
        stream = random_words(BF16, 5, seed=0)
        data = raw_tensor_to_bytes(stream)
        with pytest.raises(BadMagicError):
            raw_tensor_from_bytes(b"ZZZZ" + data[4:])

    def test_truncated_payload(self):
        data = raw_tensor_to_bytes(random_words(BF16, 10, seed=0))
        with pytest.raises(TruncatedError):
            raw_tensor_from_bytes(data[:-3])

    def test_trailing_bytes(self):
        data = raw_tensor_to_bytes(random_words(BF16, 10, seed=0))
        with pytest.raises(LengthMismatchError):
            raw_tensor_from_bytes(data + b"!")


class TestCodebookFile:
    def test_roundtrip(self, tmp_path):
        stream = random_words(BF16, 10_000, seed=6)
        book = select_codebook(build_histogram(stream), 4,
                               CodebookMode.TOP15_SENTINEL)
        path = tmp_path / "book.szcb"
        write_codebook(book, path)
        back = read_codebook(path)
        assert back == book

    def test_record_layout(self):
        book = select_codebook(
            build_histogram(random_words(BF16, 1000, seed=7)), 4,
            CodebookMode.TOPK_EXPLICIT)
        record = codebook_record_bytes(book)
        assert record[:4] == b"SZCB"
        assert record[4] == 1
        assert len(record) == 9 + len(book.entries)
        assert codebook_from_bytes(record) == book

    def test_text_dump(self):
        book = select_codebook(
            build_histogram(random_words(BF16, 1000, seed=8)), 4,
            CodebookMode.TOP15_SENTINEL)
        text = codebook_text(book)
        assert "sentinel" in text
        assert f"0x{book.entries[0]:02X}" in text
