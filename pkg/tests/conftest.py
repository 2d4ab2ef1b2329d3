"""Shared builders for synthetic streams with pinned exponent statistics."""

from __future__ import annotations

import numpy as np
import pytest

from splitzip import (
    CodebookMode,
    CodecConfig,
    ElementFormat,
    ExponentCodebook,
    ExponentSpec,
    RawTensorStream,
    generate,
)

# A 16-exponent profile with geometric weights, plus escapes well outside it.
BF16_BOOK = tuple((0x70 + i, 0.72 ** i) for i in range(16))
BF16_ESCAPES = (0x10, 0x20, 0x30, 0xF0)

E5M2_BOOK = tuple((8 + i, 0.7 ** i) for i in range(16))
E5M2_ESCAPES = (0, 1, 29, 30)

E4M3_BOOK = tuple((4 + i, 0.7 ** i) for i in range(8))
E4M3_ESCAPES = (0, 1, 14, 15)


def exact_stream(fmt: ElementFormat, count: int, escape_rate: float,
                 seed: int = 0, book=None, escapes=None) -> RawTensorStream:
    """Stream whose escape count is exactly round(escape_rate * count)."""
    if book is None:
        book, escapes = {
            ElementFormat.BF16: (BF16_BOOK, BF16_ESCAPES),
            ElementFormat.FP8_E5M2: (E5M2_BOOK, E5M2_ESCAPES),
            ElementFormat.FP8_E4M3: (E4M3_BOOK, E4M3_ESCAPES),
        }[fmt]
    return generate(ExponentSpec(
        fmt=fmt, count=count, seed=seed, in_book=book,
        escape_values=escapes, escape_rate=escape_rate, exact_counts=True))


def random_words(fmt: ElementFormat, count: int, seed: int) -> RawTensorStream:
    """Uniform random bit patterns over the full word domain."""
    rng = np.random.default_rng(seed)
    words = rng.integers(0, 1 << fmt.word_bits, size=count).astype(fmt.word_dtype)
    return RawTensorStream(fmt, words)


def designated_config(fmt: ElementFormat, book=None,
                      mode: CodebookMode = CodebookMode.TOPK_EXPLICIT,
                      code_bits: int = 4, **kwargs) -> CodecConfig:
    """Config whose codebook is exactly the designated in-book exponent set.

    Unlike calibrating on the stream, this pins the escape set to the
    recipe's escape_values, so exact-count escape rates survive encoding
    unchanged.
    """
    if book is None:
        book = {
            ElementFormat.BF16: BF16_BOOK,
            ElementFormat.FP8_E5M2: E5M2_BOOK,
            ElementFormat.FP8_E4M3: E4M3_BOOK,
        }[fmt]
    entries = tuple(e for e, _ in book)  # already sorted by weight, descending
    codebook = ExponentCodebook(fmt, entries, code_bits, mode)
    return CodecConfig(fmt, code_bits, mode, codebook=codebook, **kwargs)


@pytest.fixture
def bf16_stream() -> RawTensorStream:
    return exact_stream(ElementFormat.BF16, 10_000, 0.0016, seed=3)
