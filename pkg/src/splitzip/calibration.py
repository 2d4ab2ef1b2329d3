"""Exponent histograms, entropy/coverage metrics, and codebook construction.

A codebook is the ordered list of the most frequent exponent values seen
during calibration, together with the three derived lookup tables used by the
codec: exponent -> code (encode), code -> exponent (decode), and exponent ->
in-codebook (membership). Entries are ordered by descending calibration count
with ties broken by ascending exponent value, so code 0 always names the most
frequent exponent and codebooks are reproducible.

Histograms are additive: partial histograms over disjoint sub-streams merged
with :func:`merge_stats` equal the sequential result exactly, which is what
makes sharded calibration safe.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, EmptyInputError
from .formats import ElementFormat, RawTensorStream, split_fields

__all__ = [
    "CalibrationStats",
    "CodebookMode",
    "ExponentCodebook",
    "ESCAPE_CODE",
    "build_histogram",
    "merge_stats",
    "entropy_bits",
    "top_k_coverage",
    "select_codebook",
    "coverage_by_group",
]

# Marker stored in the encode table for exponents outside the codebook.
# Real codes are < 16, so 0xFF can never collide.
ESCAPE_CODE = 0xFF


class CodebookMode(enum.Enum):
    """How escapes are represented in the dense code stream."""

    TOPK_EXPLICIT = "explicit"    # all 2^code_bits codes name exponents; escapes
    #                               get a dummy code and an explicit position
    TOP15_SENTINEL = "sentinel"   # top code reserved as an in-band escape marker

    @classmethod
    def from_name(cls, name: str) -> "CodebookMode":
        for mode in cls:
            if mode.value == name.lower():
                return mode
        raise ConfigError(f"unknown codebook mode {name!r}")


@dataclass(frozen=True)
class CalibrationStats:
    """Exponent histogram of a (possibly merged) calibration corpus."""

    fmt: ElementFormat
    counts: np.ndarray  # int64, one bin per representable exponent
    total: int

    def __post_init__(self):
        counts = np.ascontiguousarray(self.counts, dtype=np.int64)
        object.__setattr__(self, "counts", counts)
        if counts.shape != (self.fmt.exp_bins,):
            raise ConfigError(
                f"histogram must have {self.fmt.exp_bins} bins for "
                f"{self.fmt.cli_name}, got shape {counts.shape}")
        if counts.min() < 0:
            raise ConfigError("histogram counts must be non-negative")
        if int(counts.sum()) != self.total:
            raise ConfigError("histogram total disagrees with bin counts")


def build_histogram(stream: RawTensorStream) -> CalibrationStats:
    """Count how often each exponent value occurs in the stream."""
    if stream.n_elements == 0:
        raise EmptyInputError("cannot build a histogram from an empty stream")
    exp, _ = split_fields(stream.words, stream.fmt)
    counts = np.bincount(exp, minlength=stream.fmt.exp_bins).astype(np.int64)
    return CalibrationStats(stream.fmt, counts, stream.n_elements)


def merge_stats(*stats: CalibrationStats) -> CalibrationStats:
    """Merge histograms by bin-wise addition (order-independent)."""
    if not stats:
        raise EmptyInputError("no histograms to merge")
    fmt = stats[0].fmt
    if any(s.fmt is not fmt for s in stats):
        raise ConfigError("cannot merge histograms of different element formats")
    counts = np.sum([s.counts for s in stats], axis=0, dtype=np.int64)
    return CalibrationStats(fmt, counts, int(counts.sum()))


def entropy_bits(stats: CalibrationStats) -> float:
    """Shannon entropy of the exponent distribution, in bits per element."""
    if stats.total <= 0:
        raise EmptyInputError("entropy of an empty histogram is undefined")
    p = stats.counts[stats.counts > 0] / stats.total
    return float(-np.sum(p * np.log2(p)))


def _ranked_exponents(stats: CalibrationStats) -> np.ndarray:
    """All exponent values sorted by (count desc, exponent value asc)."""
    order = np.lexsort((np.arange(stats.fmt.exp_bins), -stats.counts))
    return order


def top_k_coverage(stats: CalibrationStats, k: int) -> float:
    """Fraction of calibration elements covered by the k most frequent exponents."""
    if not 1 <= k <= stats.fmt.exp_bins:
        raise ConfigError(f"k must be in [1, {stats.fmt.exp_bins}], got {k}")
    if stats.total <= 0:
        raise EmptyInputError("coverage of an empty histogram is undefined")
    ranked = _ranked_exponents(stats)
    return float(stats.counts[ranked[:k]].sum() / stats.total)


@dataclass(frozen=True)
class ExponentCodebook:
    """Ordered top-k exponent set with its derived lookup tables."""

    fmt: ElementFormat
    entries: tuple[int, ...]
    code_bits: int
    mode: CodebookMode
    encode_table: np.ndarray = field(repr=False, compare=False, default=None)
    decode_table: np.ndarray = field(repr=False, compare=False, default=None)
    member_table: np.ndarray = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        if self.code_bits not in (3, 4):
            raise ConfigError(f"code_bits must be 3 or 4, got {self.code_bits}")
        cap = self.capacity
        entries = tuple(int(e) for e in self.entries)
        if len(set(entries)) != len(entries):
            raise ConfigError("codebook entries must be distinct")
        if len(entries) > cap:
            raise ConfigError(
                f"{len(entries)} entries exceed capacity {cap} for "
                f"{self.code_bits}-bit {self.mode.value} codes")
        if entries and (min(entries) < 0 or max(entries) >= self.fmt.exp_bins):
            raise ConfigError("codebook entry outside the exponent domain")
        object.__setattr__(self, "entries", entries)
        encode = np.full(self.fmt.exp_bins, ESCAPE_CODE, dtype=np.uint8)
        decode = np.zeros(len(entries), dtype=np.uint8)
        member = np.zeros(self.fmt.exp_bins, dtype=bool)
        for code, exp in enumerate(entries):
            encode[exp] = code
            decode[code] = exp
            member[exp] = True
        object.__setattr__(self, "encode_table", encode)
        object.__setattr__(self, "decode_table", decode)
        object.__setattr__(self, "member_table", member)

    @property
    def capacity(self) -> int:
        """Maximum entry count: all codes, minus one reserved in sentinel mode."""
        n_codes = 1 << self.code_bits
        return n_codes - 1 if self.mode is CodebookMode.TOP15_SENTINEL else n_codes

    @property
    def sentinel_code(self) -> int:
        if self.mode is not CodebookMode.TOP15_SENTINEL:
            raise ConfigError("sentinel code only exists in sentinel mode")
        return (1 << self.code_bits) - 1


def select_codebook(stats: CalibrationStats, code_bits: int,
                    mode: CodebookMode) -> ExponentCodebook:
    """Pick the top-k exponents from a histogram (k = code capacity).

    Only exponents that actually occur are admitted, so a sparse histogram
    yields a short codebook. Top-k by count is coverage-optimal for fixed k.
    """
    if stats.total <= 0:
        raise EmptyInputError("cannot select a codebook from an empty histogram")
    if code_bits not in (3, 4):
        raise ConfigError(f"code_bits must be 3 or 4, got {code_bits}")
    capacity = (1 << code_bits) - (1 if mode is CodebookMode.TOP15_SENTINEL else 0)
    ranked = _ranked_exponents(stats)
    nonzero = ranked[stats.counts[ranked] > 0]
    entries = tuple(int(e) for e in nonzero[:capacity])
    return ExponentCodebook(stats.fmt, entries, code_bits, mode)


def coverage_by_group(stream: RawTensorStream, group_size: int,
                      codebook: ExponentCodebook) -> np.ndarray:
    """Coverage of each consecutive ``group_size``-element group.

    The last group may be partial. Useful for spotting low-coverage regions
    (e.g. individual layers) under one shared codebook without paying for
    per-group codecs.
    """
    if group_size < 1:
        raise ConfigError(f"group_size must be >= 1, got {group_size}")
    if stream.fmt is not codebook.fmt:
        raise ConfigError("stream and codebook formats differ")
    if stream.n_elements == 0:
        raise EmptyInputError("cannot compute coverage of an empty stream")
    exp, _ = split_fields(stream.words, stream.fmt)
    member = codebook.member_table[exp]
    n = stream.n_elements
    edges = np.arange(0, n + group_size, group_size)
    edges[-1] = min(edges[-1], n)
    hits = np.add.reduceat(member.astype(np.int64), edges[:-1])
    sizes = np.diff(edges)
    return hits / sizes
