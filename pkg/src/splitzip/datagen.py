"""Deterministic synthetic streams with controlled exponent statistics.

Every ratio and coverage claim in the test suite runs on streams from this
module, so generation must be exactly reproducible: numpy's PCG64 generator
seeded from the recipe, sign-mantissa bits drawn uniformly, escape positions
a uniform permutation. In exact-count mode the output histogram matches the
requested distribution with zero sampling error (largest-remainder
apportionment), which is what lets tests pin escape rates like 0.16% to the
element.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .formats import ElementFormat, RawTensorStream, SplitFields, reconstruct
from . import container

__all__ = ["ExponentSpec", "generate", "ingest_raw", "load_spec_file",
           "parse_spec_text", "spec_metadata", "PRNG_NAME"]

PRNG_NAME = "numpy-pcg64"

# Loosely entropy-matched default: geometric decay over 16 common exponents.
_DEFAULT_DECAY = 0.72


@dataclass(frozen=True)
class ExponentSpec:
    """Recipe for one synthetic stream."""

    fmt: ElementFormat
    count: int
    seed: int = 0
    in_book: tuple[tuple[int, float], ...] = ()
    escape_values: tuple[int, ...] = ()
    escape_rate: float = 0.0
    exact_counts: bool = True

    def __post_init__(self):
        if self.count < 1:
            raise ConfigError(f"count must be >= 1, got {self.count}")
        if not 0 <= self.escape_rate < 1:
            raise ConfigError("escape_rate must be in [0, 1)")
        in_book = tuple((int(e), float(w)) for e, w in self.in_book)
        if not in_book:
            in_book = default_in_book(self.fmt)
        escapes = tuple(int(e) for e in self.escape_values)
        object.__setattr__(self, "in_book", in_book)
        object.__setattr__(self, "escape_values", escapes)
        book_set = {e for e, _ in in_book}
        if len(book_set) != len(in_book):
            raise ConfigError("in_book exponents must be distinct")
        if any(w <= 0 for _, w in in_book):
            raise ConfigError("in_book weights must be positive")
        if len(set(escapes)) != len(escapes):
            raise ConfigError("escape_values must be distinct")
        if book_set & set(escapes):
            raise ConfigError("in_book and escape_values must be disjoint")
        domain = self.fmt.exp_bins
        for e in list(book_set) + list(escapes):
            if not 0 <= e < domain:
                raise ConfigError(f"exponent {e} outside the {domain}-bin domain")
        if self.escape_rate > 0 and not escapes:
            raise ConfigError("escape_rate > 0 requires escape_values")


def default_in_book(fmt: ElementFormat) -> tuple[tuple[int, float], ...]:
    """16 exponents centered mid-domain with geometrically decaying weights."""
    center = fmt.exp_bins // 2
    exps = [center + (i + 1) // 2 * (-1 if i % 2 else 1) for i in range(16)]
    exps = [e for e in exps if 0 <= e < fmt.exp_bins][:16]
    return tuple((e, _DEFAULT_DECAY ** i) for i, e in enumerate(exps))


def _apportion(total: int, weights: np.ndarray) -> np.ndarray:
    """Split ``total`` into integer parts proportional to weights.

    Largest-remainder method; ties go to the lowest index, so the result is
    deterministic.
    """
    if total == 0:
        return np.zeros(len(weights), dtype=np.int64)
    ideal = weights / weights.sum() * total
    base = np.floor(ideal).astype(np.int64)
    leftover = total - int(base.sum())
    if leftover:
        remainders = ideal - base
        order = np.lexsort((np.arange(len(weights)), -remainders))
        base[order[:leftover]] += 1
    return base


def generate(spec: ExponentSpec) -> RawTensorStream:
    """Build the stream described by ``spec``; same spec, same bytes."""
    rng = np.random.default_rng(spec.seed)
    n = spec.count
    book_exps = np.array([e for e, _ in spec.in_book], dtype=np.int64)
    book_weights = np.array([w for _, w in spec.in_book], dtype=np.float64)
    esc_exps = np.array(spec.escape_values, dtype=np.int64)

    if spec.exact_counts:
        m = int(round(spec.escape_rate * n))
        book_counts = _apportion(n - m, book_weights)
        esc_counts = (_apportion(m, np.ones(len(esc_exps)))
                      if len(esc_exps) else np.zeros(0, dtype=np.int64))
        exponents = np.concatenate([
            np.repeat(book_exps, book_counts),
            np.repeat(esc_exps, esc_counts),
        ])
        rng.shuffle(exponents)
    else:
        probs = np.concatenate([
            (1.0 - spec.escape_rate) * book_weights / book_weights.sum(),
            np.full(len(esc_exps), spec.escape_rate / max(len(esc_exps), 1)),
        ])
        pool = np.concatenate([book_exps, esc_exps])
        exponents = rng.choice(pool, size=n, p=probs / probs.sum())

    sm = rng.integers(0, 1 << spec.fmt.sm_bits, size=n, dtype=np.uint8)
    words = reconstruct(SplitFields(exponents.astype(np.uint8), sm), spec.fmt)
    return RawTensorStream(spec.fmt, words)


def ingest_raw(source) -> RawTensorStream:
    """Load a raw tensor dump from disk, bitwise."""
    return container.read_raw_tensor(source)


def spec_metadata(spec: ExponentSpec) -> dict:
    """Reproducibility sidecar recorded next to generated dumps."""
    return {
        "generator": PRNG_NAME,
        "seed": spec.seed,
        "format": spec.fmt.cli_name,
        "count": spec.count,
        "escape_rate": spec.escape_rate,
        "exact_counts": spec.exact_counts,
        "in_book": [[e, w] for e, w in spec.in_book],
        "escape_values": list(spec.escape_values),
    }


def _parse_int(text: str) -> int:
    return int(text.strip(), 0)  # accepts decimal and 0x hex


def parse_spec_text(text: str) -> ExponentSpec:
    """Parse the key=value spec format.

    Keys: format, count, seed, escape_rate, exact_counts, in_book (entries
    like ``0x7F:8.0`` separated by spaces or commas), escape_values. Lines
    starting with ``#`` are comments.
    """
    fields: dict[str, str] = {}
    for lineno, raw_line in enumerate(text.splitlines(), 1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"spec line {lineno} is not key = value: {raw_line!r}")
        key, value = line.split("=", 1)
        fields[key.strip().lower()] = value.strip()
    if "format" not in fields or "count" not in fields:
        raise ConfigError("spec file needs at least 'format' and 'count'")

    in_book = []
    for item in fields.get("in_book", "").replace(",", " ").split():
        if ":" in item:
            exp, weight = item.split(":", 1)
            in_book.append((_parse_int(exp), float(weight)))
        else:
            in_book.append((_parse_int(item), 1.0))
    escape_values = tuple(
        _parse_int(item)
        for item in fields.get("escape_values", "").replace(",", " ").split())

    return ExponentSpec(
        fmt=ElementFormat.from_name(fields["format"]),
        count=_parse_int(fields["count"]),
        seed=_parse_int(fields.get("seed", "0")),
        in_book=tuple(in_book),
        escape_values=escape_values,
        escape_rate=float(fields.get("escape_rate", "0")),
        exact_counts=fields.get("exact_counts", "true").lower()
        in ("1", "true", "yes"),
    )


def load_spec_file(path) -> ExponentSpec:
    return parse_spec_text(Path(path).read_text())
