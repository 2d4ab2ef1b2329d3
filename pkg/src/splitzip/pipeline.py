"""Analytic model of compressed tensor transfer.

Moving S raw bytes over a link of bandwidth B with a codec of ratio r costs
three stage times:

    t_enc = S / G_enc        t_xfer = S / (r * B)        t_dec = S / G_dec

In a steady-state pipeline of many chunks the slowest stage dominates, so the
codec is fully hidden exactly when transfer is the bottleneck, i.e. whenever
B <= min(G_enc, G_dec) / r (the hiding bandwidth).

For one-shot transfers the model uses additive accounting instead: the
compressed path costs t_enc + t_xfer + t_dec (plus an optional fixed
per-transfer overhead), versus S / B (plus the same overhead) for moving the
raw bytes. All throughputs are expressed over *raw* bytes; only the link sees
compressed bytes.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

from .errors import ConfigError, EmptyInputError

__all__ = [
    "PipelineParams",
    "TransferBreakdown",
    "SweepRow",
    "stage_times",
    "pipeline_time",
    "hiding_bandwidth",
    "transfer_breakdown",
    "breakdown_from_params",
    "sweep_simulation",
    "write_sweep_csv",
    "breakdown_to_json",
]


@dataclass(frozen=True)
class PipelineParams:
    """One transfer's inputs. Throughputs and bandwidth share the same unit
    (e.g. bytes/s with raw_bytes in bytes, or GB/s with raw_bytes in GB)."""

    raw_bytes: float
    ratio: float
    enc_throughput: float
    dec_throughput: float
    link_bandwidth: float

    def __post_init__(self):
        for name in ("raw_bytes", "ratio", "enc_throughput",
                     "dec_throughput", "link_bandwidth"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be strictly positive")


@dataclass(frozen=True)
class TransferBreakdown:
    """Additive accounting of one compressed transfer vs. the raw baseline."""

    t_enc: float
    t_xfer: float
    t_dec: float
    t_total_compressed: float
    t_native: float
    frac_enc: float
    frac_xfer: float
    frac_dec: float
    speedup: float


@dataclass(frozen=True)
class SweepRow:
    batch: int
    seq_len: int
    raw_bytes: float
    native_ms: float
    compressed_ms: float
    speedup: float


def stage_times(p: PipelineParams) -> tuple[float, float, float]:
    """(encode, transfer, decode) times for one transfer of p.raw_bytes."""
    return (
        p.raw_bytes / p.enc_throughput,
        p.raw_bytes / (p.ratio * p.link_bandwidth),
        p.raw_bytes / p.dec_throughput,
    )


def pipeline_time(p: PipelineParams) -> float:
    """Steady-state per-chunk pipeline time: the slowest of the three stages."""
    return max(stage_times(p))


def hiding_bandwidth(enc_throughput: float, dec_throughput: float,
                     ratio: float) -> float:
    """Largest link bandwidth at which both codec stages stay fully hidden."""
    if not (enc_throughput > 0 and dec_throughput > 0 and ratio > 0):
        raise ConfigError("throughputs and ratio must be strictly positive")
    return min(enc_throughput, dec_throughput) / ratio


def transfer_breakdown(t_enc: float, t_xfer: float, t_dec: float,
                       t_native: float) -> TransferBreakdown:
    """Breakdown from directly measured (or precomputed) stage times."""
    if min(t_enc, t_xfer, t_dec, t_native) <= 0:
        raise ConfigError("stage times must be strictly positive")
    total = t_enc + t_xfer + t_dec
    return TransferBreakdown(
        t_enc=t_enc,
        t_xfer=t_xfer,
        t_dec=t_dec,
        t_total_compressed=total,
        t_native=t_native,
        frac_enc=t_enc / total,
        frac_xfer=t_xfer / total,
        frac_dec=t_dec / total,
        speedup=t_native / total,
    )


def breakdown_from_params(p: PipelineParams,
                          overhead: float = 0.0) -> TransferBreakdown:
    """Breakdown computed from the stage-time formulas.

    ``overhead`` is a fixed per-transfer cost (seconds) that hits the native
    and compressed paths equally; it models launch/setup latency that makes
    small transfers benefit less than the ratio alone suggests.
    """
    if overhead < 0:
        raise ConfigError("overhead must be non-negative")
    t_enc, t_xfer, t_dec = stage_times(p)
    total = t_enc + t_xfer + t_dec + overhead
    t_native = p.raw_bytes / p.link_bandwidth + overhead
    return TransferBreakdown(
        t_enc=t_enc,
        t_xfer=t_xfer,
        t_dec=t_dec,
        t_total_compressed=total,
        t_native=t_native,
        frac_enc=t_enc / total,
        frac_xfer=t_xfer / total,
        frac_dec=t_dec / total,
        speedup=t_native / total,
    )


def sweep_simulation(kv_bytes_per_token: float,
                     batch_sizes: Sequence[int],
                     seq_lens: Sequence[int],
                     ratio: float,
                     enc_throughput: float,
                     dec_throughput: float,
                     link_bandwidth: float,
                     overhead: float = 0.0) -> list[SweepRow]:
    """Model every (batch, seq_len) point; rows sorted by batch then seq."""
    if kv_bytes_per_token <= 0:
        raise ConfigError("kv_bytes_per_token must be strictly positive")
    if not batch_sizes or not seq_lens:
        raise EmptyInputError("sweep needs at least one batch size and one "
                              "sequence length")
    rows = []
    for batch in sorted(int(b) for b in batch_sizes):
        for seq in sorted(int(s) for s in seq_lens):
            if batch < 1 or seq < 1:
                raise ConfigError("batch sizes and sequence lengths must be >= 1")
            raw = kv_bytes_per_token * batch * seq
            b = breakdown_from_params(
                PipelineParams(raw, ratio, enc_throughput, dec_throughput,
                               link_bandwidth),
                overhead=overhead)
            rows.append(SweepRow(
                batch=batch,
                seq_len=seq,
                raw_bytes=raw,
                native_ms=b.t_native * 1e3,
                compressed_ms=b.t_total_compressed * 1e3,
                speedup=b.speedup,
            ))
    return rows


def write_sweep_csv(rows: Iterable[SweepRow], fileobj) -> None:
    """Header row plus one row per sweep point."""
    writer = csv.writer(fileobj)
    writer.writerow(["batch", "seq_len", "raw_bytes", "native_ms",
                     "compressed_ms", "speedup"])
    for row in rows:
        writer.writerow([row.batch, row.seq_len, f"{row.raw_bytes:.0f}",
                         f"{row.native_ms:.6f}", f"{row.compressed_ms:.6f}",
                         f"{row.speedup:.6f}"])


def breakdown_to_json(breakdown: TransferBreakdown, indent: int = 2) -> str:
    return json.dumps(asdict(breakdown), indent=indent)
