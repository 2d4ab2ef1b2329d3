"""Operator-facing command line tool.

Commands: calibrate, compress, decompress, verify, bench, simulate, ablate,
generate. Report-style commands (simulate, ablate, calibrate) can write a
figure next to their CSV/JSON output via --plot.

Exit codes: 0 success, 1 bitwise verification failure, 2 usage error (click),
3 malformed/corrupt data, 4 configuration error. The SPLITZIP_THREADS
environment variable caps the worker threads used for multi-file calibration;
results are byte-identical at any setting.
"""

from __future__ import annotations

import concurrent.futures
import functools
import json
import os
import statistics
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import click
import numpy as np

from . import container as cont
from . import datagen, pipeline, plots
from .calibration import (
    CodebookMode,
    build_histogram,
    coverage_by_group,
    entropy_bits,
    merge_stats,
    select_codebook,
    top_k_coverage,
)
from .codec import (
    CodecConfig,
    PositionMode,
    compare_streams,
    decode,
    encode,
    encode_quad,
)
from .errors import (
    ConfigError,
    ContainerError,
    CorruptionError,
    EmptyInputError,
    MalformedStreamError,
    SplitZipError,
)
from .formats import ElementFormat, RawTensorStream

EXIT_VERIFY_FAILED = 1
EXIT_DATA_ERROR = 3
EXIT_CONFIG_ERROR = 4


def thread_cap() -> int:
    """Worker thread budget, capped by SPLITZIP_THREADS."""
    default = min(os.cpu_count() or 1, 8)
    raw = os.environ.get("SPLITZIP_THREADS", "").strip()
    if not raw:
        return default
    try:
        cap = int(raw)
    except ValueError:
        raise ConfigError(f"SPLITZIP_THREADS must be an integer, got {raw!r}")
    return max(1, min(default, cap)) if cap > 0 else default


def classified_errors(func):
    """Map classified errors to stable exit codes instead of tracebacks."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (ConfigError, EmptyInputError) as exc:
            click.echo(f"config error: {exc}", err=True)
            sys.exit(EXIT_CONFIG_ERROR)
        except (ContainerError, CorruptionError, MalformedStreamError) as exc:
            click.echo(f"data error: {exc}", err=True)
            sys.exit(EXIT_DATA_ERROR)
        except SplitZipError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_DATA_ERROR)

    return wrapper


def _config_options(func):
    func = click.option("--code-bits", type=click.Choice(["3", "4"]),
                        default="4", show_default=True,
                        help="Dense code width in bits.")(func)
    func = click.option("--mode", "mode_name",
                        type=click.Choice(["explicit", "sentinel"]),
                        default="explicit", show_default=True,
                        help="Escape representation.")(func)
    func = click.option("--chunk-size", type=int, default=1024,
                        show_default=True,
                        help="Elements per escape chunk.")(func)
    func = click.option("--positions", "position_mode",
                        type=click.Choice(["chunk", "abs32"]),
                        default="chunk", show_default=True,
                        help="Escape position addressing (explicit mode).")(func)
    return func


def _codebook_options(func):
    func = click.option("--codebook", "codebook_path",
                        type=click.Path(exists=True, dir_okay=False),
                        help="Calibrated codebook file.")(func)
    func = click.option("--dynamic", is_flag=True,
                        help="Rebuild the codebook from the input itself.")(func)
    return func


def _build_config(fmt: ElementFormat, code_bits: str, mode_name: str,
                  chunk_size: int, position_mode: str,
                  codebook_path: str | None, dynamic: bool) -> CodecConfig:
    if codebook_path and dynamic:
        raise ConfigError("--codebook and --dynamic are mutually exclusive")
    if not codebook_path and not dynamic:
        raise ConfigError("pass --codebook FILE or --dynamic")
    codebook = cont.read_codebook(codebook_path) if codebook_path else None
    return CodecConfig(
        fmt=fmt,
        code_bits=int(code_bits),
        mode=CodebookMode.from_name(mode_name),
        chunk_size=chunk_size,
        position_mode=PositionMode.validate(position_mode),
        codebook=codebook,
    )


@click.group()
@click.version_option(package_name="splitzip")
def main():
    """Lossless BF16/FP8 stream compression and transfer modeling."""


# -- calibrate ----------------------------------------------------------------

@main.command()
@click.argument("inputs", nargs=-1, required=True,
                type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--out", "out_path", required=True, type=click.Path(),
              help="Codebook file to write.")
@click.option("--code-bits", type=click.Choice(["3", "4"]), default="4",
              show_default=True)
@click.option("--mode", "mode_name", type=click.Choice(["explicit", "sentinel"]),
              default="explicit", show_default=True)
@click.option("--dump-text", type=click.Path(),
              help="Also write a human-readable codebook listing.")
@click.option("--group-coverage", type=int, default=0,
              help="Report per-group coverage at this group size.")
@click.option("--plot", "plot_path", type=click.Path(),
              help="Write a coverage histogram figure (needs --group-coverage).")
@classified_errors
def calibrate(inputs, out_path, code_bits, mode_name, dump_text,
              group_coverage, plot_path):
    """Build an exponent codebook from raw tensor dumps."""
    streams = []
    workers = min(len(inputs), thread_cap())
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        streams = list(pool.map(datagen.ingest_raw, inputs))
    fmt = streams[0].fmt
    if any(s.fmt is not fmt for s in streams):
        raise ConfigError("calibration inputs mix element formats")
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        partials = list(pool.map(build_histogram, streams))
    stats = merge_stats(*partials)

    click.echo(f"elements:        {stats.total}")
    click.echo(f"format:          {fmt.cli_name}")
    click.echo(f"entropy:         {entropy_bits(stats):.2f} bits/exponent")
    top8 = top_k_coverage(stats, min(8, fmt.exp_bins))
    top16 = top_k_coverage(stats, min(16, fmt.exp_bins))
    click.echo(f"top-8 coverage:  {top8:.2%}")
    click.echo(f"top-16 coverage: {top16:.2%}")

    codebook = select_codebook(stats, int(code_bits), CodebookMode.from_name(mode_name))
    cont.write_codebook(codebook, out_path)
    click.echo(f"codebook:        {out_path} ({len(codebook.entries)} entries)")
    if dump_text:
        Path(dump_text).write_text(cont.codebook_text(codebook))
        click.echo(f"text dump:       {dump_text}")

    if group_coverage > 0:
        cov = np.concatenate([
            coverage_by_group(s, group_coverage, codebook) for s in streams])
        click.echo(f"group coverage:  min {cov.min():.4f}  "
                   f"median {np.median(cov):.4f}  groups {cov.size}")
        if plot_path:
            plots.save_coverage_figure(cov, group_coverage, plot_path)
            click.echo(f"figure:          {plot_path}")


# -- compress / decompress / verify -------------------------------------------

def _print_ratios(stream: RawTensorStream, payload: int, total: int) -> None:
    click.echo(f"payload ratio:   {stream.raw_bytes / payload:.4f}")
    click.echo(f"file ratio:      {stream.raw_bytes / total:.4f}")


@main.command()
@click.argument("input_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("output_path", type=click.Path())
@_codebook_options
@_config_options
@classified_errors
def compress(input_path, output_path, codebook_path, dynamic, code_bits,
             mode_name, chunk_size, position_mode):
    """Compress a raw tensor dump into a container file."""
    stream = datagen.ingest_raw(input_path)
    config = _build_config(stream.fmt, code_bits, mode_name, chunk_size,
                           position_mode, codebook_path, dynamic)
    streams = encode(stream, config)
    total = cont.write_container(streams, config, streams.codebook, output_path)
    rate = streams.n_escapes / streams.n_elements
    click.echo(f"elements:        {streams.n_elements}")
    click.echo(f"escapes:         {streams.n_escapes} ({rate:.4%})")
    _print_ratios(stream, streams.payload_nbytes, total)
    click.echo(f"wrote:           {output_path} ({total} bytes)")


@main.command()
@click.argument("input_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("output_path", type=click.Path())
@classified_errors
def decompress(input_path, output_path):
    """Reconstruct the raw tensor dump from a container file."""
    streams, config, codebook = cont.read_container(input_path)
    stream = decode(streams, config, codebook)
    total = cont.write_raw_tensor(stream, output_path)
    click.echo(f"wrote:           {output_path} ({total} bytes, "
               f"{stream.n_elements} {stream.fmt.cli_name} elements)")


@main.command()
@click.argument("input_path", type=click.Path(exists=True, dir_okay=False))
@_codebook_options
@_config_options
@classified_errors
def verify(input_path, codebook_path, dynamic, code_bits, mode_name,
           chunk_size, position_mode):
    """Round-trip a raw dump through the codec and compare bitwise."""
    stream = datagen.ingest_raw(input_path)
    config = _build_config(stream.fmt, code_bits, mode_name, chunk_size,
                           position_mode, codebook_path, dynamic)
    report = _verify(stream, config)
    if not report.ok:
        sys.exit(EXIT_VERIFY_FAILED)


def _verify(stream: RawTensorStream, config: CodecConfig):
    streams = encode(stream, config)
    decoded = decode(streams, config, streams.codebook)
    report = compare_streams(stream, decoded)
    if report.ok:
        click.echo(f"verify: OK ({report.n} elements, "
                   f"{streams.n_escapes} escapes)")
    else:
        click.echo(f"verify: FAILED ({report.mismatch_count} of {report.n} "
                   f"words differ, first at {report.first_mismatch_index})")
    return report


# -- bench ---------------------------------------------------------------------

def _time_runs(fn, reps: int, warmup: int) -> list[float]:
    for _ in range(warmup):
        fn()
    times = []
    for _ in range(reps):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return times


def _gbps_line(label: str, raw_bytes: int, times: list[float]) -> str:
    rates = [raw_bytes / 1e9 / t for t in times]
    mean = statistics.fmean(rates)
    if len(rates) > 1:
        spread = statistics.stdev(rates)
        return f"{label:<14} {mean:8.3f} GB/s +/- {spread:.3f} ({len(rates)} runs)"
    return f"{label:<14} {mean:8.3f} GB/s (1 run)"


@main.command()
@click.argument("input_path", type=click.Path(exists=True, dir_okay=False))
@_codebook_options
@_config_options
@click.option("--reps", type=int, default=10, show_default=True,
              help="Timed repetitions per stage.")
@click.option("--warmup", type=int, default=3, show_default=True,
              help="Untimed warm-up runs per stage.")
@classified_errors
def bench(input_path, codebook_path, dynamic, code_bits, mode_name,
          chunk_size, position_mode, reps, warmup):
    """Time encode/decode over a raw dump (verifies bitwise first)."""
    if reps < 1:
        raise ConfigError("--reps must be >= 1")
    stream = datagen.ingest_raw(input_path)
    config = _build_config(stream.fmt, code_bits, mode_name, chunk_size,
                           position_mode, codebook_path, dynamic)
    report = _verify(stream, config)
    if not report.ok:
        click.echo("bench aborted: round-trip verification failed", err=True)
        sys.exit(EXIT_VERIFY_FAILED)

    raw = stream.raw_bytes
    streams = encode(stream, config)
    click.echo(_gbps_line("encode", raw,
                          _time_runs(lambda: encode(stream, config), reps, warmup)))
    if config.fmt is ElementFormat.BF16 and config.code_bits == 4:
        click.echo(_gbps_line(
            "encode-quad", raw,
            _time_runs(lambda: encode_quad(stream, config), reps, warmup)))
    codebook = streams.codebook
    click.echo(_gbps_line(
        "decode", raw,
        _time_runs(lambda: decode(streams, config, codebook), reps, warmup)))


# -- simulate -------------------------------------------------------------------

def _parse_num_list(text: str, kind=int) -> list:
    try:
        return [kind(part) for part in text.replace(",", " ").split()]
    except ValueError:
        raise ConfigError(f"cannot parse list {text!r}")


@main.command()
@click.option("--ratio", type=float, help="Compression ratio.")
@click.option("--enc-gbps", type=float, help="Encode throughput over raw bytes.")
@click.option("--dec-gbps", type=float, help="Decode throughput over raw bytes.")
@click.option("--link-gbps", type=float, help="Link bandwidth for compressed bytes.")
@click.option("--b-hide", is_flag=True,
              help="Print the codec-hiding bandwidth threshold.")
@click.option("--raw-gb", type=float, help="Transfer size for a single breakdown.")
@click.option("--stage-times", help="Measured enc,xfer,dec times in ms.")
@click.option("--native-ms", type=float,
              help="Measured native transfer time in ms (with --stage-times).")
@click.option("--kv-bytes-per-token", type=float,
              help="Per-token KV footprint for sweeps.")
@click.option("--batches", help="Sweep batch sizes, e.g. '1,16'.")
@click.option("--seqs", help="Sweep sequence lengths, e.g. '512,2048,65536'.")
@click.option("--overhead-ms", type=float, default=0.0, show_default=True,
              help="Fixed per-transfer overhead.")
@click.option("--csv", "csv_path", type=click.Path(), help="Write sweep CSV here.")
@click.option("--json", "json_path", type=click.Path(),
              help="Write a breakdown JSON here.")
@click.option("--plot", "plot_path", type=click.Path(), help="Write a figure here.")
@classified_errors
def simulate(ratio, enc_gbps, dec_gbps, link_gbps, b_hide, raw_gb, stage_times,
             native_ms, kv_bytes_per_token, batches, seqs, overhead_ms,
             csv_path, json_path, plot_path):
    """Model transfer times, stage breakdowns, and hiding bandwidth."""
    did_something = False

    if b_hide:
        if None in (enc_gbps, dec_gbps, ratio):
            raise ConfigError("--b-hide needs --enc-gbps, --dec-gbps and --ratio")
        value = pipeline.hiding_bandwidth(enc_gbps, dec_gbps, ratio)
        click.echo(f"hiding bandwidth: {value:.1f} GB/s")
        did_something = True

    breakdown = None
    if stage_times:
        parts = _parse_num_list(stage_times, float)
        if len(parts) != 3:
            raise ConfigError("--stage-times needs exactly enc,xfer,dec")
        if native_ms is None:
            raise ConfigError("--stage-times needs --native-ms")
        breakdown = pipeline.transfer_breakdown(
            parts[0] / 1e3, parts[1] / 1e3, parts[2] / 1e3, native_ms / 1e3)
    elif raw_gb is not None:
        if None in (ratio, enc_gbps, dec_gbps, link_gbps):
            raise ConfigError(
                "--raw-gb needs --ratio, --enc-gbps, --dec-gbps, --link-gbps")
        breakdown = pipeline.breakdown_from_params(
            pipeline.PipelineParams(raw_gb, ratio, enc_gbps, dec_gbps, link_gbps),
            overhead=overhead_ms / 1e3)
    if breakdown is not None:
        click.echo(f"encode:   {breakdown.t_enc * 1e3:10.3f} ms "
                   f"({breakdown.frac_enc:.1%})")
        click.echo(f"transfer: {breakdown.t_xfer * 1e3:10.3f} ms "
                   f"({breakdown.frac_xfer:.1%})")
        click.echo(f"decode:   {breakdown.t_dec * 1e3:10.3f} ms "
                   f"({breakdown.frac_dec:.1%})")
        click.echo(f"total:    {breakdown.t_total_compressed * 1e3:10.3f} ms "
                   f"vs native {breakdown.t_native * 1e3:.3f} ms "
                   f"(speedup {breakdown.speedup:.3f}x)")
        if json_path:
            Path(json_path).write_text(pipeline.breakdown_to_json(breakdown))
            click.echo(f"json:     {json_path}")
        if plot_path:
            plots.save_breakdown_figure(breakdown, plot_path)
            click.echo(f"figure:   {plot_path}")
        did_something = True

    if batches or seqs:
        if not (batches and seqs and kv_bytes_per_token):
            raise ConfigError(
                "sweeps need --kv-bytes-per-token, --batches and --seqs")
        if None in (ratio, enc_gbps, dec_gbps, link_gbps):
            raise ConfigError(
                "sweeps need --ratio, --enc-gbps, --dec-gbps, --link-gbps")
        rows = pipeline.sweep_simulation(
            kv_bytes_per_token, _parse_num_list(batches), _parse_num_list(seqs),
            ratio, enc_gbps * 1e9, dec_gbps * 1e9, link_gbps * 1e9,
            overhead=overhead_ms / 1e3)
        if csv_path:
            with open(csv_path, "w", newline="") as fh:
                pipeline.write_sweep_csv(rows, fh)
            click.echo(f"csv:      {csv_path} ({len(rows)} rows)")
        else:
            pipeline.write_sweep_csv(rows, sys.stdout)
        if plot_path:
            plots.save_sweep_figure(rows, plot_path)
            click.echo(f"figure:   {plot_path}")
        did_something = True

    if not did_something:
        raise ConfigError("nothing to simulate: pass --b-hide, --raw-gb, "
                          "--stage-times, or sweep flags")


# -- ablate ---------------------------------------------------------------------

@dataclass(frozen=True)
class AblationReport:
    """One verified codec variant measured on one input."""

    variant: str
    fmt: str
    code_bits: int
    mode: str
    chunk_size: int
    position_mode: str
    n_elements: int
    n_escapes: int
    escape_rate: float
    coverage: float
    payload_bytes: int
    file_bytes: int
    ratio_payload: float
    ratio_file: float
    encode_ms: float
    encode_gbps: float
    decode_ms: float
    decode_gbps: float
    roundtrip_ok: bool


def _run_variant(name: str, stream: RawTensorStream,
                 config: CodecConfig) -> AblationReport:
    start = time.perf_counter()
    streams = encode(stream, config)
    encode_s = time.perf_counter() - start
    codebook = streams.codebook
    start = time.perf_counter()
    decoded = decode(streams, config, codebook)
    decode_s = time.perf_counter() - start
    ok = compare_streams(stream, decoded).ok
    if not ok:
        raise CorruptionError(f"variant {name} failed its round-trip check")
    file_bytes = len(cont.container_to_bytes(streams, config, codebook))
    raw = stream.raw_bytes
    rate = streams.n_escapes / streams.n_elements
    return AblationReport(
        variant=name,
        fmt=config.fmt.cli_name,
        code_bits=config.code_bits,
        mode=config.mode.value,
        chunk_size=config.chunk_size,
        position_mode=config.position_mode,
        n_elements=streams.n_elements,
        n_escapes=streams.n_escapes,
        escape_rate=rate,
        coverage=1.0 - rate,
        payload_bytes=streams.payload_nbytes,
        file_bytes=file_bytes,
        ratio_payload=raw / streams.payload_nbytes,
        ratio_file=raw / file_bytes,
        encode_ms=encode_s * 1e3,
        encode_gbps=raw / 1e9 / encode_s,
        decode_ms=decode_s * 1e3,
        decode_gbps=raw / 1e9 / decode_s,
        roundtrip_ok=ok,
    )


def _suite_variants(suite: str, fmt: ElementFormat, chunk_size: int,
                    codebook_precal) -> list[tuple[str, CodecConfig]]:
    explicit = CodebookMode.TOPK_EXPLICIT
    sentinel = CodebookMode.TOP15_SENTINEL
    if suite == "topk":
        return [
            ("top8-3bit", CodecConfig(fmt, 3, explicit, chunk_size)),
            ("top16-4bit", CodecConfig(fmt, 4, explicit, chunk_size)),
        ]
    if suite == "sentinel":
        return [
            ("top16-positions", CodecConfig(fmt, 4, explicit, chunk_size)),
            ("top15-sentinel", CodecConfig(fmt, 4, sentinel, chunk_size)),
        ]
    if suite == "positions":
        return [
            ("chunk-relative", CodecConfig(fmt, 4, explicit, chunk_size)),
            ("absolute-32", CodecConfig(fmt, 4, explicit, chunk_size,
                                        PositionMode.ABSOLUTE_32)),
            ("sentinel-no-pos", CodecConfig(fmt, 4, sentinel, chunk_size)),
        ]
    if suite == "chunk":
        return [(f"chunk-{size}", CodecConfig(fmt, 4, explicit, size))
                for size in (256, 1024, 2048, 4096, 16384)]
    if suite == "precalib":
        return [
            ("precalibrated", CodecConfig(fmt, 4, explicit, chunk_size,
                                          codebook=codebook_precal)),
            ("dynamic", CodecConfig(fmt, 4, explicit, chunk_size)),
        ]
    raise ConfigError(f"unknown ablation suite {suite!r}")


_ABLATE_CSV_FIELDS = [
    "variant", "fmt", "code_bits", "mode", "chunk_size", "position_mode",
    "n_elements", "n_escapes", "escape_rate", "coverage", "payload_bytes",
    "file_bytes", "ratio_payload", "ratio_file", "encode_ms", "encode_gbps",
    "decode_ms", "decode_gbps", "roundtrip_ok",
]


@main.command()
@click.argument("input_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--suite", required=True,
              type=click.Choice(["topk", "sentinel", "chunk", "precalib",
                                 "positions"]),
              help="Which variant family to measure.")
@click.option("--chunk-size", type=int, default=1024, show_default=True)
@click.option("--codebook", "codebook_path",
              type=click.Path(exists=True, dir_okay=False),
              help="Precalibrated codebook for the precalib suite "
                   "(default: calibrate on the input).")
@click.option("--csv", "csv_path", type=click.Path(), help="Write the table here.")
@click.option("--plot", "plot_path", type=click.Path(), help="Write a figure here.")
@classified_errors
def ablate(input_path, suite, chunk_size, codebook_path, csv_path, plot_path):
    """Measure codec variants on one input; every row is round-trip verified.

    Variants other than 'precalibrated' rebuild their codebook from the input
    so different code widths stay comparable.
    """
    stream = datagen.ingest_raw(input_path)
    codebook_precal = None
    if suite == "precalib":
        if codebook_path:
            codebook_precal = cont.read_codebook(codebook_path)
        else:
            codebook_precal = select_codebook(
                build_histogram(stream), 4, CodebookMode.TOPK_EXPLICIT)
    reports = [
        _run_variant(name, stream, config)
        for name, config in _suite_variants(suite, stream.fmt, chunk_size,
                                            codebook_precal)
    ]

    header = (f"{'variant':<16} {'ratio':>7} {'file':>7} {'esc%':>7} "
              f"{'enc GB/s':>9} {'dec GB/s':>9} ok")
    click.echo(header)
    for r in reports:
        click.echo(f"{r.variant:<16} {r.ratio_payload:7.3f} {r.ratio_file:7.3f} "
                   f"{r.escape_rate:7.2%} {r.encode_gbps:9.3f} "
                   f"{r.decode_gbps:9.3f} {'PASS' if r.roundtrip_ok else 'FAIL'}")

    if csv_path:
        import csv as csv_mod
        with open(csv_path, "w", newline="") as fh:
            writer = csv_mod.DictWriter(fh, fieldnames=_ABLATE_CSV_FIELDS)
            writer.writeheader()
            for r in reports:
                writer.writerow({k: getattr(r, k) for k in _ABLATE_CSV_FIELDS})
        click.echo(f"csv:    {csv_path}")
    if plot_path:
        plots.save_ablation_figure(reports, plot_path)
        click.echo(f"figure: {plot_path}")


# -- generate -------------------------------------------------------------------

@main.command()
@click.option("-o", "--out", "out_path", required=True, type=click.Path(),
              help="Raw tensor dump to write.")
@click.option("--spec", "spec_path", type=click.Path(exists=True, dir_okay=False),
              help="Key=value spec file (overrides the flags below).")
@click.option("--format", "format_name", default="bf16", show_default=True,
              type=click.Choice(["bf16", "e5m2", "e4m3"]))
@click.option("--count", type=int, default=1 << 20, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--escape-rate", type=float, default=0.0, show_default=True)
@click.option("--in-book", help="Weighted exponents, e.g. '0x7C:8,0x7D:5'.")
@click.option("--escape-values", help="Out-of-book exponents, e.g. '0x10,0xF0'.")
@click.option("--sampled", is_flag=True,
              help="Sample the histogram instead of hitting counts exactly.")
@classified_errors
def generate(out_path, spec_path, format_name, count, seed, escape_rate,
             in_book, escape_values, sampled):
    """Write a synthetic raw dump with a controlled exponent distribution."""
    if spec_path:
        spec = datagen.load_spec_file(spec_path)
    else:
        book = []
        for item in (in_book or "").replace(",", " ").split():
            exp, _, weight = item.partition(":")
            book.append((int(exp, 0), float(weight) if weight else 1.0))
        escapes = tuple(int(item, 0) for item in
                        (escape_values or "").replace(",", " ").split())
        spec = datagen.ExponentSpec(
            fmt=ElementFormat.from_name(format_name),
            count=count,
            seed=seed,
            in_book=tuple(book),
            escape_values=escapes,
            escape_rate=escape_rate,
            exact_counts=not sampled,
        )
    stream = datagen.generate(spec)
    total = cont.write_raw_tensor(stream, out_path)
    meta_path = f"{out_path}.json"
    Path(meta_path).write_text(json.dumps(datagen.spec_metadata(spec), indent=2))
    click.echo(f"wrote:    {out_path} ({total} bytes, {spec.count} "
               f"{spec.fmt.cli_name} elements)")
    click.echo(f"metadata: {meta_path}")


if __name__ == "__main__":
    main()
