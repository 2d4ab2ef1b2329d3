"""Dump per-layer K/V cache tensors from a causal LM as raw tensor files.

The output format is splitzip's `.szrw` layout (magic "SZRW", version 1,
format byte, u64 element count, little-endian element words); the bytes
written are the exact bit patterns of the model's cache tensors, with no
numeric conversion beyond the model's own dtype. A JSON manifest lists every
file with its layer index, cache kind, and element count.

Two model sources are supported:

- any Hugging Face causal LM id (requires the weights to be reachable), or
- the built-in ``random-gpt2`` target: a small GPT-2-architecture model with
  seeded random weights, constructed locally so extraction works offline.
  Its KV activations are real attention outputs and show the concentrated
  exponent statistics the compressor relies on.

Extraction is deterministic: fixed seed, single-threaded torch, and a pure
forward pass (no sampling), so re-running produces byte-identical dumps.
"""

from __future__ import annotations

import argparse
import json
import struct
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

RAW_MAGIC = b"SZRW"
RAW_VERSION = 1

# format byte in the .szrw header -> (torch dtype, numpy view dtype)
_DTYPE_TO_FORMAT = {
    torch.bfloat16: (0, "bf16", torch.uint16, np.uint16),
}
if hasattr(torch, "float8_e5m2"):
    _DTYPE_TO_FORMAT[torch.float8_e5m2] = (1, "e5m2", torch.uint8, np.uint8)
if hasattr(torch, "float8_e4m3fn"):
    _DTYPE_TO_FORMAT[torch.float8_e4m3fn] = (2, "e4m3", torch.uint8, np.uint8)

SAMPLE_PROMPTS = [
    "The quick brown fox jumps over the lazy dog.",
    "Compression works best when the data has predictable structure.",
    "Attention caches grow linearly with the number of processed tokens.",
    "Four score and seven years ago our fathers brought forth a new nation.",
]


class UnsupportedDtypeError(RuntimeError):
    """The model produced cache tensors in a dtype we cannot dump."""


class ModelLoadError(RuntimeError):
    """The requested model could not be constructed or fetched."""


@dataclass
class DumpRecord:
    layer: int
    kind: str  # "K" or "V"
    path: str
    elements: int


def write_raw_tensor_bytes(words: np.ndarray, format_code: int, path: Path) -> int:
    """Serialize element words in the documented .szrw byte layout."""
    header = RAW_MAGIC + struct.pack("<BBQ", RAW_VERSION, format_code, words.size)
    payload = np.ascontiguousarray(words).astype(words.dtype.newbyteorder("<"))
    data = header + payload.tobytes()
    path.write_bytes(data)
    return len(data)


def byte_tokenize(text: str, vocab_size: int) -> list[int]:
    """Fallback tokenizer: UTF-8 bytes folded into the model vocabulary."""
    return [b % vocab_size for b in text.encode("utf-8")]


def load_model(model_id: str, seed: int):
    """Return (model, tokenize_fn, tokenizer_name); model is eval+bf16."""
    if model_id == "random-gpt2":
        from transformers import GPT2Config, GPT2LMHeadModel

        torch.manual_seed(seed)
        config = GPT2Config(
            n_layer=4, n_head=4, n_embd=128, n_positions=512,
            vocab_size=256, bos_token_id=0, eos_token_id=0)
        model = GPT2LMHeadModel(config)
        tokenize = lambda text: byte_tokenize(text, config.vocab_size)  # noqa: E731
        tokenizer_name = "byte-fallback"
    else:
        try:
            from transformers import AutoModelForCausalLM, AutoTokenizer

            tokenizer = AutoTokenizer.from_pretrained(model_id)
            model = AutoModelForCausalLM.from_pretrained(model_id)
        except Exception as exc:
            raise ModelLoadError(f"cannot load model {model_id!r}: {exc}") from exc
        tokenize = lambda text: tokenizer.encode(text)  # noqa: E731
        tokenizer_name = model_id
    model = model.to(torch.bfloat16).eval()
    return model, tokenize, tokenizer_name


def _iter_cache_layers(past_key_values):
    """Yield (layer_index, keys, values) across transformers cache APIs."""
    if hasattr(past_key_values, "layers"):  # Cache object (transformers >= 5)
        for i, layer in enumerate(past_key_values.layers):
            yield i, layer.keys, layer.values
    else:  # legacy tuple of (key, value) pairs
        for i, (k, v) in enumerate(past_key_values):
            yield i, k, v


def _tensor_bits(tensor: torch.Tensor) -> tuple[np.ndarray, int, str]:
    if tensor.dtype not in _DTYPE_TO_FORMAT:
        raise UnsupportedDtypeError(
            f"cache dtype {tensor.dtype} is not BF16/FP8; cannot dump losslessly")
    code, name, view_dtype, np_dtype = _DTYPE_TO_FORMAT[tensor.dtype]
    bits = tensor.reshape(-1).contiguous().view(view_dtype).numpy().astype(np_dtype)
    return bits, code, name


def extract(model_id: str, prompts: list[str], max_tokens: int, out_dir: Path,
            seed: int = 0, layers: list[int] | None = None) -> dict:
    """Run the model over the prompts and dump every (layer, kind) cache.

    Returns the manifest dict (also written to ``out_dir/manifest.json``).
    """
    if not prompts:
        raise ValueError("corpus is empty")
    if max_tokens < 1:
        raise ValueError("max_tokens must be >= 1")
    torch.set_num_threads(1)  # keep reduction order, and thus bits, stable
    model, tokenize, tokenizer_name = load_model(model_id, seed)

    # Per (layer, kind): list of flat bit arrays, one per prompt.
    pieces: dict[tuple[int, str], list[np.ndarray]] = {}
    format_code = None
    format_name = None
    total_tokens = 0
    with torch.no_grad():
        for prompt in prompts:
            ids = tokenize(prompt)[:max_tokens]
            if not ids:
                continue
            total_tokens += len(ids)
            input_ids = torch.tensor([ids], dtype=torch.long)
            output = model(input_ids=input_ids, use_cache=True)
            for layer_idx, keys, values in _iter_cache_layers(
                    output.past_key_values):
                if layers is not None and layer_idx not in layers:
                    continue
                for kind, tensor in (("K", keys), ("V", values)):
                    bits, code, name = _tensor_bits(tensor)
                    if format_code is None:
                        format_code, format_name = code, name
                    elif code != format_code:
                        raise UnsupportedDtypeError(
                            "cache dtypes differ across layers")
                    pieces.setdefault((layer_idx, kind), []).append(bits)

    if not pieces:
        raise ValueError("no cache tensors captured (empty prompts or "
                         "layer filter excludes everything)")

    out_dir.mkdir(parents=True, exist_ok=True)
    records = []
    for (layer_idx, kind), chunks in sorted(pieces.items()):
        words = np.concatenate(chunks)
        name = f"layer{layer_idx:02d}_{kind.lower()}.szrw"
        write_raw_tensor_bytes(words, format_code, out_dir / name)
        records.append(DumpRecord(layer_idx, kind, name, int(words.size)))

    manifest = {
        "model": model_id,
        "tokenizer": tokenizer_name,
        "dataset": "builtin-sample" if prompts == SAMPLE_PROMPTS else "user-corpus",
        "seed": seed,
        "element_format": format_name,
        "token_count": total_tokens,
        "files": [vars(r) for r in records],
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2))
    return manifest


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="Dump causal-LM KV caches as .szrw raw tensor files.")
    parser.add_argument("--model", default="random-gpt2",
                        help="Hugging Face model id, or 'random-gpt2' for the "
                             "offline seeded model (default).")
    parser.add_argument("--corpus", type=Path,
                        help="Text file with one prompt per line "
                             "(default: a built-in sample).")
    parser.add_argument("--max-tokens", type=int, default=256,
                        help="Token budget per prompt (default 256).")
    parser.add_argument("--layers",
                        help="Comma-separated layer indices to keep "
                             "(default all).")
    parser.add_argument("--out-dir", type=Path, required=True,
                        help="Directory for the .szrw dumps and manifest.")
    parser.add_argument("--seed", type=int, default=0,
                        help="Weight seed for random-gpt2 (default 0).")
    args = parser.parse_args(argv)

    if args.corpus:
        prompts = [line.strip() for line in
                   args.corpus.read_text().splitlines() if line.strip()]
    else:
        prompts = SAMPLE_PROMPTS
    layer_filter = ([int(x) for x in args.layers.split(",")]
                    if args.layers else None)

    try:
        manifest = extract(args.model, prompts, args.max_tokens, args.out_dir,
                           seed=args.seed, layers=layer_filter)
    except (ModelLoadError, UnsupportedDtypeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"dumped {len(manifest['files'])} cache tensors "
          f"({manifest['token_count']} tokens, {manifest['element_format']}) "
          f"to {args.out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
