from .extract import (
    DumpRecord,
    ModelLoadError,
    UnsupportedDtypeError,
    byte_tokenize,
    extract,
    load_model,
    write_raw_tensor_bytes,
)

__all__ = [
    "DumpRecord",
    "ModelLoadError",
    "UnsupportedDtypeError",
    "byte_tokenize",
    "extract",
    "load_model",
    "write_raw_tensor_bytes",
]
