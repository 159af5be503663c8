"""Byte-level hot kernels: varint codec and 64-bit hashing.

A compiled extension is used when available; setting THRILLETTE_NO_EXT=1
forces the pure-Python fallback. Both backends are bit-identical.
"""

import os

if os.environ.get("THRILLETTE_NO_EXT"):
    from thrillette.kernels._pykernels import (
        hash_bytes,
        mix64,
        varint_encode,
        varint_read,
        varint_write,
    )

    BACKEND = "python"
else:
    try:
        from thrillette.kernels._ckernels import (  # type: ignore[no-redef]
            hash_bytes,
            mix64,
            varint_encode,
            varint_read,
            varint_write,
        )

        BACKEND = "c"
    except ImportError:
        from thrillette.kernels._pykernels import (  # type: ignore[no-redef]
            hash_bytes,
            mix64,
            varint_encode,
            varint_read,
            varint_write,
        )

        BACKEND = "python"

__all__ = [
    "BACKEND",
    "hash_bytes",
    "mix64",
    "varint_encode",
    "varint_read",
    "varint_write",
]
