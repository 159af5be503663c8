"""Correctness digests for benchmark outputs.

Digests must be reproducible across worker counts and backends, so all
hashing goes through the process-independent stable hash and floats are
quantized to 7 significant digits before hashing (benchmark float
arithmetic is integer fixed-point underneath, so equal runs produce
bit-equal values; the quantization is a safety margin, not a crutch).
"""

from __future__ import annotations

from thrillette.kernels import mix64
from thrillette.ops.common import stable_hash64

_MASK = (1 << 64) - 1


def canonical(value):
    """Recursively replaces floats by their %.6e rendering."""
    if type(value) is float:
        return "%.6e" % value
    if type(value) is tuple:
        return tuple(canonical(v) for v in value)
    if type(value) is list:
        return tuple(canonical(v) for v in value)
    return value


def item_hash(item) -> int:
    return stable_hash64(canonical(item), seed=0xD1E5)


def multiset_digest(items) -> str:
    """Order-independent digest: equal multisets, equal digest."""
    acc = 0
    for item in items:
        acc = (acc + item_hash(item)) & _MASK
    return "%016x" % acc


def sequence_digest(items) -> str:
    """Order-sensitive digest for sorted or ranked output."""
    acc = 0x5EED
    for item in items:
        acc = mix64(acc ^ item_hash(item))
    return "%016x" % acc
