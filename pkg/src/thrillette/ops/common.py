"""Shared helpers for the operation implementations."""

from __future__ import annotations

import pickle
import struct

from thrillette.engine.context import share_of
from thrillette.kernels import hash_bytes, mix64

_MASK = (1 << 64) - 1
_F64 = struct.Struct("<d")


def stable_hash64(value, seed: int = 0) -> int:
    """Deterministic 64-bit hash, identical across processes and runs.

    Python's built-in hash is salted per process, so anything feeding
    partitioning decisions goes through this instead. Common key types
    get direct byte-level treatment; everything else falls back to its
    pickle serialization.
    """
    if value is None:
        return mix64(seed ^ 0x9E3779B97F4A7C15)
    t = type(value)
    if t is bool:
        return mix64(seed ^ (0xB0 + value))
    if t is int:
        if -(1 << 63) <= value < (1 << 64):
            return mix64(mix64(seed ^ 1) ^ (value & _MASK))
        data = value.to_bytes((value.bit_length() + 15) // 8, "little", signed=True)
        return hash_bytes(data, mix64(seed ^ 2))
    if t is str:
        return hash_bytes(value.encode("utf-8", "surrogateescape"), mix64(seed ^ 3))
    if t is bytes:
        return hash_bytes(value, mix64(seed ^ 4))
    if t is float:
        return mix64(mix64(seed ^ 5) ^ int.from_bytes(_F64.pack(value), "little"))
    if t is tuple:
        h = mix64(seed ^ 6 ^ (len(value) << 8))
        for part in value:
            h = mix64(h ^ stable_hash64(part, seed))
        return h
    return hash_bytes(pickle.dumps(value, protocol=pickle.HIGHEST_PROTOCOL),
                      mix64(seed ^ 7))


def level_seed(base_seed: int, node_id: int, level: int) -> int:
    """A fresh hash seed per (operation, recursion level)."""
    return mix64((base_seed << 20) ^ (node_id << 8) ^ level)


def owner_of_index(g: int, n: int, p: int) -> int:
    """The worker owning global index g under the ceil-first balance
    (inverse of share_of)."""
    base, rem = divmod(n, p)
    cut = (base + 1) * rem
    if g < cut:
        return g // (base + 1)
    return rem + (g - cut) // base


__all__ = ["level_seed", "owner_of_index", "share_of", "stable_hash64"]
