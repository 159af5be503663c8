"""Deterministic input generators for the benchmark kernels.

Same (path, scale, seed) always produces byte-identical files; the
kernels' sequential oracles read these same files, so oracle equality is
the correctness contract, not parity with any external generator.
Existing files are left untouched (generation is idempotent), and writes
go through a temp file plus rename so concurrent hosts on a shared
filesystem cannot observe half-written input.
"""

from __future__ import annotations

import os
import random
import struct

VOCAB = 1000
RECORD_KEY = 10
RECORD_PAYLOAD = 90
POINT_DIMS = 3
POINT_CLUSTERS = 10

# container header shared with the engine's binary files
from thrillette.ops.sources import BINARY_HEADER, BINARY_MAGIC, BINARY_VERSION


def _atomic(path):
    return path + ".tmp-%d" % os.getpid()


def _commit(tmp, path):
    os.replace(tmp, path)


def gen_text(path: str, n_bytes: int, vocab: int = VOCAB, seed: int = 0) -> str:
    """Word soup: lines of 5..14 words drawn uniformly from a fixed
    vocabulary, until at least n_bytes are written (0 stays empty)."""
    if os.path.exists(path):
        return path
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    rng = random.Random(seed)
    words = ["word%04d" % i for i in range(vocab)]
    tmp = _atomic(path)
    written = 0
    with open(tmp, "wb") as fh:
        while written < n_bytes:
            line = " ".join(rng.choice(words)
                            for _ in range(rng.randrange(5, 15)))
            data = line.encode() + b"\n"
            fh.write(data)
            written += len(data)
    _commit(tmp, path)
    return path


def gen_graph(path: str, vertices: int, avg_degree: float = 8.0,
              seed: int = 0) -> str:
    """Uniform random directed edge list, one "src dst" line per edge.

    Vertices missing from the source column are dangling. The average
    degree is configurable; the distribution is plain uniform."""
    if os.path.exists(path):
        return path
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    rng = random.Random(seed)
    edges = int(vertices * avg_degree)
    tmp = _atomic(path)
    with open(tmp, "wb") as fh:
        for _ in range(edges):
            u = rng.randrange(vertices)
            v = rng.randrange(vertices)
            fh.write(b"%d %d\n" % (u, v))
    _commit(tmp, path)
    return path


def gen_records(path: str, n: int, seed: int = 0) -> str:
    """100-byte records (10-byte random key + 90-byte payload) in one
    binary container file."""
    if os.path.exists(path):
        return path
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    rng = random.Random(seed)
    tmp = _atomic(path)
    with open(tmp, "wb") as fh:
        fh.write(BINARY_HEADER.pack(BINARY_MAGIC, BINARY_VERSION,
                                    RECORD_KEY + RECORD_PAYLOAD, 0))
        for _ in range(n):
            fh.write(rng.randbytes(RECORD_KEY))
            fh.write(rng.randbytes(RECORD_PAYLOAD))
    _commit(tmp, path)
    return path


def gen_points(path: str, n: int, dims: int = POINT_DIMS,
               clusters: int = POINT_CLUSTERS, seed: int = 0) -> str:
    """3-d points around `clusters` well-separated centers, as a binary
    container of float64 triples."""
    if os.path.exists(path):
        return path
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    rng = random.Random(seed)
    centers = [[rng.uniform(0.0, 100.0) for _ in range(dims)]
               for _ in range(clusters)]
    fmt = struct.Struct("<%dd" % dims)
    tmp = _atomic(path)
    with open(tmp, "wb") as fh:
        fh.write(BINARY_HEADER.pack(BINARY_MAGIC, BINARY_VERSION,
                                    8 * dims, 0))
        for i in range(n):
            center = centers[i % clusters]
            fh.write(fmt.pack(*(rng.gauss(c, 4.0) for c in center)))
    _commit(tmp, path)
    return path
