"""Micro-benchmark of the byte-level kernels, compiled vs pure Python.

Runs each kernel backend in a subprocess (the backend is chosen at
import time) and prints a throughput table. Usage:

    python3 benchmarks/bench_kernels.py [--items N] [--bytes N]
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys

_WORKER = r"""
import json, os, random, sys, time
from thrillette.kernels import BACKEND, hash_bytes, mix64, varint_encode, varint_read

items = int(sys.argv[1])
blob_len = int(sys.argv[2])
rng = random.Random(7)
blob = rng.randbytes(blob_len)
values = [rng.getrandbits(rng.randrange(1, 64)) for _ in range(items)]

def timed(fn):
    best = None
    for _ in range(3):
        t0 = time.perf_counter()
        fn()
        dt = time.perf_counter() - t0
        best = dt if best is None else min(best, dt)
    return best

def bench_mix():
    acc = 0
    for v in values:
        acc = mix64(acc ^ v)
    return acc

def bench_hash():
    return hash_bytes(blob, seed=3)

def bench_varint():
    encoded = [varint_encode(v) for v in values]
    buf = b"".join(encoded)
    pos = 0
    for _ in values:
        _, pos = varint_read(buf, pos)

out = {
    "backend": BACKEND,
    "mix64_s": timed(bench_mix),
    "hash_bytes_s": timed(bench_hash),
    "varint_s": timed(bench_varint),
}
print(json.dumps(out))
"""


def run_backend(force_python: bool, items: int, blob: int) -> dict:
    env = dict(os.environ)
    if force_python:
        env["THRILLETTE_NO_EXT"] = "1"
    else:
        env.pop("THRILLETTE_NO_EXT", None)
    proc = subprocess.run(
        [sys.executable, "-c", _WORKER, str(items), str(blob)],
        env=env, capture_output=True, text=True, check=True)
    return json.loads(proc.stdout)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--items", type=int, default=200_000,
                        help="values for the mix64 and varint runs")
    parser.add_argument("--bytes", type=int, default=8 * 2 ** 20,
                        help="blob size for the hash_bytes run")
    args = parser.parse_args(argv)

    rows = [run_backend(False, args.items, args.bytes),
            run_backend(True, args.items, args.bytes)]
    if rows[0]["backend"] == rows[1]["backend"]:
        print("note: compiled extension unavailable, comparing python "
              "against itself")

    print("%-8s %14s %16s %14s" % (
        "backend", "mix64 Mop/s", "hash_bytes MB/s", "varint Mop/s"))
    for row in rows:
        print("%-8s %14.2f %16.1f %14.2f" % (
            row["backend"],
            args.items / row["mix64_s"] / 1e6,
            args.bytes / row["hash_bytes_s"] / 1e6,
            args.items / row["varint_s"] / 1e6))
    base, alt = rows[0], rows[1]
    for key, label in (("mix64_s", "mix64"), ("hash_bytes_s", "hash_bytes"),
                       ("varint_s", "varint")):
        print("%s speedup: %.1fx" % (label, alt[key] / base[key]))
    return 0


if __name__ == "__main__":
    sys.exit(main())
