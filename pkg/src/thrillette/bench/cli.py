"""Command line benchmark driver.

`thrillette-bench KERNEL` generates the kernel's input deterministically
from --scale and --seed (skipped when the file already exists), runs the
kernel on the chosen backend, prints result digests and wall time, and
optionally writes a per-stage profile.
"""

from __future__ import annotations

import argparse
import os
import shutil
import sys
import time

from thrillette.bench import generators, kernels
from thrillette.engine.runner import run, run_tcp, run_tcp_loopback
from thrillette.net.config import ClusterConfig, parse_endpoints

KERNELS = ("wordcount", "pagerank", "terasort", "kmeans", "sleep")

# what --scale means, per kernel
_SCALE_DEFAULT = {
    "wordcount": 4 * 2 ** 20,   # bytes of text
    "pagerank": 1000,           # vertices
    "terasort": 100_000,        # records
    "kmeans": 10_000,           # points
    "sleep": 1,                 # seconds per worker
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="thrillette-bench",
        description="Run one of the built-in benchmark kernels.")
    p.add_argument("kernel", choices=KERNELS)
    p.add_argument("--scale", type=int, default=None,
                   help="problem size: text bytes (wordcount), vertices "
                        "(pagerank), records (terasort), points (kmeans) "
                        "or seconds (sleep)")
    p.add_argument("--iterations", type=int, default=10,
                   help="iteration count for pagerank and kmeans")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--hosts", type=int, default=1)
    p.add_argument("--workers", type=int, default=1,
                   help="workers per host")
    p.add_argument("--backend", choices=("mock", "tcp"), default="mock",
                   help="mock: threads in one process; tcp: loopback "
                        "sockets, or a real cluster with --endpoints")
    p.add_argument("--output", default="bench-out",
                   help="directory for generated inputs and kernel output")
    p.add_argument("--profile", default=None, metavar="FILE",
                   help="write tab-separated per-stage rows: stage_id, "
                        "op_names, wall_ms, tx_bytes, rx_bytes, "
                        "peak_pool_bytes")
    p.add_argument("--memory-limit", type=int, default=None,
                   help="per-host memory budget in bytes")
    p.add_argument("--block-size", type=int, default=None,
                   help="storage block size in bytes")
    p.add_argument("--swap-dir", default=None,
                   help="spill directory for evicted blocks")
    p.add_argument("--no-write", action="store_true",
                   help="skip writing kernel output files")
    p.add_argument("--my-host", type=int, default=None,
                   help="this machine's host index (tcp with --endpoints; "
                        "env THRILLETTE_RANK)")
    p.add_argument("--endpoints", default=None,
                   help="comma-separated host:port list, one per host "
                        "(env THRILLETTE_ENDPOINTS)")
    return p


def prepare_input(kernel: str, input_dir: str, scale: int, seed: int):
    """Generate (or reuse) the kernel input; the file name pins scale
    and seed so stale data is never picked up."""
    if kernel == "sleep":
        return None
    os.makedirs(input_dir, exist_ok=True)
    tag = "%d-%d" % (scale, seed)
    if kernel == "wordcount":
        path = os.path.join(input_dir, "text-%s.txt" % tag)
        generators.gen_text(path, scale, seed=seed)
    elif kernel == "pagerank":
        path = os.path.join(input_dir, "graph-%s.txt" % tag)
        generators.gen_graph(path, scale, seed=seed)
    elif kernel == "terasort":
        path = os.path.join(input_dir, "records-%s.bin" % tag)
        generators.gen_records(path, scale, seed=seed)
    else:
        path = os.path.join(input_dir, "points-%s.bin" % tag)
        generators.gen_points(path, scale, seed=seed)
    return path


def make_job(kernel: str, path, scale: int, iterations: int, out_dir):
    def job(ctx):
        if kernel == "wordcount":
            res = kernels.run_wordcount(ctx, path, output=out_dir)
        elif kernel == "pagerank":
            res = kernels.run_pagerank(ctx, path, scale,
                                       iterations=iterations, output=out_dir)
        elif kernel == "terasort":
            res = kernels.run_terasort(ctx, path, output=out_dir)
        elif kernel == "kmeans":
            res = kernels.run_kmeans(ctx, path, iterations=iterations,
                                     output=out_dir)
        else:
            res = kernels.run_sleep(ctx, float(scale))
        return {
            "result": res,
            "records": list(ctx.stage_records),
            "counters": dict(ctx.counters),
        }
    return job


def dispatch(job, args):
    common = dict(memory_limit=args.memory_limit, block_size=args.block_size,
                  seed=args.seed, swap_dir=args.swap_dir)
    if args.backend == "mock":
        return run(job, hosts=args.hosts, workers_per_host=args.workers,
                   **common)
    endpoints = args.endpoints or os.environ.get("THRILLETTE_ENDPOINTS")
    if endpoints:
        my_host = args.my_host
        if my_host is None:
            my_host = int(os.environ.get("THRILLETTE_RANK", "0"))
        config = ClusterConfig(hosts=args.hosts,
                               workers_per_host=args.workers,
                               my_host=my_host,
                               endpoints=parse_endpoints(endpoints))
        return run_tcp(job, config, **common)
    return run_tcp_loopback(job, hosts=args.hosts,
                            workers_per_host=args.workers, **common)


def write_profile(path: str, records) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write("# stage_id\top_names\twall_ms\ttx_bytes\trx_bytes"
                "\tpeak_pool_bytes\n")
        for r in records:
            f.write("%d\t%s\t%.3f\t%d\t%d\t%d\n" % (
                r.stage_id, ">".join(r.op_names), r.wall_ms,
                r.tx_bytes, r.rx_bytes, r.peak_pool_bytes))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    scale = args.scale if args.scale is not None else _SCALE_DEFAULT[args.kernel]
    if scale < 0:
        print("error: --scale must be >= 0", file=sys.stderr)
        return 2

    input_dir = os.path.join(args.output, "input")
    path = prepare_input(args.kernel, input_dir, scale, args.seed)
    out_dir = None
    if not args.no_write and args.kernel != "sleep":
        out_dir = os.path.join(args.output, "%s-out" % args.kernel)
        shutil.rmtree(out_dir, ignore_errors=True)

    job = make_job(args.kernel, path, scale, args.iterations, out_dir)
    start = time.perf_counter()
    results = dispatch(job, args)
    wall = time.perf_counter() - start

    first = results[0]
    print("kernel\t%s" % args.kernel)
    print("backend\t%s" % args.backend)
    print("workers\t%d x %d" % (args.hosts, args.workers))
    print("scale\t%d" % scale)
    print("seed\t%d" % args.seed)
    print("wall_ms\t%.1f" % (wall * 1e3))
    for key, value in sorted(first["result"].items()):
        if key in ("ranks", "centroids"):
            continue
        print("%s\t%s" % (key, value))
    if args.kernel == "sleep":
        print("overhead_ms\t%.1f" % ((wall - float(scale)) * 1e3))
    if out_dir:
        print("output\t%s" % out_dir)
    if args.profile:
        write_profile(args.profile, first["records"])
        print("profile\t%s" % args.profile)
    return 0


if __name__ == "__main__":
    sys.exit(main())
