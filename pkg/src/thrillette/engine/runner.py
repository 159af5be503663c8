"""Job orchestration: build the cluster, run the job on every worker,
collect results, tear everything down.

A job is a callable taking a Context and returning a value; every worker
runs the identical job. The mock backend hosts all p workers as threads
of the calling process. The TCP backend runs one process per host with
c worker threads (run_tcp), or, for tests and loopback benchmarking, all
h host meshes inside one process over real sockets (run_tcp_loopback).
"""

from __future__ import annotations

import os
import threading

from thrillette.data.pool import DEFAULT_BLOCK_SIZE, BlockPool
from thrillette.engine.context import Context, split_budget
from thrillette.errors import JobAborted
from thrillette.net.config import ClusterConfig
from thrillette.net.group import Mesh
from thrillette.net.mock import mock_mesh


def _make_pool(memory_limit, block_size, swap_dir, tag) -> BlockPool:
    pool_limit, _ops, _heap = split_budget(memory_limit)
    sub = os.path.join(swap_dir, tag) if swap_dir else None
    return BlockPool(memory_limit=pool_limit, swap_dir=sub,
                     block_size=block_size or DEFAULT_BLOCK_SIZE)


def _ops_budget(memory_limit, workers_per_host) -> int | None:
    _pool, ops_total, _heap = split_budget(memory_limit)
    return ops_total // workers_per_host if ops_total is not None else None


def _run_workers(job, contexts, meshes):
    """Run job on every context in its own thread; first failure aborts
    the whole mesh so blocked peers unwind instead of hanging."""
    results = [None] * len(contexts)
    errors = {}

    def main(i, ctx):
        try:
            results[i] = job(ctx)
        except BaseException as exc:
            errors[i] = exc
            poison = exc if isinstance(exc, JobAborted) else JobAborted(
                "worker %d failed: %s" % (ctx.my_worker, exc),
                origin_rank=ctx.my_worker)
            for mesh in meshes:
                mesh.abort(poison)

    threads = [threading.Thread(target=main, args=(i, ctx),
                                name="worker-%d" % ctx.my_worker)
               for i, ctx in enumerate(contexts)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if errors:
        for _i, exc in sorted(errors.items()):
            if not isinstance(exc, JobAborted):
                raise exc
        return_exc = min(errors.items())[1]
        for _i, exc in sorted(errors.items()):
            if getattr(exc, "origin_rank", -1) >= 0:
                return_exc = exc
                break
        raise return_exc
    return results


def run(job, hosts: int = 1, workers_per_host: int = 1,
        memory_limit: int | None = None, block_size: int | None = None,
        seed: int = 0, swap_dir: str | None = None, consume: bool = False,
        trace: bool | None = None) -> list:
    """Run a job on the in-process mock cluster; per-worker results in
    rank order."""
    mesh = mock_mesh(hosts, workers_per_host)
    pools = [_make_pool(memory_limit, block_size, swap_dir, "host-%d" % h)
             for h in range(hosts)]
    ops_budget = _ops_budget(memory_limit, workers_per_host)
    contexts = [Context(group, pools[group.my_host], seed=seed,
                        block_size=block_size, ops_budget=ops_budget,
                        consume=consume, trace=trace)
                for group in mesh.groups]
    try:
        return _run_workers(job, contexts, [mesh])
    finally:
        mesh.close()
        for pool in pools:
            pool.close()


def run_tcp(job, config: ClusterConfig,
            memory_limit: int | None = None, block_size: int | None = None,
            seed: int = 0, swap_dir: str | None = None, consume: bool = False,
            trace: bool | None = None, mesh: Mesh | None = None) -> list:
    """Run this host's share of a TCP cluster job; results of the local
    workers in rank order."""
    from thrillette.net.tcp import tcp_mesh

    own_mesh = mesh is None
    if mesh is None:
        mesh = tcp_mesh(config)
    pool = _make_pool(memory_limit, block_size, swap_dir,
                      "host-%d" % config.my_host)
    ops_budget = _ops_budget(memory_limit, config.workers_per_host)
    contexts = [Context(group, pool, seed=seed, block_size=block_size,
                        ops_budget=ops_budget, consume=consume, trace=trace)
                for group in mesh.groups]
    try:
        return _run_workers(job, contexts, [mesh])
    finally:
        if own_mesh:
            mesh.close()
        pool.close()


def run_tcp_loopback(job, hosts: int = 1, workers_per_host: int = 1,
                     memory_limit: int | None = None,
                     block_size: int | None = None, seed: int = 0,
                     swap_dir: str | None = None, consume: bool = False,
                     trace: bool | None = None) -> list:
    """Whole TCP cluster over loopback sockets in one process; results
    of all p workers in rank order."""
    from thrillette.net.tcp import tcp_loopback_meshes

    meshes = tcp_loopback_meshes(hosts, workers_per_host)
    pools = [_make_pool(memory_limit, block_size, swap_dir, "host-%d" % h)
             for h in range(hosts)]
    ops_budget = _ops_budget(memory_limit, workers_per_host)
    contexts = [Context(group, pools[mesh.config.my_host], seed=seed,
                        block_size=block_size, ops_budget=ops_budget,
                        consume=consume, trace=trace)
                for mesh in meshes for group in mesh.groups]
    try:
        return _run_workers(job, contexts, meshes)
    finally:
        for mesh in meshes:
            mesh.close()
        for pool in pools:
            pool.close()
