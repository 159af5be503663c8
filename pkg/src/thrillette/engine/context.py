"""Per-worker execution context.

Bundles the worker's communicator, the host-shared block pool, memory
budgets (pool / operations / user heap, equal thirds of the configured
total), deterministic id allocators for vertices, streams and local-op
salts, and per-stage profiling records.

The id allocators rely on every worker running the identical program:
each worker counts independently and the counts agree, the same way
collective calls line up.
"""

from __future__ import annotations

import os
import threading
import weakref
from dataclasses import dataclass, field

from thrillette.data import serial
from thrillette.data.pool import BlockPool
from thrillette.data.stream import CatStream, MixStream
from thrillette.net.group import Group


@dataclass
class StageRecord:
    stage_id: int
    op_names: tuple[str, ...]
    wall_ms: float
    tx_bytes: int
    rx_bytes: int
    peak_pool_bytes: int


def split_budget(total: int | None) -> tuple[int | None, int | None, int | None]:
    """(pool, operations, user heap) thirds of a host memory total."""
    if total is None:
        return None, None, None
    share = total // 3
    return share, share, total - 2 * share


class Context:
    """One worker's handle on the running cluster."""

    def __init__(self, group: Group, pool: BlockPool, seed: int = 0,
                 block_size: int | None = None,
                 ops_budget: int | None = None,
                 consume: bool = False,
                 trace: bool | None = None):
        self.group = group
        self.pool = pool
        self.seed = seed
        self.block_size = block_size or pool.block_size
        self.ops_budget = ops_budget
        self.consume = consume
        if trace is None:
            trace = os.environ.get("THRILLETTE_TRACE", "") == "stages"
        self.trace = trace
        self.default_serializer = serial.default

        self._next_node_id = 0
        self._next_channel = 0
        self._next_salt = 0
        self._nodes: list[weakref.ref] = []

        self.stage_count = 0
        self.stage_records: list[StageRecord] = []
        self.current_op = ""
        self.counters: dict[str, int] = {}

    def bump(self, counter: str, amount: int = 1) -> None:
        """Increment a named event counter (spills, recursions, ...)."""
        self.counters[counter] = self.counters.get(counter, 0) + amount

    # -- identity ------------------------------------------------------

    @property
    def my_worker(self) -> int:
        return self.group.my_worker

    @property
    def num_workers(self) -> int:
        return self.group.num_workers

    @property
    def my_host(self) -> int:
        return self.group.my_host

    # -- deterministic allocators --------------------------------------

    def alloc_node_id(self) -> int:
        nid = self._next_node_id
        self._next_node_id += 1
        return nid

    def alloc_channel(self) -> int:
        ch = self._next_channel
        self._next_channel += 1
        return ch

    def alloc_salt(self) -> int:
        salt = self._next_salt
        self._next_salt += 1
        return salt

    # -- graph registry (introspection and tests) ----------------------

    def register_node(self, node) -> None:
        self._nodes.append(weakref.ref(node))

    def live_nodes(self) -> list:
        out = []
        for ref in self._nodes:
            node = ref()
            if node is not None:
                out.append(node)
        return out

    @property
    def num_nodes_created(self) -> int:
        return self._next_node_id

    # -- streams -------------------------------------------------------

    def new_cat_stream(self, serializer=None, block_size=None) -> CatStream:
        return CatStream(self.group, self.pool, self.alloc_channel(),
                         serializer or self.default_serializer,
                         block_size or self.block_size)

    def new_mix_stream(self, serializer=None, block_size=None) -> MixStream:
        return MixStream(self.group, self.pool, self.alloc_channel(),
                         serializer or self.default_serializer,
                         block_size or self.block_size)

    # -- convenience ---------------------------------------------------

    def worker_share(self, n: int) -> tuple[int, int]:
        """This worker's contiguous slice [lo, hi) of n globally ranked
        items: the first n mod p workers take one extra."""
        return share_of(n, self.num_workers, self.my_worker)


def share_of(n: int, p: int, w: int) -> tuple[int, int]:
    base, rem = divmod(n, p)
    lo = w * base + min(w, rem)
    hi = lo + base + (1 if w < rem else 0)
    return lo, hi
