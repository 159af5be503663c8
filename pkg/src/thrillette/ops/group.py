"""Grouping: all items sharing a key meet one user function.

Unlike reduction there is no pairwise combine, so the whole group has to
be brought together. Items are routed by key hash, collected into
memory-bounded sorted runs (ordered by key hash, which needs no
orderable keys), spilled when over budget, and merged; each run of
hash-equal items is then split into its actual key groups.
"""

from __future__ import annotations

import heapq

from thrillette.data.block import File
from thrillette.engine.dag import DiaNode
from thrillette.engine.dia import DIA
from thrillette.ops.common import level_seed, owner_of_index, stable_hash64

_ITEM_BYTES = 64


def _run_budget(stage_budget) -> int:
    if stage_budget is None:
        return 1 << 40
    return max(stage_budget // _ITEM_BYTES, 2)


class _RunStore:
    """Accumulates items, keeping at most budget in memory; overflow
    becomes a sorted spilled run. merged() streams the total order."""

    def __init__(self, ctx, sort_key, counter):
        self.ctx = ctx
        self.sort_key = sort_key
        self.counter = counter
        self.budget = _run_budget(None)
        self.buf = []
        self.runs = []

    def add(self, item) -> None:
        self.buf.append(item)
        if len(self.buf) >= self.budget:
            self._spill()

    def _spill(self) -> None:
        self.ctx.bump(self.counter)
        self.buf.sort(key=self.sort_key)
        run = File(self.ctx.pool, self.ctx.default_serializer)
        writer = run.writer(self.ctx.block_size)
        for item in self.buf:
            writer.append(item)
        writer.close()
        self.runs.append(run)
        self.buf = []

    def merged(self):
        self.buf.sort(key=self.sort_key)
        if not self.runs:
            return iter(self.buf)
        feeds = [run.reader(consume=True) for run in self.runs]
        feeds.append(iter(self.buf))
        return heapq.merge(*feeds, key=self.sort_key)

    def release(self) -> None:
        for run in self.runs:
            run.release()
        self.runs = []
        self.buf = []


def _key_groups(items, group_key, sort_key):
    """Splits a sort_key-ordered stream into (key, [items]) groups.

    Items whose sort_key collides but whose actual key differs are
    separated here; group order follows first appearance."""
    pending_hash = None
    buckets: dict = {}
    order: list = []
    for item in items:
        h = sort_key(item)
        if h != pending_hash and order:
            for key in order:
                yield key, buckets[key]
            buckets.clear()
            order.clear()
        pending_hash = h
        key = group_key(item)
        if key in buckets:
            buckets[key].append(item)
        else:
            buckets[key] = [item]
            order.append(key)
    for key in order:
        yield key, buckets[key]


class GroupByKeyNode(DiaNode):
    """Applies one function to the full group of items per key."""

    name = "group_by_key"
    memory_need = True

    def __init__(self, dia, key_fn, group_fn):
        super().__init__(dia.ctx, parents=(dia.node,), stacks=(dia.stack,))
        self.key_fn = key_fn
        self.group_fn = group_fn

    def begin_link(self, edge):
        ctx = self.ctx
        p = ctx.num_workers
        self._stream = ctx.new_cat_stream()
        seed = level_seed(ctx.seed, self.id, 0)
        self._hash = lambda key: stable_hash64(key, seed)
        key_fn, hash_fn, stream = self.key_fn, self._hash, self._stream

        def accept(item):
            stream.write(hash_fn(key_fn(item)) % p, item)
        return accept

    def run_main(self):
        ctx = self.ctx
        stream = self._stream
        stream.close_writers()

        key_fn, hash_fn = self.key_fn, self._hash
        sort_key = lambda item: hash_fn(key_fn(item))
        store = _RunStore(ctx, sort_key, "group_run_spill")
        store.budget = _run_budget(self.stage_budget)
        for item in stream.read_items():
            store.add(item)

        out = File(ctx.pool, ctx.default_serializer)
        writer = out.writer(ctx.block_size)
        group_fn = self.group_fn
        for _, members in _key_groups(store.merged(), key_fn, sort_key):
            writer.append(group_fn(iter(members)))
        writer.close()
        store.release()
        self.files = [out]


class GroupToIndexNode(DiaNode):
    """Grouping onto a dense index space [0, size); empty slots take the
    neutral item. Output is globally index ordered."""

    name = "group_to_index"
    memory_need = True

    def __init__(self, dia, index_fn, group_fn, size, neutral):
        super().__init__(dia.ctx, parents=(dia.node,), stacks=(dia.stack,))
        if size < 0:
            raise ValueError("index space size must be nonnegative")
        self.index_fn = index_fn
        self.group_fn = group_fn
        self.space = size
        self.neutral = neutral

    def begin_link(self, edge):
        ctx = self.ctx
        p = ctx.num_workers
        n = self.space
        self._stream = ctx.new_cat_stream()
        index_fn, stream = self.index_fn, self._stream

        def accept(item):
            i = index_fn(item)
            if not 0 <= i < n:
                raise ValueError(
                    "index %r outside [0, %d) for item %r" % (i, n, item))
            stream.write(owner_of_index(i, n, p), item)
        return accept

    def run_main(self):
        ctx = self.ctx
        stream = self._stream
        stream.close_writers()

        index_fn = self.index_fn
        store = _RunStore(ctx, index_fn, "group_run_spill")
        store.budget = _run_budget(self.stage_budget)
        for item in stream.read_items():
            store.add(item)

        lo, hi = ctx.worker_share(self.space)
        out = File(ctx.pool, ctx.default_serializer)
        writer = out.writer(ctx.block_size)
        group_fn, neutral = self.group_fn, self.neutral
        cursor = lo
        for index, members in _key_groups(store.merged(), index_fn, index_fn):
            while cursor < index:
                writer.append(neutral)
                cursor += 1
            writer.append(group_fn(iter(members)))
            cursor += 1
        while cursor < hi:
            writer.append(neutral)
            cursor += 1
        writer.close()
        store.release()
        self.files = [out]


def group_by_key(dia, key, group) -> DIA:
    return DIA(GroupByKeyNode(dia, key, group))


def group_to_index(dia, index, group, size, neutral) -> DIA:
    return DIA(GroupToIndexNode(dia, index, group, size, neutral))
