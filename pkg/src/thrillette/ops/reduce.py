"""Key- and index-wise reduction with bounded memory.

Both reductions run in two phases. The pre-phase sits in the ingest
path: one probing table per destination worker combines duplicate keys
before anything is sent, and a full table is flushed to the wire and
cleared. The post-phase combines whatever arrives from the exchange in a
set of sub-partition tables; a sub-table that outgrows its budget spills
its partially reduced contents to local disk-backed storage and the
spilled run is later reduced recursively under a fresh hash, so the
distinct-key load per table shrinks every level and bounded memory
suffices for any key distribution.
"""

from __future__ import annotations

from thrillette.data import serial
from thrillette.data.block import File
from thrillette.engine.dag import DiaNode
from thrillette.engine.dia import DIA
from thrillette.errors import ThrilletteError
from thrillette.ops.common import level_seed, owner_of_index, stable_hash64

_EMPTY = object()

# rough per-entry cost used to convert a byte budget into table slots
_SLOT_BYTES = 64
_SUB_TABLES = 8
_MIN_SLOTS = 8
_MAX_LEVELS = 48


class ProbeTable:
    """Linear-probing hash table combining items that share a key.

    Fixed fill factor one half: past it the table doubles, and once
    doubling would exceed max_slots, add() refuses and the caller must
    drain. Slot order is a pure function of the inserted (key, order)
    sequence, which keeps drain order deterministic."""

    __slots__ = ("keys", "items", "cap", "size", "max_slots", "seed")

    def __init__(self, max_slots: int, seed: int):
        self.cap = _MIN_SLOTS
        self.max_slots = max(max_slots, _MIN_SLOTS)
        self.seed = seed
        self.keys = [_EMPTY] * self.cap
        self.items = [None] * self.cap
        self.size = 0

    def _slot(self, key) -> int:
        mask = self.cap - 1
        keys = self.keys
        i = stable_hash64(key, self.seed) & mask
        while keys[i] is not _EMPTY and keys[i] != key:
            i = (i + 1) & mask
        return i

    def add(self, key, item, combine) -> bool:
        """Returns False when full: drain() first, then retry."""
        i = self._slot(key)
        if self.keys[i] is not _EMPTY:
            self.items[i] = combine(self.items[i], item)
            return True
        if 2 * (self.size + 1) > self.cap:
            if self.cap * 2 > self.max_slots:
                return False
            self._grow()
            i = self._slot(key)
        self.keys[i] = key
        self.items[i] = item
        self.size += 1
        return True

    def _grow(self) -> None:
        old_keys, old_items = self.keys, self.items
        self.cap *= 2
        self.keys = [_EMPTY] * self.cap
        self.items = [None] * self.cap
        for key, item in zip(old_keys, old_items):
            if key is not _EMPTY:
                i = self._slot(key)
                self.keys[i] = key
                self.items[i] = item

    def drain(self):
        """Yields (key, item) in slot order and leaves the table empty."""
        keys, items = self.keys, self.items
        self.keys = [_EMPTY] * self.cap
        self.items = [None] * self.cap
        self.size = 0
        for key, item in zip(keys, items):
            if key is not _EMPTY:
                yield key, item


def _slot_budget(stage_budget) -> int:
    if stage_budget is None:
        return 1 << 40
    return max(stage_budget // _SLOT_BYTES, _MIN_SLOTS)


class ReduceByKeyNode(DiaNode):
    """Combines all items sharing a key into one, via an associative and
    commutative binary function. Output order follows the hash
    partition, deterministically for a fixed seed and worker count."""

    name = "reduce_by_key"
    memory_need = True

    def __init__(self, dia, key_fn, reduce_fn, serializer=None):
        super().__init__(dia.ctx, parents=(dia.node,), stacks=(dia.stack,))
        self.key_fn = key_fn
        self.reduce_fn = reduce_fn
        self.serializer = (serializer if serializer is not None
                           else dia.ctx.default_serializer)

    def begin_link(self, edge):
        ctx = self.ctx
        p = ctx.num_workers
        self._stream = ctx.new_cat_stream(self.serializer)
        self._route_seed = level_seed(ctx.seed, self.id, 0)
        per_table = max(_slot_budget(self.stage_budget) // max(p, 1), _MIN_SLOTS)
        self._pre = [ProbeTable(per_table, self._route_seed) for _ in range(p)]

        key_fn, reduce_fn = self.key_fn, self.reduce_fn
        pre, stream = self._pre, self._stream
        route_seed = self._route_seed

        def accept(item):
            key = key_fn(item)
            dest = stable_hash64(key, route_seed) % p
            table = pre[dest]
            if not table.add(key, item, reduce_fn):
                ctx.bump("reduce_pre_flush")
                for _, flushed in table.drain():
                    stream.write(dest, flushed)
                table.add(key, item, reduce_fn)
        return accept

    def run_main(self):
        ctx = self.ctx
        stream = self._stream
        for dest, table in enumerate(self._pre):
            for _, item in table.drain():
                stream.write(dest, item)
        self._pre = None
        stream.close_writers()

        out = File(ctx.pool, self.serializer)
        writer = out.writer(ctx.block_size)
        self._reduce_items(stream.read_items(), level=0, out=writer)
        writer.close()
        self.files = [out]

    def _reduce_items(self, items, level, out):
        if level > _MAX_LEVELS:
            raise ThrilletteError("reduction recursion ran away")
        ctx = self.ctx
        key_fn, reduce_fn = self.key_fn, self.reduce_fn
        seed = level_seed(ctx.seed, self.id, level + 1)
        per_table = max(_slot_budget(self.stage_budget) // _SUB_TABLES,
                        _MIN_SLOTS)
        tables = [ProbeTable(per_table, seed) for _ in range(_SUB_TABLES)]
        spills: list[File | None] = [None] * _SUB_TABLES
        spill_writers = [None] * _SUB_TABLES

        for item in items:
            key = key_fn(item)
            sub = stable_hash64(key, seed) % _SUB_TABLES
            table = tables[sub]
            if not table.add(key, item, reduce_fn):
                ctx.bump("reduce_post_spill")
                if spills[sub] is None:
                    spills[sub] = File(ctx.pool, self.serializer)
                    spill_writers[sub] = spills[sub].writer(ctx.block_size)
                append = spill_writers[sub].append
                for _, flushed in table.drain():
                    append(flushed)
                table.add(key, item, reduce_fn)

        for sub in range(_SUB_TABLES):
            table, spill = tables[sub], spills[sub]
            if spill is None:
                for _, item in table.drain():
                    out.append(item)
            else:
                append = spill_writers[sub].append
                for _, item in table.drain():
                    append(item)
                spill_writers[sub].close()
                ctx.bump("reduce_recursion")
                self._reduce_items(spill.reader(consume=True), level + 1, out)
                spill.release()


class ReduceToIndexNode(DiaNode):
    """Reduction onto a dense index space [0, size): the item's index
    function names its slot, collisions combine, untouched slots take
    the neutral item. Output is globally index ordered."""

    name = "reduce_to_index"
    memory_need = True

    def __init__(self, dia, index_fn, reduce_fn, size, neutral, serializer=None):
        super().__init__(dia.ctx, parents=(dia.node,), stacks=(dia.stack,))
        if size < 0:
            raise ValueError("index space size must be nonnegative")
        self.index_fn = index_fn
        self.reduce_fn = reduce_fn
        self.space = size
        self.neutral = neutral
        self.serializer = (serializer if serializer is not None
                           else dia.ctx.default_serializer)

    def begin_link(self, edge):
        ctx = self.ctx
        p = ctx.num_workers
        n = self.space
        # reducing may change where index_fn would map the combined
        # item, so the slot travels with it on the wire
        wire = serial.pair(serial.var_uint, self.serializer)
        self._stream = ctx.new_cat_stream(wire)
        per_table = max(_slot_budget(self.stage_budget) // max(p, 1), _MIN_SLOTS)
        seed = level_seed(ctx.seed, self.id, 0)
        self._pre = [ProbeTable(per_table, seed) for _ in range(p)]

        index_fn, reduce_fn = self.index_fn, self.reduce_fn
        pre, stream = self._pre, self._stream

        def accept(item):
            i = index_fn(item)
            if not 0 <= i < n:
                raise ValueError(
                    "index %r outside [0, %d) for item %r" % (i, n, item))
            dest = owner_of_index(i, n, p)
            table = pre[dest]
            if not table.add(i, item, reduce_fn):
                ctx.bump("reduce_pre_flush")
                for slot, flushed in table.drain():
                    stream.write(dest, (slot, flushed))
                table.add(i, item, reduce_fn)
        return accept

    def run_main(self):
        ctx = self.ctx
        stream = self._stream
        for dest, table in enumerate(self._pre):
            for slot, item in table.drain():
                stream.write(dest, (slot, item))
        self._pre = None
        stream.close_writers()

        lo, hi = ctx.worker_share(self.space)
        slots = [_EMPTY] * (hi - lo)
        reduce_fn = self.reduce_fn
        for i, item in stream.read_items():
            at = i - lo
            slots[at] = (item if slots[at] is _EMPTY
                         else reduce_fn(slots[at], item))

        out = File(ctx.pool, self.serializer)
        writer = out.writer(ctx.block_size)
        neutral = self.neutral
        for value in slots:
            writer.append(neutral if value is _EMPTY else value)
        writer.close()
        self.files = [out]


def reduce_by_key(dia, key, reduce, serializer=None) -> DIA:
    return DIA(ReduceByKeyNode(dia, key, reduce, serializer))


def reduce_to_index(dia, index, reduce, size, neutral, serializer=None) -> DIA:
    return DIA(ReduceToIndexNode(dia, index, reduce, size, neutral, serializer))
