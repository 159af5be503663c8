"""Memory-capped block storage with pinning, LRU eviction and restore.

The unit of accounting is an immutable byte buffer (an entry). Blocks
are windows onto entries; several Blocks may share one entry (views
created when a File is sliced for scattering). Entries are manually
reference counted by their Blocks and retired when the last Block
releases them.

Unpinned resident entries sit in an LRU; when the pool exceeds its
memory limit the least recently used ones are written to one swap file
each and their buffers dropped. Pinning restores a swapped entry
(deleting the swap file) and protects it from eviction; pins can also be
requested ahead of need (prefetch) without blocking.
"""

from __future__ import annotations

import os
import shutil
import tempfile
import threading
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor

from thrillette.errors import ThrilletteError

DEFAULT_BLOCK_SIZE = 2 * 1024 * 1024

_RESIDENT, _LOADING, _SWAPPED, _DEAD = range(4)


class _Entry:
    __slots__ = ("id", "size", "buffer", "state", "pins", "refs")

    def __init__(self, eid: int, buffer: bytes):
        self.id = eid
        self.size = len(buffer)
        self.buffer = buffer
        self.state = _RESIDENT
        self.pins = 0
        self.refs = 1


class Pin:
    """Holds an entry resident; buffer is the entry's full byte buffer."""

    __slots__ = ("_pool", "_entry", "buffer")

    def __init__(self, pool, entry, buffer):
        self._pool = pool
        self._entry = entry
        self.buffer = buffer

    def release(self):
        if self._entry is not None:
            self._pool._unpin(self._entry)
            self._entry = None
            self.buffer = None

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.release()


class Block:
    """A window [begin, end) onto a pooled buffer plus four integers:
    begin, end, first_item (offset of the first item starting inside the
    window; == end when every byte belongs to an item that started
    earlier) and num_items (count of items starting here)."""

    __slots__ = ("pool", "entry", "begin", "end", "first_item", "num_items",
                 "_released")

    def __init__(self, pool, entry, begin, end, first_item, num_items):
        if not 0 <= begin <= first_item <= end:
            raise ValueError(
                "bad block metadata: begin=%d first_item=%d end=%d"
                % (begin, first_item, end))
        self.pool = pool
        self.entry = entry
        self.begin = begin
        self.end = end
        self.first_item = first_item
        self.num_items = num_items
        self._released = False

    @property
    def num_bytes(self) -> int:
        return self.end - self.begin

    def pin(self) -> Pin:
        return self.pool._pin(self.entry)

    def prefetch(self) -> None:
        self.pool._prefetch(self.entry)

    def view(self, begin: int, end: int, first_item: int, num_items: int) -> "Block":
        """A sub-window sharing this block's buffer (new reference)."""
        self.pool._add_ref(self.entry)
        return Block(self.pool, self.entry, begin, end, first_item, num_items)

    def release(self) -> None:
        if not self._released:
            self._released = True
            self.pool._release(self.entry)

    def __repr__(self):
        return ("Block(entry=%d, begin=%d, end=%d, first_item=%d, num_items=%d)"
                % (self.entry.id, self.begin, self.end, self.first_item,
                   self.num_items))


class BlockPool:
    """Host-wide store of block buffers under one memory budget."""

    def __init__(self, memory_limit: int | None = None,
                 swap_dir: str | None = None,
                 block_size: int = DEFAULT_BLOCK_SIZE):
        self.memory_limit = memory_limit
        self.block_size = block_size
        self._swap_dir = swap_dir
        self._own_swap_dir = swap_dir is None
        self._lock = threading.Lock()
        self._cond = threading.Condition(self._lock)
        self._lru: OrderedDict[int, _Entry] = OrderedDict()
        self._next_id = 0
        self._io: ThreadPoolExecutor | None = None
        self._closed = False
        # counters (all guarded by _lock)
        self.bytes_in_ram = 0
        self.bytes_on_disk = 0
        self.peak_bytes_in_ram = 0
        self.blocks_created = 0
        self.blocks_live = 0
        self.spill_count = 0
        self.restore_count = 0

    # -- public API ----------------------------------------------------

    def adopt(self, buffer: bytes, first_item: int, num_items: int,
              begin: int = 0, end: int | None = None) -> Block:
        """Register a sealed buffer; returns its (sole) Block."""
        if end is None:
            end = len(buffer)
        with self._cond:
            entry = _Entry(self._next_id, buffer)
            self._next_id += 1
            self.blocks_created += 1
            self.blocks_live += 1
            self.bytes_in_ram += entry.size
            if self.bytes_in_ram > self.peak_bytes_in_ram:
                self.peak_bytes_in_ram = self.bytes_in_ram
            self._lru[entry.id] = entry
            self._rebalance()
            return Block(self, entry, begin, end, first_item, num_items)

    def stats(self) -> dict:
        with self._cond:
            return {
                "bytes_in_ram": self.bytes_in_ram,
                "bytes_on_disk": self.bytes_on_disk,
                "peak_bytes_in_ram": self.peak_bytes_in_ram,
                "blocks_created": self.blocks_created,
                "blocks_live": self.blocks_live,
                "spill_count": self.spill_count,
                "restore_count": self.restore_count,
            }

    def close(self) -> None:
        with self._cond:
            if self._closed:
                return
            self._closed = True
            io = self._io
        if io is not None:
            io.shutdown(wait=True)
        if self._swap_dir and os.path.isdir(self._swap_dir):
            if self._own_swap_dir:
                shutil.rmtree(self._swap_dir, ignore_errors=True)
            else:
                for name in os.listdir(self._swap_dir):
                    if name.startswith("block-") and name.endswith(".swp"):
                        try:
                            os.remove(os.path.join(self._swap_dir, name))
                        except OSError:
                            pass

    # -- entry lifecycle (called through Block) ------------------------

    def _add_ref(self, entry: _Entry) -> None:
        with self._cond:
            if entry.state == _DEAD:
                raise ThrilletteError("block buffer already retired")
            entry.refs += 1

    def _release(self, entry: _Entry) -> None:
        with self._cond:
            entry.refs -= 1
            if entry.refs > 0:
                return
            while entry.state == _LOADING:
                self._cond.wait()
            if entry.pins:
                raise ThrilletteError("releasing a pinned block")
            if entry.state == _RESIDENT:
                self.bytes_in_ram -= entry.size
                self._lru.pop(entry.id, None)
            elif entry.state == _SWAPPED:
                self.bytes_on_disk -= entry.size
                try:
                    os.remove(self._swap_path(entry))
                except OSError:
                    pass
            entry.state = _DEAD
            entry.buffer = None
            self.blocks_live -= 1

    # -- pinning -------------------------------------------------------

    def _pin(self, entry: _Entry) -> Pin:
        with self._cond:
            if entry.state == _DEAD:
                raise ThrilletteError("pinning a retired block")
            entry.pins += 1
            if entry.state == _RESIDENT:
                self._lru.pop(entry.id, None)
                return Pin(self, entry, entry.buffer)
            if entry.state == _SWAPPED:
                self._schedule_load(entry)
            while entry.state == _LOADING:
                self._cond.wait()
            if entry.state != _RESIDENT:
                entry.pins -= 1
                raise ThrilletteError("block vanished while pinning")
            return Pin(self, entry, entry.buffer)

    def _prefetch(self, entry: _Entry) -> None:
        with self._cond:
            if entry.state == _SWAPPED and entry.refs > 0:
                self._schedule_load(entry)

    def _unpin(self, entry: _Entry) -> None:
        with self._cond:
            entry.pins -= 1
            if entry.pins == 0 and entry.state == _RESIDENT:
                self._lru[entry.id] = entry
                self._lru.move_to_end(entry.id)

    # -- eviction and restore (lock held) ------------------------------

    def _rebalance(self) -> None:
        limit = self.memory_limit
        if limit is None:
            return
        while self.bytes_in_ram > limit and self._lru:
            _eid, victim = self._lru.popitem(last=False)
            self._swap_out(victim)

    def _swap_out(self, entry: _Entry) -> None:
        path = self._swap_path(entry)
        with open(path, "wb") as fh:
            fh.write(entry.buffer)
        entry.buffer = None
        entry.state = _SWAPPED
        self.bytes_in_ram -= entry.size
        self.bytes_on_disk += entry.size
        self.spill_count += 1

    def _schedule_load(self, entry: _Entry) -> None:
        entry.state = _LOADING
        if self._io is None:
            self._io = ThreadPoolExecutor(max_workers=1,
                                          thread_name_prefix="pool-io")
        self._io.submit(self._load, entry)

    def _load(self, entry: _Entry) -> None:
        path = self._swap_path(entry)
        try:
            with open(path, "rb") as fh:
                data = fh.read()
            err = None
        except OSError as exc:
            data = None
            err = ThrilletteError("swap file lost: %s: %s" % (path, exc))
        with self._cond:
            if err is not None:
                entry.state = _SWAPPED
                self._cond.notify_all()
                return
            entry.buffer = data
            entry.state = _RESIDENT
            self.bytes_on_disk -= entry.size
            self.bytes_in_ram += entry.size
            if self.bytes_in_ram > self.peak_bytes_in_ram:
                self.peak_bytes_in_ram = self.bytes_in_ram
            self.restore_count += 1
            try:
                os.remove(path)
            except OSError:
                pass
            if entry.pins == 0:
                self._lru[entry.id] = entry
                self._lru.move_to_end(entry.id)
            self._rebalance()
            self._cond.notify_all()

    def _swap_path(self, entry: _Entry) -> str:
        if self._swap_dir is None:
            self._swap_dir = tempfile.mkdtemp(prefix="thrillette-swap-")
        elif not os.path.isdir(self._swap_dir):
            os.makedirs(self._swap_dir, exist_ok=True)
        return os.path.join(self._swap_dir, "block-%d.swp" % entry.id)
