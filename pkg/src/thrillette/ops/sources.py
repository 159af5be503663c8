"""Source operations: the entry points that create distributed arrays."""

from __future__ import annotations

import glob as _glob
import itertools
import os
import struct

from thrillette.data import serial
from thrillette.engine.context import share_of
from thrillette.engine.dag import DiaNode
from thrillette.engine.dia import DIA
from thrillette.errors import IncompleteRead, ProtocolError

# Binary container written by write_binary: a 16 byte header followed by
# back-to-back serialized items.  item_size is 0 for variable-size items.
BINARY_MAGIC = b"DIAB"
BINARY_VERSION = 1
BINARY_HEADER = struct.Struct("<4sIII")  # magic, version, item_size, reserved


class GenerateNode(DiaNode):
    """Integer range source, optionally mapped through a generator function.

    Nothing is stored: items are produced on the fly every time a child
    pulls them, each worker covering its balanced slice of [0, n).
    """

    name = "generate"

    def __init__(self, ctx, n, fn=None):
        super().__init__(ctx)
        self.n = n
        self.fn = fn

    def run_main(self):
        pass

    def iter_stored(self, consume=False):
        lo, hi = self.ctx.worker_share(self.n)
        if self.fn is None:
            return iter(range(lo, hi))
        return map(self.fn, range(lo, hi))


class FromListNode(DiaNode):
    """Source over an in-memory list.

    Every worker must pass the same list; each serves its balanced slice.
    Mostly useful in tests, where it doubles as a zero-communication way
    to inject arbitrary items.
    """

    name = "from_list"

    def __init__(self, ctx, items):
        super().__init__(ctx)
        self.items = list(items)

    def run_main(self):
        pass

    def iter_stored(self, consume=False):
        lo, hi = self.ctx.worker_share(len(self.items))
        return iter(self.items[lo:hi])


class ReadLinesNode(DiaNode):
    """Text-file source yielding one str item per line.

    The matched files, in lexicographic path order, form one global byte
    sequence.  Each worker takes a balanced byte range of that sequence
    and owns exactly the lines whose first byte falls inside its range,
    so line boundaries are never split between workers and no line is
    produced twice.  Lines never span files.
    """

    name = "read_lines"

    def __init__(self, ctx, pattern):
        super().__init__(ctx)
        self.paths = _resolve_files(pattern)
        self.sizes = [os.path.getsize(f) for f in self.paths]

    def run_main(self):
        pass

    def iter_stored(self, consume=False):
        total = sum(self.sizes)
        lo, hi = self.ctx.worker_share(total)
        return self._lines(lo, hi)

    def _lines(self, lo, hi):
        base = 0
        for path, size in zip(self.paths, self.sizes):
            if base + size > lo and base < hi:
                yield from _file_lines(path, max(lo - base, 0), min(hi - base, size))
            base += size
            if base >= hi:
                break


def _file_lines(path, local_lo, local_hi):
    # Yields the lines of one file whose first byte is in [local_lo, local_hi).
    # A line starts at offset q iff q == 0 or the previous byte is a newline.
    with open(path, "rb") as fh:
        if local_lo > 0:
            fh.seek(local_lo - 1)
            while True:
                chunk = fh.read(1 << 16)
                if not chunk:
                    return
                j = chunk.find(b"\n")
                if j >= 0:
                    fh.seek(fh.tell() - len(chunk) + j + 1)
                    break
        while True:
            start = fh.tell()
            if start >= local_hi:
                return
            line = fh.readline()
            if not line:
                return
            if line.endswith(b"\n"):
                line = line[:-1]
            yield line.decode("utf-8", "surrogateescape")


class ReadBinaryNode(DiaNode):
    """Binary-container source, the inverse of write_binary.

    Fixed-size items are balanced at item granularity across the matched
    files; variable-size items are balanced at whole-file granularity,
    since only a sequential scan can find item boundaries.
    """

    name = "read_binary"

    def __init__(self, ctx, pattern, serializer=None):
        super().__init__(ctx)
        self.serializer = serializer if serializer is not None else ctx.default_serializer
        self.paths = _resolve_files(pattern)
        self.counts = []
        item_size = self.serializer.fixed_size or 0
        for path in self.paths:
            payload = os.path.getsize(path) - BINARY_HEADER.size
            with open(path, "rb") as fh:
                head = fh.read(BINARY_HEADER.size)
            if len(head) < BINARY_HEADER.size:
                raise ProtocolError("truncated header in %r" % path)
            magic, version, size, _ = BINARY_HEADER.unpack(head)
            if magic != BINARY_MAGIC:
                raise ProtocolError("%r is not a binary item file" % path)
            if version != BINARY_VERSION:
                raise ProtocolError("unsupported version %d in %r" % (version, path))
            if size != item_size:
                raise ProtocolError(
                    "item size mismatch in %r: file has %d, serializer expects %d"
                    % (path, size, item_size))
            if item_size:
                if payload % item_size:
                    raise ProtocolError("truncated items in %r" % path)
                self.counts.append(payload // item_size)
            else:
                self.counts.append(None)

    def run_main(self):
        pass

    def iter_stored(self, consume=False):
        if self.serializer.fixed_size:
            return self._iter_fixed()
        return self._iter_variable()

    def _iter_fixed(self):
        item_size = self.serializer.fixed_size
        lo, hi = self.ctx.worker_share(sum(self.counts))
        base = 0
        for path, count in zip(self.paths, self.counts):
            first = max(lo - base, 0)
            last = min(hi - base, count)
            if first < last:
                with open(path, "rb") as fh:
                    fh.seek(BINARY_HEADER.size + first * item_size)
                    cursor = _FileCursor(fh, (last - first) * item_size)
                    for _ in range(last - first):
                        yield self.serializer.read(cursor)
            base += count
            if base >= hi:
                break

    def _iter_variable(self):
        lo, hi = self.ctx.worker_share(len(self.paths))
        for path in self.paths[lo:hi]:
            with open(path, "rb") as fh:
                fh.seek(BINARY_HEADER.size)
                cursor = _FileCursor(fh, os.path.getsize(path) - BINARY_HEADER.size)
                while cursor.has_more():
                    try:
                        yield self.serializer.read(cursor)
                    except IncompleteRead:
                        raise ProtocolError("truncated items in %r" % path) from None


class _FileCursor:
    """Buffered item cursor over an open binary file."""

    __slots__ = ("_fh", "_remaining", "_buf", "_pos")

    def __init__(self, fh, remaining):
        self._fh = fh
        self._remaining = remaining
        self._buf = b""
        self._pos = 0

    def has_more(self):
        return self._pos < len(self._buf) or self._remaining > 0

    def _refill(self, need):
        tail = self._buf[self._pos:]
        want = max(need - len(tail), 1 << 18)
        chunk = self._fh.read(min(want, self._remaining))
        self._remaining -= len(chunk)
        self._buf = tail + chunk
        self._pos = 0

    def read_bytes(self, n):
        if self._pos + n > len(self._buf):
            self._refill(n)
            if self._pos + n > len(self._buf):
                raise IncompleteRead("needed %d bytes" % n)
        out = self._buf[self._pos:self._pos + n]
        self._pos += n
        return out

    def read_varint(self):
        value = 0
        shift = 0
        while True:
            if self._pos >= len(self._buf):
                self._refill(1)
                if self._pos >= len(self._buf):
                    raise IncompleteRead("varint cut short")
            byte = self._buf[self._pos]
            self._pos += 1
            value |= (byte & 0x7F) << shift
            if not byte & 0x80:
                return value
            shift += 7
            if shift > 63:
                raise ProtocolError("varint out of range")


def _resolve_files(pattern):
    if os.path.isdir(pattern):
        pattern = os.path.join(pattern, "part-*")
    files = sorted(_glob.glob(pattern))
    if not files:
        if os.path.isfile(pattern):
            return [pattern]
        raise FileNotFoundError("no input files match %r" % pattern)
    return files


def generate(ctx, n, fn=None):
    """DIA over [0, n), or over fn(0)..fn(n-1) when fn is given."""
    if n < 0:
        raise ValueError("generate size must be nonnegative, got %d" % n)
    return DIA(GenerateNode(ctx, n, fn))


def from_list(ctx, items):
    """DIA over an in-memory list (same list on every worker)."""
    return DIA(FromListNode(ctx, items))


def read_lines(ctx, pattern):
    """DIA of str lines from the files matching pattern (or a directory)."""
    return DIA(ReadLinesNode(ctx, pattern))


def read_binary(ctx, pattern, serializer=None):
    """DIA of items from binary container files written by write_binary."""
    return DIA(ReadBinaryNode(ctx, pattern, serializer))
