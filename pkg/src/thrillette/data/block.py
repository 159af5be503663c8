"""Files (ordered block sequences), block writers and item readers."""

from __future__ import annotations

from thrillette.data import serial
from thrillette.data.pool import Block, BlockPool
from thrillette.errors import IncompleteRead, ThrilletteError
from thrillette.kernels import varint_read


class BlockWriter:
    """Serializes items back-to-back into capacity-sized buffers.

    When the working buffer reaches capacity the first capacity bytes
    are sealed and handed to the sink as (buffer, first_item, num_items);
    overflow bytes of a spanning item carry over into the next buffer.
    """

    def __init__(self, serializer: serial.Serializer, sink, block_size: int):
        self._serializer = serializer
        self._sink = sink
        self._capacity = block_size
        self._buf = bytearray()
        self._first_item = -1
        self._num_items = 0
        self.items_written = 0
        self._closed = False

    def append(self, item) -> None:
        start = len(self._buf)
        if self._first_item < 0:
            self._first_item = start
        self._num_items += 1
        self.items_written += 1
        self._serializer.write(self._buf, item)
        while len(self._buf) >= self._capacity:
            self._seal(self._capacity)

    def extend(self, items) -> None:
        for item in items:
            self.append(item)

    def _seal(self, size: int) -> None:
        buf = self._buf
        first = self._first_item if self._first_item >= 0 else size
        self._sink(bytes(buf[:size]), min(first, size), self._num_items)
        del buf[:size]
        self._first_item = -1
        self._num_items = 0

    def close(self) -> None:
        if self._closed:
            return
        self._closed = True
        if self._buf or self._num_items:
            self._seal(len(self._buf))

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()


class File:
    """An ordered sequence of Blocks holding one serialized item array."""

    def __init__(self, pool: BlockPool, serializer: serial.Serializer = serial.default):
        self.pool = pool
        self.serializer = serializer
        self.blocks: list[Block | None] = []
        self.total_items = 0

    @property
    def num_blocks(self) -> int:
        return sum(1 for b in self.blocks if b is not None)

    @property
    def total_bytes(self) -> int:
        return sum(b.num_bytes for b in self.blocks if b is not None)

    def writer(self, block_size: int | None = None) -> BlockWriter:
        return BlockWriter(self.serializer, self._adopt,
                           block_size or self.pool.block_size)

    def _adopt(self, buffer: bytes, first_item: int, num_items: int) -> None:
        self.append_block(self.pool.adopt(buffer, first_item, num_items))

    def append_block(self, block: Block) -> None:
        self.blocks.append(block)
        self.total_items += block.num_items

    def reader(self, consume: bool = False, prefetch: int = 2) -> "FileReader":
        return FileReader(self, consume=consume, prefetch=prefetch)

    def release(self) -> None:
        """Drop all block references; buffers return to the pool.

        Disposal is explicit (no finalizer): a release from inside the
        garbage collector could re-enter the pool lock mid-operation.
        """
        blocks, self.blocks = self.blocks, []
        self.total_items = 0
        for block in blocks:
            if block is not None:
                block.release()

    # -- item addressing (used when slicing for scatter) ---------------

    def locate(self, index: int) -> tuple[int, int]:
        """(block position, byte offset) where item `index` starts;
        index == total_items addresses the end of the last block."""
        if not 0 <= index <= self.total_items:
            raise IndexError("item %d out of [0, %d]" % (index, self.total_items))
        if index == self.total_items:
            if not self.blocks:
                return 0, 0
            return len(self.blocks) - 1, self.blocks[-1].end
        count = 0
        for pos, block in enumerate(self.blocks):
            if index < count + block.num_items:
                return pos, self._offset_in_block(block, index - count)
            count += block.num_items
        raise ThrilletteError("item counts inconsistent")

    def _offset_in_block(self, block: Block, skip: int) -> int:
        if skip == 0:
            return block.first_item
        fs = self.serializer.fixed_size
        if fs is not None:
            return block.first_item + skip * fs
        with block.pin() as pin:
            cursor = _BufferCursor(pin.buffer, block.first_item, block.end)
            for _ in range(skip):
                self.serializer.read(cursor)
            return cursor.pos

    def pieces(self, begin_item: int, end_item: int):
        """The byte windows [(block position, begin, end), ...] covering
        items [begin_item, end_item); windows are stream-contiguous."""
        if begin_item >= end_item:
            return []
        bi, bo = self.locate(begin_item)
        ei, eo = self.locate(end_item)
        if bi == ei:
            return [(bi, bo, eo)]
        out = [(bi, bo, self.blocks[bi].end)]
        for j in range(bi + 1, ei):
            block = self.blocks[j]
            out.append((j, block.begin, block.end))
        if eo > self.blocks[ei].begin:
            out.append((ei, self.blocks[ei].begin, eo))
        return out


class _BufferCursor:
    """Reader over one in-memory byte window."""

    __slots__ = ("buf", "pos", "end")

    def __init__(self, buf, pos: int, end: int):
        self.buf = buf
        self.pos = pos
        self.end = end

    def read_bytes(self, n: int) -> bytes:
        pos = self.pos
        if self.end - pos < n:
            raise IncompleteRead("need %d bytes, have %d" % (n, self.end - pos))
        self.pos = pos + n
        return bytes(self.buf[pos:pos + n])

    def read_varint(self) -> int:
        try:
            value, pos = varint_read(self.buf, self.pos)
        except IndexError:
            raise IncompleteRead("buffer ends mid-varint") from None
        if pos > self.end:
            raise IncompleteRead("buffer ends mid-varint")
        self.pos = pos
        return value


class FileReader:
    """Sequential item iterator over a File.

    In consume mode each block is released as soon as it is fully read
    and the next `prefetch` blocks are restored ahead of need, keeping
    residency near the prefetch window.
    """

    def __init__(self, file: File, consume: bool = False, prefetch: int = 2):
        self._file = file
        self._serializer = file.serializer
        self._consume = consume
        self._prefetch = prefetch
        self._remaining = file.total_items
        self._idx = -1
        self._pin = None
        self._buf = b""
        self._pos = 0
        self._end = 0

    def __iter__(self):
        return self

    def __next__(self):
        if self._remaining <= 0:
            self.close()
            raise StopIteration
        self._remaining -= 1
        return self._serializer.read(self)

    def close(self) -> None:
        if self._pin is not None:
            self._pin.release()
            self._pin = None
            if self._consume:
                self._drop_current()
        self._buf = b""
        self._pos = self._end = 0

    def _drop_current(self) -> None:
        block = self._file.blocks[self._idx]
        if block is not None:
            block.release()
            self._file.blocks[self._idx] = None

    def _advance(self) -> None:
        if self._pin is not None:
            self._pin.release()
            self._pin = None
            if self._consume:
                self._drop_current()
        blocks = self._file.blocks
        self._idx += 1
        if self._idx >= len(blocks):
            raise IncompleteRead("file ends in the middle of an item")
        block = blocks[self._idx]
        if block is None:
            raise ThrilletteError("reading an already-consumed block")
        for j in range(self._idx + 1, min(self._idx + 1 + self._prefetch, len(blocks))):
            nxt = blocks[j]
            if nxt is not None:
                nxt.prefetch()
        self._pin = block.pin()
        self._buf = self._pin.buffer
        self._pos = block.begin
        self._end = block.end

    # -- cursor protocol ----------------------------------------------

    def read_bytes(self, n: int) -> bytes:
        pos = self._pos
        if self._end - pos >= n:
            self._pos = pos + n
            return self._buf[pos:pos + n]
        parts = []
        need = n
        while need:
            avail = self._end - self._pos
            if avail == 0:
                self._advance()
                continue
            take = avail if avail < need else need
            parts.append(self._buf[self._pos:self._pos + take])
            self._pos += take
            need -= take
        return b"".join(parts)

    def read_varint(self) -> int:
        if self._end - self._pos >= 10:
            value, self._pos = varint_read(self._buf, self._pos)
            return value
        value = 0
        shift = 0
        while True:
            b = self.read_bytes(1)[0]
            value |= (b & 0x7F) << shift
            if not b & 0x80:
                return value
            shift += 7
            if shift > 63:
                raise ThrilletteError("varint too long")
