"""All-to-all item streams over the message layer.

Every worker writes items (or scatters whole File ranges) toward each of
the p workers and reads the merged inbound traffic. Data travels as
sealed serialized buffers; destinations on the sender's own host receive
Block references instead of byte copies. A stream is closed collectively:
each worker flushes and sends an end-of-channel frame to all p peers,
and a reader finishes when it has seen all p end marks.

Cat streams deliver all items of worker 0, then worker 1, and so on;
Mix streams deliver in arrival order (whole buffers at a time), keeping
only per-sender order.
"""

from __future__ import annotations

from thrillette.data import serial
from thrillette.data.block import BlockWriter, File, _BufferCursor
from thrillette.data.pool import Block, BlockPool
from thrillette.errors import IncompleteRead, ThrilletteError
from thrillette.kernels import varint_read
from thrillette.net.group import Group
from thrillette.net.mailbox import EOC


class Stream:
    """One worker's endpoint of a collective all-to-all exchange."""

    kind = "?"

    def __init__(self, group: Group, pool: BlockPool, channel: int,
                 serializer: serial.Serializer, block_size: int | None = None):
        self.group = group
        self.pool = pool
        self.channel = channel
        self.serializer = serializer
        self.block_size = block_size or pool.block_size
        self._writers: dict[int, BlockWriter] = {}
        self._closed = False

    # -- sending -------------------------------------------------------

    def writer(self, dest: int) -> BlockWriter:
        writer = self._writers.get(dest)
        if writer is None:
            if self._closed:
                raise ThrilletteError("stream already closed")
            writer = BlockWriter(
                self.serializer,
                lambda buf, first, num, d=dest: self._send_sealed(d, buf, first, num),
                self.block_size)
            self._writers[dest] = writer
        return writer

    def write(self, dest: int, item) -> None:
        self.writer(dest).append(item)

    def _send_sealed(self, dest: int, buffer: bytes, first_item: int,
                     num_items: int) -> None:
        group = self.group
        if group.config.host_of(dest) == group.my_host:
            block = self.pool.adopt(buffer, first_item, num_items)
            group.send(dest, self.channel, block)
        else:
            group.send(dest, self.channel, buffer)

    def scatter_file(self, file: File, ranges) -> None:
        """Send file items [ranges[d], ranges[d+1]) to each worker d.

        Same-host destinations get Block views onto the file's buffers;
        no payload bytes cross the transport for them.
        """
        group = self.group
        p = group.num_workers
        if len(ranges) != p + 1:
            raise ThrilletteError(
                "need %d range offsets, got %d" % (p + 1, len(ranges)))
        if ranges[0] != 0 or ranges[-1] != file.total_items:
            raise ThrilletteError(
                "ranges must partition [0, %d], got %r" % (file.total_items, ranges))
        for a, b in zip(ranges, ranges[1:]):
            if a > b:
                raise ThrilletteError("decreasing range offsets %r" % (ranges,))
        my_host = group.my_host
        for dest in range(p):
            pieces = file.pieces(ranges[dest], ranges[dest + 1])
            same_host = group.config.host_of(dest) == my_host
            for pos, begin, end in pieces:
                block = file.blocks[pos]
                if same_host:
                    group.send(dest, self.channel, block.view(begin, end, begin, 0))
                else:
                    with block.pin() as pin:
                        group.send(dest, self.channel, pin.buffer[begin:end])

    def close_writers(self) -> None:
        """Flush everything and end-of-channel every peer. Must be called
        by all p workers for readers to finish."""
        if self._closed:
            return
        self._closed = True
        for writer in self._writers.values():
            writer.close()
        self._writers.clear()
        for dest in range(self.group.num_workers):
            self.group.close_channel(dest, self.channel)

    # -- receiving -----------------------------------------------------

    def read_items(self):
        raise NotImplementedError


class CatStream(Stream):
    kind = "cat"

    def read_items(self):
        """All items of sender 0, then sender 1, ... then p-1."""
        serializer = self.serializer
        for src in range(self.group.num_workers):
            cursor = _SenderCursor(self.group, src, self.channel)
            while cursor.has_more():
                yield serializer.read(cursor)


class MixStream(Stream):
    kind = "mix"

    def read_items(self):
        """Items in arrival order, whole buffers at a time; per-sender
        order preserved, cross-sender interleaving arbitrary."""
        serializer = self.serializer
        group = self.group
        pending = list(range(group.num_workers))
        tails: dict[int, bytearray] = {src: bytearray() for src in pending}
        while pending:
            src, payload = group.recv_any(self.channel, pending)
            tail = tails[src]
            if payload is EOC:
                pending.remove(src)
                if tail:
                    raise IncompleteRead(
                        "sender %d closed mid-item (%d stray bytes)" % (src, len(tail)))
                continue
            if isinstance(payload, Block):
                with payload.pin() as pin:
                    tail += pin.buffer[payload.begin:payload.end]
                payload.release()
            else:
                tail += payload
            cursor = _BufferCursor(tail, 0, len(tail))
            while True:
                mark = cursor.pos
                try:
                    item = serializer.read(cursor)
                except IncompleteRead:
                    cursor.pos = mark
                    break
                yield item
            del tail[:cursor.pos]


class _SenderCursor:
    """Byte cursor over one sender's segment sequence; pulls the next
    segment from the mailbox on demand (blocking)."""

    __slots__ = ("_group", "_src", "_channel", "_buf", "_pos", "_end",
                 "_pin", "_block", "_eoc")

    def __init__(self, group: Group, src: int, channel: int):
        self._group = group
        self._src = src
        self._channel = channel
        self._buf = b""
        self._pos = 0
        self._end = 0
        self._pin = None
        self._block = None
        self._eoc = False

    def _drop_segment(self) -> None:
        if self._pin is not None:
            self._pin.release()
            self._pin = None
        if self._block is not None:
            self._block.release()
            self._block = None
        self._buf = b""
        self._pos = self._end = 0

    def _pull(self) -> bool:
        self._drop_segment()
        if self._eoc:
            return False
        payload = self._group.recv(self._src, self._channel)
        if payload is EOC:
            self._eoc = True
            return False
        if isinstance(payload, Block):
            self._block = payload
            self._pin = payload.pin()
            self._buf = self._pin.buffer
            self._pos = payload.begin
            self._end = payload.end
        else:
            self._buf = payload
            self._pos = 0
            self._end = len(payload)
        return True

    def has_more(self) -> bool:
        while self._pos >= self._end:
            if not self._pull():
                return False
        return True

    def read_bytes(self, n: int) -> bytes:
        pos = self._pos
        if self._end - pos >= n:
            self._pos = pos + n
            return bytes(self._buf[pos:pos + n])
        parts = []
        need = n
        while need:
            avail = self._end - self._pos
            if avail == 0:
                if not self._pull():
                    raise IncompleteRead(
                        "sender %d channel ended mid-item" % self._src)
                continue
            take = avail if avail < need else need
            parts.append(bytes(self._buf[self._pos:self._pos + take]))
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
