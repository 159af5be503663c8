"""Per-worker inbound message queues.

A Mailbox holds the payloads delivered to one worker, keyed by (logical
channel, sender). Delivery comes from the owning transport (mock network
or TCP dispatcher); consumption comes from the worker thread. An abort
poisons the mailbox so every blocked or future receive raises.
"""

from __future__ import annotations

import threading
from collections import deque

from thrillette.errors import ProtocolError


class _EndOfChannel:
    __slots__ = ()

    def __repr__(self):
        return "EOC"


# Returned by get/get_any when the sender closed the channel.
EOC = _EndOfChannel()


class Mailbox:
    def __init__(self):
        self._cond = threading.Condition()
        self._queues: dict[tuple[int, int], deque] = {}
        self._eoc: set[tuple[int, int]] = set()
        self._next_seq: dict[tuple[int, int], int] = {}
        self._exc = None

    def deliver(self, channel: int, src: int, sequence: int, eoc: bool, payload) -> None:
        key = (channel, src)
        with self._cond:
            if self._exc is not None:
                return
            expected = self._next_seq.get(key, 0)
            if sequence != expected:
                raise ProtocolError(
                    "out-of-order frame on channel %d from %d: got seq %d, expected %d"
                    % (channel, src, sequence, expected))
            self._next_seq[key] = expected + 1
            if eoc:
                self._eoc.add(key)
            else:
                self._queues.setdefault(key, deque()).append(payload)
            self._cond.notify_all()

    def abort(self, exc: BaseException) -> None:
        with self._cond:
            if self._exc is None:
                self._exc = exc
            self._cond.notify_all()

    def get(self, channel: int, src: int):
        """Next payload from src on channel, or EOC; blocks until available."""
        key = (channel, src)
        with self._cond:
            while True:
                if self._exc is not None:
                    raise self._exc
                queue = self._queues.get(key)
                if queue:
                    return queue.popleft()
                if key in self._eoc:
                    self._queues.pop(key, None)
                    return EOC
                self._cond.wait()

    def get_any(self, channel: int, srcs):
        """(src, payload) or (src, EOC) for the first ready source in srcs."""
        with self._cond:
            while True:
                if self._exc is not None:
                    raise self._exc
                for src in srcs:
                    queue = self._queues.get((channel, src))
                    if queue:
                        return src, queue.popleft()
                for src in srcs:
                    key = (channel, src)
                    if key in self._eoc and not self._queues.get(key):
                        self._queues.pop(key, None)
                        return src, EOC
                self._cond.wait()
