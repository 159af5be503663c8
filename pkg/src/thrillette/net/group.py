"""Worker-facing communicator: ordered point-to-point send/recv plus
synchronous collectives.

A Transport is the per-host delivery engine (mock network or TCP mesh);
a Group is one worker's handle onto it. All p workers take part in every
collective, which therefore acts as a global synchronization point.

Collectives are routed star-wise through worker 0: gather in rank order,
combine, redistribute. At desk scale (p <= a few hundred) the O(p)
message count is irrelevant next to correctness, and rank-order folding
makes integer results exact and reproducible.

Every collective call carries an incrementing per-group tag inside its
payload; a receiver that sees a foreign tag raises instead of silently
mispairing values, which turns call-order mistakes into immediate errors
rather than deadlocks.
"""

from __future__ import annotations

import pickle
import threading

from thrillette.errors import ProtocolError
from thrillette.net.config import ClusterConfig
from thrillette.net.frames import COLLECTIVE_CHANNEL
from thrillette.net.mailbox import EOC, Mailbox


class Transport:
    """Per-host message delivery; subclasses implement the actual moving."""

    backend = "none"

    def __init__(self, config: ClusterConfig):
        self.config = config

    def send(self, src: int, dest: int, channel: int, sequence: int,
             eoc: bool, payload) -> None:
        raise NotImplementedError

    def mailbox_of(self, worker: int) -> Mailbox:
        raise NotImplementedError

    def abort(self, exc: BaseException) -> None:
        raise NotImplementedError

    def close(self) -> None:
        pass

    @property
    def tx_bytes(self) -> int:
        return 0

    @property
    def rx_bytes(self) -> int:
        return 0


class Group:
    """One worker's communicator. Not shared across worker threads."""

    def __init__(self, transport: Transport, my_worker: int):
        self.transport = transport
        self.config = transport.config
        self.my_worker = my_worker
        self.mailbox = transport.mailbox_of(my_worker)
        self._send_seq: dict[tuple[int, int], int] = {}
        self._closed: set[tuple[int, int]] = set()
        self._coll_tag = 0

    @property
    def num_workers(self) -> int:
        return self.config.total_workers

    @property
    def my_host(self) -> int:
        return self.config.host_of(self.my_worker)

    @property
    def backend(self) -> str:
        return self.transport.backend

    # -- point to point ------------------------------------------------

    def send(self, dest: int, channel: int, payload, eoc: bool = False) -> None:
        key = (channel, dest)
        if key in self._closed:
            raise ProtocolError(
                "channel %d to worker %d already closed" % (channel, dest))
        sequence = self._send_seq.get(key, 0)
        self._send_seq[key] = sequence + 1
        if eoc:
            self._closed.add(key)
            self._send_seq.pop(key, None)
        self.transport.send(self.my_worker, dest, channel, sequence, eoc, payload)

    def close_channel(self, dest: int, channel: int) -> None:
        self.send(dest, channel, b"", eoc=True)

    def recv(self, src: int, channel: int):
        """Next payload from src, or the EOC sentinel."""
        return self.mailbox.get(channel, src)

    def recv_any(self, channel: int, srcs):
        return self.mailbox.get_any(channel, srcs)

    # -- collectives ---------------------------------------------------

    def _coll_send(self, dest: int, tag: int, value) -> None:
        self.send(dest, COLLECTIVE_CHANNEL, pickle.dumps((tag, value)))

    def _coll_recv(self, src: int, tag: int):
        payload = self.recv(src, COLLECTIVE_CHANNEL)
        if payload is EOC:
            raise ProtocolError("collective channel closed by worker %d" % src)
        got_tag, value = pickle.loads(payload)
        if got_tag != tag:
            raise ProtocolError(
                "collective call order mismatch: worker %d is at tag %d, "
                "worker %d sent tag %d" % (self.my_worker, tag, src, got_tag))
        return value

    def _next_tag(self) -> int:
        tag = self._coll_tag
        self._coll_tag += 1
        return tag

    def _fan_in_out(self, value, at_root):
        """Gather rank-ordered values at worker 0, apply at_root to the
        list, scatter the per-worker results back; returns this worker's."""
        tag = self._next_tag()
        p = self.num_workers
        if p == 1:
            return at_root([value])[0]
        if self.my_worker == 0:
            values = [value]
            for src in range(1, p):
                values.append(self._coll_recv(src, tag))
            results = at_root(values)
            for dest in range(1, p):
                self._coll_send(dest, tag, results[dest])
            return results[0]
        self._coll_send(0, tag, value)
        return self._coll_recv(0, tag)

    def broadcast(self, value, root: int = 0):
        """Every worker returns root's value."""
        tag = self._next_tag()
        p = self.num_workers
        if p == 1:
            return value
        if self.my_worker == root:
            for dest in range(p):
                if dest != root:
                    self._coll_send(dest, tag, value)
            return value
        return self._coll_recv(root, tag)

    def all_reduce(self, value, combine):
        """Left fold of the p values in rank order, on every worker."""
        def fold(values):
            acc = values[0]
            for v in values[1:]:
                acc = combine(acc, v)
            return [acc] * len(values)

        return self._fan_in_out(value, fold)

    def ex_prefix_sum(self, value, combine, initial):
        """Worker w gets initial (+) v0 (+) ... (+) v_{w-1}; worker 0 gets initial."""
        return self.ex_prefix_sum_total(value, combine, initial)[0]

    def ex_prefix_sum_total(self, value, combine, initial):
        """(exclusive prefix, total over all p workers including initial)."""
        def scan(values):
            prefixes = []
            acc = initial
            for v in values:
                prefixes.append(acc)
                acc = combine(acc, v)
            return [(pre, acc) for pre in prefixes]

        return self._fan_in_out(value, scan)

    def all_gather(self, value) -> list:
        """All p values in rank order, on every worker."""
        return self._fan_in_out(value, lambda values: [list(values)] * len(values))

    def barrier(self) -> None:
        self._fan_in_out(None, lambda values: values)


class Mesh:
    """The locally visible part of a connected cluster.

    Mock backend: all p Groups (single process). TCP backend: the c
    Groups of this host. Counters aggregate over the local transports.
    """

    def __init__(self, transports: list[Transport], groups: list[Group]):
        self.transports = transports
        self.groups = groups
        self.config = transports[0].config

    @property
    def backend(self) -> str:
        return self.transports[0].backend

    @property
    def tx_bytes(self) -> int:
        return sum(t.tx_bytes for t in self.transports)

    @property
    def rx_bytes(self) -> int:
        return sum(t.rx_bytes for t in self.transports)

    def abort(self, exc: BaseException) -> None:
        for t in self.transports:
            t.abort(exc)

    def close(self) -> None:
        for t in self.transports:
            t.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()
