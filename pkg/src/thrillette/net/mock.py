"""In-process backend: all p workers are threads in one process and
messages move by reference through shared mailboxes.

Byte counters mirror what a real transport would carry: only traffic
whose sender and receiver live on different (simulated) hosts is
counted, so host-local runs report zero transported bytes.
"""

from __future__ import annotations

import threading

from thrillette.net.config import ClusterConfig
from thrillette.net.group import Group, Mesh, Transport
from thrillette.net.mailbox import Mailbox


class MockNetwork:
    """Shared state of a simulated cluster: one mailbox per worker."""

    def __init__(self, config: ClusterConfig):
        self.config = config
        self.mailboxes = [Mailbox() for _ in range(config.total_workers)]

    def abort(self, exc: BaseException) -> None:
        for mailbox in self.mailboxes:
            mailbox.abort(exc)


class MockTransport(Transport):
    backend = "mock"

    def __init__(self, network: MockNetwork, host: int):
        super().__init__(network.config)
        self.network = network
        self.host = host
        self._lock = threading.Lock()
        self._tx = 0
        self._rx = 0

    def send(self, src, dest, channel, sequence, eoc, payload):
        config = self.config
        dest_host = config.host_of(dest)
        if dest_host != config.host_of(src):
            size = len(payload)
            with self._lock:
                self._tx += size
            peer = self.network.transports[dest_host]
            with peer._lock:
                peer._rx += size
        self.network.mailboxes[dest].deliver(channel, src, sequence, eoc, payload)

    def mailbox_of(self, worker):
        return self.network.mailboxes[worker]

    def abort(self, exc):
        self.network.abort(exc)

    @property
    def tx_bytes(self):
        with self._lock:
            return self._tx

    @property
    def rx_bytes(self):
        with self._lock:
            return self._rx


def mock_mesh(hosts: int = 1, workers_per_host: int = 1,
              config: ClusterConfig | None = None) -> Mesh:
    """Full simulated cluster: p Groups sharing in-memory queues."""
    if config is None:
        config = ClusterConfig(hosts=hosts, workers_per_host=workers_per_host)
    network = MockNetwork(config)
    transports = [MockTransport(network, host) for host in range(config.hosts)]
    network.transports = transports
    groups = [Group(transports[config.host_of(w)], w)
              for w in range(config.total_workers)]
    return Mesh(transports, groups)
