"""TCP backend: one process per host, a full socket mesh between hosts.

Each pair of hosts shares one connection (the higher-ranked host dials
the lower), so every host holds h-1 links. Worker threads write frames
straight to the peer socket under a per-link lock; a single dispatcher
thread owns all inbound traffic, reassembles frames, and routes payloads
to the local workers' mailboxes. Traffic between workers of the same
host never touches a socket: payloads are handed over by reference.

Byte counters live where the bytes move: tx in the send path, rx in the
dispatcher, both counting frame payload lengths.
"""

from __future__ import annotations

import pickle
import selectors
import socket
import struct
import threading
import time

from thrillette.errors import JobAborted, NetworkError, ProtocolError
from thrillette.net.config import ClusterConfig
from thrillette.net.frames import (
    FLAG_ABORT,
    FLAG_EOC,
    HEADER_SIZE,
    MAGIC,
    decode_header,
    encode_header,
    unwire_channel,
    wire_channel,
)
from thrillette.net.group import Group, Mesh, Transport
from thrillette.net.mailbox import Mailbox

_HELLO = struct.Struct("<4sIII")  # magic, peer host id, hosts, workers_per_host
_ACK = b"\x06"
_NAK = b"\x15"
_CHUNK = 1 << 18
_INLINE_SEND = 1 << 16


def _read_exact(sock: socket.socket, n: int) -> bytes:
    buf = bytearray()
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            raise NetworkError("peer closed connection during handshake")
        buf += chunk
    return bytes(buf)


class TcpTransport(Transport):
    backend = "tcp"

    def __init__(self, config: ClusterConfig, listener: socket.socket | None = None):
        super().__init__(config)
        self._mailboxes = {w: Mailbox() for w in config.workers_of_host(config.my_host)}
        self._links: dict[int, tuple[socket.socket, threading.Lock]] = {}
        self._listener = listener
        self._dispatcher: threading.Thread | None = None
        self._closing = threading.Event()
        self._ctr_lock = threading.Lock()
        self._tx = 0
        self._rx = 0

    # -- mesh setup ----------------------------------------------------

    def connect(self) -> "TcpTransport":
        config = self.config
        my = config.my_host
        if config.hosts > 1 and self._listener is None:
            _, port = config.address_of(my)
            self._listener = socket.create_server(("", port), backlog=config.hosts)
        inbound = config.hosts - 1 - my
        accept_errors: list[BaseException] = []
        acceptor = None
        if inbound:
            acceptor = threading.Thread(
                target=self._accept_loop, args=(inbound, accept_errors),
                name="accept-h%d" % my, daemon=True)
            acceptor.start()
        for peer in range(my):
            self._dial(peer)
        if acceptor is not None:
            acceptor.join(config.connect_timeout)
            if acceptor.is_alive():
                raise NetworkError(
                    "host %d timed out waiting for inbound connections" % my)
            if accept_errors:
                raise accept_errors[0]
        if self._links:
            self._dispatcher = threading.Thread(
                target=self._dispatch_loop, name="dispatch-h%d" % my, daemon=True)
            self._dispatcher.start()
        return self

    def _accept_loop(self, inbound: int, errors: list) -> None:
        try:
            for _ in range(inbound):
                sock, _addr = self._listener.accept()
                self._handshake_inbound(sock)
        except BaseException as exc:
            errors.append(exc)

    def _handshake_inbound(self, sock: socket.socket) -> None:
        config = self.config
        sock.settimeout(config.connect_timeout)
        magic, peer, hosts, wph = _HELLO.unpack(_read_exact(sock, _HELLO.size))
        if magic != MAGIC:
            sock.close()
            raise ProtocolError("bad handshake magic %r" % magic)
        if hosts != config.hosts or wph != config.workers_per_host or not (
                0 <= peer < config.hosts):
            sock.sendall(_NAK)
            sock.close()
            raise ProtocolError(
                "topology mismatch from host %d: peer has %dx%d, we have %dx%d"
                % (peer, hosts, wph, config.hosts, config.workers_per_host))
        sock.sendall(_ACK)
        self._adopt(peer, sock)

    def _dial(self, peer: int) -> None:
        config = self.config
        name, port = config.address_of(peer)
        deadline = time.monotonic() + config.connect_timeout
        while True:
            try:
                sock = socket.create_connection((name, port), timeout=1.0)
                break
            except OSError as exc:
                if time.monotonic() >= deadline:
                    raise NetworkError(
                        "cannot reach host %d at %s:%d: %s" % (peer, name, port, exc)
                    ) from exc
                time.sleep(0.05)
        sock.settimeout(config.connect_timeout)
        sock.sendall(_HELLO.pack(
            MAGIC, config.my_host, config.hosts, config.workers_per_host))
        reply = _read_exact(sock, 1)
        if reply != _ACK:
            sock.close()
            raise ProtocolError("host %d rejected our topology" % peer)
        self._adopt(peer, sock)

    def _adopt(self, peer: int, sock: socket.socket) -> None:
        sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        sock.settimeout(None)
        self._links[peer] = (sock, threading.Lock())

    # -- data path -----------------------------------------------------

    def send(self, src, dest, channel, sequence, eoc, payload):
        config = self.config
        dest_host = config.host_of(dest)
        if dest_host == config.host_of(src):
            self._mailboxes[dest].deliver(channel, src, sequence, eoc, payload)
            return
        if not isinstance(payload, (bytes, bytearray, memoryview)):
            raise TypeError("cross-host payload must be bytes-like")
        size = len(payload)
        header = encode_header(
            wire_channel(channel, config.local_of(dest), config.workers_per_host),
            src, sequence, FLAG_EOC if eoc else 0, size)
        sock, lock = self._links[dest_host]
        try:
            with lock:
                if size < _INLINE_SEND:
                    sock.sendall(header + bytes(payload))
                else:
                    sock.sendall(header)
                    sock.sendall(payload)
        except OSError as exc:
            raise NetworkError("send to host %d failed: %s" % (dest_host, exc)) from exc
        with self._ctr_lock:
            self._tx += size

    def _dispatch_loop(self) -> None:
        sel = selectors.DefaultSelector()
        buffers: dict[socket.socket, bytearray] = {}
        for host, (sock, _lock) in self._links.items():
            sel.register(sock, selectors.EVENT_READ, host)
            buffers[sock] = bytearray()
        live = len(buffers)
        try:
            while live and not self._closing.is_set():
                for key, _events in sel.select(timeout=0.2):
                    sock = key.fileobj
                    try:
                        chunk = sock.recv(_CHUNK)
                    except OSError:
                        chunk = b""
                    if not chunk:
                        sel.unregister(sock)
                        live -= 1
                        if not self._closing.is_set():
                            self._abort_local(
                                NetworkError("connection to host %d lost" % key.data))
                        continue
                    buf = buffers[sock]
                    buf += chunk
                    consumed = self._drain(buf)
                    if consumed:
                        del buf[:consumed]
        except BaseException as exc:
            self._abort_local(exc)
        finally:
            sel.close()

    def _drain(self, buf: bytearray) -> int:
        config = self.config
        base = config.my_host * config.workers_per_host
        offset = 0
        n = len(buf)
        while n - offset >= HEADER_SIZE:
            channel, sender, sequence, flags, length = decode_header(buf, offset)
            start = offset + HEADER_SIZE
            if n - start < length:
                break
            payload = bytes(buf[start:start + length])
            offset = start + length
            with self._ctr_lock:
                self._rx += length
            if flags & FLAG_ABORT:
                self._abort_local(pickle.loads(payload))
                continue
            logical, dest_local = unwire_channel(channel, config.workers_per_host)
            self._mailboxes[base + dest_local].deliver(
                logical, sender, sequence, bool(flags & FLAG_EOC), payload)
        return offset

    # -- teardown and failure ------------------------------------------

    def mailbox_of(self, worker):
        return self._mailboxes[worker]

    def abort(self, exc):
        try:
            payload = pickle.dumps(exc)
        except Exception:
            payload = pickle.dumps(JobAborted(str(exc)))
        frame = encode_header(0, self.config.my_host * self.config.workers_per_host,
                              0, FLAG_ABORT, len(payload)) + payload
        for _host, (sock, lock) in self._links.items():
            try:
                with lock:
                    sock.sendall(frame)
            except OSError:
                pass
        self._abort_local(exc)

    def _abort_local(self, exc):
        for mailbox in self._mailboxes.values():
            mailbox.abort(exc)

    def close(self):
        self._closing.set()
        if self._dispatcher is not None:
            self._dispatcher.join(5.0)
        for sock, _lock in self._links.values():
            try:
                sock.close()
            except OSError:
                pass
        if self._listener is not None:
            try:
                self._listener.close()
            except OSError:
                pass

    @property
    def tx_bytes(self):
        with self._ctr_lock:
            return self._tx

    @property
    def rx_bytes(self):
        with self._ctr_lock:
            return self._rx


def tcp_mesh(config: ClusterConfig, listener: socket.socket | None = None) -> Mesh:
    """Connect this host into the cluster; Groups for the local workers."""
    transport = TcpTransport(config, listener).connect()
    groups = [Group(transport, w) for w in config.workers_of_host(config.my_host)]
    return Mesh([transport], groups)


def loopback_configs(hosts: int, workers_per_host: int,
                     connect_timeout: float = 15.0):
    """Pre-bound listeners on ephemeral loopback ports plus matching
    per-host configs, for running a whole TCP cluster in one process."""
    listeners = [socket.create_server(("127.0.0.1", 0), backlog=hosts)
                 for _ in range(hosts)]
    endpoints = tuple("127.0.0.1:%d" % s.getsockname()[1] for s in listeners)
    configs = [ClusterConfig(hosts=hosts, workers_per_host=workers_per_host,
                             my_host=i, endpoints=endpoints,
                             connect_timeout=connect_timeout)
               for i in range(hosts)]
    return configs, listeners


def tcp_loopback_meshes(hosts: int, workers_per_host: int) -> list[Mesh]:
    """One mesh per simulated host, all over real loopback sockets."""
    configs, listeners = loopback_configs(hosts, workers_per_host)
    meshes: list[Mesh | None] = [None] * hosts
    errors: list[BaseException] = []

    def runner(i: int) -> None:
        try:
            meshes[i] = tcp_mesh(configs[i], listeners[i])
        except BaseException as exc:
            errors.append(exc)

    threads = [threading.Thread(target=runner, args=(i,), name="connect-h%d" % i)
               for i in range(hosts)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if errors:
        raise errors[0]
    return meshes
