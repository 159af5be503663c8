"""Wire frames, point-to-point ordering and the collectives, on both
the in-process mock transport and real TCP sockets."""

import functools
import operator
import random
import threading

import pytest
from hypothesis import given, settings, strategies as st

from thrillette.errors import ProtocolError
from thrillette.net import frames
from thrillette.net.config import ClusterConfig, parse_endpoints
from thrillette.net.mailbox import EOC
from thrillette.net.mock import mock_mesh
from thrillette.net.tcp import tcp_loopback_meshes


# -- frame codec -------------------------------------------------------

@given(st.integers(min_value=0, max_value=0xFFFFFFFF),
       st.integers(min_value=0, max_value=0xFFFFFFFF),
       st.integers(min_value=0, max_value=0xFFFFFFFF),
       st.binary(max_size=300))
def test_frame_round_trip(channel, sender, sequence, payload):
    frame = frames.MessageFrame(channel, sender, sequence, 0, payload)
    decoded, end = frames.decode(frame.encode())
    assert decoded == frame
    assert end == frames.HEADER_SIZE + len(payload)


def test_frame_stream_decoding():
    blob = b"".join(
        frames.MessageFrame(c, 0, c, 0, bytes([c]) * c).encode()
        for c in range(5))
    got, offset = [], 0
    while offset < len(blob):
        frame, offset = frames.decode(blob, offset)
        got.append(frame)
    assert [f.channel_id for f in got] == [0, 1, 2, 3, 4]
    assert got[4].payload == b"\x04" * 4


def test_frame_bad_magic_rejected():
    good = frames.MessageFrame(1, 2, 3, 0, b"x").encode()
    with pytest.raises(ProtocolError):
        frames.decode(b"JUNK" + good[4:])


def test_frame_truncated_payload_rejected():
    good = frames.MessageFrame(1, 2, 3, 0, b"abcdef").encode()
    with pytest.raises(ProtocolError):
        frames.decode(good[:-2])


def test_eoc_frame_must_be_empty():
    bad = frames.encode_header(1, 0, 0, frames.FLAG_EOC, 3) + b"abc"
    with pytest.raises(ProtocolError):
        frames.decode(bad)


@given(st.integers(min_value=0, max_value=1000),
       st.integers(min_value=0, max_value=7),
       st.integers(min_value=1, max_value=8))
def test_wire_channel_round_trip(logical, local, wph):
    local = local % wph
    wire = frames.wire_channel(logical, local, wph)
    assert frames.unwire_channel(wire, wph) == (logical, local)


# -- cluster config ----------------------------------------------------

def test_parse_endpoints():
    assert parse_endpoints("a:1, b:2 ,c:3") == ("a:1", "b:2", "c:3")
    cfg = ClusterConfig(hosts=2, endpoints=("x:1", "y:2"))
    assert cfg.address_of(1) == ("y", 2)
    assert cfg.host_of(1) == 1 and cfg.local_of(1) == 0


def test_config_validation():
    from thrillette.errors import ConfigError
    with pytest.raises(ConfigError):
        ClusterConfig(hosts=0)
    with pytest.raises(ConfigError):
        ClusterConfig(hosts=2, my_host=2)
    with pytest.raises(ConfigError):
        ClusterConfig(hosts=2, endpoints=("only:1",))


# -- transports --------------------------------------------------------

def each_mesh_kind(hosts, workers_per_host):
    yield "mock", [mock_mesh(hosts, workers_per_host)]
    yield "tcp", tcp_loopback_meshes(hosts, workers_per_host)


def groups_of(meshes):
    return [g for mesh in meshes for g in mesh.groups]


def on_all(groups, fn):
    """Run fn(group) on one thread per worker; returns results in rank
    order, re-raising the first failure."""
    results = [None] * len(groups)
    errors = []

    def call(i, g):
        try:
            results[i] = fn(g)
        except BaseException as exc:  # noqa: BLE001 - propagated below
            errors.append(exc)

    threads = [threading.Thread(target=call, args=(g.my_worker, g))
               for g in groups]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if errors:
        raise errors[0]
    return results


@pytest.mark.parametrize("hosts,wph", [(1, 4), (2, 2), (3, 1)])
def test_point_to_point_fifo(hosts, wph):
    for kind, meshes in each_mesh_kind(hosts, wph):
        groups = groups_of(meshes)
        p = len(groups)

        def job(g):
            # everyone sends 20 ordered payloads to everyone
            for dest in range(p):
                for i in range(20):
                    g.send(dest, 7, b"%d:%d" % (g.my_worker, i))
            got = {}
            for src in range(p):
                got[src] = [g.recv(src, 7) for _ in range(20)]
            return got

        for rank, got in enumerate(on_all(groups, job)):
            for src in range(p):
                assert got[src] == [b"%d:%d" % (src, i) for i in range(20)], \
                    "%s rank %d from %d" % (kind, rank, src)
        for mesh in meshes:
            mesh.close()


def test_collectives_match_sequential_folds():
    for kind, meshes in each_mesh_kind(2, 2):
        groups = groups_of(meshes)
        p = len(groups)

        def job(g):
            w = g.my_worker
            return {
                "bcast": g.broadcast("payload-%d" % w, root=1),
                "allred": g.all_reduce(w + 1, operator.mul),
                "prefix": g.ex_prefix_sum(w + 1, operator.add, 100),
                "gather": g.all_gather((w, "tag")),
                "total": g.ex_prefix_sum_total(2 ** w, operator.add, 0),
            }

        results = on_all(groups, job)
        fact = functools.reduce(operator.mul, range(1, p + 1))
        for w, res in enumerate(results):
            assert res["bcast"] == "payload-1"
            assert res["allred"] == fact
            assert res["prefix"] == 100 + sum(range(1, w + 1))
            assert res["gather"] == [(i, "tag") for i in range(p)]
            assert res["total"] == (sum(2 ** i for i in range(w)), 2 ** p - 1)
        for mesh in meshes:
            mesh.close()


def test_all_reduce_respects_rank_order():
    # non-commutative combine exposes the fold order
    for kind, meshes in each_mesh_kind(1, 4):
        groups = groups_of(meshes)

        def job(g):
            return g.all_reduce("%d" % g.my_worker, operator.add)

        assert on_all(groups, job) == ["0123"] * 4
        for mesh in meshes:
            mesh.close()


def test_barrier_orders_phases():
    for kind, meshes in each_mesh_kind(1, 4):
        groups = groups_of(meshes)
        log = []
        lock = threading.Lock()

        def job(g):
            with lock:
                log.append(("a", g.my_worker))
            g.barrier()
            with lock:
                log.append(("b", g.my_worker))

        on_all(groups, job)
        phases = [phase for phase, _ in log]
        assert phases == ["a"] * 4 + ["b"] * 4
        for mesh in meshes:
            mesh.close()


def test_soak_random_traffic_mock_vs_tcp():
    # same pseudo-random conversation on both transports, byte counters
    # only grow, nothing lost or reordered per (src, channel)
    outcomes = {}
    for kind, meshes in each_mesh_kind(2, 2):
        groups = groups_of(meshes)
        p = len(groups)

        def job(g):
            rng = random.Random(1000 + g.my_worker)
            plan = [(rng.randrange(p), rng.randrange(2),
                     rng.randbytes(rng.randrange(0, 200)))
                    for _ in range(150)]
            sent = {}
            for dest, ch, payload in plan:
                g.send(dest, ch, payload)
                sent.setdefault((dest, ch), []).append(payload)
            for dest in range(p):
                for ch in range(2):
                    g.close_channel(dest, ch)
            received = {}
            for src in range(p):
                for ch in range(2):
                    msgs = []
                    while True:
                        m = g.recv(src, ch)
                        if m is EOC:
                            break
                        msgs.append(m)
                    received[(src, ch)] = msgs
            return sent, received

        results = on_all(groups, job)
        for rank, (_, received) in enumerate(results):
            for src, (sent, _) in enumerate(results):
                for ch in range(2):
                    assert received[(src, ch)] == sent.get((rank, ch), []), \
                        "%s: rank %d channel %d from %d" % (kind, rank, ch, src)
        outcomes[kind] = [r[1] for r in results]
        for mesh in meshes:
            mesh.close()
    assert outcomes["mock"] == outcomes["tcp"]


def test_tcp_counts_transferred_bytes():
    meshes = tcp_loopback_meshes(2, 1)
    groups = groups_of(meshes)

    def job(g):
        g.send(1 - g.my_worker, 0, b"z" * 1000)
        assert g.recv(1 - g.my_worker, 0) == b"z" * 1000
        g.barrier()

    on_all(groups, job)
    assert all(mesh.tx_bytes >= 1000 for mesh in meshes)
    assert all(mesh.rx_bytes >= 1000 for mesh in meshes)
    for mesh in meshes:
        mesh.close()
