"""All-to-all data streams on top of the block layer."""

import random

import pytest

from conftest import run_all
from thrillette.data import serial
from thrillette.data.block import File


def test_cat_stream_orders_by_sender_rank():
    def job(ctx):
        s = ctx.new_cat_stream()
        me = ctx.my_worker
        for dest in range(ctx.num_workers):
            for i in range(5):
                s.write(dest, (me, i))
        s.close_writers()
        return list(s.read_items())

    for p in (1, 3, 4):
        for got in run_all(job, p=p):
            expect = [(src, i) for src in range(p) for i in range(5)]
            assert got == expect


def test_mix_stream_delivers_everything():
    def job(ctx):
        s = ctx.new_mix_stream()
        me = ctx.my_worker
        for dest in range(ctx.num_workers):
            for i in range(7):
                s.write(dest, (me, i))
        s.close_writers()
        return sorted(s.read_items())

    for p in (1, 4):
        for got in run_all(job, p=p):
            assert got == sorted((src, i) for src in range(p)
                                 for i in range(7))


def test_streams_carry_typed_items():
    def job(ctx):
        s = ctx.new_cat_stream(serializer=serial.uint64)
        for dest in range(ctx.num_workers):
            s.write(dest, ctx.my_worker + 1000)
        s.close_writers()
        return list(s.read_items())

    for got in run_all(job, p=3):
        assert got == [1000, 1001, 1002]


def test_empty_stream_closes_clean():
    def job(ctx):
        s = ctx.new_cat_stream()
        s.close_writers()
        return list(s.read_items())

    assert run_all(job, p=4) == [[]] * 4


def test_scatter_file_partitions_by_offsets():
    # worker 0 scatters 100 items; receiver d gets [25d, 25d + 25)
    def job(ctx):
        s = ctx.new_cat_stream(serializer=serial.uint64)
        if ctx.my_worker == 0:
            f = File(ctx.pool, serial.uint64)
            with f.writer(64) as w:
                w.extend(range(100))
            s.scatter_file(f, [0, 25, 50, 75, 100])
            f.release()
        s.close_writers()
        return list(s.read_items())

    results = run_all(job, p=4)
    for d, got in enumerate(results):
        assert got == list(range(25 * d, 25 * d + 25))


def test_scatter_from_every_worker_concatenates():
    # each worker scatters its own run; Cat order is by sender rank
    def job(ctx):
        s = ctx.new_cat_stream(serializer=serial.uint64)
        f = File(ctx.pool, serial.uint64)
        base = ctx.my_worker * 10
        with f.writer(32) as w:
            w.extend(range(base, base + 10))
        # everything to worker 0, nothing to the others
        s.scatter_file(f, [0, 10] + [10] * (ctx.num_workers - 1))
        f.release()
        s.close_writers()
        return list(s.read_items())

    results = run_all(job, p=3)
    assert results[0] == list(range(30))
    assert results[1] == results[2] == []


def test_scatter_empty_ranges():
    def job(ctx):
        s = ctx.new_cat_stream(serializer=serial.uint64)
        f = File(ctx.pool, serial.uint64)
        s.scatter_file(f, [0] * (ctx.num_workers + 1))
        f.release()
        s.close_writers()
        return list(s.read_items())

    assert run_all(job, p=2) == [[], []]


def test_scatter_offsets_validated():
    def job(ctx):
        s = ctx.new_cat_stream(serializer=serial.uint64)
        f = File(ctx.pool, serial.uint64)
        with f.writer(32) as w:
            w.extend(range(10))
        try:
            s.scatter_file(f, [0, 5])   # wrong arity for p workers
        finally:
            f.release()

    from thrillette.errors import JobAborted, ThrilletteError
    with pytest.raises((JobAborted, ThrilletteError, ValueError)):
        run_all(job, p=2)


def test_variable_size_items_across_stream():
    rng = random.Random(9)
    payloads = [rng.randbytes(rng.randrange(0, 300)) for _ in range(40)]

    def job(ctx):
        s = ctx.new_cat_stream(serializer=serial.raw_bytes, block_size=64)
        if ctx.my_worker == 0:
            for i, blob in enumerate(payloads):
                s.write(i % ctx.num_workers, blob)
        s.close_writers()
        return list(s.read_items())

    results = run_all(job, p=4)
    for d in range(4):
        assert results[d] == payloads[d::4]
