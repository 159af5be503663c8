"""Memory pool: accounting, LRU eviction to disk, pinned restore."""

import os
import random

import pytest

from thrillette.data import serial
from thrillette.data.block import File
from thrillette.data.pool import BlockPool


def fill_file(pool, n, block_size=256):
    f = File(pool, serial.uint64)
    with f.writer(block_size) as w:
        w.extend(range(n))
    return f


def test_unlimited_pool_never_spills(tmp_path):
    pool = BlockPool(swap_dir=str(tmp_path))
    f = fill_file(pool, 10_000)
    assert pool.spill_count == 0
    assert pool.bytes_on_disk == 0
    f.release()
    pool.close()


def test_eviction_to_disk_and_restore(tmp_path):
    # limit fits 4 blocks; write 40, then read everything back
    pool = BlockPool(memory_limit=1024, swap_dir=str(tmp_path),
                     block_size=256)
    f = fill_file(pool, 1280, block_size=256)   # 10240 bytes, 40 blocks
    assert pool.spill_count > 0
    assert pool.bytes_in_ram <= 1024
    assert pool.bytes_on_disk > 0
    assert any(os.scandir(str(tmp_path)))
    assert list(f.reader()) == list(range(1280))
    assert pool.restore_count > 0
    f.release()
    assert pool.bytes_in_ram == 0
    assert pool.bytes_on_disk == 0
    pool.close()


def test_release_deletes_swap_files(tmp_path):
    pool = BlockPool(memory_limit=512, swap_dir=str(tmp_path),
                     block_size=256)
    f = fill_file(pool, 640, block_size=256)
    assert pool.bytes_on_disk > 0
    f.release()
    assert pool.bytes_on_disk == 0
    assert not [e for e in os.scandir(str(tmp_path)) if e.is_file()]
    pool.close()


def test_pin_protects_from_eviction(tmp_path):
    pool = BlockPool(memory_limit=512, swap_dir=str(tmp_path),
                     block_size=256)
    f = fill_file(pool, 64, block_size=256)     # two blocks, resident
    pin = f.blocks[0].pin()
    try:
        # force pressure well past the limit
        g = fill_file(pool, 1280, block_size=256)
        assert pin.buffer is not None
        first = bytes(pin.buffer)
        assert first == f.blocks[0].entry.buffer
        g.release()
    finally:
        pin.release()
    f.release()
    pool.close()


def test_accounting_matches_live_bytes(tmp_path):
    pool = BlockPool(memory_limit=2048, swap_dir=str(tmp_path),
                     block_size=256)
    files = [fill_file(pool, 256, block_size=256) for _ in range(8)]
    total = sum(f.total_bytes for f in files)
    assert pool.bytes_in_ram + pool.bytes_on_disk == total
    assert pool.blocks_live == sum(f.num_blocks for f in files)
    for f in files:
        f.release()
    assert pool.blocks_live == 0
    assert pool.bytes_in_ram == 0
    pool.close()


def test_checksum_survives_eviction_cycles(tmp_path):
    # random interleaving of writes and reads under a tight limit
    rng = random.Random(5)
    pool = BlockPool(memory_limit=768, swap_dir=str(tmp_path),
                     block_size=128)
    files, oracle = [], []
    for i in range(12):
        items = [rng.getrandbits(60) for _ in range(rng.randrange(1, 200))]
        f = File(pool, serial.uint64)
        with f.writer(128) as w:
            w.extend(items)
        files.append(f)
        oracle.append(items)
    order = list(range(12))
    rng.shuffle(order)
    for i in order:
        assert list(files[i].reader()) == oracle[i]
    for f in files:
        f.release()
    pool.close()


def test_peak_tracks_high_water_mark(tmp_path):
    pool = BlockPool(swap_dir=str(tmp_path), block_size=256)
    f = fill_file(pool, 512, block_size=256)
    peak = pool.peak_bytes_in_ram
    assert peak >= f.total_bytes
    f.release()
    assert pool.peak_bytes_in_ram == peak  # peak never decreases
    pool.close()


def test_view_shares_entry_refcount(tmp_path):
    pool = BlockPool(block_size=256)
    f = fill_file(pool, 32, block_size=256)
    block = f.blocks[0]
    view = block.view(block.begin, block.begin + 8, block.begin, 1)
    block.release()
    with view.pin() as pin:     # entry must still be alive via the view
        assert len(pin.buffer) >= 8
    view.release()
    pool.close()
