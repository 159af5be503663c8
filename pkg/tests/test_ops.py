"""Per-operation semantics: ordering, edge cases, determinism. The
exhaustive every-op-versus-reference sweep lives in test_acceptance."""

import collections
import operator
import os
import random
import statistics

import pytest
from hypothesis import given, settings, strategies as st

import reference
from conftest import agreed, run_all, run_one
from thrillette.data import serial
from thrillette.errors import JobAborted, ProtocolError
from thrillette.ops import from_list, generate, read_binary, read_lines

small_int_lists = st.lists(st.integers(min_value=-1000, max_value=1000),
                           max_size=80)


# -- sources -----------------------------------------------------------

def test_generate_covers_range_once():
    def job(ctx):
        return generate(ctx, 103).all_gather()

    assert agreed(job, p=4) == list(range(103))


def test_generate_applies_fn():
    def job(ctx):
        return generate(ctx, 10, fn=lambda i: i * i).all_gather()

    assert run_one(job, p=3) == [i * i for i in range(10)]


def test_generate_rejects_negative():
    def job(ctx):
        generate(ctx, -1)

    with pytest.raises((JobAborted, ValueError)):
        run_all(job)


def test_from_list_splits_ceil_first():
    def job(ctx):
        d = from_list(ctx, list("abcdefghij"))
        local = list(d.node.iter_stored(False))
        return local, d.all_gather()

    results = run_all(job, p=3)
    assert [r[0] for r in results] == [list("abcd"), list("efg"), list("hij")]
    assert all(r[1] == list("abcdefghij") for r in results)


def test_empty_sources():
    def job(ctx):
        return generate(ctx, 0).all_gather(), from_list(ctx, []).size()

    assert agreed(job, p=2) == ([], 0)


# -- text and binary i/o -----------------------------------------------

def test_lines_round_trip_across_worker_counts(tmp_path):
    lines = ["line %d" % i for i in range(257)]

    def write(ctx):
        from_list(ctx, lines).write_lines(str(tmp_path / "txt"))

    def read(ctx):
        return read_lines(ctx, str(tmp_path / "txt")).all_gather()

    run_all(write, p=4)
    assert run_one(read, p=3) == lines
    assert run_one(read, p=1) == lines


def test_read_lines_handles_missing_final_newline(tmp_path):
    path = tmp_path / "raw.txt"
    path.write_bytes(b"alpha\nbeta\ngamma")

    def job(ctx):
        return read_lines(ctx, str(path)).all_gather()

    assert agreed(job, p=3) == ["alpha", "beta", "gamma"]


def test_read_lines_splits_bytes_not_lines(tmp_path):
    # wildly uneven line lengths still end up roughly byte-balanced
    lines = ["x" * (1 if i % 2 else 200) for i in range(400)]
    path = tmp_path / "skew.txt"
    path.write_text("\n".join(lines) + "\n")

    def job(ctx):
        local = read_lines(ctx, str(path)).size()
        return local

    def per_worker(ctx):
        d = read_lines(ctx, str(path))
        return len(list(d.node.iter_stored(False)))

    assert run_one(job, p=4) == 400
    counts = run_all(per_worker, p=4)
    assert sum(counts) == 400
    assert max(counts) < 400  # no worker swallowed the whole file


def test_binary_round_trip_typed(tmp_path):
    items = [(i, float(i) / 3) for i in range(500)]
    s = serial.pair(serial.uint64, serial.float64)

    def write(ctx):
        from_list(ctx, items).write_binary(str(tmp_path / "bin"),
                                           serializer=s)

    def read(ctx):
        return read_binary(ctx, str(tmp_path / "bin"),
                           serializer=s).all_gather()

    run_all(write, p=3)
    assert agreed(read, p=4) == items


def test_binary_round_trip_pickled_objects(tmp_path):
    items = [{"id": i, "tags": [i, i + 1]} for i in range(40)]

    def write(ctx):
        from_list(ctx, items).write_binary(str(tmp_path / "objs"))

    def read(ctx):
        return read_binary(ctx, str(tmp_path / "objs")).all_gather()

    run_all(write, p=2)
    assert run_one(read, p=3) == items


def test_read_binary_rejects_foreign_files(tmp_path):
    bad = tmp_path / "bad.bin"
    bad.write_bytes(b"NOPE" + b"\x00" * 20)

    def job(ctx):
        return read_binary(ctx, str(bad),
                           serializer=serial.uint64).all_gather()

    with pytest.raises((JobAborted, ProtocolError)):
        run_all(job)


def test_read_binary_rejects_item_size_mismatch(tmp_path):
    def write(ctx):
        from_list(ctx, [1, 2, 3]).write_binary(str(tmp_path / "u64"),
                                               serializer=serial.uint64)

    run_all(write)

    def job(ctx):
        s = serial.FixedBytesSerializer(4)
        return read_binary(ctx, str(tmp_path / "u64"),
                           serializer=s).all_gather()

    with pytest.raises((JobAborted, ProtocolError)):
        run_all(job)


def test_write_lines_creates_files_even_when_empty(tmp_path):
    def job(ctx):
        generate(ctx, 0).map(str).write_lines(str(tmp_path / "empty"))

    run_all(job, p=3)
    parts = sorted(os.listdir(tmp_path / "empty"))
    assert len(parts) == 3
    assert all(os.path.getsize(tmp_path / "empty" / p) == 0 for p in parts)


# -- fused local ops ---------------------------------------------------

@settings(deadline=None, max_examples=25)
@given(small_int_lists)
def test_map_filter_flat_map_chain(xs):
    def job(ctx):
        return (from_list(ctx, xs)
                .map(lambda x: x * 2)
                .filter(lambda x: x % 3 != 0)
                .flat_map(lambda x: (x, -x))
                .all_gather())

    expect = [y for x in xs for y in (x * 2, -x * 2) if (x * 2) % 3 != 0]
    assert run_one(job, p=2) == expect


def test_sample_bounds_and_determinism():
    def job(ctx):
        d = generate(ctx, 4000)
        none = d.bernoulli_sample(0.0).size()
        everything = d.bernoulli_sample(1.0).size()
        once = d.bernoulli_sample(0.3).all_gather()
        again = d.bernoulli_sample(0.3).all_gather()
        return none, everything, once, again

    none, everything, once, again = run_one(job, p=4, seed=11)
    assert none == 0
    assert everything == 4000
    assert 0.2 < len(once) / 4000 < 0.4
    assert once != again            # independent sample per op instance
    rerun = run_one(job, p=4, seed=11)
    assert rerun[2] == once         # but reproducible run to run


def test_sample_rejects_bad_probability():
    def job(ctx):
        generate(ctx, 10).bernoulli_sample(1.5)

    with pytest.raises((JobAborted, ValueError)):
        run_all(job)


# -- reductions --------------------------------------------------------

def counter_oracle(items, key):
    out = {}
    for item in items:
        out[key(item)] = out.get(key(item), 0) + item
    return out


def test_reduce_by_key_matches_counter():
    xs = [random.Random(3).randrange(50) for _ in range(5000)]

    def job(ctx):
        return (from_list(ctx, xs)
                .map(lambda x: (x % 13, x))
                .reduce_by_key(key=lambda kv: kv[0],
                               reduce=lambda a, b: (a[0], a[1] + b[1]))
                .all_gather())

    oracle = collections.Counter()
    for x in xs:
        oracle[x % 13] += x
    for p in (1, 4):
        assert dict(run_one(job, p=p)) == dict(oracle)


def test_reduce_by_key_output_is_deterministic():
    xs = list(range(300))

    def job(ctx):
        return (from_list(ctx, xs)
                .map(lambda x: (x % 7, 1))
                .reduce_by_key(key=lambda kv: kv[0],
                               reduce=lambda a, b: (a[0], a[1] + b[1]))
                .all_gather())

    assert run_one(job, p=4) == run_one(job, p=4)


def test_reduce_by_key_single_occurrence_passthrough():
    def job(ctx):
        return (from_list(ctx, [("a", 1), ("b", 2)])
                .reduce_by_key(key=lambda kv: kv[0],
                               reduce=lambda a, b: 1 / 0)
                .all_gather())

    assert sorted(run_one(job, p=2)) == [("a", 1), ("b", 2)]


def test_reduce_to_index_dense_with_neutral():
    def job(ctx):
        return (from_list(ctx, [3, 3, 7, 1])
                .map(lambda x: (x, x * 10))
                .reduce_to_index(index=lambda kv: kv[0],
                                 reduce=lambda a, b: (a[0], a[1] + b[1]),
                                 size=10, neutral=(None, 0))
                .all_gather())

    expect = [(None, 0)] * 10
    expect[3] = (3, 60)
    expect[7] = (7, 70)
    expect[1] = (1, 10)
    assert agreed(job, p=3) == expect


def test_reduce_to_index_bounds_checked():
    def job(ctx):
        (from_list(ctx, [5])
         .reduce_to_index(index=lambda x: x, reduce=lambda a, b: a,
                          size=3, neutral=0)
         .all_gather())

    with pytest.raises((JobAborted, ValueError)):
        run_all(job, p=2)


def test_group_by_key_sees_all_members():
    xs = [(i % 5, i) for i in range(200)]

    def job(ctx):
        return (from_list(ctx, xs)
                .group_by_key(key=lambda kv: kv[0],
                              group=lambda items: statistics.median(
                                  v for _, v in items))
                .all_gather())

    expect = sorted(statistics.median(v for k, v in xs if k == g)
                    for g in range(5))
    for p in (1, 4):
        assert sorted(run_one(job, p=p)) == expect


def test_group_to_index_fills_gaps():
    def job(ctx):
        return (from_list(ctx, [(2, "a"), (2, "b"), (5, "c")])
                .group_to_index(index=lambda kv: kv[0],
                                group=lambda items: "".join(
                                    v for _, v in items),
                                size=7, neutral="")
                .all_gather())

    assert agreed(job, p=2) == ["", "", "ab", "", "", "c", ""]


# -- sort and merge ----------------------------------------------------

@settings(deadline=None, max_examples=25)
@given(small_int_lists)
def test_sort_matches_sorted(xs):
    def job(ctx):
        return from_list(ctx, xs).sort().all_gather()

    assert run_one(job, p=3) == sorted(xs)


def test_sort_by_key_is_stable():
    items = [(i % 4, i) for i in range(100)]

    def job(ctx):
        return (from_list(ctx, items)
                .sort(key=lambda kv: kv[0])
                .all_gather())

    assert agreed(job, p=4) == sorted(items, key=lambda kv: kv[0])


def test_sort_all_equal_keys_balanced():
    def job(ctx):
        out = from_list(ctx, [42] * 1000).sort().execute()
        return out.node.files[0].total_items

    counts = run_all(job, p=8)
    assert sum(counts) == 1000
    assert max(counts) <= 1.5 * 1000 / 8


def test_merge_keeps_edge_order_on_ties():
    a = [(1, "a0"), (1, "a1"), (2, "a2")]
    b = [(1, "b0"), (2, "b1"), (2, "b2")]

    def job(ctx):
        da = from_list(ctx, a)
        db = from_list(ctx, b)
        return da.merge(db, key=lambda kv: kv[0]).all_gather()

    expect = [(1, "a0"), (1, "a1"), (1, "b0"),
              (2, "a2"), (2, "b1"), (2, "b2")]
    for p in (1, 3):
        assert run_one(job, p=p) == expect


def test_merge_rejects_unsorted_input():
    def job(ctx):
        da = from_list(ctx, [3, 1, 2])
        db = from_list(ctx, [1, 2, 3])
        return da.merge(db).all_gather()

    with pytest.raises((JobAborted, ValueError)) as info:
        run_all(job, p=2)
    assert "not sorted" in str(info.value)


# -- rearrangements ----------------------------------------------------

def test_concat_preserves_order_and_balance():
    def job(ctx):
        a = from_list(ctx, list(range(0, 9)))
        b = from_list(ctx, list(range(100, 108)))
        d = a.concat(b)
        mine = d.execute().node.files
        local = sum(f.total_items for f in mine)
        return local, d.all_gather()

    results = run_all(job, p=4)
    expect = list(range(0, 9)) + list(range(100, 108))
    assert all(r[1] == expect for r in results)
    assert [r[0] for r in results] == [5, 4, 4, 4]


def test_union_merges_multisets():
    def job(ctx):
        a = generate(ctx, 50)
        b = generate(ctx, 30, fn=lambda i: i + 100)
        return sorted(a.union(b).all_gather())

    expect = sorted(list(range(50)) + [i + 100 for i in range(30)])
    assert agreed(job, p=3) == expect


@settings(deadline=None, max_examples=20)
@given(small_int_lists, st.integers(min_value=0, max_value=5))
def test_prefix_sum_matches_reference(xs, initial):
    def job(ctx):
        return (from_list(ctx, xs)
                .prefix_sum(initial=initial)
                .all_gather())

    assert run_one(job, p=3) == reference.prefix_scan(
        xs, operator.add, initial)


def test_prefix_sum_non_commutative():
    words = list("abcdef")

    def job(ctx):
        return (from_list(ctx, words)
                .prefix_sum(fn=operator.add)
                .all_gather())

    assert run_one(job, p=4) == reference.prefix_scan(words, operator.add)


def test_zip_strict_cut_pad():
    xs, ys = list(range(10)), list("abcdefg")

    def job(ctx):
        a, b = from_list(ctx, xs), from_list(ctx, ys)
        cut = a.zip(b, mode="cut").all_gather()
        pad = a.zip(b, mode="pad", pad_item="?").all_gather()
        return cut, pad

    cut, pad = run_one(job, p=3)
    assert cut == reference.zipped([xs, ys], "cut")
    assert pad == reference.zipped([xs, ys], "pad", "?")


def test_zip_strict_rejects_size_mismatch():
    def job(ctx):
        a = from_list(ctx, [1, 2, 3])
        b = from_list(ctx, [1, 2])
        return a.zip(b).all_gather()

    with pytest.raises((JobAborted, ValueError)) as info:
        run_all(job, p=2)
    assert "size" in str(info.value)


def test_zip_with_fn_and_misaligned_partitions():
    def job(ctx):
        a = from_list(ctx, list(range(20)))
        # the filter skews which worker holds which items
        b = (from_list(ctx, list(range(40)))
             .filter(lambda x: x % 2 == 0)
             .collapse())
        return a.zip(b, fn=lambda x, y: x + y).all_gather()

    assert run_one(job, p=4) == [x + 2 * x for x in range(20)]


def test_zip_with_index():
    def job(ctx):
        return (from_list(ctx, list("abcd"))
                .zip_with_index(fn=lambda i, x: "%d%s" % (i, x))
                .all_gather())

    assert agreed(job, p=3) == ["0a", "1b", "2c", "3d"]


def test_sliding_window_count_and_content():
    xs = list(range(30))

    def job(ctx):
        return (from_list(ctx, xs)
                .window(4, fn=lambda w: w)
                .all_gather())

    for p in (1, 6):
        assert run_one(job, p=p) == reference.sliding_windows(xs, 4)


def test_disjoint_window_partial_tail():
    xs = list(range(10))

    def job(ctx):
        return (from_list(ctx, xs)
                .window(4, fn=lambda w: list(w), mode="disjoint")
                .all_gather())

    assert run_one(job, p=3) == [[0, 1, 2, 3], [4, 5, 6, 7], [8, 9]]


def test_window_wider_than_input():
    def job(ctx):
        sliding = from_list(ctx, [1, 2]).window(5, fn=len).all_gather()
        disjoint = (from_list(ctx, [1, 2])
                    .window(5, fn=len, mode="disjoint")
                    .all_gather())
        return sliding, disjoint

    assert agreed(job, p=2) == ([], [2])


def test_flat_window_flattens_results():
    def job(ctx):
        return (from_list(ctx, list(range(6)))
                .flat_window(2, fn=lambda w: (w[0], w[1]))
                .all_gather())

    assert run_one(job, p=2) == [0, 1, 1, 2, 2, 3, 3, 4, 4, 5]


# -- actions -----------------------------------------------------------

def test_fold_actions_and_initials():
    def job(ctx):
        d = from_list(ctx, [5, 3, 9, 1])
        empty = from_list(ctx, [])
        return (d.sum(), d.min(), d.max(),
                empty.sum(initial=0), empty.min(initial=99))

    assert agreed(job, p=3) == (18, 1, 9, 0, 99)


def test_fold_of_empty_without_initial_fails():
    def job(ctx):
        return from_list(ctx, []).sum()

    with pytest.raises((JobAborted, ValueError)) as info:
        run_all(job, p=2)
    assert "initial" in str(info.value)


def test_sum_with_custom_fn():
    def job(ctx):
        return from_list(ctx, [2, 3, 4]).sum(fn=operator.mul)

    assert run_one(job, p=2) == 24


def test_actions_agree_across_worker_counts():
    xs = [random.Random(8).randrange(10_000) for _ in range(997)]

    def job(ctx):
        d = from_list(ctx, xs)
        return d.size(), d.sum(), d.min(), d.max()

    expect = (len(xs), sum(xs), min(xs), max(xs))
    for p in (1, 2, 4, 8):
        assert agreed(job, p=p) == expect
