"""The five benchmark kernels.

Each run_* function is a job body: call it with the worker context, it
returns a result dict (identical on every worker). Digests must match
across worker counts and backends, so anywhere floating-point values
are summed through a reduction the kernels accumulate integer
fixed-point instead; integer addition commutes, making the outcome
independent of arrival order.
"""

from __future__ import annotations

import time

from thrillette.bench.digest import item_hash, multiset_digest, sequence_digest
from thrillette.bench.generators import (
    POINT_CLUSTERS,
    POINT_DIMS,
    RECORD_KEY,
    RECORD_PAYLOAD,
)
from thrillette.data import serial
from thrillette.kernels import mix64
from thrillette.ops import generate, read_binary, read_lines

_MASK = (1 << 64) - 1

RECORD_SERIALIZER = serial.TupleSerializer(
    serial.FixedBytesSerializer(RECORD_KEY),
    serial.FixedBytesSerializer(RECORD_PAYLOAD))

POINT_SERIALIZER = serial.TupleSerializer(
    *[serial.float64] * POINT_DIMS)

_RANK_FP = 10 ** 12     # pagerank fixed-point unit
_COORD_FP = 10 ** 9     # kmeans coordinate fixed-point unit


def run_wordcount(ctx, path, output=None):
    """Counts words; returns an order-independent digest over the
    (word, count) pairs plus conservation totals."""
    counts = (read_lines(ctx, path)
              .flat_map(str.split)
              .map(lambda w: (w, 1))
              .reduce_by_key(key=lambda kv: kv[0],
                             reduce=lambda a, b: (a[0], a[1] + b[1])))
    # three results, one stage: declare futures first, then redeem
    hash_sum = counts.map(item_hash).sum_future(initial=0)
    word_sum = counts.map(lambda kv: kv[1]).sum_future(initial=0)
    distinct = counts.size_future()
    result = {
        "digest": "%016x" % (hash_sum.get() & _MASK),
        "total_words": word_sum.get(),
        "distinct": distinct.get(),
    }
    if output:
        counts.map(lambda kv: "%s %d" % kv).write_lines(output)
    return result


def _parse_edge(line):
    u, v = line.split()
    return int(u), int(v)


def run_pagerank(ctx, path, vertices, iterations=10, output=None):
    """Unnormalized power iteration: rank' = 0.15 + 0.85 * sum of
    rank/outdegree over incoming edges; dangling pages contribute
    nothing. Ranks are integer fixed-point so every iteration is exact
    and identical regardless of partitioning."""
    n = vertices
    links = (read_lines(ctx, path)
             .map(_parse_edge)
             .group_to_index(index=lambda e: e[0],
                             group=lambda es: [v for _, v in es],
                             size=n, neutral=[]))
    base = (15 * _RANK_FP) // 100
    ranks = generate(ctx, n, fn=lambda i: _RANK_FP // n)
    for _ in range(iterations):
        ranks = (links.zip(ranks)
                 .flat_map(lambda lr: [(v, lr[1] // len(lr[0]))
                                       for v in lr[0]] if lr[0] else [])
                 .reduce_to_index(index=lambda kv: kv[0],
                                  reduce=lambda a, b: (a[0], a[1] + b[1]),
                                  size=n, neutral=(0, 0))
                 .map(lambda kv: base + (85 * kv[1]) // 100))
    fixed = ranks.all_gather()
    result = {
        "digest": sequence_digest(fixed),
        "ranks": [fp / _RANK_FP for fp in fixed],
    }
    if output:
        (generate(ctx, n, fn=lambda i: "%d %.6e" % (i, fixed[i] / _RANK_FP))
         .write_lines(output))
    return result


def run_terasort(ctx, path, output=None):
    """Sorts 100-byte records by their 10-byte key; checks global
    sortedness and multiset conservation."""
    records = read_binary(ctx, path, serializer=RECORD_SERIALIZER)
    in_sum = records.map(item_hash).sum(initial=0)
    out = records.sort(key=lambda r: r[0]).execute()

    hashes = out.map(item_hash).all_gather()
    acc = 0x5EED
    out_sum = 0
    for h in hashes:
        out_sum = (out_sum + h) & _MASK
        acc = mix64(acc ^ h)
    nondecreasing = (out.window(2, fn=lambda w: w[0][0] <= w[1][0])
                     .min(initial=True))
    counts = ctx.group.all_gather(out.node.files[0].total_items)
    if output:
        out.write_binary(output, serializer=RECORD_SERIALIZER)
    return {
        "sorted": bool(nondecreasing),
        "in_multiset": "%016x" % (in_sum & _MASK),
        "out_multiset": "%016x" % out_sum,
        "sequence": "%016x" % acc,
        "worker_counts": counts,
    }


def _nearest(point, centers):
    best = 0
    best_d = None
    for cid, center in enumerate(centers):
        d = 0.0
        for a, b in zip(point, center):
            d += (a - b) * (a - b)
        if best_d is None or d < best_d:
            best_d = d
            best = cid
    return best


def run_kmeans(ctx, path, iterations=10, clusters=POINT_CLUSTERS, output=None):
    """Lloyd's algorithm: centroids start at the first `clusters`
    points; each iteration classifies every point to its nearest
    centroid (ties to the lowest id) and recomputes means. Coordinate
    sums ride as fixed-point integers; an empty cluster keeps its
    previous centroid."""
    points = read_binary(ctx, path, serializer=POINT_SERIALIZER).cache()
    head = sorted(points.zip_with_index()
                  .filter(lambda ip: ip[0] < clusters)
                  .all_gather())
    centers = [list(p) for _, p in head]

    dims = POINT_DIMS
    for _ in range(iterations):
        frozen = [tuple(c) for c in centers]
        sums = (points
                .map(lambda pt, _c=frozen: (
                    _nearest(pt, _c),
                    *(int(round(x * _COORD_FP)) for x in pt),
                    1))
                .reduce_to_index(
                    index=lambda rec: rec[0],
                    reduce=lambda a, b: (
                        a[0], *(x + y for x, y in zip(a[1:], b[1:]))),
                    size=clusters,
                    neutral=(0,) * (dims + 2))
                .all_gather())
        for cid, rec in enumerate(sums):
            count = rec[-1]
            if count:
                centers[cid] = [s / (_COORD_FP * count)
                                for s in rec[1:1 + dims]]
    final = [tuple(c) for c in centers]
    result = {
        "digest": sequence_digest(final),
        "centroids": final,
    }
    if output:
        (generate(ctx, len(final),
                  fn=lambda i: "%d %s" % (i, " ".join("%.6e" % x
                                                      for x in final[i])))
         .write_lines(output))
    return result


def run_sleep(ctx, secs=1.0):
    """Each worker sleeps once; everything else is framework overhead."""
    done = (generate(ctx, ctx.num_workers)
            .map(lambda i: (time.sleep(secs), i)[1])
            .size())
    return {"completed": done, "slept": secs}
