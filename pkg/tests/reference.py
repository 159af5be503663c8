"""Single-threaded reference implementations the distributed results
are checked against. Deliberately written in the most obvious way
possible, with plain floats where the engine uses fixed-point."""

from __future__ import annotations

import collections
import itertools


def word_counts(lines):
    counts = collections.Counter()
    for line in lines:
        counts.update(line.split())
    return dict(counts)


def pagerank(edges, n, iterations):
    out = [[] for _ in range(n)]
    for u, v in edges:
        out[u].append(v)
    ranks = [1.0 / n] * n
    for _ in range(iterations):
        incoming = [0.0] * n
        for u in range(n):
            if out[u]:
                share = ranks[u] / len(out[u])
                for v in out[u]:
                    incoming[v] += share
        ranks = [0.15 + 0.85 * s for s in incoming]
    return ranks


def kmeans(points, k, iterations):
    centers = [list(p) for p in points[:k]]
    dims = len(points[0]) if points else 0
    for _ in range(iterations):
        sums = [[0.0] * dims for _ in range(k)]
        counts = [0] * len(centers)
        for pt in points:
            best, best_d = 0, None
            for cid, center in enumerate(centers):
                d = sum((a - b) * (a - b) for a, b in zip(pt, center))
                if best_d is None or d < best_d:
                    best_d, best = d, cid
            counts[best] += 1
            for j in range(dims):
                sums[best][j] += pt[j]
        for cid in range(len(centers)):
            if counts[cid]:
                centers[cid] = [s / counts[cid] for s in sums[cid]]
    return [tuple(c) for c in centers]


def reduce_by_key(items, key, combine):
    acc = {}
    for item in items:
        k = key(item)
        acc[k] = combine(acc[k], item) if k in acc else item
    return acc


def prefix_scan(items, fn, initial=None):
    out = []
    acc = initial
    have = initial is not None
    for item in items:
        acc = fn(acc, item) if have else item
        have = True
        out.append(acc)
    return out


def sliding_windows(items, k):
    return [tuple(items[i:i + k]) for i in range(len(items) - k + 1)]


def disjoint_windows(items, k):
    return [tuple(items[i:i + k]) for i in range(0, len(items), k)]


def zipped(columns, mode, pad_item=None):
    if mode == "cut":
        return list(zip(*columns))
    if mode == "pad":
        return list(itertools.zip_longest(*columns, fillvalue=pad_item))
    sizes = {len(c) for c in columns}
    assert len(sizes) == 1, "strict zip over unequal inputs"
    return list(zip(*columns))
