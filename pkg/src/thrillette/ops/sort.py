"""Distributed sorting by sampling.

Every worker stores its input locally while feeding a fixed-size
reservoir sample. The pooled sample yields p-1 equidistant splitters,
laid out as an implicit binary tree so classifying an item costs
ceil(log2 p) comparisons. Items equal to a splitter are torn between
several valid buckets; they fall to the bucket that would hold their
global position under perfect balance, so even an all-equal input
spreads evenly instead of landing on one worker. Each worker finally
sorts what it received in budget-bounded runs and merges them; because
bucket b holds only items ordered before bucket b+1, and the tie rule
follows global position, the concatenation over workers is exactly the
stable global sort.

merge() reuses the same machinery over several already-sorted inputs
with their concatenation order as the position, which makes ties resolve
by input order, as documented.
"""

from __future__ import annotations

import heapq
import random

from thrillette.data.block import File
from thrillette.engine.dag import DiaNode, FileLinkMixin
from thrillette.engine.dia import DIA
from thrillette.kernels import mix64
from thrillette.ops.common import owner_of_index
from thrillette.ops.group import _run_budget

_identity = lambda x: x


def reservoir_size(p: int) -> int:
    """Sample capacity per worker: 16 * ceil(log2 p) + 32."""
    return 16 * max(p - 1, 0).bit_length() + 32


class Reservoir:
    """Uniform fixed-size sample of a stream, deterministic per seed."""

    __slots__ = ("capacity", "rng", "seen", "sample")

    def __init__(self, capacity: int, seed: int):
        self.capacity = capacity
        self.rng = random.Random(seed)
        self.seen = 0
        self.sample = []

    def offer(self, value) -> None:
        self.seen += 1
        if len(self.sample) < self.capacity:
            self.sample.append(value)
        else:
            j = self.rng.randrange(self.seen)
            if j < self.capacity:
                self.sample[j] = value


class SplitterTree:
    """Sorted splitters in implicit binary-tree layout.

    The tree has 2**height - 1 slots (padded with None sentinels that
    compare as plus infinity), so classify() is a fixed loop of height
    comparisons. classify gives the count of splitters strictly below
    the key; classify_range adds the count less-or-equal, bounding the
    bucket range an equal-to-splitter item may legally take."""

    def __init__(self, splitters: list):
        buckets = len(splitters) + 1
        self.height = (buckets - 1).bit_length()
        slots = (1 << self.height) - 1
        filled = list(splitters) + [None] * (slots - len(splitters))
        self.tree = [None] * (slots + 1)
        self._fill(filled, 0, slots, 1)

    def _fill(self, seq, lo, hi, at) -> None:
        if lo >= hi:
            return
        mid = (lo + hi) // 2
        self.tree[at] = seq[mid]
        self._fill(seq, lo, mid, 2 * at)
        self._fill(seq, mid + 1, hi, 2 * at + 1)

    def classify(self, key) -> int:
        i = 1
        tree = self.tree
        for _ in range(self.height):
            v = tree[i]
            i = 2 * i + 1 if (v is not None and key > v) else 2 * i
        return i - (1 << self.height)

    def classify_range(self, key) -> tuple[int, int]:
        lo = self.classify(key)
        i = 1
        tree = self.tree
        for _ in range(self.height):
            v = tree[i]
            i = 2 * i + 1 if (v is not None and key >= v) else 2 * i
        return lo, i - (1 << self.height)


class SortNode(FileLinkMixin, DiaNode):
    """Globally sorts the concatenation of its inputs (one input: plain
    sort; several sorted inputs: merge, with input order breaking ties)."""

    name = "sort"
    memory_need = True
    check_sorted = False

    def __init__(self, dias, key_fn=None):
        ctx = dias[0].ctx
        super().__init__(ctx, parents=tuple(d.node for d in dias),
                         stacks=tuple(d.stack for d in dias))
        self.key_fn = key_fn if key_fn is not None else _identity

    def begin_link(self, edge):
        append = FileLinkMixin.begin_link(self, edge)
        ctx = self.ctx
        if not hasattr(self, "_reservoir"):
            self._reservoir = Reservoir(
                reservoir_size(ctx.num_workers),
                mix64((ctx.seed << 32) ^ (ctx.my_worker << 16) ^ self.id))
        key_fn, offer = self.key_fn, self._reservoir.offer

        if not self.check_sorted:
            def accept(item):
                offer(key_fn(item))
                append(item)
            return accept

        last = [False, None]
        def accept(item):
            key = key_fn(item)
            if last[0] and key < last[1]:
                raise ValueError(
                    "merge input %d is not sorted (key %r after %r)"
                    % (edge, key, last[1]))
            last[0], last[1] = True, key
            offer(key)
            append(item)
        return accept

    def run_main(self):
        ctx = self.ctx
        p = ctx.num_workers
        key_fn = self.key_fn
        edges = len(self.parents)
        link = [self.link_file(e) for e in range(edges)]

        # global concatenation offsets: edge-major, then worker rank
        mine = [f.total_items for f in link]
        counts = ctx.group.all_gather(mine)
        total = 0
        base = [0] * edges
        for e in range(edges):
            for w in range(p):
                if w == ctx.my_worker:
                    base[e] = total
                total += counts[w][e]

        reservoir = getattr(self, "_reservoir", None)
        pooled = ctx.group.all_gather(reservoir.sample if reservoir else [])
        sample = sorted((key for part in pooled for key in part))
        count = len(sample)
        splitters = [sample[min((j + 1) * count // p, count - 1)]
                     for j in range(p - 1)] if count else []
        tree = SplitterTree(splitters)

        # With one input, arrival order (sender rank, then send order) is
        # already global position order, so ties sort out by stable run
        # sorting alone. With several inputs it is not: items then travel
        # tagged with their global position and it joins the sort key.
        tagged = edges > 1
        stream = ctx.new_cat_stream()
        for e in range(edges):
            g = base[e]
            for item in link[e].reader(consume=True):
                lo_b, hi_b = tree.classify_range(key_fn(item))
                if lo_b == hi_b:
                    dest = lo_b
                else:
                    dest = min(max(owner_of_index(g, total, p), lo_b), hi_b)
                stream.write(dest, (g, item) if tagged else item)
                g += 1
        self._link_files.clear()
        self._link_writers.clear()
        stream.close_writers()

        if tagged:
            run_key = lambda rec: (key_fn(rec[1]), rec[0])
        else:
            run_key = key_fn
        budget = _run_budget(self.stage_budget)
        buf = []
        runs = []
        for item in stream.read_items():
            buf.append(item)
            if len(buf) >= budget:
                ctx.bump("sort_run_spill")
                buf.sort(key=run_key)
                run = File(ctx.pool, ctx.default_serializer)
                writer = run.writer(ctx.block_size)
                for x in buf:
                    writer.append(x)
                writer.close()
                runs.append(run)
                buf = []
        buf.sort(key=run_key)

        out = File(ctx.pool, ctx.default_serializer)
        writer = out.writer(ctx.block_size)
        if runs:
            feeds = [run.reader(consume=True) for run in runs]
            feeds.append(iter(buf))
            merged = heapq.merge(*feeds, key=run_key)
        else:
            merged = iter(buf)
        if tagged:
            for _, item in merged:
                writer.append(item)
        else:
            for item in merged:
                writer.append(item)
        for run in runs:
            run.release()
        writer.close()
        self.files = [out]


class MergeNode(SortNode):
    name = "merge"
    check_sorted = True


def sort(dia, key=None) -> DIA:
    return DIA(SortNode([dia], key))


def merge(dia, *others, key=None) -> DIA:
    return DIA(MergeNode([dia, *others], key))
