"""Order-aware restructuring: concat, prefix_sum, zip, zip_with_index,
window.

These operations never look at item contents; they move items by their
global ranks. The common trick: each worker learns everyone's local
counts in one collective, from which any worker can compute where its
slice sits globally and which destination owns any given rank.
"""

from __future__ import annotations

import operator

from thrillette.data.block import File
from thrillette.engine.dag import DiaNode, FileLinkMixin
from thrillette.engine.dia import DIA
from thrillette.engine.context import share_of

class _MissingType:
    """Absence marker that survives pickling with identity intact (the
    per-worker totals travel through a collective)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __reduce__(self):
        return (_MissingType, ())


_MISSING = _MissingType()


def _counts_and_base(ctx, count: int) -> tuple[list[int], int]:
    """All workers' local counts, and the rank where mine start."""
    counts = ctx.group.all_gather(count)
    return counts, sum(counts[:ctx.my_worker])


class ConcatNode(FileLinkMixin, DiaNode):
    """Ordered concatenation of several arrays, rebalanced so every
    worker ends up with an equal (+-1) contiguous slice."""

    name = "concat"

    def __init__(self, dias):
        ctx = dias[0].ctx
        super().__init__(ctx, parents=tuple(d.node for d in dias),
                         stacks=tuple(d.stack for d in dias))

    def run_main(self):
        ctx = self.ctx
        p = ctx.num_workers
        edges = len(self.parents)
        link = [self.link_file(e) for e in range(edges)]

        mine = [f.total_items for f in link]
        counts = ctx.group.all_gather(mine)
        total = 0
        base = [0] * edges
        for e in range(edges):
            for w in range(p):
                if w == ctx.my_worker:
                    base[e] = total
                total += counts[w][e]

        # one stream per input: receivers then append streams in input
        # order, and within a stream sender rank order is ascending rank
        streams = [ctx.new_cat_stream() for _ in range(edges)]
        shares = [share_of(total, p, d) for d in range(p)]
        for e in range(edges):
            count = link[e].total_items
            offsets = [min(max(shares[d][0] - base[e], 0), count)
                       for d in range(p)]
            offsets.append(count)
            streams[e].scatter_file(link[e], offsets)
            streams[e].close_writers()

        out = File(ctx.pool, ctx.default_serializer)
        writer = out.writer(ctx.block_size)
        for stream in streams:
            for item in stream.read_items():
                writer.append(item)
        writer.close()
        self.drop_link_files()
        self.files = [out]


class PrefixSumNode(FileLinkMixin, DiaNode):
    """Inclusive running fold in global item order.

    Item i becomes initial (+) x_0 (+) ... (+) x_i (without the initial
    term when none is given). Only the per-worker totals travel."""

    name = "prefix_sum"

    def __init__(self, dia, fn=None, initial=None):
        super().__init__(dia.ctx, parents=(dia.node,), stacks=(dia.stack,))
        self.fn = fn if fn is not None else operator.add
        self.initial = initial

    def run_main(self):
        ctx = self.ctx
        fn = self.fn
        link = self.link_file(0)

        acc = _MISSING
        for item in link.reader():
            acc = item if acc is _MISSING else fn(acc, item)

        def combine(a, b):
            if b is _MISSING:
                return a
            if a is _MISSING:
                return b
            return fn(a, b)

        before = ctx.group.ex_prefix_sum(acc, combine, _MISSING)
        if self.initial is not None:
            before = (self.initial if before is _MISSING
                      else fn(self.initial, before))

        out = File(ctx.pool, ctx.default_serializer)
        writer = out.writer(ctx.block_size)
        running = before
        for item in link.reader(consume=True):
            running = item if running is _MISSING else fn(running, item)
            writer.append(running)
        writer.close()
        self._link_files.clear()
        self._link_writers.clear()
        self.files = [out]


class ZipNode(FileLinkMixin, DiaNode):
    """Positional zip of several arrays through a join function.

    strict mode requires equal sizes; cut stops at the shortest; pad
    extends the shorter ones with a pad item. Inputs are re-split so
    equal ranks meet on the same worker no matter how unevenly the
    inputs were distributed."""

    name = "zip"

    def __init__(self, dias, fn=None, mode="strict", pad_item=None):
        ctx = dias[0].ctx
        super().__init__(ctx, parents=tuple(d.node for d in dias),
                         stacks=tuple(d.stack for d in dias))
        if mode not in ("strict", "cut", "pad"):
            raise ValueError("zip mode %r is not strict, cut or pad" % (mode,))
        self.fn = fn if fn is not None else lambda *xs: tuple(xs)
        self.mode = mode
        self.pad_item = pad_item

    def run_main(self):
        ctx = self.ctx
        p = ctx.num_workers
        edges = len(self.parents)
        link = [self.link_file(e) for e in range(edges)]

        mine = [f.total_items for f in link]
        counts = ctx.group.all_gather(mine)
        sizes = [sum(counts[w][e] for w in range(p)) for e in range(edges)]
        base = [sum(counts[w][e] for w in range(ctx.my_worker))
                for e in range(edges)]

        if self.mode == "strict":
            if len(set(sizes)) > 1:
                raise ValueError("zip inputs differ in size: %s" % (sizes,))
            total = sizes[0]
        elif self.mode == "cut":
            total = min(sizes)
        else:
            total = max(sizes)

        streams = [ctx.new_cat_stream() for _ in range(edges)]
        shares = [share_of(total, p, d) for d in range(p)]
        for e in range(edges):
            count = link[e].total_items
            offsets = [min(max(min(shares[d][0], sizes[e]) - base[e], 0), count)
                       for d in range(p)]
            offsets.append(count)
            streams[e].scatter_file(link[e], offsets)
            streams[e].close_writers()

        lo, hi = share_of(total, p, ctx.my_worker)
        columns = [list(s.read_items()) for s in streams]
        out = File(ctx.pool, ctx.default_serializer)
        writer = out.writer(ctx.block_size)
        fn, pad = self.fn, self.pad_item
        for i in range(hi - lo):
            rank = lo + i
            row = [col[i] if rank < sizes[e] and i < len(col) else pad
                   for e, col in enumerate(columns)]
            writer.append(fn(*row))
        writer.close()
        self.drop_link_files()
        self.files = [out]


class ZipWithIndexNode(FileLinkMixin, DiaNode):
    """Pairs every item with its global rank; one counts collective, no
    item movement."""

    name = "zip_with_index"

    def __init__(self, dia, fn=None):
        super().__init__(dia.ctx, parents=(dia.node,), stacks=(dia.stack,))
        self.fn = fn if fn is not None else lambda i, x: (i, x)

    def run_main(self):
        ctx = self.ctx
        link = self.link_file(0)
        _, base = _counts_and_base(ctx, link.total_items)
        out = File(ctx.pool, ctx.default_serializer)
        writer = out.writer(ctx.block_size)
        fn = self.fn
        for i, item in enumerate(link.reader(consume=True)):
            writer.append(fn(base + i, item))
        writer.close()
        self._link_files.clear()
        self._link_writers.clear()
        self.files = [out]


class WindowNode(FileLinkMixin, DiaNode):
    """Fixed-width windows over the global order.

    sliding yields one window per start rank, exactly n-k+1 of them;
    disjoint tiles the array in steps of k and delivers a short final
    window with its true length. A worker only ever needs the k-1 items
    following its slice, which arrive from however many successors it
    takes to collect them, so empty workers are skipped transparently."""

    name = "window"

    def __init__(self, dia, k, fn, mode="sliding", flat=False):
        super().__init__(dia.ctx, parents=(dia.node,), stacks=(dia.stack,))
        if k < 1:
            raise ValueError("window width must be at least 1, got %d" % k)
        if mode not in ("sliding", "disjoint"):
            raise ValueError("window mode %r is not sliding or disjoint" % (mode,))
        self.k = k
        self.fn = fn
        self.mode = mode
        self.flat = flat

    def run_main(self):
        ctx = self.ctx
        p = ctx.num_workers
        k = self.k
        link = self.link_file(0)
        counts, base = _counts_and_base(ctx, link.total_items)
        total = sum(counts)

        # destination d needs global ranks [need_lo[d], need_hi[d])
        need_lo = []
        need_hi = []
        at = 0
        for d in range(p):
            need_lo.append(at)
            need_hi.append(min(at + counts[d] + k - 1, total) if counts[d] else at)
            at += counts[d]

        stream = ctx.new_cat_stream()
        dl = 0
        g = base
        for item in link.reader(consume=True):
            while dl < p and need_hi[dl] <= g:
                dl += 1
            d = dl
            while d < p and need_lo[d] <= g:
                if g < need_hi[d]:
                    stream.write(d, item)
                d += 1
            g += 1
        self._link_files.clear()
        self._link_writers.clear()
        stream.close_writers()

        received = list(stream.read_items())
        out = File(ctx.pool, ctx.default_serializer)
        writer = out.writer(ctx.block_size)
        emit = self._emit_flat(writer) if self.flat else self._emit_one(writer)
        mycount = counts[ctx.my_worker]
        if self.mode == "sliding":
            for s in range(mycount):
                if base + s + k <= total:
                    emit(tuple(received[s:s + k]))
        else:
            start = base + (-base % k)
            while start < base + mycount:
                emit(tuple(received[start - base:start - base + k]))
                start += k
        writer.close()
        self.files = [out]

    def _emit_one(self, writer):
        fn = self.fn
        return lambda win: writer.append(fn(win))

    def _emit_flat(self, writer):
        fn = self.fn
        def emit(win):
            for item in fn(win):
                writer.append(item)
        return emit


def concat(dia, *others) -> DIA:
    if not others:
        from thrillette.ops.cache import collapse
        return collapse(dia)
    return DIA(ConcatNode([dia, *others]))


def prefix_sum(dia, fn=None, initial=None) -> DIA:
    return DIA(PrefixSumNode(dia, fn, initial))


def zip_dias(dia, *others, fn=None, mode="strict", pad_item=None) -> DIA:
    if not others:
        raise ValueError("zip needs at least two arrays")
    return DIA(ZipNode([dia, *others], fn, mode, pad_item))


def zip_with_index(dia, fn=None) -> DIA:
    return DIA(ZipWithIndexNode(dia, fn))


def window(dia, k, fn, mode="sliding") -> DIA:
    return DIA(WindowNode(dia, k, fn, mode, flat=False))


def flat_window(dia, k, fn, mode="sliding") -> DIA:
    return DIA(WindowNode(dia, k, fn, mode, flat=True))
