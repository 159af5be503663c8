"""Actions: operations that leave the graph and return a value (or side
effect) to the driver program.

Each action is a graph vertex whose Link phase folds or collects the
items pushed through the attached local-op stack and whose Main phase is
a single collective, so every worker returns the identical result.
"""

from __future__ import annotations

import operator
import os

from thrillette.engine.dag import DiaNode
from thrillette.engine.dia import ActionFuture
from thrillette.engine.stage import execute_until
from thrillette.ops import sources

_MISSING = object()


class ActionNode(DiaNode):
    is_action = True

    def __init__(self, dia):
        super().__init__(dia.ctx, parents=(dia.node,), stacks=(dia.stack,))


def _run_immediate(node):
    execute_until(node.ctx, node)
    result = node.action_result
    node.maybe_dispose()
    return result


class SizeNode(ActionNode):
    """Global item count."""

    name = "size"

    def begin_link(self, edge):
        self._count = 0
        def accept(item):
            self._count += 1
        return accept

    def run_main(self):
        self.action_result = self.ctx.group.all_reduce(self._count, operator.add)


class FoldNode(ActionNode):
    """Global fold with an associative combiner (sum, min, max)."""

    def __init__(self, dia, fn, initial):
        super().__init__(dia)
        self.fn = fn
        self.initial = initial

    def begin_link(self, edge):
        self._acc = _MISSING
        fn = self.fn
        def accept(item):
            acc = self._acc
            self._acc = item if acc is _MISSING else fn(acc, item)
        return accept

    def run_main(self):
        acc = getattr(self, "_acc", _MISSING)
        parts = self.ctx.group.all_gather(
            None if acc is _MISSING else (acc,))
        total = _MISSING if self.initial is None else self.initial
        for part in parts:
            if part is not None:
                total = part[0] if total is _MISSING else self.fn(total, part[0])
        if total is _MISSING:
            raise ValueError(
                "%s of an empty array needs an initial value" % self.name)
        self.action_result = total


class SumNode(FoldNode):
    name = "sum"


class MinNode(FoldNode):
    name = "min"


class MaxNode(FoldNode):
    name = "max"


class AllGatherNode(ActionNode):
    """Every item on every worker, in global order."""

    name = "all_gather"

    def begin_link(self, edge):
        self._local = []
        return self._local.append

    def run_main(self):
        parts = self.ctx.group.all_gather(getattr(self, "_local", []))
        self.action_result = [item for part in parts for item in part]


class ExecuteNode(ActionNode):
    """Forces materialization of the input; returns nothing."""

    name = "execute"

    def begin_link(self, edge):
        def accept(item):
            pass
        return accept

    def run_main(self):
        self.ctx.group.barrier()


class WriteLinesNode(ActionNode):
    """Writes one text file per worker under a directory, one line per
    str item, newline terminated."""

    name = "write_lines"

    def __init__(self, dia, path):
        super().__init__(dia)
        self.path = path

    def begin_link(self, edge):
        os.makedirs(self.path, exist_ok=True)
        part = os.path.join(self.path, "part-%05d" % self.ctx.my_worker)
        self._fh = open(part, "wb")
        buf = bytearray()
        fh = self._fh
        def accept(item):
            buf.extend(item.encode("utf-8", "surrogateescape"))
            buf.append(0x0A)
            if len(buf) >= (1 << 18):
                fh.write(buf)
                del buf[:]
        self._flush = lambda: (fh.write(buf), fh.close())
        return accept

    def end_link(self, edge):
        self._flush()

    def run_main(self):
        self.ctx.group.barrier()


class WriteBinaryNode(ActionNode):
    """Writes one binary container file per worker under a directory;
    read_binary with the same serializer restores the array."""

    name = "write_binary"

    def __init__(self, dia, path, serializer=None):
        super().__init__(dia)
        self.path = path
        self.serializer = (serializer if serializer is not None
                           else dia.ctx.default_serializer)

    def begin_link(self, edge):
        os.makedirs(self.path, exist_ok=True)
        part = os.path.join(self.path, "part-%05d" % self.ctx.my_worker)
        self._fh = open(part, "wb")
        self._fh.write(sources.BINARY_HEADER.pack(
            sources.BINARY_MAGIC, sources.BINARY_VERSION,
            self.serializer.fixed_size or 0, 0))
        buf = bytearray()
        fh = self._fh
        write = self.serializer.write
        def accept(item):
            write(buf, item)
            if len(buf) >= (1 << 18):
                fh.write(buf)
                del buf[:]
        self._flush = lambda: (fh.write(buf), fh.close())
        return accept

    def end_link(self, edge):
        self._flush()

    def run_main(self):
        self.ctx.group.barrier()


# -- public wrappers ---------------------------------------------------

def size(dia) -> int:
    return _run_immediate(SizeNode(dia))


def sum_(dia, fn=None, initial=None):
    return _run_immediate(SumNode(dia, fn or operator.add, initial))


def min_(dia, initial=None):
    return _run_immediate(MinNode(dia, lambda a, b: b if b < a else a, initial))


def max_(dia, initial=None):
    return _run_immediate(MaxNode(dia, lambda a, b: b if b > a else a, initial))


def all_gather(dia) -> list:
    return _run_immediate(AllGatherNode(dia))


def execute(dia) -> None:
    _run_immediate(ExecuteNode(dia))


def write_lines(dia, path) -> None:
    _run_immediate(WriteLinesNode(dia, path))


def write_binary(dia, path, serializer=None) -> None:
    _run_immediate(WriteBinaryNode(dia, path, serializer))


def size_future(dia) -> ActionFuture:
    return ActionFuture(SizeNode(dia))


def sum_future(dia, fn=None, initial=None) -> ActionFuture:
    return ActionFuture(SumNode(dia, fn or operator.add, initial))


def min_future(dia, initial=None) -> ActionFuture:
    return ActionFuture(MinNode(dia, lambda a, b: b if b < a else a, initial))


def max_future(dia, initial=None) -> ActionFuture:
    return ActionFuture(MaxNode(dia, lambda a, b: b if b > a else a, initial))


def all_gather_future(dia) -> ActionFuture:
    return ActionFuture(AllGatherNode(dia))
