"""User-facing handles on distributed immutable arrays.

A DIA is a vertex of the dataflow graph plus a stack of pending local
transforms (map / flat_map / filter / bernoulli_sample). Local calls
only grow the stack: no vertex, no buffering, no communication. The
stack fuses into the ingest phase of whichever distributed operation or
action consumes this handle.

Handles are reference counted: dropping the last handle of a vertex (and
having no unexecuted consumers or pending futures) releases its stored
blocks. Construction never runs anything; actions do.
"""

from __future__ import annotations

from thrillette.engine.dag import DiaNode
from thrillette.engine.stage import execute_until


class DIA:
    """Immutable distributed array handle: (vertex, local-op stack)."""

    __slots__ = ("node", "stack", "__weakref__")

    def __init__(self, node: DiaNode, stack: tuple = ()):
        self.node = node
        self.stack = stack
        node.handle_refs += 1

    def __del__(self):
        node = getattr(self, "node", None)
        if node is not None:
            node.handle_dropped()

    @property
    def ctx(self):
        return self.node.ctx

    def _derived(self, entry) -> "DIA":
        return DIA(self.node, self.stack + (entry,))

    # -- local operations (fused; no graph vertex) ---------------------

    def map(self, fn) -> "DIA":
        """One output per input, order preserving."""
        return self._derived(("map", fn))

    def flat_map(self, fn) -> "DIA":
        """fn returns an iterable; outputs are emitted in order."""
        return self._derived(("flat_map", fn))

    def filter(self, fn) -> "DIA":
        """Keeps items where fn is true."""
        return self._derived(("filter", fn))

    def bernoulli_sample(self, prob: float) -> "DIA":
        """Keeps each item independently with the given probability,
        reproducibly under the context seed."""
        if not 0.0 <= prob <= 1.0:
            raise ValueError("probability %r not in [0, 1]" % (prob,))
        return self._derived(("sample", prob, self.ctx.alloc_salt()))

    # -- distributed operations ----------------------------------------

    def collapse(self) -> "DIA":
        from thrillette import ops
        return ops.collapse(self)

    def cache(self) -> "DIA":
        from thrillette import ops
        return ops.cache(self)

    def union(self, *others: "DIA") -> "DIA":
        from thrillette import ops
        return ops.union(self, *others)

    def concat(self, *others: "DIA") -> "DIA":
        from thrillette import ops
        return ops.concat(self, *others)

    def reduce_by_key(self, key, reduce, serializer=None) -> "DIA":
        from thrillette import ops
        return ops.reduce_by_key(self, key, reduce, serializer=serializer)

    def reduce_to_index(self, index, reduce, size, neutral, serializer=None) -> "DIA":
        from thrillette import ops
        return ops.reduce_to_index(self, index, reduce, size, neutral,
                                   serializer=serializer)

    def group_by_key(self, key, group) -> "DIA":
        from thrillette import ops
        return ops.group_by_key(self, key, group)

    def group_to_index(self, index, group, size, neutral) -> "DIA":
        from thrillette import ops
        return ops.group_to_index(self, index, group, size, neutral)

    def sort(self, key=None) -> "DIA":
        from thrillette import ops
        return ops.sort(self, key=key)

    def merge(self, *others: "DIA", key=None) -> "DIA":
        from thrillette import ops
        return ops.merge(self, *others, key=key)

    def prefix_sum(self, fn=None, initial=None) -> "DIA":
        from thrillette import ops
        return ops.prefix_sum(self, fn=fn, initial=initial)

    def zip(self, *others: "DIA", fn=None, mode: str = "strict",
            pad_item=None) -> "DIA":
        from thrillette import ops
        return ops.zip_dias(self, *others, fn=fn, mode=mode, pad_item=pad_item)

    def zip_with_index(self, fn=None) -> "DIA":
        from thrillette import ops
        return ops.zip_with_index(self, fn=fn)

    def window(self, k: int, fn, mode: str = "sliding") -> "DIA":
        from thrillette import ops
        return ops.window(self, k, fn, mode=mode)

    def flat_window(self, k: int, fn, mode: str = "sliding") -> "DIA":
        from thrillette import ops
        return ops.flat_window(self, k, fn, mode=mode)

    # -- actions -------------------------------------------------------

    def size(self) -> int:
        from thrillette import ops
        return ops.size(self)

    def sum(self, fn=None, initial=None):
        from thrillette import ops
        return ops.sum_(self, fn=fn, initial=initial)

    def min(self, initial=None):
        from thrillette import ops
        return ops.min_(self, initial=initial)

    def max(self, initial=None):
        from thrillette import ops
        return ops.max_(self, initial=initial)

    def all_gather(self) -> list:
        from thrillette import ops
        return ops.all_gather(self)

    def execute(self) -> "DIA":
        from thrillette import ops
        ops.execute(self)
        return self

    def write_lines(self, path: str) -> None:
        from thrillette import ops
        return ops.write_lines(self, path)

    def write_binary(self, path: str, serializer=None) -> None:
        from thrillette import ops
        return ops.write_binary(self, path, serializer=serializer)

    # -- action futures ------------------------------------------------

    def size_future(self) -> "ActionFuture":
        from thrillette import ops
        return ops.size_future(self)

    def sum_future(self, fn=None, initial=None) -> "ActionFuture":
        from thrillette import ops
        return ops.sum_future(self, fn=fn, initial=initial)

    def min_future(self, initial=None) -> "ActionFuture":
        from thrillette import ops
        return ops.min_future(self, initial=initial)

    def max_future(self, initial=None) -> "ActionFuture":
        from thrillette import ops
        return ops.max_future(self, initial=initial)

    def all_gather_future(self) -> "ActionFuture":
        from thrillette import ops
        return ops.all_gather_future(self)

    # -- lifetime ------------------------------------------------------

    def keep(self) -> "DIA":
        """Pin the vertex's data so a consuming read leaves it intact."""
        self.node.handle_refs += 1
        return self


class ActionFuture:
    """A declared-but-not-yet-demanded action result.

    Creating the future only inserts the action vertex; get() triggers
    execution if needed. Futures created together are redeemed by one
    stage because a stage absorbs every pending future it can satisfy.
    """

    __slots__ = ("node", "_redeemed")

    def __init__(self, node: DiaNode):
        self.node = node
        self._redeemed = False
        node.future_refs += 1

    def get(self):
        if not self._redeemed:
            self._redeemed = True
            execute_until(self.node.ctx, self.node)
            self.node.future_redeemed()
        return self.node.action_result

    def __del__(self):
        if not getattr(self, "_redeemed", True):
            self._redeemed = True
            node = getattr(self, "node", None)
            if node is not None:
                node.future_redeemed()
