"""Dataflow graph vertices.

Only distributed operations and actions become vertices; purely local
transforms live in the stacks attached to the edges (see dia.py) and are
fused into their consumer's ingest phase.

A vertex's life: New (declared, nothing ran) -> Executed (its main part
ran, output stored or action result available) -> Disposed (stored data
released). Vertices are reference counted three ways: live user handles,
unredeemed action futures, and parent edges of not-yet-executed children.
When all three hit zero an Executed vertex's storage is released;
demanding a Disposed vertex again is a hard error, not a recompute.
"""

from __future__ import annotations

import weakref

from thrillette.data.block import File
from thrillette.errors import DisposedError, ThrilletteError

NEW = "new"
EXECUTED = "executed"
DISPOSED = "disposed"


class DiaNode:
    """Base vertex. Subclasses implement the Link (ingest), Main
    (communicate) and Push (emit downstream) parts."""

    name = "op"
    memory_need = False

    def __init__(self, ctx, parents=(), stacks=None):
        self.ctx = ctx
        self.id = ctx.alloc_node_id()
        self.parents: tuple[DiaNode, ...] = tuple(parents)
        if stacks is None:
            stacks = tuple(() for _ in self.parents)
        self.parent_stacks = tuple(stacks)
        if len(self.parent_stacks) != len(self.parents):
            raise ThrilletteError("one local-op stack per parent edge required")
        self.state = NEW
        self.handle_refs = 0
        self.future_refs = 0
        self.pending_children = 0
        self.stage_budget: int | None = None
        self.files: list[File] = []
        self.action_result = None
        self.children: list[weakref.ref] = []
        for parent in self.parents:
            if parent.state is DISPOSED:
                raise DisposedError(
                    "building %s on disposed %s" % (self.name, parent.name))
            parent.pending_children += 1
        seen = set()
        for parent in self.parents:
            if id(parent) not in seen:
                seen.add(id(parent))
                parent.children.append(weakref.ref(self))
        ctx.register_node(self)

    def live_children(self) -> list["DiaNode"]:
        out = []
        for ref in self.children:
            child = ref()
            if child is not None:
                out.append(child)
        return out

    # -- Link: ingest items pushed from one parent edge ----------------

    def begin_link(self, edge: int):
        """Returns the per-item sink callable for this parent edge."""
        raise ThrilletteError("%s accepts no pushed input" % self.name)

    def end_link(self, edge: int) -> None:
        pass

    # -- Main: the distributed core ------------------------------------

    def run_main(self) -> None:
        pass

    # -- Push: emit stored output into downstream sinks ----------------

    def iter_stored(self, consume: bool):
        """The node's output items, in this worker's local order."""
        if not self.files:
            return iter(())
        return self.files[0].reader(consume=consume)

    def push_data(self, sinks, consume: bool) -> None:
        """Feed every stored item to each sink exactly once."""
        items = self.iter_stored(consume)
        if len(sinks) == 1:
            sink = sinks[0]
            for item in items:
                sink(item)
        else:
            for item in items:
                for sink in sinks:
                    sink(item)

    # -- disposal ------------------------------------------------------

    def child_executed(self) -> None:
        self.pending_children -= 1
        self.maybe_dispose()

    def handle_dropped(self) -> None:
        self.handle_refs -= 1
        self.maybe_dispose()

    def future_redeemed(self) -> None:
        self.future_refs -= 1
        self.maybe_dispose()

    def maybe_dispose(self) -> None:
        if (self.state is EXECUTED and self.handle_refs == 0
                and self.future_refs == 0 and self.pending_children == 0):
            self.dispose()

    def dispose(self) -> None:
        if self.state is DISPOSED:
            return
        self.state = DISPOSED
        files, self.files = self.files, []
        for file in files:
            file.release()
        self.on_dispose()

    def on_dispose(self) -> None:
        pass

    def __repr__(self):
        return "<%s #%d %s>" % (self.name, self.id, self.state)


class FileLinkMixin:
    """Link part that stores incoming items into one local File."""

    link_serializer = None  # subclass may pin a serializer

    def _link_file(self) -> File:
        serializer = self.link_serializer or self.ctx.default_serializer
        return File(self.ctx.pool, serializer)

    def begin_link(self, edge: int):
        if not hasattr(self, "_link_files"):
            self._link_files = {}
            self._link_writers = {}
        if edge not in self._link_files:
            file = self._link_file()
            self._link_files[edge] = file
            self._link_writers[edge] = file.writer(self.ctx.block_size)
        return self._link_writers[edge].append

    def end_link(self, edge: int) -> None:
        self._link_writers[edge].close()

    def link_file(self, edge: int = 0) -> File:
        if not hasattr(self, "_link_files") or edge not in self._link_files:
            # parent never pushed (empty stage edge): create an empty file
            self.begin_link(edge)
            self.end_link(edge)
        return self._link_files[edge]

    def drop_link_files(self) -> None:
        if hasattr(self, "_link_files"):
            for file in self._link_files.values():
                file.release()
            self._link_files.clear()
            self._link_writers.clear()
