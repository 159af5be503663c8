"""Stage discovery and execution.

An action demands a vertex; the stage is the set of its not-yet-executed
ancestors (reverse breadth-first search), widened by any sibling actions
that are only waiting as futures and whose inputs the stage already
covers, so several pending results ride one data round trip.

Members run in topological order (creation ids are topological since
parents exist before children). Data moves by pushing: every vertex with
member children is iterated exactly once and each item is fed through
the per-edge fused local-op chain into each child's ingest sink, so a
diamond-shaped graph still reads its shared source a single time. If
consumption is enabled and nobody else can ever demand a vertex again,
the push reads destructively and the vertex's storage is released on the
spot.
"""

from __future__ import annotations

import random
import sys
import time

from thrillette.engine.context import Context, StageRecord
from thrillette.engine.dag import DISPOSED, EXECUTED, NEW, DiaNode
from thrillette.errors import DisposedError, JobAborted
from thrillette.kernels import mix64


def compile_stack(stack, sink, ctx: Context):
    """Fuse a local-op stack into one per-item callable ending in sink."""
    fn_chain = sink
    for entry in reversed(stack):
        kind = entry[0]
        if kind == "map":
            def fn_chain(x, _fn=entry[1], _nxt=fn_chain):
                _nxt(_fn(x))
        elif kind == "filter":
            def fn_chain(x, _fn=entry[1], _nxt=fn_chain):
                if _fn(x):
                    _nxt(x)
        elif kind == "flat_map":
            def fn_chain(x, _fn=entry[1], _nxt=fn_chain):
                for y in _fn(x):
                    _nxt(y)
        elif kind == "sample":
            _prob, salt = entry[1], entry[2]
            rng = random.Random(mix64(
                (ctx.seed << 32) ^ (ctx.my_worker << 16) ^ salt))
            def fn_chain(x, _p=_prob, _rng=rng, _nxt=fn_chain):
                if _rng.random() < _p:
                    _nxt(x)
        else:
            raise ValueError("unknown local op %r" % kind)
    return fn_chain


def _discover(target: DiaNode) -> list[DiaNode]:
    """Reverse BFS over non-executed ancestors, plus ready future
    siblings; returned in topological (creation id) order."""
    members = {target.id: target}
    queue = [target]
    while queue:
        node = queue.pop()
        for parent in node.parents:
            if parent.state is DISPOSED:
                raise DisposedError(
                    "%s demands disposed %s: consumed data is not recomputed"
                    % (node.name, parent.name))
            if parent.state is NEW and parent.id not in members:
                members[parent.id] = parent
                queue.append(parent)
    # widen with pending future actions all of whose inputs this stage covers
    grew = True
    while grew:
        grew = False
        for node in list(members.values()):
            for child in node.live_children():
                if (child.state is NEW and child.future_refs > 0
                        and child.id not in members
                        and all(p.state is EXECUTED or p.id in members
                                for p in child.parents)):
                    members[child.id] = child
                    grew = True
    return [members[nid] for nid in sorted(members)]


def _push_node(ctx: Context, node: DiaNode, targets) -> None:
    ctx.current_op = node.name
    sinks = []
    for child, edge in targets:
        accept = child.begin_link(edge)
        stack = child.parent_stacks[edge]
        sinks.append(compile_stack(stack, accept, ctx) if stack else accept)
    consume = (ctx.consume and node.handle_refs == 0 and node.future_refs == 0
               and node.pending_children == len(targets))
    node.push_data(sinks, consume)
    for child, edge in targets:
        child.end_link(edge)
    if consume:
        node.dispose()


def execute_until(ctx: Context, target: DiaNode) -> None:
    """Run whatever the target still needs; collective across workers."""
    if target.state is EXECUTED:
        return
    if target.state is DISPOSED:
        raise DisposedError(
            "re-demanding disposed %s: consumed data is not recomputed"
            % target.name)
    members = _discover(target)
    stage_id = ctx.stage_count
    ctx.stage_count += 1

    declaring = [m for m in members if m.memory_need]
    share = None
    if ctx.ops_budget is not None and declaring:
        share = ctx.ops_budget // len(declaring)
    for m in members:
        m.stage_budget = share if m.memory_need else None

    transport = ctx.group.transport
    tx0, rx0 = transport.tx_bytes, transport.rx_bytes
    t0 = time.perf_counter()

    targets_of: dict[int, list] = {}
    by_id: dict[int, DiaNode] = {}
    member_ids = {m.id for m in members}
    for child in members:
        for edge, parent in enumerate(child.parents):
            targets_of.setdefault(parent.id, []).append((child, edge))
            by_id[parent.id] = parent

    try:
        for pid in sorted(targets_of):
            if pid not in member_ids:
                _push_node(ctx, by_id[pid], targets_of[pid])
        for m in members:
            ctx.current_op = m.name
            m.run_main()
            m.state = EXECUTED
            for parent in m.parents:
                parent.child_executed()
            if m.id in targets_of:
                _push_node(ctx, m, targets_of[m.id])
    except (JobAborted, DisposedError):
        raise
    except Exception as exc:
        raise JobAborted(
            "operation %r failed on worker %d: %s"
            % (ctx.current_op, ctx.my_worker, exc),
            origin_rank=ctx.my_worker, op_name=ctx.current_op) from exc
    finally:
        ctx.current_op = ""

    wall_ms = (time.perf_counter() - t0) * 1000.0
    record = StageRecord(
        stage_id=stage_id,
        op_names=tuple(m.name for m in members),
        wall_ms=wall_ms,
        tx_bytes=transport.tx_bytes - tx0,
        rx_bytes=transport.rx_bytes - rx0,
        peak_pool_bytes=ctx.pool.peak_bytes_in_ram,
    )
    ctx.stage_records.append(record)
    if ctx.trace and ctx.my_worker == 0:
        print("[stage %d] ops=%s budget=%s wall=%.1fms tx=%d rx=%d"
              % (stage_id, ">".join(record.op_names),
                 share if share is not None else "unbounded",
                 wall_ms, record.tx_bytes, record.rx_bytes),
            file=sys.stderr)
