"""Materializing forwarders: collapse, cache, union.

All three store the pushed items locally and forward them unchanged; no
item crosses workers. collapse exists to seal a local-op stack behind a
real vertex (so the result can be consumed several times without re-running
the stack, or referenced without its closure types); cache is the
explicit keep-this marker; union interleaves several arrays without any
ordering or balance guarantee.
"""

from __future__ import annotations

import itertools

from thrillette.engine.dag import DiaNode, FileLinkMixin
from thrillette.engine.dia import DIA


class CollapseNode(FileLinkMixin, DiaNode):
    name = "collapse"

    def __init__(self, dia):
        super().__init__(dia.ctx, parents=(dia.node,), stacks=(dia.stack,))

    def run_main(self):
        self.files = [self.link_file(0)]
        self._link_files.clear()
        self._link_writers.clear()


class CacheNode(CollapseNode):
    name = "cache"


class UnionNode(FileLinkMixin, DiaNode):
    name = "union"

    def __init__(self, dias):
        ctx = dias[0].ctx
        super().__init__(ctx, parents=tuple(d.node for d in dias),
                         stacks=tuple(d.stack for d in dias))

    def run_main(self):
        self.files = [self.link_file(e) for e in range(len(self.parents))]
        self._link_files.clear()
        self._link_writers.clear()

    def iter_stored(self, consume=False):
        return itertools.chain.from_iterable(
            f.reader(consume=consume) for f in list(self.files))


def collapse(dia) -> DIA:
    return DIA(CollapseNode(dia))


def cache(dia) -> DIA:
    return DIA(CacheNode(dia))


def union(*dias) -> DIA:
    if len(dias) < 1:
        raise ValueError("union needs at least one array")
    if len(dias) == 1:
        return collapse(dias[0])
    return DIA(UnionNode(dias))
