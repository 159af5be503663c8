"""Distributed operations and actions on DIAs."""

from thrillette.ops.actions import (
    all_gather,
    all_gather_future,
    execute,
    max_,
    max_future,
    min_,
    min_future,
    size,
    size_future,
    sum_,
    sum_future,
    write_binary,
    write_lines,
)
from thrillette.ops.cache import cache, collapse, union
from thrillette.ops.common import stable_hash64
from thrillette.ops.group import group_by_key, group_to_index
from thrillette.ops.rearrange import (
    concat,
    flat_window,
    prefix_sum,
    window,
    zip_dias,
    zip_with_index,
)
from thrillette.ops.reduce import reduce_by_key, reduce_to_index
from thrillette.ops.sort import merge, sort
from thrillette.ops.sources import from_list, generate, read_binary, read_lines

__all__ = [
    "all_gather",
    "all_gather_future",
    "cache",
    "collapse",
    "concat",
    "execute",
    "flat_window",
    "from_list",
    "generate",
    "group_by_key",
    "group_to_index",
    "max_",
    "max_future",
    "merge",
    "min_",
    "min_future",
    "prefix_sum",
    "read_binary",
    "read_lines",
    "reduce_by_key",
    "reduce_to_index",
    "size",
    "size_future",
    "sort",
    "stable_hash64",
    "sum_",
    "sum_future",
    "union",
    "window",
    "write_binary",
    "write_lines",
    "zip_dias",
    "zip_with_index",
]
