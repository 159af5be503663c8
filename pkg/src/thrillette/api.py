"""The public surface, re-exported for `import thrillette as th` use.

Everything here is importable straight off the package: sources, the
runners, the execution context, cluster configuration and the serializer
toolbox. DIA methods cover the per-array operations.
"""

from thrillette.data import serial
from thrillette.data.block import Block, BlockWriter, File, FileReader
from thrillette.data.pool import DEFAULT_BLOCK_SIZE, BlockPool
from thrillette.data.stream import CatStream, MixStream
from thrillette.engine.context import Context, StageRecord, share_of, split_budget
from thrillette.engine.dia import DIA, ActionFuture
from thrillette.engine.runner import run, run_tcp, run_tcp_loopback
from thrillette.kernels import BACKEND as kernel_backend
from thrillette.net import connect
from thrillette.net.config import ClusterConfig, parse_endpoints
from thrillette.ops import (
    from_list,
    generate,
    read_binary,
    read_lines,
    stable_hash64,
)

__all__ = [
    "ActionFuture",
    "Block",
    "BlockPool",
    "BlockWriter",
    "CatStream",
    "ClusterConfig",
    "Context",
    "DEFAULT_BLOCK_SIZE",
    "DIA",
    "File",
    "FileReader",
    "MixStream",
    "StageRecord",
    "connect",
    "from_list",
    "generate",
    "kernel_backend",
    "parse_endpoints",
    "read_binary",
    "read_lines",
    "run",
    "run_tcp",
    "run_tcp_loopback",
    "serial",
    "share_of",
    "split_budget",
    "stable_hash64",
]
