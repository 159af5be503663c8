"""Engine: the lazy dataflow graph, local-op fusion, stage execution,
reference-counted disposal, and job orchestration."""

from thrillette.engine.context import Context, StageRecord, share_of, split_budget
from thrillette.engine.dag import DISPOSED, EXECUTED, NEW, DiaNode, FileLinkMixin
from thrillette.engine.dia import DIA, ActionFuture
from thrillette.engine.runner import run, run_tcp, run_tcp_loopback
from thrillette.engine.stage import compile_stack, execute_until

__all__ = [
    "ActionFuture",
    "Context",
    "DIA",
    "DISPOSED",
    "DiaNode",
    "EXECUTED",
    "FileLinkMixin",
    "NEW",
    "StageRecord",
    "compile_stack",
    "execute_until",
    "run",
    "run_tcp",
    "run_tcp_loopback",
    "share_of",
    "split_budget",
]
