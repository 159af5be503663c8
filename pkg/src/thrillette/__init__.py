"""Desk-scale distributed batch processing on immutable array dataflows.

Data lives in distributed immutable arrays partitioned over a group of
workers. Local transformations are fused into per-item pipelines; global
operations exchange data through block-granular streams and run lazily,
demanded by actions on a dataflow graph.

Typical use::

    import thrillette as th

    def job(ctx):
        return (th.generate(ctx, 1000)
                  .map(lambda x: x * x)
                  .filter(lambda x: x % 3 == 0)
                  .size())

    counts = th.run(job, hosts=1, workers_per_host=4)
"""

from thrillette.errors import (
    ConfigError,
    DisposedError,
    IncompleteRead,
    JobAborted,
    NetworkError,
    ProtocolError,
    ThrilletteError,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DisposedError",
    "IncompleteRead",
    "JobAborted",
    "NetworkError",
    "ProtocolError",
    "ThrilletteError",
    "__version__",
]


def __getattr__(name):
    # Heavy submodules are imported on first use so that importing the
    # package stays cheap for tools that only need the version.
    import importlib

    _api = importlib.import_module("thrillette.api")
    try:
        value = getattr(_api, name)
    except AttributeError:
        raise AttributeError("module %r has no attribute %r" % (__name__, name)) from None
    globals()[name] = value
    return value
