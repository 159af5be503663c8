"""Networking: cluster config, wire frames, point-to-point messaging,
and MPI-style collectives over mock (in-process) or TCP backends."""

from thrillette.net.config import ClusterConfig, parse_endpoints
from thrillette.net.frames import (
    COLLECTIVE_CHANNEL,
    FLAG_ABORT,
    FLAG_EOC,
    HEADER_SIZE,
    MAGIC,
    MessageFrame,
)
from thrillette.net.group import Group, Mesh, Transport
from thrillette.net.mailbox import EOC, Mailbox
from thrillette.net.mock import mock_mesh


def connect(config: ClusterConfig, backend: str = "mock") -> Mesh:
    """Join the cluster; returns the local Groups (all p for mock)."""
    if backend == "mock":
        return mock_mesh(config=config)
    if backend == "tcp":
        from thrillette.net.tcp import tcp_mesh

        return tcp_mesh(config)
    raise ValueError("unknown backend %r" % backend)


__all__ = [
    "COLLECTIVE_CHANNEL",
    "ClusterConfig",
    "EOC",
    "FLAG_ABORT",
    "FLAG_EOC",
    "Group",
    "HEADER_SIZE",
    "MAGIC",
    "Mailbox",
    "Mesh",
    "MessageFrame",
    "Transport",
    "connect",
    "mock_mesh",
    "parse_endpoints",
]
