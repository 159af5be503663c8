"""Cluster topology description shared by both network backends."""

from __future__ import annotations

from dataclasses import dataclass, field

from thrillette.errors import ConfigError

# Logical channel ids are multiplexed with the destination's local worker
# id into the 32-bit wire channel field, so both get a bounded range.
MAX_WORKERS_PER_HOST = 255


@dataclass(frozen=True)
class ClusterConfig:
    """Topology: hosts * workers_per_host workers, ranked host-major.

    Worker w lives on host w // workers_per_host as local worker
    w % workers_per_host. endpoints and my_host only matter for the TCP
    backend; every participant must use an identical, identically ordered
    endpoint list.
    """

    hosts: int = 1
    workers_per_host: int = 1
    my_host: int = 0
    endpoints: tuple[str, ...] = ()
    connect_timeout: float = 15.0

    def __post_init__(self):
        if self.hosts < 1:
            raise ConfigError("hosts must be >= 1, got %d" % self.hosts)
        if self.workers_per_host < 1:
            raise ConfigError(
                "workers_per_host must be >= 1, got %d" % self.workers_per_host)
        if self.workers_per_host > MAX_WORKERS_PER_HOST:
            raise ConfigError(
                "workers_per_host must be <= %d" % MAX_WORKERS_PER_HOST)
        if not 0 <= self.my_host < self.hosts:
            raise ConfigError(
                "my_host %d out of range [0, %d)" % (self.my_host, self.hosts))
        if self.endpoints and len(self.endpoints) != self.hosts:
            raise ConfigError(
                "need one endpoint per host: %d endpoints for %d hosts"
                % (len(self.endpoints), self.hosts))

    @property
    def total_workers(self) -> int:
        return self.hosts * self.workers_per_host

    def host_of(self, worker: int) -> int:
        return worker // self.workers_per_host

    def local_of(self, worker: int) -> int:
        return worker % self.workers_per_host

    def workers_of_host(self, host: int) -> range:
        c = self.workers_per_host
        return range(host * c, (host + 1) * c)

    def address_of(self, host: int) -> tuple[str, int]:
        name, _, port = self.endpoints[host].rpartition(":")
        if not name or not port.isdigit():
            raise ConfigError("endpoint %r is not host:port" % self.endpoints[host])
        return name, int(port)


def parse_endpoints(text: str) -> tuple[str, ...]:
    """Split a comma-separated host:port list."""
    parts = tuple(p.strip() for p in text.split(",") if p.strip())
    if not parts:
        raise ConfigError("empty endpoint list")
    return parts
