"""Exception hierarchy shared across the package."""


class ThrilletteError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(ThrilletteError):
    """Invalid cluster or benchmark configuration."""


class ProtocolError(ThrilletteError):
    """Malformed frame or handshake on the wire."""


class NetworkError(ThrilletteError):
    """Connection setup or transport failure."""


class IncompleteRead(ThrilletteError):
    """A cursor ran out of bytes in the middle of an item."""


class DisposedError(ThrilletteError):
    """A dataset whose storage was already released was demanded again."""


class JobAborted(ThrilletteError):
    """A worker failed; the failure is re-raised on every worker.

    origin_rank is the worker that raised first, op_name the operation it
    was executing (empty when unknown).
    """

    def __init__(self, message, origin_rank=-1, op_name=""):
        super().__init__(message)
        self.origin_rank = origin_rank
        self.op_name = op_name
