"""Item serializers.

Fixed-size types occupy exactly their payload bytes, so n items cost
n * size with zero framing. Variable-length types carry a varint length
prefix. Compound types are the concatenation of their components.

Writers append to a bytearray; readers pull from any object exposing
read_bytes(n) and read_varint().
"""

from __future__ import annotations

import pickle
import struct

from thrillette.kernels import varint_write

_F64 = struct.Struct("<d")


class Serializer:
    """Base contract. fixed_size is the per-item byte count, or None."""

    fixed_size: int | None = None

    def write(self, out: bytearray, value) -> None:
        raise NotImplementedError

    def read(self, reader):
        raise NotImplementedError


class UInt64Serializer(Serializer):
    fixed_size = 8

    def write(self, out, value):
        out += value.to_bytes(8, "little")

    def read(self, reader):
        return int.from_bytes(reader.read_bytes(8), "little")


class Int64Serializer(Serializer):
    fixed_size = 8

    def write(self, out, value):
        out += value.to_bytes(8, "little", signed=True)

    def read(self, reader):
        return int.from_bytes(reader.read_bytes(8), "little", signed=True)


class Float64Serializer(Serializer):
    fixed_size = 8

    def write(self, out, value):
        out += _F64.pack(value)

    def read(self, reader):
        return _F64.unpack(reader.read_bytes(8))[0]


class FixedBytesSerializer(Serializer):
    """Raw byte strings of one known length."""

    def __init__(self, size: int):
        self.fixed_size = size

    def write(self, out, value):
        if len(value) != self.fixed_size:
            raise ValueError(
                "expected %d bytes, got %d" % (self.fixed_size, len(value)))
        out += value

    def read(self, reader):
        return reader.read_bytes(self.fixed_size)


class BytesSerializer(Serializer):
    def write(self, out, value):
        varint_write(out, len(value))
        out += value

    def read(self, reader):
        return reader.read_bytes(reader.read_varint())


class Utf8Serializer(Serializer):
    def write(self, out, value):
        data = value.encode("utf-8", "surrogateescape")
        varint_write(out, len(data))
        out += data

    def read(self, reader):
        return reader.read_bytes(reader.read_varint()).decode("utf-8", "surrogateescape")


class VarIntSerializer(Serializer):
    """Unsigned integers, varint coded (compact, variable length)."""

    def write(self, out, value):
        varint_write(out, value)

    def read(self, reader):
        return reader.read_varint()


class TupleSerializer(Serializer):
    """Heterogeneous fixed-arity tuples, components concatenated."""

    def __init__(self, *components: Serializer):
        self.components = components
        sizes = [c.fixed_size for c in components]
        self.fixed_size = sum(sizes) if all(s is not None for s in sizes) else None

    def write(self, out, value):
        if len(value) != len(self.components):
            raise ValueError(
                "expected %d-tuple, got %d" % (len(self.components), len(value)))
        for comp, item in zip(self.components, value):
            comp.write(out, item)

    def read(self, reader):
        return tuple(comp.read(reader) for comp in self.components)


class VarListSerializer(Serializer):
    """Homogeneous lists: varint count then the elements."""

    def __init__(self, element: Serializer):
        self.element = element

    def write(self, out, value):
        varint_write(out, len(value))
        for item in value:
            self.element.write(out, item)

    def read(self, reader):
        return [self.element.read(reader) for _ in range(reader.read_varint())]


class PickleSerializer(Serializer):
    """Catch-all for arbitrary Python objects; length-prefixed pickle."""

    def write(self, out, value):
        data = pickle.dumps(value, protocol=pickle.HIGHEST_PROTOCOL)
        varint_write(out, len(data))
        out += data

    def read(self, reader):
        return pickle.loads(reader.read_bytes(reader.read_varint()))


uint64 = UInt64Serializer()
int64 = Int64Serializer()
float64 = Float64Serializer()
raw_bytes = BytesSerializer()
utf8 = Utf8Serializer()
var_uint = VarIntSerializer()
default = PickleSerializer()


def pair(a: Serializer, b: Serializer) -> TupleSerializer:
    return TupleSerializer(a, b)
