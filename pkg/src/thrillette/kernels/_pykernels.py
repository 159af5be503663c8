"""Pure-Python implementations of the byte-level hot kernels.

Same contract as the compiled module in _ckernels.pyx; both must produce
bit-identical results so that data written by one backend is readable by
the other.
"""

_MASK = (1 << 64) - 1
_P1 = 0x9E3779B185EBCA87
_P2 = 0xC2B2AE3D27D4EB4F


def mix64(x: int) -> int:
    """64-bit avalanche finalizer (murmur-style fmix64)."""
    x &= _MASK
    x ^= x >> 33
    x = (x * 0xFF51AFD7ED558CCD) & _MASK
    x ^= x >> 33
    x = (x * 0xC4CEB9FE1A85EC53) & _MASK
    x ^= x >> 33
    return x


def hash_bytes(data, seed: int = 0) -> int:
    """Seeded 64-bit hash over a bytes-like object.

    Little-endian 8-byte chunks folded through mix64; the length is mixed
    into the initial state so prefixes do not collide trivially.
    """
    data = bytes(data)
    n = len(data)
    h = (seed ^ (n * _P1)) & _MASK
    full = n - (n % 8)
    for i in range(0, full, 8):
        k = int.from_bytes(data[i:i + 8], "little")
        h = mix64(h ^ ((k * _P2) & _MASK))
    if full != n:
        k = int.from_bytes(data[full:], "little")
        h = mix64(h ^ ((k * _P1) & _MASK))
    return h


def varint_encode(value: int) -> bytes:
    """Unsigned LEB128 encoding."""
    if value < 0:
        raise ValueError("varint is unsigned, got %d" % value)
    out = bytearray()
    while True:
        b = value & 0x7F
        value >>= 7
        if value:
            out.append(b | 0x80)
        else:
            out.append(b)
            return bytes(out)


def varint_write(out: bytearray, value: int) -> None:
    """Append the unsigned LEB128 encoding of value to out."""
    if value < 0:
        raise ValueError("varint is unsigned, got %d" % value)
    while True:
        b = value & 0x7F
        value >>= 7
        if value:
            out.append(b | 0x80)
        else:
            out.append(b)
            return


def varint_read(buf, pos: int):
    """Decode an unsigned LEB128 varint from buf at pos.

    Returns (value, next_pos). Raises IndexError if the buffer ends
    mid-varint, ValueError if the encoding exceeds 64 bits.
    """
    value = 0
    shift = 0
    while True:
        b = buf[pos]
        pos += 1
        value |= (b & 0x7F) << shift
        if not b & 0x80:
            return value, pos
        shift += 7
        if shift > 63:
            raise ValueError("varint too long")
