# cython: language_level=3
"""Compiled byte-level hot kernels.

Bit-identical to thrillette.kernels._pykernels; keep the two in sync.
"""

from libc.stdint cimport uint8_t, uint64_t

cdef uint64_t _P1 = 0x9E3779B185EBCA87ULL
cdef uint64_t _P2 = 0xC2B2AE3D27D4EB4FULL


cdef inline uint64_t _mix64(uint64_t x) nogil:
    x ^= x >> 33
    x *= 0xFF51AFD7ED558CCDULL
    x ^= x >> 33
    x *= 0xC4CEB9FE1A85EC53ULL
    x ^= x >> 33
    return x


def mix64(x):
    """64-bit avalanche finalizer (murmur-style fmix64)."""
    return _mix64(<uint64_t> (x & 0xFFFFFFFFFFFFFFFF))


def hash_bytes(data, seed=0):
    """Seeded 64-bit hash over a bytes-like object.

    Little-endian 8-byte chunks folded through mix64; the length is mixed
    into the initial state so prefixes do not collide trivially.
    """
    cdef const uint8_t[:] view = bytes(data)
    cdef Py_ssize_t n = view.shape[0]
    cdef uint64_t h = (<uint64_t> (seed & 0xFFFFFFFFFFFFFFFF)) ^ ((<uint64_t> n) * _P1)
    cdef Py_ssize_t full = n - (n % 8)
    cdef Py_ssize_t i
    cdef int j
    cdef uint64_t k
    for i in range(0, full, 8):
        k = 0
        for j in range(8):
            k |= (<uint64_t> view[i + j]) << (8 * j)
        h = _mix64(h ^ (k * _P2))
    if full != n:
        k = 0
        for j in range(<int> (n - full)):
            k |= (<uint64_t> view[full + j]) << (8 * j)
        h = _mix64(h ^ (k * _P1))
    return h


def varint_encode(value):
    """Unsigned LEB128 encoding."""
    cdef bytearray out = bytearray()
    varint_write(out, value)
    return bytes(out)


def varint_write(out, value):
    """Append the unsigned LEB128 encoding of value to out."""
    if value < 0:
        raise ValueError("varint is unsigned, got %d" % value)
    cdef uint64_t v
    cdef uint8_t b
    if value <= 0xFFFFFFFFFFFFFFFF:
        v = <uint64_t> value
        while True:
            b = v & 0x7F
            v >>= 7
            if v:
                out.append(b | 0x80)
            else:
                out.append(b)
                return
    else:
        # beyond 64 bits: fall back to Python ints
        while True:
            b = value & 0x7F
            value >>= 7
            if value:
                out.append(b | 0x80)
            else:
                out.append(b)
                return


def varint_read(buf, pos):
    """Decode an unsigned LEB128 varint from buf at pos.

    Returns (value, next_pos). Raises IndexError if the buffer ends
    mid-varint, ValueError if the encoding exceeds 64 bits.
    """
    cdef const uint8_t[:] view
    if isinstance(buf, bytes):
        view = <bytes> buf
    elif isinstance(buf, bytearray):
        view = <bytearray> buf
    else:
        view = memoryview(buf).cast("B")
    cdef Py_ssize_t n = view.shape[0]
    cdef Py_ssize_t p = pos
    cdef uint64_t value = 0
    cdef int shift = 0
    cdef uint8_t b
    while True:
        if p >= n:
            raise IndexError("buffer ends mid-varint")
        b = view[p]
        p += 1
        value |= (<uint64_t> (b & 0x7F)) << shift
        if not b & 0x80:
            return value, p
        shift += 7
        if shift > 63:
            raise ValueError("varint too long")
