"""Scalar MD5 (RFC 1321) over complete in-memory messages."""

import math
import struct

_INIT = (0x67452301, 0xEFCDAB89, 0x98BADCFE, 0x10325476)

# K[i] = floor(abs(sin(i+1)) * 2^32) per RFC 1321 section 3.4.
_K = tuple(int(abs(math.sin(i + 1)) * 2**32) & 0xFFFFFFFF for i in range(64))

_S = (
    (7, 12, 17, 22),
    (5, 9, 14, 20),
    (4, 11, 16, 23),
    (6, 10, 15, 21),
)

_MASK = 0xFFFFFFFF


def _rotl(x, n):
    return ((x << n) | (x >> (32 - n))) & _MASK


def _pad(msg: bytes) -> bytes:
    bitlen = (len(msg) * 8) & 0xFFFFFFFFFFFFFFFF
    msg += b"\x80"
    msg += b"\x00" * ((56 - len(msg) % 64) % 64)
    return msg + struct.pack("<Q", bitlen)


def _compress(state, block):
    m = struct.unpack("<16I", block)
    a, b, c, d = state
    for i in range(64):
        if i < 16:
            f = (b & c) | (~b & d)
            g = i
        elif i < 32:
            f = (d & b) | (~d & c)
            g = (5 * i + 1) % 16
        elif i < 48:
            f = b ^ c ^ d
            g = (3 * i + 5) % 16
        else:
            f = c ^ (b | (~d & _MASK))
            g = (7 * i) % 16
        tmp = d
        d = c
        c = b
        rot = (a + f + _K[i] + m[g]) & _MASK
        b = (b + _rotl(rot, _S[i // 16][i % 4])) & _MASK
        a = tmp
    return tuple((s + v) & _MASK for s, v in zip(state, (a, b, c, d)))


def md5(msg: bytes) -> bytes:
    """Return the 16-byte MD5 digest of ``msg``."""
    padded = _pad(msg)
    state = _INIT
    for off in range(0, len(padded), 64):
        state = _compress(state, padded[off : off + 64])
    return struct.pack("<4I", *state)
