"""Scalar SHA-1 (FIPS 180-4) over complete in-memory messages."""

import struct

_H0 = (0x67452301, 0xEFCDAB89, 0x98BADCFE, 0x10325476, 0xC3D2E1F0)

_MASK = 0xFFFFFFFF


def _rotl(x, n):
    return ((x << n) | (x >> (32 - n))) & _MASK


def _pad(msg: bytes) -> bytes:
    bitlen = len(msg) * 8
    msg += b"\x80"
    msg += b"\x00" * ((56 - len(msg) % 64) % 64)
    return msg + struct.pack(">Q", bitlen)


def _compress(state, block):
    w = list(struct.unpack(">16I", block))
    for t in range(16, 80):
        w.append(_rotl(w[t - 3] ^ w[t - 8] ^ w[t - 14] ^ w[t - 16], 1))
    a, b, c, d, e = state
    for t in range(80):
        if t < 20:
            f, k = (b & c) | (~b & d), 0x5A827999
        elif t < 40:
            f, k = b ^ c ^ d, 0x6ED9EBA1
        elif t < 60:
            f, k = (b & c) | (b & d) | (c & d), 0x8F1BBCDC
        else:
            f, k = b ^ c ^ d, 0xCA62C1D6
        tmp = (_rotl(a, 5) + f + e + k + w[t]) & _MASK
        e, d, c, b, a = d, c, _rotl(b, 30), a, tmp
    return tuple((s + v) & _MASK for s, v in zip(state, (a, b, c, d, e)))


def sha1(msg: bytes) -> bytes:
    """Return the 20-byte SHA-1 digest of ``msg``."""
    padded = _pad(msg)
    state = _H0
    for off in range(0, len(padded), 64):
        state = _compress(state, padded[off : off + 64])
    return struct.pack(">5I", *state)
