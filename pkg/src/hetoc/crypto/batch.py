"""Batch hashing over fixed-width message buffers.

All messages in a batch share one width, so padding and block structure are
identical across the batch and the compression functions can run lane-parallel
over numpy uint32 arrays. The scalar implementations in sha1/md5/sm3 stay the
reference; the vectorized kernels here must match them byte for byte and are
tested against them.
"""

from __future__ import annotations

import hashlib
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .md5 import md5
from .sha1 import sha1
from .sm3 import sm3

DIGEST_LEN = {"sha1": 20, "md5": 16, "sm3": 32}

ALGORITHMS = tuple(sorted(DIGEST_LEN))

# Lanes processed per vectorized call; bounds the kernels' working set.
_CHUNK = 1 << 16

_U32 = np.uint32


class UnknownAlgorithmError(ValueError):
    pass


def _check_alg(alg: str) -> None:
    if alg not in DIGEST_LEN:
        raise UnknownAlgorithmError(f"unknown hash algorithm {alg!r}; expected one of {ALGORITHMS}")


@dataclass(frozen=True)
class Digest:
    """A single hash result; ``data`` length always matches the algorithm."""

    alg: str
    data: bytes

    def __post_init__(self):
        _check_alg(self.alg)
        if len(self.data) != DIGEST_LEN[self.alg]:
            raise ValueError(
                f"{self.alg} digest must be {DIGEST_LEN[self.alg]} bytes, got {len(self.data)}"
            )

    def hex(self) -> str:
        return self.data.hex()


@dataclass(frozen=True)
class MessageBatch:
    """Fixed-width message layout: message i lives at bytes [i*msg_len, (i+1)*msg_len)."""

    count: int
    msg_len: int
    data: bytes

    def __post_init__(self):
        if self.count < 0 or self.msg_len <= 0:
            raise ValueError("count must be >= 0 and msg_len > 0")
        if len(self.data) != self.count * self.msg_len:
            raise ValueError(
                f"data holds {len(self.data)} bytes, expected count*msg_len = "
                f"{self.count * self.msg_len}"
            )

    def message(self, i: int) -> bytes:
        if not 0 <= i < self.count:
            raise IndexError(i)
        return self.data[i * self.msg_len : (i + 1) * self.msg_len]

    def as_array(self) -> np.ndarray:
        return np.frombuffer(self.data, np.uint8).reshape(self.count, self.msg_len)


def gen_messages(start_index: int, count: int, width: int = 9) -> MessageBatch:
    """Zero-padded decimal messages for indices [start_index, start_index+count)."""
    if width <= 0:
        raise ValueError("width must be positive")
    if start_index < 0 or count < 0 or start_index + count > 10**width:
        raise ValueError(
            f"index range [{start_index}, {start_index + count}) does not fit in {width} digits"
        )
    idx = np.arange(start_index, start_index + count, dtype=np.uint64)
    digits = np.empty((count, width), np.uint8)
    for pos in range(width - 1, -1, -1):
        digits[:, pos] = (idx % 10).astype(np.uint8) + ord("0")
        idx //= 10
    return MessageBatch(count=count, msg_len=width, data=digits.tobytes())


def digest(alg: str, message: bytes) -> Digest:
    """Single-message digest via the scalar reference implementations."""
    _check_alg(alg)
    if alg == "sha1":
        return Digest("sha1", sha1(message))
    if alg == "md5":
        return Digest("md5", md5(message))
    return Digest("sm3", sm3(message))


def digest_sha1_accel(message: bytes) -> Digest:
    """SHA-1 through the platform library, which uses the CPU's SHA extension
    when present and silently falls back otherwise. Bit-identical to
    digest("sha1", ...)."""
    return Digest("sha1", hashlib.sha1(message).digest())


# ---------------------------------------------------------------------------
# Vectorized kernels
# ---------------------------------------------------------------------------


def _rotl(x: np.ndarray, n: int) -> np.ndarray:
    return (x << _U32(n)) | (x >> _U32(32 - n))


def _padded_words(data: np.ndarray, byteorder: str) -> np.ndarray:
    """Pad an (n, width) uint8 array and return (n, nblocks, 16) native uint32 words."""
    n, width = data.shape
    nblocks = (width + 9 + 63) // 64
    padded = np.zeros((n, nblocks * 64), np.uint8)
    padded[:, :width] = data
    padded[:, width] = 0x80
    lenfield = struct.pack(">Q" if byteorder == ">" else "<Q", width * 8)
    padded[:, -8:] = np.frombuffer(lenfield, np.uint8)
    words = padded.view(f"{byteorder}u4").astype(_U32, copy=False)
    return np.ascontiguousarray(words).reshape(n, nblocks, 16)


_SHA1_IV = (0x67452301, 0xEFCDAB89, 0x98BADCFE, 0x10325476, 0xC3D2E1F0)
_SHA1_K = tuple(_U32(k) for k in (0x5A827999, 0x6ED9EBA1, 0x8F1BBCDC, 0xCA62C1D6))


def _sha1_chunk(data: np.ndarray) -> np.ndarray:
    words = _padded_words(data, ">")
    n, nblocks, _ = words.shape
    h = [np.full(n, v, _U32) for v in _SHA1_IV]
    for blk in range(nblocks):
        w = [words[:, blk, t] for t in range(16)]
        a, b, c, d, e = (x.copy() for x in h)
        for t in range(80):
            if t < 16:
                wt = w[t]
            else:
                wt = _rotl(w[(t - 3) % 16] ^ w[(t - 8) % 16] ^ w[(t - 14) % 16] ^ w[t % 16], 1)
                w[t % 16] = wt
            if t < 20:
                f = (b & c) | (~b & d)
            elif t < 40:
                f = b ^ c ^ d
            elif t < 60:
                f = (b & c) | (b & d) | (c & d)
            else:
                f = b ^ c ^ d
            tmp = _rotl(a, 5) + f + e + _SHA1_K[t // 20] + wt
            e, d, c, b, a = d, c, _rotl(b, 30), a, tmp
        for i, v in enumerate((a, b, c, d, e)):
            h[i] = h[i] + v
    return np.stack(h, axis=1).astype(">u4").view(np.uint8).reshape(n, 20)


_MD5_INIT = (0x67452301, 0xEFCDAB89, 0x98BADCFE, 0x10325476)
_MD5_K = tuple(_U32(int(abs(__import__("math").sin(i + 1)) * 2**32) & 0xFFFFFFFF) for i in range(64))
_MD5_S = ((7, 12, 17, 22), (5, 9, 14, 20), (4, 11, 16, 23), (6, 10, 15, 21))


def _md5_chunk(data: np.ndarray) -> np.ndarray:
    words = _padded_words(data, "<")
    n, nblocks, _ = words.shape
    h = [np.full(n, v, _U32) for v in _MD5_INIT]
    for blk in range(nblocks):
        m = words[:, blk, :]
        a, b, c, d = (x.copy() for x in h)
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
                f = c ^ (b | ~d)
                g = (7 * i) % 16
            rot = a + f + _MD5_K[i] + m[:, g]
            a, d, c, b = d, c, b, b + _rotl(rot, _MD5_S[i // 16][i % 4])
        for i, v in enumerate((a, b, c, d)):
            h[i] = h[i] + v
    return np.stack(h, axis=1).astype("<u4").view(np.uint8).reshape(n, 16)


_SM3_IV = (
    0x7380166F, 0x4914B2B9, 0x172442D7, 0xDA8A0600,
    0xA96F30BC, 0x163138AA, 0xE38DEE4D, 0xB0FB0E4E,
)
# T_j pre-rotated by j mod 32 so the round loop never shifts by zero.
_SM3_T = tuple(
    _U32((((0x79CC4519 if j < 16 else 0x7A879D8A) << (j % 32)) & 0xFFFFFFFF)
         | ((0x79CC4519 if j < 16 else 0x7A879D8A) >> (32 - j % 32) if j % 32 else 0))
    for j in range(64)
)


def _sm3_p0(x):
    return x ^ _rotl(x, 9) ^ _rotl(x, 17)


def _sm3_p1(x):
    return x ^ _rotl(x, 15) ^ _rotl(x, 23)


def _sm3_chunk(data: np.ndarray) -> np.ndarray:
    words = _padded_words(data, ">")
    n, nblocks, _ = words.shape
    h = [np.full(n, v, _U32) for v in _SM3_IV]
    for blk in range(nblocks):
        w = [words[:, blk, t] for t in range(16)]
        for j in range(16, 68):
            w.append(
                _sm3_p1(w[j - 16] ^ w[j - 9] ^ _rotl(w[j - 3], 15))
                ^ _rotl(w[j - 13], 7)
                ^ w[j - 6]
            )
        a, b, c, d, e, f, g, hh = (x.copy() for x in h)
        for j in range(64):
            a12 = _rotl(a, 12)
            ss1 = _rotl(a12 + e + _SM3_T[j], 7)
            ss2 = ss1 ^ a12
            if j < 16:
                ff = a ^ b ^ c
                gg = e ^ f ^ g
            else:
                ff = (a & b) | (a & c) | (b & c)
                gg = (e & f) | (~e & g)
            tt1 = ff + d + ss2 + (w[j] ^ w[j + 4])
            tt2 = gg + hh + ss1 + w[j]
            d = c
            c = _rotl(b, 9)
            b = a
            a = tt1
            hh = g
            g = _rotl(f, 19)
            f = e
            e = _sm3_p0(tt2)
        for i, v in enumerate((a, b, c, d, e, f, g, hh)):
            h[i] = h[i] ^ v
    return np.stack(h, axis=1).astype(">u4").view(np.uint8).reshape(n, 32)


_CHUNK_FN = {"sha1": _sha1_chunk, "md5": _md5_chunk, "sm3": _sm3_chunk}


def _sha1_accel_rows(data: np.ndarray, out: np.ndarray) -> None:
    sha1_new = hashlib.sha1
    rows = data.tobytes()
    width = data.shape[1]
    for i in range(data.shape[0]):
        out[i] = np.frombuffer(sha1_new(rows[i * width : (i + 1) * width]).digest(), np.uint8)


def batch_digest(alg: str, data: np.ndarray, accel: bool = False) -> np.ndarray:
    """Hash each row of an (n, width) uint8 array; returns (n, digest_len) uint8.

    ``accel`` selects the platform-accelerated SHA-1 kernel; other algorithms
    ignore it.
    """
    _check_alg(alg)
    n = data.shape[0]
    out = np.empty((n, DIGEST_LEN[alg]), np.uint8)
    if alg == "sha1" and accel:
        _sha1_accel_rows(data, out)
        return out
    fn = _CHUNK_FN[alg]
    for lo in range(0, n, _CHUNK):
        hi = min(lo + _CHUNK, n)
        out[lo:hi] = fn(data[lo:hi])
    return out


def hash_batch(alg: str, batch: MessageBatch, threads: int = 1, accel: bool = False) -> list[Digest]:
    """Digest every message of a batch; output is independent of ``threads``."""
    _check_alg(alg)
    if threads < 1:
        raise ValueError("threads must be >= 1")
    if batch.count == 0:
        return []
    data = batch.as_array()
    if threads == 1 or batch.count < 2 * threads:
        out = batch_digest(alg, data, accel=accel)
    else:
        out = np.empty((batch.count, DIGEST_LEN[alg]), np.uint8)
        bounds = np.linspace(0, batch.count, threads + 1, dtype=np.int64)

        def run(lo: int, hi: int) -> None:
            out[lo:hi] = batch_digest(alg, data[lo:hi], accel=accel)

        with ThreadPoolExecutor(max_workers=threads) as pool:
            futs = [pool.submit(run, bounds[k], bounds[k + 1]) for k in range(threads)]
            for fut in futs:
                fut.result()
    dlen = DIGEST_LEN[alg]
    raw = out.tobytes()
    return [Digest(alg, raw[i * dlen : (i + 1) * dlen]) for i in range(batch.count)]
