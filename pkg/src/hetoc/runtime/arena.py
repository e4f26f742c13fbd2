"""Per-device memory arenas with capacity accounting."""

from __future__ import annotations

import threading

from .devices import DeviceSpec


class ArenaError(RuntimeError):
    pass


class RuntimeBuffer:
    """A live allocation: raw bytes plus element layout and an update lock."""

    __slots__ = ("device", "elem", "length", "storage", "key", "lock")

    def __init__(self, device: str, elem: str, length: int, storage: bytearray, key: int):
        self.device = device
        self.elem = elem
        self.length = length
        self.storage = storage
        self.key = key
        self.lock = threading.Lock()


class Arena:
    """Tracks allocations of one device; enforces its capacity."""

    def __init__(self, spec: DeviceSpec):
        self.spec = spec
        self.buffers: dict[int, RuntimeBuffer] = {}
        self.bytes_in_use = 0
        self.peak_bytes = 0
        self._next_key = 0

    def alloc(self, elem: str, length: int, elem_size: int) -> RuntimeBuffer:
        nbytes = length * elem_size
        if self.bytes_in_use + nbytes > self.spec.mem_bytes:
            raise ArenaError(
                f"arena '{self.spec.id}' over capacity: {self.bytes_in_use} + {nbytes} "
                f"> {self.spec.mem_bytes} bytes"
            )
        buf = RuntimeBuffer(self.spec.id, elem, length, bytearray(nbytes), self._next_key)
        self._next_key += 1
        self.buffers[buf.key] = buf
        self.bytes_in_use += nbytes
        self.peak_bytes = max(self.peak_bytes, self.bytes_in_use)
        return buf

    def dealloc(self, buf: RuntimeBuffer) -> None:
        if buf.key not in self.buffers:
            raise ArenaError(f"dealloc of unknown or already-freed buffer on '{self.spec.id}'")
        del self.buffers[buf.key]
        self.bytes_in_use -= len(buf.storage)

    def reclaim_all(self) -> int:
        """Free every live allocation (scope exit); returns the count reclaimed."""
        n = len(self.buffers)
        self.buffers.clear()
        self.bytes_in_use = 0
        return n
