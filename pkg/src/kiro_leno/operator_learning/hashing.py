"""64-bit FNV-1a content hashing for container payloads and basis references."""

from collections.abc import Iterable

import numpy as np
from numba import njit

FNV_OFFSET_BASIS = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3


@njit(cache=True)
def _fnv1a_kernel(data: np.ndarray, start: np.uint64) -> np.uint64:
    """FNV-1a over a uint8 buffer; uint64 products wrap modulo 2^64."""
    prime = np.uint64(FNV_PRIME)
    h = np.uint64(start)
    for i in range(data.size):
        h = (h ^ np.uint64(data[i])) * prime
    return h


def fnv1a_64(chunks: Iterable, start: int = FNV_OFFSET_BASIS) -> int:
    """Hash bytes-like chunks (bytes, memoryview or contiguous arrays) in order."""
    h = np.uint64(start)
    for chunk in chunks:
        if memoryview(chunk).nbytes == 0:
            continue
        h = np.uint64(_fnv1a_kernel(np.frombuffer(chunk, dtype=np.uint8), h))
    return int(h)


def hash_arrays(arrays: Iterable[np.ndarray]) -> str:
    """Hash the little-endian float64 bytes of each array in order, as 0x-prefixed hex."""
    return format_hash(fnv1a_64(np.ascontiguousarray(a, dtype="<f8").reshape(-1) for a in arrays))


def format_hash(value: int) -> str:
    return f"0x{value:016x}"
