"""Deterministic random number generation for all samplers and kernels.

The package uses a single, fully specified generator so that every result is
reproducible bit-for-bit across platforms, thread counts, and entry points:

* stream state: xoshiro256++ (Blackman & Vigna), 4 x 64-bit words;
* seeding: the state is filled with consecutive outputs of a splitmix64
  stream started at the seed value;
* per-replica streams: replica ``i`` of a run with master seed ``s`` uses
  the xoshiro stream seeded with ``derive_seed(s, i)``, the ``i``-th output
  of the splitmix64 stream started at ``s``.  Streams for different
  replicas never share state, so results do not depend on scheduling.

All functions below are numba-compiled and mutate the state array in place;
they are equally callable from interpreted code.
"""

from __future__ import annotations

import numpy as np
from numba import njit

U64 = np.uint64

_GAMMA = U64(0x9E3779B97F4A7C15)
_MIX1 = U64(0xBF58476D1CE4E5B9)
_MIX2 = U64(0x94D049BB133111EB)


@njit(cache=True, nogil=True)
def _mix64(x):
    z = U64(x)
    z = (z ^ (z >> U64(30))) * _MIX1
    z = (z ^ (z >> U64(27))) * _MIX2
    return z ^ (z >> U64(31))


@njit(cache=True, nogil=True)
def splitmix64(seed, k):
    """k-th output (k = 0, 1, ...) of the splitmix64 stream seeded at `seed`."""
    return _mix64(U64(seed) + _GAMMA * (U64(k) + U64(1)))


@njit(cache=True, nogil=True)
def derive_seed(master, index):
    """Child seed for replica `index` of a run with master seed `master`."""
    return splitmix64(U64(master), U64(index))


@njit(cache=True, nogil=True)
def new_state(seed):
    """Fresh xoshiro256++ state from a 64-bit seed."""
    s = np.empty(4, dtype=np.uint64)
    for j in range(4):
        s[j] = splitmix64(U64(seed), U64(j))
    if s[0] | s[1] | s[2] | s[3] == U64(0):
        s[0] = _GAMMA
    return s


@njit(cache=True, nogil=True)
def _rotl(x, k):
    return (x << U64(k)) | (x >> (U64(64) - U64(k)))


@njit(cache=True, nogil=True)
def next_u64(s):
    """Next 64-bit output of xoshiro256++; advances the state in place."""
    result = _rotl(s[0] + s[3], 23) + s[0]
    t = s[1] << U64(17)
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl(s[3], 45)
    return result


@njit(cache=True, nogil=True)
def next_unit(s):
    """Uniform double in [0, 1) with 53 random bits."""
    return float(next_u64(s) >> U64(11)) * 1.1102230246251565e-16


@njit(cache=True, nogil=True)
def next_below(s, n):
    """Uniform integer in [0, n), unbiased (rejection on the top residue)."""
    n64 = U64(n)
    threshold = (U64(0) - n64) % n64
    while True:
        x = next_u64(s)
        if x >= threshold:
            return int(x % n64)


@njit(cache=True, nogil=True)
def next_exponential(s, rate):
    """Exponential waiting time with the given rate."""
    return -np.log(1.0 - next_unit(s)) / rate


@njit(cache=True, nogil=True)
def next_coin(s):
    """Fair coin: 0 or 1."""
    return int(next_u64(s) >> U64(63))


def as_seed(seed) -> np.uint64:
    """Normalize an int-like seed to uint64 (two's complement wrap)."""
    return U64(int(seed) & 0xFFFFFFFFFFFFFFFF)


def child_seed(master, index) -> int:
    """Python-safe derive_seed: accepts any int-like master, returns int."""
    return int(derive_seed(as_seed(master), U64(int(index))))


class Rng:
    """Small object wrapper for interpreted-code consumers of the stream."""

    def __init__(self, seed: int):
        self.state = new_state(as_seed(seed))

    def u64(self) -> int:
        return int(next_u64(self.state))

    def unit(self) -> float:
        return next_unit(self.state)

    def below(self, n: int) -> int:
        return next_below(self.state, n)

    def exponential(self, rate: float) -> float:
        return next_exponential(self.state, rate)

    def coin(self) -> int:
        return next_coin(self.state)

    def shuffle(self, arr: np.ndarray) -> None:
        """In-place Fisher-Yates shuffle."""
        _shuffle(self.state, arr)


@njit(cache=True, nogil=True)
def _shuffle(s, arr):
    for i in range(len(arr) - 1, 0, -1):
        j = next_below(s, i + 1)
        arr[i], arr[j] = arr[j], arr[i]
