"""Canonical coordinate keys and the shared double-hash family.

Every sketch in the engine addresses one table of ``m = k * p`` slots.
Function ``i`` (1-based) owns the disjoint partition ``[(i-1)*p, i*p)``
and is the linear combination ``(h1 + i*h2) mod p`` of two
independently seeded base hashes, so addressing a grid cell costs
exactly two hash evaluations no matter how large ``k`` is.

Indices are zero-based throughout: each function maps into ``[0, p)``
and absolute table indices live in ``[0, m)``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Sequence

_MASK64 = 0xFFFFFFFFFFFFFFFF
_LEN_SALT = 0x9E3779B97F4A7C15  # golden-ratio constant; decorrelates key lengths

CoordKey = bytes
CellSignature = tuple  # k absolute table indices, one per partition


def _mix64(z: int) -> int:
    """SplitMix64 finalizer: full-avalanche mix of a 64-bit value."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def keyed_hash64(key: bytes, seed: int) -> int:
    """Seeded 64-bit hash of a byte string, mixing 8-byte blocks.

    Deterministic across runs and platforms; not cryptographic.
    """
    h = _mix64(seed ^ (_LEN_SALT * len(key)))
    tail = len(key) & 7
    for ofs in range(0, len(key) - tail, 8):
        h = _mix64(h ^ int.from_bytes(key[ofs:ofs + 8], "little"))
    if tail:
        h = _mix64(h ^ int.from_bytes(key[-tail:], "little"))
    return h


def encode_coords(coords: Sequence[int]) -> CoordKey:
    """Encode a grid-cell coordinate tuple as a canonical byte string.

    The dimension count is prefixed so tuples of different length can
    never collide; each coordinate is a fixed-width signed 64-bit
    little-endian field, in dimension order.
    """
    d = len(coords)
    if d < 1:
        raise ValueError("coordinate tuple must have at least one dimension")
    try:
        return struct.pack(f"<{d + 1}q", d, *coords)
    except struct.error as exc:
        raise ValueError(
            f"coordinates must be integers in the signed 64-bit range: {tuple(coords)!r}"
        ) from exc


@dataclass(frozen=True)
class HashFamily:
    """Two base-hash seeds plus the (k, p) geometry they feed."""

    seed1: int
    seed2: int
    hash_count: int
    partition_size: int

    def __post_init__(self) -> None:
        if self.hash_count < 1:
            raise ValueError("hash_count must be >= 1")
        if not is_prime(self.partition_size):
            raise ValueError(f"partition size {self.partition_size} is not prime")

    @classmethod
    def from_seed(cls, seed: int, hash_count: int, partition_size: int) -> "HashFamily":
        """Derive the two base seeds from one master seed."""
        return cls(_mix64(seed), _mix64(~seed), hash_count, partition_size)

    @property
    def table_bits(self) -> int:
        return self.hash_count * self.partition_size


def base_hashes(key: CoordKey, family: HashFamily) -> tuple[int, int]:
    """The two seeded base hashes of ``key``, each reduced into [0, p)."""
    p = family.partition_size
    return keyed_hash64(key, family.seed1) % p, keyed_hash64(key, family.seed2) % p


def derived_hash(i: int, h1: int, h2: int, p: int) -> int:
    """Hash function ``i`` in [1, k]: ``(h1 + i*h2) mod p``."""
    return (h1 + i * h2) % p


def cell_signature(coords: Sequence[int], family: HashFamily) -> CellSignature:
    """The k absolute table indices of a grid cell, one per partition.

    Index ``i`` (1-based) lands in ``[(i-1)*p, i*p)``; the signature is a
    pure function of (coords, family).
    """
    h1, h2 = base_hashes(encode_coords(coords), family)
    p = family.partition_size
    return tuple(
        (i - 1) * p + (h1 + i * h2) % p for i in range(1, family.hash_count + 1)
    )


_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, exact for all 64-bit integers."""
    if n < 2:
        return False
    for q in _MR_BASES:
        if n % q == 0:
            return n == q
    d = n - 1
    s = 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def next_prime(lower: int) -> int:
    """Smallest prime >= lower."""
    if lower < 2:
        raise ValueError("lower bound must be >= 2")
    n = lower
    while not is_prime(n):
        n += 1
    return n
