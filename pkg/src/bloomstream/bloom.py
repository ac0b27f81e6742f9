"""Partitioned bloom filters over cell signatures and their unions.

A single cell's filter is exactly its k table indices, so fragments
carry cell signatures and dense m-bit vectors only materialize when
filters are unioned into a cluster signature. Unions are bitwise OR;
containment has no false negatives.

Filters are immutable values after construction; ``union`` returns a
new one. Reads need no synchronization.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import ConfigurationError
from .grid import CellCoords, neighborhood
from .hashcore import CellSignature, HashFamily, cell_signature


class BloomSignature:
    """Immutable m-bit vector split into k partitions of p bits.

    Bit order follows the absolute table index (partition-major), the
    same layout the flat cluster index uses for its rows.
    """

    __slots__ = ("bits", "hash_count", "partition_size")

    def __init__(self, bits: int, hash_count: int, partition_size: int):
        self.bits = bits
        self.hash_count = hash_count
        self.partition_size = partition_size

    @property
    def table_bits(self) -> int:
        return self.hash_count * self.partition_size

    @classmethod
    def empty(cls, hash_count: int, partition_size: int) -> "BloomSignature":
        return cls(0, hash_count, partition_size)

    @classmethod
    def from_cells(
        cls, sigs: Iterable[CellSignature], hash_count: int, partition_size: int
    ) -> "BloomSignature":
        """Union of single-cell filters given by their signatures."""
        buf = bytearray((hash_count * partition_size + 7) // 8)
        for sig in sigs:
            for idx in sig:
                buf[idx >> 3] |= 1 << (idx & 7)
        return cls(int.from_bytes(buf, "little"), hash_count, partition_size)

    def _check_geometry(self, other: "BloomSignature") -> None:
        if (
            self.hash_count != other.hash_count
            or self.partition_size != other.partition_size
        ):
            raise ConfigurationError(
                "mismatched filter geometry: "
                f"(k={self.hash_count}, p={self.partition_size}) vs "
                f"(k={other.hash_count}, p={other.partition_size})"
            )

    def union(self, other: "BloomSignature") -> "BloomSignature":
        self._check_geometry(other)
        return BloomSignature(self.bits | other.bits, self.hash_count, self.partition_size)

    def contains_cell(self, sig: CellSignature) -> bool:
        """True iff every index of the cell signature is set."""
        if len(sig) != self.hash_count:
            raise ConfigurationError(
                f"signature has {len(sig)} indices, filter expects {self.hash_count}"
            )
        bits = self.bits
        for idx in sig:
            if not (bits >> idx) & 1:
                return False
        return True

    def contains_filter(self, other: "BloomSignature") -> bool:
        """True iff every set bit of ``other`` is set here."""
        self._check_geometry(other)
        return other.bits & ~self.bits == 0

    def popcount(self) -> int:
        return self.bits.bit_count()

    def bit_indices(self) -> np.ndarray:
        """Positions of the set bits, ascending."""
        raw = self.bits.to_bytes((self.table_bits + 7) // 8, "little")
        unpacked = np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="little")
        return np.nonzero(unpacked[: self.table_bits])[0]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BloomSignature):
            return NotImplemented
        return (
            self.bits == other.bits
            and self.hash_count == other.hash_count
            and self.partition_size == other.partition_size
        )

    def __hash__(self) -> int:
        return hash((self.bits, self.hash_count, self.partition_size))

    def __repr__(self) -> str:
        return (
            f"BloomSignature(k={self.hash_count}, p={self.partition_size}, "
            f"popcount={self.popcount()})"
        )


def filter_from_signature(sig: CellSignature, partition_size: int) -> BloomSignature:
    """Single-cell filter: the k signature bits set, all others clear."""
    return BloomSignature.from_cells([sig], len(sig), partition_size)


def union(a: BloomSignature, b: BloomSignature) -> BloomSignature:
    """Bitwise OR of two filters with identical geometry."""
    return a.union(b)


def contains(query, cluster: BloomSignature) -> bool:
    """Membership test of a cell signature or single-cell filter in a
    cluster signature. True results may be false positives; False is
    always exact."""
    if isinstance(query, BloomSignature):
        return cluster.contains_filter(query)
    return cluster.contains_cell(query)


@dataclass(frozen=True)
class ClusterFragment:
    """Signatures of a dense cell (first) and its 2*dim orthogonal
    neighbors, in neighborhood order."""

    cell_signatures: tuple

    def __len__(self) -> int:
        return len(self.cell_signatures)


def make_fragment(cell: CellCoords, family: HashFamily) -> ClusterFragment:
    """Fragment for a dense cell: one single-cell filter per member of
    the cell's orthogonal neighborhood, the dense cell first."""
    return ClusterFragment(
        tuple(cell_signature(c, family) for c in neighborhood(cell))
    )
