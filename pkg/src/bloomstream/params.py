"""Sketch geometry and accuracy guarantees derived from (capacity, fp).

Two user-facing knobs, how many cells a cluster filter should hold and
the tolerated false-positive rate, fix the whole shared table: the
optimal number of hash functions, the prime partition width, and the
frequency-table error bounds that fall out of the same geometry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import ConfigurationError
from .hashcore import is_prime, next_prime

_LN2 = math.log(2.0)


@dataclass(frozen=True)
class SketchParams:
    """Shared geometry plus decay/density configuration for one model.

    ``table_bits = hash_count * partition_size`` is both the bloom bit
    length and the total counter count of the frequency table; both
    sketches are addressed by the same hash family.
    """

    capacity: int             # elements a cluster filter is sized for
    target_fp: float          # requested bloom false-positive rate
    hash_count: int           # k derived hash functions / partitions
    partition_size: int       # prime width p of each partition
    table_bits: int           # m = k * p
    error_margin: float       # count-min overestimate factor (x total mass)
    failure_prob: float       # probability the margin is exceeded
    decay_rate: float         # damped-window decay per time unit
    density_threshold: float  # decayed weight above which a cell is dense
    dim: int                  # stream dimensionality
    resolution: float         # grid cell edge length, data units
    origin: tuple             # length-dim grid anchor

    def __post_init__(self) -> None:
        if self.capacity < 1:
            raise ValueError("capacity must be >= 1")
        if not 0.0 < self.target_fp < 1.0:
            raise ValueError("target_fp must lie in (0, 1)")
        if self.hash_count < 1 or not is_prime(self.partition_size):
            raise ValueError("hash_count must be >= 1 and partition_size prime")
        if self.table_bits != self.hash_count * self.partition_size:
            raise ValueError("table_bits must equal hash_count * partition_size")
        if not 0.0 < self.decay_rate < 1.0:
            raise ValueError("decay_rate must lie in (0, 1)")
        if not self.density_threshold > 0.0:
            raise ValueError("density_threshold must be positive")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if not self.resolution > 0.0:
            raise ValueError("resolution must be positive")
        if len(self.origin) != self.dim:
            raise ValueError("origin length must equal dim")
        if not self.error_margin <= self.failure_prob:
            raise ValueError("error_margin must not exceed failure_prob")

    @property
    def table_bytes(self) -> int:
        return (self.table_bits + 7) // 8

    @property
    def time_threshold(self) -> float:
        """Cluster lifetime: the half-life of the decay function, 1/decay_rate."""
        return 1.0 / self.decay_rate


def derive_geometry(capacity: int, target_fp: float) -> tuple[int, int, int]:
    """(k, p, m) of the optimal partitioned filter for this capacity and fp.

    k = round(log2(1/fp)), clamped to >= 1; the optimal total bit count
    is split across the k functions and rounded up to the next prime so
    the derived hash family is well defined.
    """
    if capacity < 1:
        raise ValueError("capacity must be >= 1")
    if not 0.0 < target_fp < 1.0:
        raise ValueError("target_fp must lie in (0, 1)")
    k = max(1, round(math.log2(1.0 / target_fp)))
    optimal_bits = -capacity * math.log(target_fp) / (_LN2 * _LN2)
    p = next_prime(max(2, math.ceil(optimal_bits / k)))
    return k, p, k * p


def predicted_fp(table_bits: int, hash_count: int, inserted: int) -> float:
    """Expected false-positive rate of a partitioned filter holding
    ``inserted`` distinct elements: ``(1 - (1 - k/m)^n)^k``."""
    if inserted == 0:
        return 0.0
    fill = 1.0 - (1.0 - hash_count / table_bits) ** inserted
    return fill ** hash_count


def predicted_fp_asymptotic(table_bits: int, hash_count: int, inserted: int) -> float:
    """Asymptotic form of :func:`predicted_fp`: ``(1 - e^(-kn/m))^k``."""
    if inserted == 0:
        return 0.0
    return (1.0 - math.exp(-hash_count * inserted / table_bits)) ** hash_count


def derive_cm_guarantees(capacity: int, target_fp: float) -> tuple[float, float]:
    """(error_margin, failure_prob) of the frequency table that shares
    the filter's geometry.

    The margin shrinks as 1/capacity; the failure probability is the
    larger of the fp-implied bound and the margin itself, so the margin
    never exceeds it.
    """
    if capacity < 1:
        raise ValueError("capacity must be >= 1")
    if not 0.0 < target_fp < 1.0:
        raise ValueError("target_fp must lie in (0, 1)")
    error_margin = math.e * _LN2 / capacity
    fp_bound = target_fp ** (1.0 / _LN2)
    return error_margin, max(fp_bound, error_margin)


def base_hash_count(error_margin: float, failure_prob: float) -> int:
    """Base hashes needed for the guarantees: 2*ceil(ln(1/prob)/ln(1/margin)).

    Informational: whenever the margin does not exceed the failure
    probability the count is 2, and the engine always uses exactly two
    base hashes, deriving the rest as linear combinations.
    """
    if not 0.0 < error_margin < 1.0 or not 0.0 < failure_prob < 1.0:
        raise ValueError("error_margin and failure_prob must lie in (0, 1)")
    return 2 * math.ceil(math.log(1.0 / failure_prob) / math.log(1.0 / error_margin))


def fragment_capacity(decay_rate: float, density_threshold: float, dim: int) -> int:
    """Worst-case cells one cluster filter can accumulate while dynamic.

    At most floor(1 / (2 * decay_rate * density_threshold)) distinct
    cells can be dense during a cluster's dynamic stage, and each
    contributes its full (2*dim + 1)-cell neighborhood.
    """
    if not 0.0 < decay_rate < 1.0:
        raise ValueError("decay_rate must lie in (0, 1)")
    if not density_threshold > 0.0:
        raise ValueError("density_threshold must be positive")
    if dim < 1:
        raise ValueError("dim must be >= 1")
    dense_cells = math.floor(1.0 / (2.0 * decay_rate * density_threshold))
    if dense_cells < 1:
        raise ConfigurationError(
            "decay_rate * density_threshold too large: no cell can stay dense"
        )
    return dense_cells * (2 * dim + 1)


def suggested_capacity(
    decay_rate: float, density_threshold: float, dim: int, fraction: float = 0.125
) -> int:
    """Filter capacity as a fraction of the worst-case fragment load.

    The worst case assumes every reachable cell sits exactly at the
    density threshold and joins one cluster; real streams stay far
    below it, so a 10-15% fraction is the practical sizing rule.
    """
    if not 0.0 < fraction <= 1.0:
        raise ValueError("fraction must lie in (0, 1]")
    return max(1, round(fragment_capacity(decay_rate, density_threshold, dim) * fraction))


def make_params(
    capacity: int,
    target_fp: float,
    decay_rate: float = 0.001,
    density_threshold: float = 3.0,
    dim: int = 2,
    resolution: float = 1.0,
    origin: Sequence[float] | None = None,
) -> SketchParams:
    """Assemble a full parameter set from the user-facing knobs."""
    k, p, m = derive_geometry(capacity, target_fp)
    error_margin, failure_prob = derive_cm_guarantees(capacity, target_fp)
    if origin is None:
        origin = (0.0,) * dim
    return SketchParams(
        capacity=capacity,
        target_fp=target_fp,
        hash_count=k,
        partition_size=p,
        table_bits=m,
        error_margin=error_margin,
        failure_prob=failure_prob,
        decay_rate=decay_rate,
        density_threshold=density_threshold,
        dim=dim,
        resolution=resolution,
        origin=tuple(float(a) for a in origin),
    )
