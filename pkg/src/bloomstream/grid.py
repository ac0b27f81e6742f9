"""Fixed-resolution discretization of the data space.

Cells are half-open hyper-rectangles of edge ``resolution`` anchored at
``origin``. Adjacency is strictly orthogonal, one step along one axis,
so every cell has exactly ``2 * dim`` neighbors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

CellCoords = tuple  # length-dim tuple of signed integer cell indices

_COORD_MAX = (1 << 63) - 1
_COORD_MIN = -(1 << 63)


@dataclass(frozen=True)
class GridConfig:
    """Grid geometry: cell edge length and the anchor point."""

    resolution: float
    origin: tuple

    def __post_init__(self) -> None:
        if not self.resolution > 0.0:
            raise ValueError("resolution must be positive")
        if len(self.origin) < 1:
            raise ValueError("origin must have at least one dimension")
        object.__setattr__(self, "origin", tuple(float(a) for a in self.origin))

    @classmethod
    def create(
        cls, resolution: float, dim: int, origin: Sequence[float] | None = None
    ) -> "GridConfig":
        """Grid with an explicit dimensionality; origin defaults to zero."""
        if origin is None:
            origin = (0.0,) * dim
        elif len(origin) != dim:
            raise ValueError(f"origin length {len(origin)} != dim {dim}")
        return cls(resolution, tuple(origin))

    @property
    def dim(self) -> int:
        return len(self.origin)


def discretize(x: Sequence[float], grid: GridConfig) -> CellCoords:
    """Cell coordinates of a point: floor((x_i - origin_i) / resolution).

    Floor (not truncation) keeps negative coordinates on the correct
    side, so cells tile the space as half-open boxes.
    """
    origin = grid.origin
    if len(x) != len(origin):
        raise ValueError(f"point has {len(x)} dimensions, grid expects {len(origin)}")
    r = grid.resolution
    coords = []
    for xi, ai in zip(x, origin):
        xi = float(xi)
        if not math.isfinite(xi):
            raise ValueError(f"non-finite component in point {tuple(x)!r}")
        coords.append(math.floor((xi - ai) / r))
    return tuple(coords)


def neighborhood(cell: CellCoords) -> list:
    """The cell itself plus its 2*dim orthogonal neighbors.

    Deterministic order: the cell first, then per dimension the -1 step
    before the +1 step.
    """
    cells = [tuple(cell)]
    for axis, c in enumerate(cell):
        if c - 1 < _COORD_MIN or c + 1 > _COORD_MAX:
            raise ValueError("cell coordinate at the signed 64-bit boundary")
        for step in (-1, 1):
            nb = list(cell)
            nb[axis] = c + step
            cells.append(tuple(nb))
    return cells
