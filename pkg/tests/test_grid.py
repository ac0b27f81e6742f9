import math
import random

import pytest

from bloomstream.grid import GridConfig, discretize, neighborhood


class TestDiscretize:
    def test_basic(self):
        grid = GridConfig.create(1.5, 2)
        assert discretize((0.7, 2.3), grid) == (0, 1)

    def test_floor_of_negative(self):
        grid = GridConfig.create(1.0, 1)
        assert discretize((-0.1,), grid) == (-1,)

    def test_origin_cell(self):
        for r in (0.1, 1.0, 7.3):
            grid = GridConfig.create(r, 3, origin=(1.0, -2.0, 0.5))
            assert discretize((1.0, -2.0, 0.5), grid) == (0, 0, 0)

    def test_rejects_non_finite(self):
        grid = GridConfig.create(1.0, 2)
        for bad in ((float("nan"), 0.0), (0.0, float("inf")), (float("-inf"), 1.0)):
            with pytest.raises(ValueError):
                discretize(bad, grid)

    def test_rejects_wrong_arity(self):
        grid = GridConfig.create(1.0, 2)
        with pytest.raises(ValueError):
            discretize((1.0,), grid)

    def test_half_open_box_membership(self):
        # every point lies in the half-open box of its own cell
        rng = random.Random(4)
        grid = GridConfig.create(0.7, 3, origin=(-1.0, 0.25, 3.0))
        for _ in range(2000):
            x = tuple(rng.uniform(-50, 50) for _ in range(3))
            cell = discretize(x, grid)
            for xi, ci, ai in zip(x, cell, grid.origin):
                lo = ai + ci * grid.resolution
                hi = ai + (ci + 1) * grid.resolution
                assert lo <= xi < hi or math.isclose(xi, lo)


class TestGridConfig:
    def test_rejects_nonpositive_resolution(self):
        with pytest.raises(ValueError):
            GridConfig.create(0.0, 2)

    def test_rejects_mismatched_origin(self):
        with pytest.raises(ValueError):
            GridConfig.create(1.0, 2, origin=(0.0,))

    def test_dim_from_origin(self):
        assert GridConfig(2.0, (0.0, 0.0, 0.0)).dim == 3


class TestNeighborhood:
    def test_one_dimensional(self):
        assert neighborhood((5,)) == [(5,), (4,), (6,)]

    def test_two_dimensional_order(self):
        assert neighborhood((0, 0)) == [(0, 0), (-1, 0), (1, 0), (0, -1), (0, 1)]

    def test_count_and_distinct(self):
        rng = random.Random(8)
        for _ in range(200):
            d = rng.randint(1, 6)
            cell = tuple(rng.randint(-100, 100) for _ in range(d))
            cells = neighborhood(cell)
            assert len(cells) == 2 * d + 1
            assert len(set(cells)) == 2 * d + 1

    def test_symmetry(self):
        rng = random.Random(9)
        for _ in range(200):
            d = rng.randint(1, 4)
            a = tuple(rng.randint(-20, 20) for _ in range(d))
            for b in neighborhood(a)[1:]:
                assert a in neighborhood(b)[1:]

    def test_l1_distance_exactly_one(self):
        cell = (3, -4, 7)
        for nb in neighborhood(cell)[1:]:
            assert sum(abs(a - b) for a, b in zip(cell, nb)) == 1

    def test_rejects_boundary_coordinate(self):
        with pytest.raises(ValueError):
            neighborhood(((1 << 63) - 1,))
        with pytest.raises(ValueError):
            neighborhood((-(1 << 63),))
