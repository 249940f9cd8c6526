"""Lattice operations and the modular comparison inequalities."""

import numpy as np
import pytest

from conftest import mixed_params, random_function
from fracap.errors import GridMismatch
from fracap.grids import Grid, GridFunction
from fracap.lattice import abs_val, clamp01, neg_part, pointwise_max, pointwise_min, pos_part
from fracap.modular import modular_value


def line_params(n=9, s=0.5):
    return mixed_params(Grid(1, (n,), (0.0,), 1.0 / (n - 1)), s=s)


class TestPointwise:
    def test_signed_parts_example(self):
        g = Grid(1, (3,), (0.0,), 1.0)
        u = GridFunction(g, [1.0, -2.0, 0.0])
        assert np.array_equal(pos_part(u).values, [1.0, 0.0, 0.0])
        assert np.array_equal(neg_part(u).values, [0.0, 2.0, 0.0])
        assert np.array_equal(abs_val(u).values, [1.0, 2.0, 0.0])

    def test_nonnegative_function(self):
        g = Grid(1, (4,), (0.0,), 1.0)
        u = GridFunction(g, [0.0, 0.5, 1.0, 2.0])
        assert np.array_equal(pos_part(u).values, u.values)
        assert np.all(neg_part(u).values == 0.0)

    def test_exact_identities(self):
        rng = np.random.default_rng(1)
        g = Grid(1, (12,), (0.0,), 1.0)
        for _ in range(30):
            u = random_function(rng, g)
            v = random_function(rng, g)
            assert np.array_equal(pos_part(u).values - neg_part(u).values, u.values)
            assert np.array_equal(pos_part(u).values + neg_part(u).values, abs_val(u).values)
            assert np.array_equal(
                pointwise_min(u, v).values + pointwise_max(u, v).values, u.values + v.values
            )

    def test_min_max_idempotent(self):
        g = Grid(1, (5,), (0.0,), 1.0)
        u = GridFunction(g, [1.0, -1.0, 0.5, 2.0, 0.0])
        assert np.array_equal(pointwise_min(u, u).values, u.values)
        assert np.array_equal(pointwise_max(u, u).values, u.values)

    def test_proof_identities(self):
        # max{u,v} = (u-v)^+ + v and min{u,v} = u - (u-v)^+, up to rounding
        rng = np.random.default_rng(2)
        g = Grid(1, (12,), (0.0,), 1.0)
        for _ in range(30):
            u = random_function(rng, g)
            v = random_function(rng, g)
            dplus = np.maximum(u.values - v.values, 0.0)
            scale = 1.0 + np.abs(u.values) + np.abs(v.values)
            assert np.all(np.abs(dplus + v.values - pointwise_max(u, v).values) <= 1e-12 * scale)
            assert np.all(np.abs(u.values - dplus - pointwise_min(u, v).values) <= 1e-12 * scale)

    def test_grid_mismatch(self):
        u = GridFunction(Grid(1, (3,), (0.0,), 1.0), [0, 1, 2])
        v = GridFunction(Grid(1, (4,), (0.0,), 1.0), [0, 1, 2, 3])
        with pytest.raises(GridMismatch):
            pointwise_min(u, v)


class TestClamp:
    def test_example(self):
        g = Grid(1, (3,), (0.0,), 1.0)
        u = GridFunction(g, [-1.0, 0.5, 2.0])
        assert np.array_equal(clamp01(u).values, [0.0, 0.5, 1.0])

    def test_identity_inside_box(self):
        g = Grid(1, (4,), (0.0,), 1.0)
        u = GridFunction(g, [0.0, 0.3, 0.9, 1.0])
        assert np.array_equal(clamp01(u).values, u.values)

    def test_idempotent_and_lipschitz(self):
        rng = np.random.default_rng(3)
        g = Grid(1, (10,), (0.0,), 1.0)
        for _ in range(30):
            u = random_function(rng, g)
            v = random_function(rng, g)
            cu, cv = clamp01(u), clamp01(v)
            assert np.array_equal(clamp01(cu).values, cu.values)
            assert np.all(
                np.abs(cu.values - cv.values)
                <= np.abs(u.values - v.values) * (1 + 1e-15) + 1e-300
            )


class TestModularInequalities:
    def test_abs_and_pos_do_not_increase_gagliardo(self):
        rng = np.random.default_rng(4)
        params = line_params()
        for _ in range(40):
            u = random_function(rng, params.grid)
            gag = modular_value(u, params).gagliardo_term
            assert modular_value(abs_val(u), params).gagliardo_term <= gag + 1e-12
            assert modular_value(pos_part(u), params).gagliardo_term <= gag + 1e-12

    def test_min_with_one_does_not_increase_modular(self):
        rng = np.random.default_rng(5)
        params = line_params(s=0.7)
        one = GridFunction(params.grid, np.ones(params.grid.size))
        for _ in range(40):
            u = random_function(rng, params.grid)
            total = modular_value(u, params).total
            assert modular_value(pointwise_min(one, u), params).total <= total + 1e-12

    def test_clamp_does_not_increase_modular(self):
        rng = np.random.default_rng(6)
        params = line_params()
        for _ in range(40):
            u = random_function(rng, params.grid)
            total = modular_value(u, params).total
            assert modular_value(clamp01(u), params).total <= total + 1e-12
