"""Shared builders for test instances."""

import numpy as np
import pytest

from fracap.exponents import build_node_exponent, build_pair_exponent
from fracap.grids import Grid, GridFunction
from fracap.modular import ModularParams


def make_params(grid, q_spec, p_spec, s):
    return ModularParams(
        grid,
        build_node_exponent(grid, q_spec),
        build_pair_exponent(grid, p_spec),
        s,
    )


def constant_params(grid, value=2.0, s=0.5):
    spec = {"kind": "constant", "value": value}
    return make_params(grid, spec, spec, s)


def mixed_params(grid, s=0.5):
    """Variable node exponent plus a difference-based pair exponent."""
    return make_params(
        grid,
        {"kind": "ramp", "lo": 1.5, "hi": 2.5, "axis": 0},
        {"kind": "diagonal-invariant", "base": 2.0, "slope": 1.0, "clip": 1.0},
        s,
    )


@pytest.fixture
def two_node():
    """The hand-checked closed-form instance: h=1, s=0.5, both exponents 2."""
    grid = Grid(1, (2,), (0.0,), 1.0)
    return constant_params(grid, 2.0, 0.5)


def random_function(rng, grid, scale=2.0):
    return GridFunction(grid, rng.uniform(-scale, scale, grid.size))
