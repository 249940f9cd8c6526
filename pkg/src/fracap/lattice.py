"""Pointwise lattice operations on grid functions.

All operations are exact pointwise arithmetic with no tolerances. They
never increase the Gagliardo term (positive/negative part, absolute value)
or the full modular (truncations), which is what makes truncation of
capacity minimizers free.
"""

from __future__ import annotations

import numpy as np

from .errors import GridMismatch
from .grids import GridFunction

__all__ = [
    "pos_part",
    "neg_part",
    "abs_val",
    "pointwise_min",
    "pointwise_max",
    "clamp01",
]


def pos_part(u: GridFunction) -> GridFunction:
    return GridFunction(u.grid, np.maximum(u.values, 0.0))


def neg_part(u: GridFunction) -> GridFunction:
    return GridFunction(u.grid, np.maximum(-u.values, 0.0))


def abs_val(u: GridFunction) -> GridFunction:
    return GridFunction(u.grid, np.abs(u.values))


def _check(u: GridFunction, v: GridFunction) -> None:
    if u.grid != v.grid:
        raise GridMismatch("lattice operands live on different grids")


def pointwise_min(u: GridFunction, v: GridFunction) -> GridFunction:
    _check(u, v)
    return GridFunction(u.grid, np.minimum(u.values, v.values))


def pointwise_max(u: GridFunction, v: GridFunction) -> GridFunction:
    _check(u, v)
    return GridFunction(u.grid, np.maximum(u.values, v.values))


def clamp01(u: GridFunction) -> GridFunction:
    """Pointwise median(0, u, 1): idempotent and 1-Lipschitz."""
    return GridFunction(u.grid, np.clip(u.values, 0.0, 1.0))
