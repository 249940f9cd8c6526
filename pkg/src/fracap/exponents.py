"""Variable exponent fields sampled on a grid.

Two kinds of exponents drive the modular: a per-node exponent for the
plain integral term and a per-node-pair exponent for the double-integral
term. Both are required to stay strictly inside (1, inf); the bound 1
itself is rejected because the optimizer relies on differentiability of
t -> |t|**e at 0.

The pair exponent may depend only on the node difference x - y ("shift
invariant"); that hypothesis gates the smoothed-admissible capacity
comparison. The flag is established by an exhaustive check over all
realizable lattice shifts, so it is exact for the discrete field.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BoundViolation, GridMismatch, ValidationError
from .grids import Grid

__all__ = ["NodeExponent", "PairExponent", "build_node_exponent", "build_pair_exponent"]

PAIR_KINDS = ("constant", "separable", "diagonal-invariant", "tabulated")


def _check_bounds(values: np.ndarray, what: str) -> tuple[float, float]:
    if not np.all(np.isfinite(values)):
        raise BoundViolation(f"{what} contains non-finite values")
    lo = float(values.min())
    hi = float(values.max())
    if lo <= 1.0:
        raise BoundViolation(f"{what} must be > 1 everywhere, found {lo}")
    return lo, hi


@dataclass(eq=False)
class NodeExponent:
    """Exponent field q with one value per node and recomputed tight bounds."""

    grid: Grid
    values: np.ndarray
    lo: float = field(init=False)
    hi: float = field(init=False)
    spec: dict | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).reshape(-1)
        if self.values.size != self.grid.size:
            raise GridMismatch("node exponent length does not match grid size")
        self.lo, self.hi = _check_bounds(self.values, "node exponent")


@dataclass(eq=False)
class PairExponent:
    """Exponent field p with one value per ordered node pair.

    ``matrix[i, j]`` is the exponent for the ordered pair (node i, node j);
    no symmetry is assumed. ``shift_invariant`` is True exactly when the
    matrix is constant on every class of pairs sharing the same lattice
    index difference.
    """

    grid: Grid
    kind: str
    matrix: np.ndarray
    lo: float = field(init=False)
    hi: float = field(init=False)
    shift_invariant: bool = field(init=False)
    spec: dict | None = None

    def __post_init__(self):
        if self.kind not in PAIR_KINDS:
            raise ValidationError(f"pair exponent kind must be one of {PAIR_KINDS}")
        self.matrix = np.asarray(self.matrix, dtype=float)
        n = self.grid.size
        if self.matrix.shape != (n, n):
            raise GridMismatch("pair exponent matrix shape does not match grid size")
        self.lo, self.hi = _check_bounds(self.matrix, "pair exponent")
        self.shift_invariant = self._exhaustive_shift_check()

    def _exhaustive_shift_check(self) -> bool:
        # p depends on x - y alone iff the matrix is constant on every
        # diagonal class {(i, j): multi_index(i) - multi_index(j) = delta}.
        mi = self.grid.multi_indices()
        delta = mi[:, None, :] - mi[None, :, :]
        keys = delta.reshape(self.grid.size**2, self.grid.dim)
        flat = self.matrix.reshape(-1)
        # encode the (small, signed) per-axis differences into a single int key
        spans = np.asarray(self.grid.shape)
        enc = np.zeros(keys.shape[0], dtype=np.int64)
        for a in range(self.grid.dim):
            enc = enc * (2 * spans[a] - 1) + (keys[:, a] + spans[a] - 1)
        order = np.argsort(enc, kind="stable")
        enc_sorted = enc[order]
        vals_sorted = flat[order]
        boundaries = np.flatnonzero(np.diff(enc_sorted)) + 1
        groups = np.split(vals_sorted, boundaries)
        return all(np.all(g == g[0]) for g in groups)


def build_node_exponent(grid: Grid, spec: dict) -> NodeExponent:
    """Construct a node exponent from a spec object.

    Kinds: ``constant`` (value), ``affine`` (base + slope . x, optionally
    clipped to [lo, hi]), ``ramp`` (linear from lo at the box minimum to hi
    at the box maximum along one axis), ``table`` (inline ``values`` list or
    CSV ``path`` with one value per node, row-major).
    """
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ValidationError("exponent spec must be an object with a 'kind' field")
    kind = spec["kind"]
    coords = grid.coords()
    if kind == "constant":
        values = np.full(grid.size, float(spec["value"]))
    elif kind == "affine":
        slope = np.asarray(spec["slope"], dtype=float).reshape(-1)
        if slope.size != grid.dim:
            raise ValidationError("affine slope must have one entry per axis")
        values = float(spec["base"]) + coords @ slope
        if "clip" in spec:
            lo, hi = spec["clip"]
            values = np.clip(values, float(lo), float(hi))
    elif kind == "ramp":
        axis = int(spec.get("axis", 0))
        if not 0 <= axis < grid.dim:
            raise ValidationError(f"ramp axis {axis} out of range for dim {grid.dim}")
        lo, hi = float(spec["lo"]), float(spec["hi"])
        x = coords[:, axis]
        span = x.max() - x.min()
        t = (x - x.min()) / span if span > 0 else np.zeros_like(x)
        values = lo + (hi - lo) * t
    elif kind == "table":
        values = _table_values(spec, grid.size)
    else:
        raise ValidationError(f"unknown node exponent kind '{kind}'")
    return NodeExponent(grid, values, spec=dict(spec))


def build_pair_exponent(grid: Grid, spec: dict) -> PairExponent:
    """Construct a pair exponent from a spec object.

    Kinds: ``constant`` (value); ``diagonal-invariant`` with
    p(x, y) = base + min(clip, slope * |x - y|); ``separable`` with
    p(x, y) = (a(x) + a(y)) / 2 for a node field ``field``; ``tabulated``
    (inline ``values`` or CSV ``path`` holding the full matrix, row-major,
    no symmetry requirement).
    """
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ValidationError("exponent spec must be an object with a 'kind' field")
    kind = spec["kind"]
    n = grid.size
    if kind == "constant":
        matrix = np.full((n, n), float(spec["value"]))
    elif kind == "diagonal-invariant":
        base = float(spec["base"])
        slope = float(spec.get("slope", 1.0))
        clip = float(spec.get("clip", np.inf))
        matrix = base + np.minimum(clip, slope * grid.pair_distances())
    elif kind == "separable":
        node_field = build_node_exponent(grid, spec["field"]).values
        matrix = 0.5 * (node_field[:, None] + node_field[None, :])
    elif kind == "tabulated":
        flat = _table_values(spec, n * n)
        matrix = flat.reshape(n, n)
    else:
        raise ValidationError(f"unknown pair exponent kind '{kind}'")
    return PairExponent(grid, kind, matrix, spec=dict(spec))


def _table_values(spec: dict, expected: int) -> np.ndarray:
    if "values" in spec:
        values = np.asarray(spec["values"], dtype=float).reshape(-1)
    elif "path" in spec:
        values = np.loadtxt(spec["path"], delimiter=",", dtype=float).reshape(-1)
    else:
        raise ValidationError("table spec needs 'values' or 'path'")
    if values.size != expected:
        raise ValidationError(f"table has {values.size} entries, expected {expected}")
    return values
