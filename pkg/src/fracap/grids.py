"""Regular lattices, node masks, and grid functions.

A :class:`Grid` is a regular lattice of cell centers over a box in dimension
1 or 2. Node ``i`` represents the cell of volume ``h**dim`` centered at
``origin + h * multi_index(i)``; node order is row-major. :class:`Mask` is a
boolean set of nodes (the discrete stand-in for point sets) and
:class:`GridFunction` holds one real value per node.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatch, NonFiniteInput, ValidationError

__all__ = [
    "Grid",
    "Mask",
    "GridFunction",
    "dilate",
    "grid_from_spec",
    "mask_from_spec",
    "read_grid_function",
    "write_grid_function",
]


@dataclass(frozen=True)
class Grid:
    """Regular lattice over a box; immutable after construction."""

    dim: int
    shape: tuple[int, ...]
    origin: tuple[float, ...]
    spacing: float

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValidationError(f"grid dim must be 1 or 2, got {self.dim}")
        object.__setattr__(self, "shape", tuple(int(n) for n in self.shape))
        object.__setattr__(self, "origin", tuple(float(x) for x in self.origin))
        if len(self.shape) != self.dim or len(self.origin) != self.dim:
            raise ValidationError("shape and origin must have one entry per axis")
        if any(n < 1 for n in self.shape) or self.size < 2:
            raise ValidationError("grid needs at least 2 nodes")
        if not (self.spacing > 0 and np.isfinite(self.spacing)):
            raise ValidationError(f"spacing must be positive, got {self.spacing}")

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    def coords(self) -> np.ndarray:
        """Node coordinates, shape (size, dim), row-major node order."""
        axes = [self.origin[a] + self.spacing * np.arange(self.shape[a]) for a in range(self.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def multi_indices(self) -> np.ndarray:
        """Integer lattice index of each node, shape (size, dim)."""
        axes = [np.arange(n) for n in self.shape]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def pair_distances(self) -> np.ndarray:
        """Euclidean node distances, shape (size, size).

        Computed from integer index differences as h * |i - j|, so pairs
        with the same lattice offset get bit-identical distances regardless
        of where they sit (coordinate subtraction would not guarantee that
        for spacings that are not binary fractions).
        """
        mi = self.multi_indices()
        diff = mi[:, None, :] - mi[None, :, :]
        return self.spacing * np.sqrt((diff.astype(float) ** 2).sum(axis=2))

    def flat_index(self, multi_index) -> int:
        return int(np.ravel_multi_index(tuple(int(k) for k in multi_index), self.shape))

    def to_spec(self) -> dict:
        return {
            "dim": self.dim,
            "shape": list(self.shape),
            "origin": list(self.origin),
            "spacing": self.spacing,
        }

    def empty_mask(self) -> "Mask":
        return Mask(self, np.zeros(self.size, dtype=bool))

    def full_mask(self) -> "Mask":
        return Mask(self, np.ones(self.size, dtype=bool))

    def zeros(self) -> "GridFunction":
        return GridFunction(self, np.zeros(self.size))


@dataclass(eq=False)
class Mask:
    """Boolean node set on one grid."""

    grid: Grid
    member: np.ndarray

    def __post_init__(self):
        self.member = np.asarray(self.member, dtype=bool).reshape(-1)
        if self.member.size != self.grid.size:
            raise GridMismatch("mask length does not match grid size")

    @property
    def count(self) -> int:
        return int(self.member.sum())

    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.member)

    def _check(self, other: "Mask") -> None:
        if self.grid != other.grid:
            raise GridMismatch("masks live on different grids")

    def union(self, other: "Mask") -> "Mask":
        self._check(other)
        return Mask(self.grid, self.member | other.member)

    def intersection(self, other: "Mask") -> "Mask":
        self._check(other)
        return Mask(self.grid, self.member & other.member)

    def difference(self, other: "Mask") -> "Mask":
        self._check(other)
        return Mask(self.grid, self.member & ~other.member)

    def issubset(self, other: "Mask") -> bool:
        self._check(other)
        return bool(np.all(~self.member | other.member))

    def same_set(self, other: "Mask") -> bool:
        self._check(other)
        return bool(np.array_equal(self.member, other.member))

    def dilate(self, radius: int) -> "Mask":
        return dilate(self, radius)


@dataclass(eq=False)
class GridFunction:
    """One finite real value per grid node."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).reshape(-1)
        if self.values.size != self.grid.size:
            raise GridMismatch("value vector length does not match grid size")
        if not np.all(np.isfinite(self.values)):
            raise NonFiniteInput("grid function has non-finite entries")

    def copy(self) -> "GridFunction":
        return GridFunction(self.grid, self.values.copy())


def dilate(mask: Mask, radius: int) -> Mask:
    """All nodes within Chebyshev distance ``radius`` (in node steps) of the mask.

    ``radius=0`` is the identity. Dilation is clipped at the grid boundary.
    """
    r = int(radius)
    if r < 0:
        raise ValidationError(f"dilation radius must be >= 0, got {radius}")
    if r == 0 or not mask.member.any():
        return Mask(mask.grid, mask.member.copy())
    grid = mask.grid
    m = mask.member.reshape(grid.shape)
    out = np.zeros_like(m)
    for offset in itertools.product(range(-r, r + 1), repeat=grid.dim):
        src = []
        dst = []
        for axis, k in enumerate(offset):
            n = grid.shape[axis]
            src.append(slice(max(0, -k), n - max(0, k)))
            dst.append(slice(max(0, k), n - max(0, -k)))
        out[tuple(dst)] |= m[tuple(src)]
    return Mask(grid, out.ravel())


def grid_from_spec(spec: dict) -> Grid:
    try:
        return Grid(
            dim=int(spec["dim"]),
            shape=tuple(spec["shape"]),
            origin=tuple(spec["origin"]),
            spacing=float(spec["spacing"]),
        )
    except KeyError as exc:
        raise ValidationError(f"grid spec is missing field {exc}") from None


def _cantor_intervals(lo: float, hi: float, level: int) -> list[tuple[float, float]]:
    intervals = [(lo, hi)]
    for _ in range(level):
        nxt = []
        for a, b in intervals:
            third = (b - a) / 3.0
            nxt.append((a, a + third))
            nxt.append((b - third, b))
        intervals = nxt
    return intervals


def mask_from_spec(grid: Grid, spec: dict) -> Mask:
    """Rasterize a primitive shape spec onto the grid.

    Supported kinds: ``interval`` (1D, lo/hi in coordinates), ``box``
    (per-axis lo/hi), ``ball`` (center + Euclidean radius), ``points``
    (list of node multi-indices, or flat indices in 1D), ``cantor``
    (1D middle-thirds iteration of given level over the grid extent),
    and ``full``.
    """
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ValidationError("mask spec must be an object with a 'kind' field")
    kind = spec["kind"]
    coords = grid.coords()
    tol = 1e-9 * grid.spacing

    if kind == "full":
        return grid.full_mask()
    if kind == "interval":
        if grid.dim != 1:
            raise ValidationError("interval masks require a 1D grid")
        lo, hi = float(spec["lo"]), float(spec["hi"])
        x = coords[:, 0]
        return Mask(grid, (x >= lo - tol) & (x <= hi + tol))
    if kind == "box":
        lo = np.asarray(spec["lo"], dtype=float).reshape(-1)
        hi = np.asarray(spec["hi"], dtype=float).reshape(-1)
        if lo.size != grid.dim or hi.size != grid.dim:
            raise ValidationError("box lo/hi must have one entry per axis")
        inside = np.all((coords >= lo - tol) & (coords <= hi + tol), axis=1)
        return Mask(grid, inside)
    if kind == "ball":
        center = np.asarray(spec["center"], dtype=float).reshape(-1)
        if center.size != grid.dim:
            raise ValidationError("ball center must have one entry per axis")
        radius = float(spec["radius"])
        dist = np.sqrt(((coords - center) ** 2).sum(axis=1))
        return Mask(grid, dist <= radius + tol)
    if kind == "points":
        member = np.zeros(grid.size, dtype=bool)
        for entry in spec["indices"]:
            if isinstance(entry, (list, tuple)):
                member[grid.flat_index(entry)] = True
            else:
                member[int(entry)] = True
        return Mask(grid, member)
    if kind == "cantor":
        if grid.dim != 1:
            raise ValidationError("cantor masks require a 1D grid")
        level = int(spec["level"])
        if level < 0:
            raise ValidationError("cantor level must be >= 0")
        x = coords[:, 0]
        lo = grid.origin[0]
        hi = grid.origin[0] + grid.spacing * (grid.shape[0] - 1)
        member = np.zeros(grid.size, dtype=bool)
        for a, b in _cantor_intervals(lo, hi, level):
            member |= (x >= a - tol) & (x <= b + tol)
        return Mask(grid, member)
    raise ValidationError(f"unknown mask kind '{kind}'")


def write_grid_function(path, u: GridFunction) -> None:
    """One value per line, row-major node order, %.17g."""
    with open(path, "w") as fh:
        for v in u.values:
            fh.write("%.17g\n" % v)


def read_grid_function(path, grid: Grid) -> GridFunction:
    values = np.loadtxt(path, dtype=float, ndmin=1)
    if values.size != grid.size:
        raise ValidationError(
            f"file {path} has {values.size} values, grid needs {grid.size}"
        )
    return GridFunction(grid, values)
