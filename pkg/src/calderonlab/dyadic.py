"""Dyadic cubes, truncated index windows and finite cube families.

All integral-like quantities in the package live on a single uniform grid:
the midpoint nodes of the finest window level, ``R`` nodes per cube side.
A level-``k`` cube then owns a ``b_k x ... x b_k`` block of that grid with
``b_k = 2**(k_max - k) * R``, so cube averages at different levels are exact
sub-sums of the same node values.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

_EPS = 1e-9


def _is_int(v: float) -> bool:
    return abs(v - round(v)) < _EPS


@dataclass(frozen=True)
class DyadicCube:
    """The cube ``2**-level * ([0, 1)**n + position)``."""

    level: int
    position: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "position", tuple(int(m) for m in self.position))

    @property
    def n(self) -> int:
        return len(self.position)

    @property
    def side(self) -> float:
        return 2.0 ** (-self.level)

    @property
    def volume(self) -> float:
        return self.side ** self.n

    @property
    def lower(self) -> np.ndarray:
        return np.asarray(self.position, dtype=float) * self.side

    @property
    def upper(self) -> np.ndarray:
        return self.lower + self.side

    @property
    def center(self) -> np.ndarray:
        return self.lower + 0.5 * self.side

    def contains(self, x) -> bool:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return bool(np.all(self.lower <= x) and np.all(x < self.upper))

    def contains_cube(self, other: "DyadicCube") -> bool:
        if other.level < self.level:
            return False
        shift = other.level - self.level
        return all((m >> shift) == p for m, p in zip(other.position, self.position))

    def parent(self) -> "DyadicCube":
        return DyadicCube(self.level - 1, tuple(m >> 1 for m in self.position))

    def children(self) -> list["DyadicCube"]:
        base = [2 * m for m in self.position]
        return [
            DyadicCube(self.level + 1, tuple(b + e for b, e in zip(base, bits)))
            for bits in itertools.product((0, 1), repeat=self.n)
        ]


@dataclass(frozen=True)
class IndexWindow:
    """Finite surrogate of the index set ``k in Z, m in Z^n``.

    Level ``k`` holds the dyadic cubes inside the box ``[-L, L)**n``; every
    cube carries ``R**n`` nodes at the finest level ``k_max``.
    """

    n: int
    L: float
    k_min: int
    k_max: int
    R: int = 4

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("dimension must be >= 1")
        if self.k_min > self.k_max:
            raise ValueError("k_min must not exceed k_max")
        if self.R < 2:
            raise ValueError("R must be >= 2")
        tiles = self.L * 2.0 ** self.k_min
        if self.L <= 0 or tiles < 1 - _EPS or not _is_int(tiles):
            raise ValueError(
                f"box [-{self.L}, {self.L}) is not tiled by level-{self.k_min} cubes"
            )

    # geometry ------------------------------------------------------------
    @property
    def levels(self) -> range:
        return range(self.k_min, self.k_max + 1)

    @property
    def num_levels(self) -> int:
        return self.k_max - self.k_min + 1

    @property
    def spacing(self) -> float:
        return 2.0 ** (-self.k_max) / self.R

    @property
    def grid_size(self) -> int:
        return int(round(2 * self.L * 2.0 ** self.k_max * self.R))

    @property
    def grid_shape(self) -> tuple[int, ...]:
        return (self.grid_size,) * self.n

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.n

    @property
    def box_volume(self) -> float:
        return (2 * self.L) ** self.n

    def per_side(self, k: int) -> int:
        """Number of level-``k`` cubes along one axis."""
        self._check_level(k)
        return int(round(2 * self.L * 2.0 ** k))

    def block(self, k: int) -> int:
        """Grid nodes per side of a level-``k`` cube."""
        self._check_level(k)
        return (2 ** (self.k_max - k)) * self.R

    def position_offset(self, k: int) -> int:
        """Smallest admissible position coordinate at level ``k``."""
        return -int(round(self.L * 2.0 ** k))

    def level_shape(self, k: int) -> tuple[int, ...]:
        return (self.per_side(k),) * self.n

    def axis_nodes(self) -> np.ndarray:
        h = self.spacing
        return -self.L + (np.arange(self.grid_size) + 0.5) * h

    def nodes(self) -> np.ndarray:
        """Node coordinates, shape ``grid_shape + (n,)``."""
        ax = self.axis_nodes()
        mesh = np.meshgrid(*([ax] * self.n), indexing="ij")
        return np.stack(mesh, axis=-1)

    def _check_level(self, k: int) -> None:
        if not self.k_min <= k <= self.k_max:
            raise ValueError(f"level {k} outside window [{self.k_min}, {self.k_max}]")

    def in_box(self, x) -> bool:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return bool(np.all(x >= -self.L) and np.all(x < self.L))

    def contains_cube(self, cube: DyadicCube) -> bool:
        if cube.n != self.n or not self.k_min <= cube.level <= self.k_max:
            return False
        lo = self.position_offset(cube.level)
        return all(lo <= m < -lo for m in cube.position)

    def cubes(self, k: int) -> Iterator[DyadicCube]:
        lo = self.position_offset(k)
        for pos in itertools.product(range(lo, -lo), repeat=self.n):
            yield DyadicCube(k, pos)

    def level_index(self, cube: DyadicCube) -> tuple[int, ...]:
        """Index of ``cube`` inside the dense level array."""
        lo = self.position_offset(cube.level)
        return tuple(m - lo for m in cube.position)

    def cube_slices(self, cube: DyadicCube) -> tuple[slice, ...]:
        """Grid slices covering the nodes of ``cube``."""
        if not self.contains_cube(cube):
            raise ValueError(f"{cube} is not a window cube")
        b = self.block(cube.level)
        return tuple(slice(i * b, (i + 1) * b) for i in self.level_index(cube))

    def locate(self, x, k: int) -> DyadicCube:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (self.n,) or not self.in_box(x):
            raise ValueError(f"point {x} outside the box [-{self.L}, {self.L})^{self.n}")
        self._check_level(k)
        return locate(x, k)

    # refinement -----------------------------------------------------------
    def refined(self, factor: int = 2) -> "IndexWindow":
        return IndexWindow(self.n, self.L, self.k_min, self.k_max, self.R * factor)

    def grown(self, by: int = 1) -> "IndexWindow":
        """Add ``by`` levels on each side, enlarging the box when needed."""
        k_min = self.k_min - by
        L = self.L
        while not (_is_int(L * 2.0 ** k_min) and L * 2.0 ** k_min >= 1 - _EPS):
            L *= 2
        return IndexWindow(self.n, L, k_min, self.k_max + by, self.R)

    # serialization ----------------------------------------------------------
    def to_dict(self) -> dict:
        return {"n": self.n, "L": self.L, "k_min": self.k_min, "k_max": self.k_max, "R": self.R}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "IndexWindow":
        return cls(int(d["n"]), float(d["L"]), int(d["k_min"]), int(d["k_max"]), int(d.get("R", 4)))

    @classmethod
    def from_json(cls, s: str) -> "IndexWindow":
        return cls.from_dict(json.loads(s))


def enumerate_cubes(window: IndexWindow) -> Iterator[DyadicCube]:
    """All window cubes, ordered by level and then lexicographic position."""
    for k in window.levels:
        yield from window.cubes(k)


def locate(x, k: int, window: IndexWindow | None = None) -> DyadicCube:
    if window is not None:
        return window.locate(x, k)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return DyadicCube(k, tuple(int(v) for v in np.floor(x * 2.0 ** k)))


def quadrature_nodes(cube: DyadicCube, R: int) -> tuple[np.ndarray, np.ndarray]:
    """Midpoint rule with ``R`` nodes per side: points ``(R**n, n)`` and weights."""
    if R < 2:
        raise ValueError("R must be >= 2")
    t = (np.arange(R) + 0.5) / R
    axes = [lo + cube.side * t for lo in cube.lower]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, cube.n)
    w = np.full(len(pts), cube.volume / R ** cube.n)
    return pts, w


# ---------------------------------------------------------------------------
# block operations on the trailing n axes of a grid array


def _blocked(arr: np.ndarray, b: int, n: int) -> tuple[np.ndarray, tuple[int, ...]]:
    lead = arr.shape[: arr.ndim - n]
    shape = lead
    for c in arr.shape[arr.ndim - n:]:
        if c % b:
            raise ValueError(f"axis of length {c} is not divisible by block {b}")
        shape += (c // b, b)
    axes = tuple(len(lead) + 2 * i + 1 for i in range(n))
    return arr.reshape(shape), axes


def block_sum(arr: np.ndarray, b: int, n: int) -> np.ndarray:
    a, axes = _blocked(arr, b, n)
    return a.sum(axis=axes)


def block_mean(arr: np.ndarray, b: int, n: int) -> np.ndarray:
    a, axes = _blocked(arr, b, n)
    return a.mean(axis=axes)


def block_max(arr: np.ndarray, b: int, n: int) -> np.ndarray:
    a, axes = _blocked(arr, b, n)
    return a.max(axis=axes)


def block_min(arr: np.ndarray, b: int, n: int) -> np.ndarray:
    a, axes = _blocked(arr, b, n)
    return a.min(axis=axes)


def upsample(arr: np.ndarray, b: int, n: int) -> np.ndarray:
    """Repeat every entry of the trailing ``n`` axes into a ``b**n`` block."""
    out = arr
    for ax in range(arr.ndim - n, arr.ndim):
        out = np.repeat(out, b, axis=ax)
    return out


# ---------------------------------------------------------------------------
# cube families


@dataclass(frozen=True)
class Tiling:
    """Congruent grid-aligned cubes: side ``block`` nodes, first corner at ``offset``."""

    block: int
    offset: tuple[int, ...]
    provenance: str
    level: int | None = None

    def region(self, N: int) -> tuple[tuple[slice, ...], tuple[int, ...]]:
        slices, counts = [], []
        for o in self.offset:
            c = (N - o) // self.block
            slices.append(slice(o, o + c * self.block))
            counts.append(c)
        return tuple(slices), tuple(counts)


@dataclass(frozen=True)
class IndexBox:
    """A single cube given by grid index ranges (used for custom cubes)."""

    start: tuple[int, ...]
    stop: tuple[int, ...]
    side: float
    provenance: str = "custom"

    @property
    def slices(self) -> tuple[slice, ...]:
        return tuple(slice(a, b) for a, b in zip(self.start, self.stop))


@dataclass(frozen=True)
class CubeFamily:
    """A finite set of axis-parallel cubes inside a window's box.

    This is the stand-in for "all cubes" in suprema.  Cubes are stored as
    tilings of the node grid (dyadic levels, half-step shifts, single cells)
    plus explicit boxes.
    """

    window: IndexWindow
    tilings: tuple[Tiling, ...] = ()
    boxes: tuple[IndexBox, ...] = ()

    @classmethod
    def dyadic(cls, window: IndexWindow, levels: Sequence[int] | None = None) -> "CubeFamily":
        levels = window.levels if levels is None else levels
        zero = (0,) * window.n
        return cls(window, tuple(Tiling(window.block(k), zero, "dyadic", k) for k in levels))

    @classmethod
    def shifted(cls, window: IndexWindow, levels: Sequence[int] | None = None) -> "CubeFamily":
        """The half-step translates of the dyadic levels (all nonzero shift patterns)."""
        levels = window.levels if levels is None else levels
        tilings = []
        for k in levels:
            b = window.block(k)
            if b < 2:
                continue
            for bits in itertools.product((0, 1), repeat=window.n):
                if any(bits):
                    tilings.append(Tiling(b, tuple(x * (b // 2) for x in bits), "shifted-dyadic", k))
        return cls(window, tuple(tilings))

    @classmethod
    def cells(cls, window: IndexWindow) -> "CubeFamily":
        """One cube per node (side = grid spacing)."""
        return cls(window, (Tiling(1, (0,) * window.n, "cells"),))

    @classmethod
    def enlarged(cls, window: IndexWindow) -> "CubeFamily":
        return cls.dyadic(window) + cls.shifted(window) + cls.cells(window)

    @classmethod
    def custom(cls, window: IndexWindow, cubes: Sequence[tuple[Sequence[float], float]]) -> "CubeFamily":
        """Cubes given as ``(lower_corner, side)``; each must lie inside the box."""
        h, L = window.spacing, window.L
        boxes = []
        for lower, side in cubes:
            lower = np.atleast_1d(np.asarray(lower, dtype=float))
            if lower.shape != (window.n,) or side <= 0:
                raise ValueError("bad cube specification")
            if np.any(lower < -L - _EPS) or np.any(lower + side > L + _EPS):
                raise ValueError(f"cube at {lower} with side {side} leaves the box")
            start = np.ceil((lower + L) / h - 0.5 - _EPS).astype(int)
            stop = np.ceil((lower + side + L) / h - 0.5 - _EPS).astype(int)
            if np.any(stop <= start):
                raise ValueError(f"cube at {lower} with side {side} holds no grid node")
            boxes.append(IndexBox(tuple(start.tolist()), tuple(stop.tolist()), float(side)))
        return cls(window, (), tuple(boxes))

    def __add__(self, other: "CubeFamily") -> "CubeFamily":
        if other.window != self.window:
            raise ValueError("families live on different windows")
        return CubeFamily(self.window, self.tilings + other.tilings, self.boxes + other.boxes)

    def __len__(self) -> int:
        N = self.window.grid_size
        total = len(self.boxes)
        for t in self.tilings:
            total += math.prod(t.region(N)[1])
        return total

    def cubes(self) -> Iterator[tuple[np.ndarray, float, str]]:
        """Yield ``(center, side, provenance)`` for every cube of the family."""
        w = self.window
        h, L, N = w.spacing, w.L, w.grid_size
        for t in self.tilings:
            _, counts = t.region(N)
            for idx in itertools.product(*(range(c) for c in counts)):
                lo = -L + (np.asarray(t.offset) + np.asarray(idx) * t.block) * h
                yield lo + 0.5 * t.block * h, t.block * h, t.provenance
        for box in self.boxes:
            lo = -L + np.asarray(box.start) * h
            hi = -L + np.asarray(box.stop) * h
            yield 0.5 * (lo + hi), box.side, box.provenance

    def reduce(self, values: np.ndarray, op: str = "mean") -> Iterator[tuple[float, np.ndarray]]:
        """Per-cube reductions of grid values, grouped by tiling.

        ``values`` has shape ``(..., *grid_shape)``; yields ``(side, array)``
        where ``array`` has the leading shape plus one axis per dimension
        (tilings) or no extra axes (single boxes).
        """
        w = self.window
        n, N, h = w.n, w.grid_size, w.spacing
        lead = (slice(None),) * (values.ndim - n)
        fn = {"mean": block_mean, "max": block_max, "min": block_min, "sum": block_sum}[op]
        for t in self.tilings:
            sl, _ = t.region(N)
            yield t.block * h, fn(values[lead + sl], t.block, n)
        red = {"mean": np.mean, "max": np.max, "min": np.min, "sum": np.sum}[op]
        axes = tuple(range(values.ndim - n, values.ndim))
        for box in self.boxes:
            yield box.side, red(values[lead + box.slices], axis=axes)

    def sup_of_means(self, values: np.ndarray) -> np.ndarray:
        """At each node, the largest family-cube mean over cubes containing it.

        Nodes covered by no cube get ``-inf``.
        """
        w = self.window
        n, N = w.n, w.grid_size
        lead = (slice(None),) * (values.ndim - n)
        out = np.full(values.shape, -np.inf)
        for t in self.tilings:
            sl, _ = t.region(N)
            means = block_mean(values[lead + sl], t.block, n)
            region = out[lead + sl]
            np.maximum(region, upsample(means, t.block, n), out=region)
        axes = tuple(range(values.ndim - n, values.ndim))
        for box in self.boxes:
            m = np.mean(values[lead + box.slices], axis=axes, keepdims=True)
            region = out[lead + box.slices]
            np.maximum(region, m, out=region)
        return out
