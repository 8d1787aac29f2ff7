"""Weighted dyadic sequence spaces: b, f and f-infinity quasi-norms.

A ``CoeffField`` stores one dense complex array per window level, indexed by
cube position; absent coefficients are zeros.  Norms are evaluated either by
quadrature on the window grid (``bnorm``, ``fnorm``, ``finf_norm``) or from
per-cube weight integrals (the starred and local variants).  All grid sums
are exact node sums times the cell volume.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .dyadic import DyadicCube, IndexWindow, block_max, block_mean, block_sum, upsample
from .weights import (
    CombinedSequence,
    ConstantWeight,
    GeometricSequence,
    TyulenevReport,
    WeightSequence,
    check_tyulenev,
    class_exponent,
    sequence_from_dict,
)

UNIT = GeometricSequence(0.0, ConstantWeight(1.0))


# ---------------------------------------------------------------------------
# coefficient fields


class CoeffField:
    """Coefficients ``lambda_{k,m}`` over the cubes of an ``IndexWindow``."""

    def __init__(self, window: IndexWindow, data: list[np.ndarray] | None = None):
        self.window = window
        if data is None:
            data = [np.zeros(window.level_shape(k), dtype=complex) for k in window.levels]
        if len(data) != window.num_levels:
            raise ValueError("one array per window level is required")
        for k, a in zip(window.levels, data):
            if a.shape != window.level_shape(k):
                raise ValueError(f"level {k}: expected shape {window.level_shape(k)}, got {a.shape}")
        self.data = [np.asarray(a, dtype=complex) for a in data]

    # -- access
    def level(self, k: int) -> np.ndarray:
        return self.data[k - self.window.k_min]

    def _index(self, k: int, m) -> tuple[int, ...]:
        m = np.atleast_1d(np.asarray(m, dtype=int))
        if m.size != self.window.n:
            raise ValueError(f"position {m} does not match dimension {self.window.n}")
        idx = tuple(int(v) for v in m - self.window.position_offset(k))
        per = self.window.per_side(k)
        if k not in self.window.levels or any(i < 0 or i >= per for i in idx):
            raise IndexError(f"cube ({k}, {tuple(m)}) lies outside the window")
        return idx

    def __getitem__(self, key) -> complex:
        k, m = key
        return complex(self.level(k)[self._index(k, m)])

    def __setitem__(self, key, value) -> None:
        k, m = key
        self.level(k)[self._index(k, m)] = value

    def entries(self) -> Iterator[tuple[int, tuple[int, ...], complex]]:
        """Nonzero coefficients as ``(k, m, value)``."""
        for k, a in zip(self.window.levels, self.data):
            off = self.window.position_offset(k)
            for idx in zip(*np.nonzero(a)):
                yield k, tuple(int(i) + off for i in idx), complex(a[idx])

    @property
    def nnz(self) -> int:
        return int(sum(np.count_nonzero(a) for a in self.data))

    def cube(self, k: int, m) -> DyadicCube:
        return DyadicCube(k, tuple(np.atleast_1d(m).tolist()))

    # -- algebra
    def map(self, fn) -> "CoeffField":
        return CoeffField(self.window, [fn(a) for a in self.data])

    def copy(self) -> "CoeffField":
        return self.map(np.copy)

    def __abs__(self) -> "CoeffField":
        return self.map(lambda a: np.abs(a).astype(complex))

    def abs_levels(self) -> list[np.ndarray]:
        return [np.abs(a) for a in self.data]

    def __add__(self, other: "CoeffField") -> "CoeffField":
        self._check_same(other)
        return CoeffField(self.window, [a + b for a, b in zip(self.data, other.data)])

    def __sub__(self, other: "CoeffField") -> "CoeffField":
        self._check_same(other)
        return CoeffField(self.window, [a - b for a, b in zip(self.data, other.data)])

    def __mul__(self, c) -> "CoeffField":
        if isinstance(c, CoeffField):
            self._check_same(c)
            return CoeffField(self.window, [a * b for a, b in zip(self.data, c.data)])
        return self.map(lambda a: a * c)

    __rmul__ = __mul__

    def _check_same(self, other: "CoeffField") -> None:
        if other.window != self.window:
            raise ValueError("coefficient fields live on different windows")

    def allclose(self, other: "CoeffField", rtol: float = 1e-12, atol: float = 0.0) -> bool:
        self._check_same(other)
        return all(np.allclose(a, b, rtol=rtol, atol=atol) for a, b in zip(self.data, other.data))

    def on_window(self, window: IndexWindow) -> "CoeffField":
        """The same coefficients viewed in another (typically larger) window."""
        out = CoeffField(window)
        for k, m, v in self.entries():
            out[k, m] = v
        return out

    # -- serialization
    def to_dict(self) -> dict:
        return {
            "window": self.window.to_dict(),
            "entries": [
                {"k": k, "m": list(m), "re": v.real, "im": v.imag} for k, m, v in self.entries()
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict, window: IndexWindow | None = None) -> "CoeffField":
        window = window or IndexWindow.from_dict(d["window"])
        out = cls(window)
        for e in d["entries"]:
            out[int(e["k"]), e["m"]] = complex(e.get("re", 0.0), e.get("im", 0.0))
        return out

    @classmethod
    def from_json(cls, s: str) -> "CoeffField":
        return cls.from_dict(json.loads(s))

    @classmethod
    def from_entries(cls, window: IndexWindow, entries) -> "CoeffField":
        out = cls(window)
        for k, m, v in entries:
            out[k, m] = v
        return out

    def __repr__(self) -> str:
        return f"CoeffField(window={self.window}, nnz={self.nnz})"


def random_coeffs(
    window: IndexWindow,
    rng: np.random.Generator,
    nnz: int = 200,
    complex_values: bool = True,
    levels=None,
) -> CoeffField:
    """``nnz`` standard normal coefficients at distinct random cubes of the window."""
    levels = list(window.levels if levels is None else levels)
    sizes = [int(np.prod(window.level_shape(k))) for k in levels]
    total = sum(sizes)
    picks = np.sort(rng.choice(total, size=min(nnz, total), replace=False))
    vals = rng.standard_normal(picks.size)
    if complex_values:
        vals = vals + 1j * rng.standard_normal(picks.size)
    out = CoeffField(window)
    starts = np.cumsum([0] + sizes)
    for i, k in enumerate(levels):
        sel = (picks >= starts[i]) & (picks < starts[i + 1])
        flat = out.level(k).reshape(-1)
        flat[picks[sel] - starts[i]] = vals[sel]
    return out


# ---------------------------------------------------------------------------
# space parameters and local weight tables


@dataclass(frozen=True)
class SpaceSpec:
    family: str  # "b" | "f" | "f_infinity"
    p: float
    q: float
    weights: WeightSequence = UNIT

    def __post_init__(self):
        if self.family not in ("b", "f", "f_infinity"):
            raise ValueError(f"unknown space family {self.family!r}")
        if not (0 < self.q < math.inf):
            raise ValueError("q must lie in (0, inf)")
        if self.family != "f_infinity" and not (0 < self.p < math.inf):
            raise ValueError("p must lie in (0, inf)")

    @property
    def quasi_triangle_constant(self) -> float:
        r = self.q if self.family == "f_infinity" else min(self.p, self.q)
        return max(1.0, 2.0 ** (1.0 / r - 1.0))

    def to_dict(self) -> dict:
        return {"family": self.family, "p": self.p, "q": self.q, "weights": self.weights.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "SpaceSpec":
        w = sequence_from_dict(d["weights"]) if "weights" in d else UNIT
        p = float(d.get("p", math.inf))
        return cls(d["family"], p, float(d["q"]), w)


@dataclass(frozen=True)
class LocalWeightTable:
    """Per-cube norms ``||t_k | L_r(Q_{k,m})||`` for ``r = kappa * p``."""

    window: IndexWindow
    exponent: float
    kappa: float
    values: tuple[np.ndarray, ...] = field(repr=False)

    def level(self, k: int) -> np.ndarray:
        return self.values[k - self.window.k_min]


def local_weight_table(t: WeightSequence, window: IndexWindow, p: float, kappa: float = 1.0) -> LocalWeightTable:
    r = kappa * p
    grid = t.on_grid(window)
    vals = []
    for i, k in enumerate(window.levels):
        s = block_sum(grid[i] ** r, window.block(k), window.n) * window.cell_volume
        vals.append(s ** (1.0 / r))
    return LocalWeightTable(window, r, kappa, tuple(vals))


def _check_table(table: LocalWeightTable, lam: CoeffField, exponent: float) -> None:
    if table.window != lam.window:
        raise ValueError("weight table was built on a different window")
    if not math.isclose(table.exponent, exponent, rel_tol=1e-12):
        raise ValueError(f"weight table exponent {table.exponent} does not match {exponent}")


# ---------------------------------------------------------------------------
# norms by quadrature on the grid


def _level_grids(lam: CoeffField, spec: SpaceSpec, q: float) -> np.ndarray:
    """``2^{knq/2} t_k^q |lambda_k|^q`` sampled on the grid, one row per level."""
    w = lam.window
    t = spec.weights.on_grid(w)
    rows = []
    for i, k in enumerate(w.levels):
        a = upsample(np.abs(lam.data[i]) ** q, w.block(k), w.n)
        rows.append(2.0 ** (k * w.n * q / 2) * t[i] ** q * a)
    return np.stack(rows)


def bnorm(lam: CoeffField, spec: SpaceSpec) -> float:
    if spec.family != "b":
        raise ValueError("bnorm needs a b-space spec")
    w, p, q = lam.window, spec.p, spec.q
    t = spec.weights.on_grid(w)
    total = 0.0
    for i, k in enumerate(w.levels):
        g = t[i] * upsample(np.abs(lam.data[i]), w.block(k), w.n)
        lp = (np.sum(g ** p) * w.cell_volume) ** (1.0 / p)
        total += 2.0 ** (k * w.n * q / 2) * lp ** q
    return float(total ** (1.0 / q))


def fnorm(lam: CoeffField, spec: SpaceSpec) -> float:
    if spec.family != "f":
        raise ValueError("fnorm needs an f-space spec")
    w, p, q = lam.window, spec.p, spec.q
    inner = np.sum(_level_grids(lam, spec, q), axis=0) ** (1.0 / q)
    return float((np.sum(inner ** p) * w.cell_volume) ** (1.0 / p))


def _sup_over_cubes(rows: np.ndarray, window: IndexWindow, q: float) -> float:
    """``sup_P ((1/|P|) int_P sum_{k >= level(P)} rows_k)^{1/q}`` over window dyadic cubes."""
    tail = np.cumsum(rows[::-1], axis=0)[::-1]  # tail[i] = sum over levels >= levels[i]
    best = 0.0
    for i, j in enumerate(window.levels):
        best = max(best, float(np.max(block_mean(tail[i], window.block(j), window.n))))
    return best ** (1.0 / q)


def finf_norm(lam: CoeffField, spec: SpaceSpec) -> float:
    if spec.family != "f_infinity":
        raise ValueError("finf_norm needs an f_infinity spec")
    return _sup_over_cubes(_level_grids(lam, spec, spec.q), lam.window, spec.q)


# ---------------------------------------------------------------------------
# norms from per-cube weight integrals


def bnorm_star(lam: CoeffField, spec: SpaceSpec, table: LocalWeightTable) -> float:
    """``(sum_k 2^{knq/2} (sum_m |lambda|^p t_{k,m}^p)^{q/p})^{1/q}``."""
    if table.kappa != 1:
        raise ValueError("bnorm_star uses the kappa = 1 table")
    _check_table(table, lam, spec.p)
    w, p, q = lam.window, spec.p, spec.q
    total = 0.0
    for i, k in enumerate(w.levels):
        s = np.sum((np.abs(lam.data[i]) * table.values[i]) ** p)
        total += 2.0 ** (k * w.n * q / 2) * s ** (q / p)
    return float(total ** (1.0 / q))


def fnorm_star(lam: CoeffField, spec: SpaceSpec, table: LocalWeightTable) -> float:
    """``||(sum 2^{knq(1/2 + 1/(kappa p))} t_{k,m,kappa}^q |lambda|^q chi_{k,m})^{1/q}||_p``."""
    _check_table(table, lam, table.kappa * spec.p)
    w, p, q = lam.window, spec.p, spec.q
    r = table.exponent
    acc = np.zeros(w.grid_shape)
    for i, k in enumerate(w.levels):
        coef = 2.0 ** (k * w.n * q * (0.5 + 1.0 / r)) * (table.values[i] * np.abs(lam.data[i])) ** q
        acc += upsample(coef, w.block(k), w.n)
    return float((np.sum(acc ** (p / q)) * w.cell_volume) ** (1.0 / p))


def _local_rows(lam: CoeffField, q: float, table: LocalWeightTable, masks=None) -> np.ndarray:
    w = lam.window
    rows = []
    for i, k in enumerate(w.levels):
        coef = 2.0 ** (k * w.n * q * (0.5 + 1.0 / q)) * (table.values[i] * np.abs(lam.data[i])) ** q
        g = upsample(coef, w.block(k), w.n)
        if masks is not None:
            g = g * masks[i]
        rows.append(g)
    return np.stack(rows)


def finf_norm_local(lam: CoeffField, spec: SpaceSpec, table: LocalWeightTable) -> float:
    """``finf_norm`` with each ``t_k^q`` replaced by its cube average ``t_{k,m,q}^q / |Q_{k,m}|``."""
    _check_table(table, lam, spec.q)
    return _sup_over_cubes(_local_rows(lam, spec.q, table), lam.window, spec.q)


def full_esets(window: IndexWindow) -> list[np.ndarray]:
    return [np.ones(window.grid_shape, dtype=bool) for _ in window.levels]


def random_esets(window: IndexWindow, rng: np.random.Generator, fraction: float = 0.75) -> list[np.ndarray]:
    """Per-level node masks; inside every cube a random subset of ``> half`` the nodes."""
    out = []
    for k in window.levels:
        b = window.block(k)
        cells = b ** window.n
        keep = max(cells // 2 + 1, int(math.ceil(fraction * cells)))
        keys = rng.random(window.grid_shape)
        # rank nodes inside each cube and keep the `keep` smallest keys
        blocks = _cube_major(keys, b, window.n)
        order = np.argsort(np.argsort(blocks, axis=-1), axis=-1)
        out.append(_from_cube_major(order < keep, b, window.n, window.grid_shape))
    return out


def _cube_major(arr: np.ndarray, b: int, n: int) -> np.ndarray:
    shape = []
    for s in arr.shape:
        shape += [s // b, b]
    v = arr.reshape(shape)
    perm = list(range(0, 2 * n, 2)) + list(range(1, 2 * n, 2))
    return v.transpose(perm).reshape(*(s // b for s in arr.shape), b ** n)


def _from_cube_major(blocks: np.ndarray, b: int, n: int, shape) -> np.ndarray:
    lead = blocks.shape[:n]
    v = blocks.reshape(*lead, *([b] * n))
    perm = []
    for i in range(n):
        perm += [i, n + i]
    return v.transpose(perm).reshape(shape)


def finf_norm_esets(lam: CoeffField, spec: SpaceSpec, table: LocalWeightTable, esets: list[np.ndarray] | None = None) -> float:
    """Nodewise max of ``(sum 2^{knq(1/2+1/q)} t_{k,m,q}^q |lambda|^q chi_E)^{1/q}``.

    ``esets`` holds one boolean grid mask per level; inside each populated cube
    it must cover more than half of the nodes.
    """
    _check_table(table, lam, spec.q)
    w = lam.window
    esets = full_esets(w) if esets is None else esets
    for i, k in enumerate(w.levels):
        b = w.block(k)
        frac = block_mean(esets[i].astype(float), b, w.n)
        bad = (frac <= 0.5) & (lam.data[i] != 0)
        if np.any(bad):
            raise ValueError(f"E-set covers at most half of a populated level-{k} cube")
    rows = _local_rows(lam, spec.q, table, esets)
    return float(np.max(np.sum(rows, axis=0)) ** (1.0 / spec.q))


def norm(lam: CoeffField, spec: SpaceSpec) -> float:
    return {"b": bnorm, "f": fnorm, "f_infinity": finf_norm}[spec.family](lam, spec)


def star_norm(lam: CoeffField, spec: SpaceSpec, kappa: float = 1.0) -> float:
    """Starred (b, f) or local (f-infinity) norm, building the weight table on the fly."""
    w = lam.window
    if spec.family == "b":
        return bnorm_star(lam, spec, local_weight_table(spec.weights, w, spec.p))
    if spec.family == "f":
        return fnorm_star(lam, spec, local_weight_table(spec.weights, w, spec.p, kappa))
    return finf_norm_local(lam, spec, local_weight_table(spec.weights, w, spec.q))


def hypothesis_report(spec: SpaceSpec, window: IndexWindow, theta: float = 1.0) -> TyulenevReport:
    """Advisory check of the two-index class hypothesis attached to starred norms."""
    p = spec.q if spec.family == "f_infinity" else spec.p
    s1 = class_exponent(p, theta) if theta < p else math.inf
    return check_tyulenev(spec.weights, (s1, p), window)


# ---------------------------------------------------------------------------
# Hölder combination


def holder_combine(t: WeightSequence, w: WeightSequence, theta: float) -> WeightSequence:
    """Pointwise ``t_k**(1-theta) * w_k**theta``."""
    if not 0 < theta < 1:
        raise ValueError("theta must lie in (0, 1)")
    p = 1.0 / ((1 - theta) / t.p + theta / w.p)
    return CombinedSequence(t, w, theta, p)


def holder_lemma_ratio(
    t: WeightSequence,
    w: WeightSequence,
    theta: float,
    q0: float,
    q1: float,
    E: np.ndarray,
    Q: DyadicCube,
    window: IndexWindow,
    k: int | None = None,
) -> tuple[float, float]:
    """``((int_E w_k^q)^{1/q}, (int_E t_k^{q0})^{(1-theta)/q0} (int_E w_k^{q1})^{theta/q1})``.

    ``E`` is a boolean mask over the nodes of ``Q`` (shape ``(b,)*n``) and
    ``k`` defaults to the level of ``Q``.
    """
    if not window.contains_cube(Q):
        raise ValueError("cube lies outside the window")
    k = Q.level if k is None else k
    if k not in window.levels:
        raise ValueError(f"level {k} outside the window")
    E = np.asarray(E, dtype=bool)
    sl = window.cube_slices(Q)
    i = k - window.k_min
    tv = t.on_grid(window)[i][sl][E]
    wv = w.on_grid(window)[i][sl][E]
    if tv.size == 0:
        raise ValueError("empty E")
    q = 1.0 / ((1 - theta) / q0 + theta / q1)
    h = window.cell_volume
    omega = tv ** (1 - theta) * wv ** theta
    lhs = (np.sum(omega ** q) * h) ** (1.0 / q)
    rhs = (np.sum(tv ** q0) * h) ** ((1 - theta) / q0) * (np.sum(wv ** q1) * h) ** (theta / q1)
    return float(lhs), float(rhs)
