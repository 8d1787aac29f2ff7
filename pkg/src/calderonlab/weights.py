"""Weights, weight sequences, Muckenhoupt constants and the two-index class check."""

from __future__ import annotations

import functools
import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dyadic import CubeFamily, DyadicCube, IndexWindow, block_max, block_mean, quadrature_nodes


def conjugate_exponent(p: float) -> float:
    """``p'`` with ``1/p + 1/p' = 1``."""
    if p < 1:
        raise ValueError(f"conjugate exponent undefined for p={p} < 1")
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1)


def class_exponent(p: float, theta: float) -> float:
    """``theta * (p/theta)'``, the inverse-average exponent paired with ``p``."""
    return theta * conjugate_exponent(p / theta)


def power_mean(values: np.ndarray, r: float, axis=None) -> np.ndarray:
    """``(mean |v|**r)**(1/r)``; ``r = inf`` gives the max."""
    if math.isinf(r):
        return np.max(values, axis=axis)
    return np.mean(values ** r, axis=axis) ** (1.0 / r)


def _block_power_mean(values: np.ndarray, b: int, n: int, r: float) -> np.ndarray:
    if math.isinf(r):
        return block_max(values, b, n)
    return block_mean(values ** r, b, n) ** (1.0 / r)


# ---------------------------------------------------------------------------
# weights


class Weight:
    """A positive function on R^n, evaluated pointwise on arrays ``(..., n)``."""

    def __call__(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    def descriptor_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha1(blob.encode()).hexdigest()[:12]

    def on_grid(self, window: IndexWindow) -> np.ndarray:
        return _weight_grid(self, window)

    def __pow__(self, exponent: float) -> "Weight":
        return PowWeight(self, float(exponent))

    def __mul__(self, other: "Weight") -> "Weight":
        return ProductWeight((self, other))


@dataclass(frozen=True)
class ConstantWeight(Weight):
    c: float = 1.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.full(x.shape[:-1], float(self.c))

    def to_dict(self):
        return {"constant": {"c": self.c}}


@dataclass(frozen=True)
class PowerWeight(Weight):
    """``|x|**alpha``."""

    alpha: float

    def __call__(self, x):
        r = np.linalg.norm(np.asarray(x, dtype=float), axis=-1)
        return r ** self.alpha

    def to_dict(self):
        return {"power": {"alpha": self.alpha}}


@dataclass(frozen=True)
class ShiftedPowerWeight(Weight):
    """``(1 + |x|)**alpha``."""

    alpha: float

    def __call__(self, x):
        r = np.linalg.norm(np.asarray(x, dtype=float), axis=-1)
        return (1.0 + r) ** self.alpha

    def to_dict(self):
        return {"shifted_power": {"alpha": self.alpha}}


@dataclass(frozen=True)
class TableWeight(Weight):
    """Piecewise constant on the equal subdivision of ``[lo, hi)**n``.

    ``values`` is flat in C order with ``shape = (M,)*n``; points outside the
    box take the value of the nearest cell.
    """

    values: tuple[float, ...]
    shape: tuple[int, ...]
    lo: float = -1.0
    hi: float = 1.0

    @classmethod
    def from_array(cls, values, lo: float = -1.0, hi: float = 1.0) -> "TableWeight":
        arr = np.asarray(values, dtype=float)
        return cls(tuple(arr.ravel().tolist()), arr.shape, float(lo), float(hi))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        arr = np.asarray(self.values).reshape(self.shape)
        idx = []
        for ax, M in enumerate(self.shape):
            i = np.floor((x[..., ax] - self.lo) / (self.hi - self.lo) * M).astype(int)
            idx.append(np.clip(i, 0, M - 1))
        return arr[tuple(idx)]

    def to_dict(self):
        arr = np.asarray(self.values).reshape(self.shape)
        return {"table": {"values": arr.tolist(), "lo": self.lo, "hi": self.hi}}


@dataclass(frozen=True)
class ProductWeight(Weight):
    factors: tuple[Weight, ...]

    def __call__(self, x):
        out = self.factors[0](x)
        for f in self.factors[1:]:
            out = out * f(x)
        return out

    def to_dict(self):
        return {"product": [f.to_dict() for f in self.factors]}


@dataclass(frozen=True)
class PowWeight(Weight):
    base: Weight
    exponent: float

    def __call__(self, x):
        return self.base(x) ** self.exponent

    def to_dict(self):
        return {"pow": {"base": self.base.to_dict(), "exponent": self.exponent}}


def weight_from_dict(d: dict) -> Weight:
    """Inverse of ``Weight.to_dict`` (JSON tagged unions)."""
    if len(d) != 1:
        raise ValueError(f"weight descriptor must have exactly one tag: {d}")
    (tag, body), = d.items()
    if tag == "constant":
        return ConstantWeight(float(body.get("c", 1.0)))
    if tag == "power":
        return PowerWeight(float(body["alpha"]))
    if tag == "shifted_power":
        return ShiftedPowerWeight(float(body["alpha"]))
    if tag == "table":
        if isinstance(body, list):
            body = {"values": body}
        return TableWeight.from_array(body["values"], body.get("lo", -1.0), body.get("hi", 1.0))
    if tag == "product":
        return ProductWeight(tuple(weight_from_dict(b) for b in body))
    if tag == "pow":
        return PowWeight(weight_from_dict(body["base"]), float(body["exponent"]))
    raise ValueError(f"unknown weight tag {tag!r}")


@functools.lru_cache(maxsize=32)
def grid_nodes(window: IndexWindow) -> np.ndarray:
    nodes = window.nodes()
    nodes.flags.writeable = False
    return nodes


@functools.lru_cache(maxsize=128)
def _weight_grid(weight: Weight, window: IndexWindow) -> np.ndarray:
    vals = np.asarray(weight(grid_nodes(window)), dtype=float)
    if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
        raise ValueError(f"weight {weight.to_dict()} is not positive and finite on the grid")
    vals.flags.writeable = False
    return vals


# ---------------------------------------------------------------------------
# weight sequences


class WeightSequence:
    """A family ``{t_k}`` with a declared admissibility exponent ``p``."""

    p: float

    def level(self, k: int) -> Weight:
        raise NotImplementedError

    def __call__(self, k: int, x) -> np.ndarray:
        return self.level(k)(x)

    def on_grid(self, window: IndexWindow) -> np.ndarray:
        """Values on the window grid, shape ``(num_levels, *grid_shape)``."""
        return _sequence_grid(self, window)

    def to_dict(self) -> dict:
        raise NotImplementedError

    def descriptor_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha1(blob.encode()).hexdigest()[:12]


@dataclass(frozen=True)
class GeometricSequence(WeightSequence):
    """``t_k(x) = 2**(k*s) * base(x)``."""

    s: float
    base: Weight = ConstantWeight(1.0)
    p: float = 2.0

    def level(self, k):
        return ProductWeight((ConstantWeight(2.0 ** (k * self.s)), self.base))

    def to_dict(self):
        return {"geometric": {"s": self.s, "base": self.base.to_dict()}, "p": self.p}


@dataclass(frozen=True)
class LevelTableSequence(WeightSequence):
    """One weight per level; levels missing from the table use ``default``."""

    table: tuple[tuple[int, Weight], ...]
    p: float = 2.0
    default: Weight = ConstantWeight(1.0)

    @classmethod
    def from_mapping(cls, levels: dict, p: float = 2.0, default: Weight | None = None):
        items = tuple(sorted((int(k), w) for k, w in levels.items()))
        return cls(items, p, default or ConstantWeight(1.0))

    def level(self, k):
        for kk, w in self.table:
            if kk == k:
                return w
        return self.default

    def to_dict(self):
        return {
            "levels": {str(k): w.to_dict() for k, w in self.table},
            "default": self.default.to_dict(),
            "p": self.p,
        }


@dataclass(frozen=True)
class CombinedSequence(WeightSequence):
    """Pointwise ``t_k**(1-theta) * w_k**theta``."""

    t: WeightSequence
    w: WeightSequence
    theta: float
    p: float = 2.0

    def level(self, k):
        return ProductWeight((PowWeight(self.t.level(k), 1 - self.theta), PowWeight(self.w.level(k), self.theta)))

    def to_dict(self):
        return {"combined": {"t": self.t.to_dict(), "w": self.w.to_dict(), "theta": self.theta}, "p": self.p}


def sequence_from_dict(d: dict) -> WeightSequence:
    p = float(d.get("p", 2.0))
    if "geometric" in d:
        body = d["geometric"]
        base = weight_from_dict(body.get("base", {"constant": {"c": 1.0}}))
        return GeometricSequence(float(body["s"]), base, p)
    if "levels" in d:
        levels = {int(k): weight_from_dict(v) for k, v in d["levels"].items()}
        default = weight_from_dict(d["default"]) if "default" in d else None
        return LevelTableSequence.from_mapping(levels, p, default)
    if "combined" in d:
        body = d["combined"]
        return CombinedSequence(
            sequence_from_dict(body["t"]), sequence_from_dict(body["w"]), float(body["theta"]), p
        )
    raise ValueError(f"unknown weight sequence descriptor {d}")


@functools.lru_cache(maxsize=128)
def _sequence_grid(seq: WeightSequence, window: IndexWindow) -> np.ndarray:
    if isinstance(seq, CombinedSequence):
        # combine level arrays directly so the identity holds node by node
        t = seq.t.on_grid(window)
        w = seq.w.on_grid(window)
        vals = t ** (1 - seq.theta) * w ** seq.theta
    else:
        vals = np.stack([seq.level(k).on_grid(window) for k in window.levels])
    vals.flags.writeable = False
    return vals


# ---------------------------------------------------------------------------
# Muckenhoupt constants


def cube_average(gamma: Weight, cube: DyadicCube, r: float = 1.0, R: int = 16) -> float:
    """``((1/|Q|) int_Q gamma**r)**(1/r)`` by the midpoint rule; ``r=inf`` is the node max."""
    pts, _ = quadrature_nodes(cube, R)
    vals = np.asarray(gamma(pts), dtype=float)
    if np.any(vals <= 0) or not np.all(np.isfinite(vals)):
        raise ValueError("weight is not positive and finite at the quadrature nodes")
    return float(power_mean(vals, r))


@dataclass(frozen=True)
class ApEstimate:
    p: float
    constant: float
    trace: tuple[tuple[float, float], ...]  # (cube side, sup over cubes of that side), side ascending
    growth: float
    verdict: str  # "stable" | "growing"  (heuristic flag, see estimate_ap_constant)

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "constant": self.constant,
            "trace": [list(t) for t in self.trace],
            "growth": self.growth,
            "verdict": self.verdict,
        }


def ap_quantities(values: np.ndarray, p: float, cubes: CubeFamily) -> list[tuple[float, np.ndarray]]:
    """Per-cube Muckenhoupt quantities, grouped as ``(side, array)``.

    ``p > 1``: ``M_Q(g) * M_{Q,p'/p}(g**-1)``; ``p = 1``: ``M_Q(g) / min_Q g``.
    """
    if p < 1:
        raise ValueError("A_p needs p >= 1")
    avg = list(cubes.reduce(values, "mean"))
    if p == 1:
        low = list(cubes.reduce(values, "min"))
        return [(s, a / m) for (s, a), (_, m) in zip(avg, low)]
    r = 1.0 / (p - 1.0)  # = p'/p
    inv = list(cubes.reduce(values ** (-r), "mean"))
    return [(s, a * m ** (1.0 / r)) for (s, a), (_, m) in zip(avg, inv)]


def estimate_ap_from_values(values: np.ndarray, p: float, cubes: CubeFamily, growth_factor: float = 2.0) -> ApEstimate:
    if np.any(values <= 0) or not np.all(np.isfinite(values)):
        raise ValueError("weight must be positive and finite at every node")
    per_side: dict[float, float] = {}
    for side, q in ap_quantities(values, p, cubes):
        if q.size == 0:
            continue
        key = round(side, 15)
        per_side[key] = max(per_side.get(key, -np.inf), float(np.max(q)))
    trace = tuple(sorted(per_side.items()))
    constant = max(v for _, v in trace)
    # single-node cells carry no averaging information, so the growth compares
    # the largest scale with the smallest scale that spans several nodes
    resolved = [v for s, v in trace if s > 1.5 * cubes.window.spacing] or [v for _, v in trace]
    growth = resolved[-1] / resolved[0]
    verdict = "growing" if growth >= growth_factor else "stable"
    return ApEstimate(float(p), constant, trace, growth, verdict)


def estimate_ap_constant(gamma: Weight, p: float, cubes: CubeFamily) -> ApEstimate:
    """Sup of the A_p quantity over a cube family, with a per-scale trace.

    The verdict is a heuristic: "growing" when the sup over the largest cubes
    exceeds the sup over the smallest multi-node cubes by a factor of two or
    more. Power weights near the A_p endpoint converge slowly under the
    midpoint rule, so the verdict depends on the node density per cube.
    """
    return estimate_ap_from_values(gamma.on_grid(cubes.window), p, cubes)


def search_lower_exponent(gamma: Weight, p: float, cubes: CubeFamily, depth: int = 6) -> float | None:
    """Smallest ``p1 = p*(1 - 2**-j)`` (``p1 > 1``) with a stable verdict, if any."""
    best = None
    for j in range(depth, 0, -1):
        p1 = p * (1 - 2.0 ** (-j))
        if p1 <= 1:
            continue
        if estimate_ap_constant(gamma, p1, cubes).verdict == "stable":
            best = p1 if best is None else min(best, p1)
    return best


def same_constant(estimates: Sequence[ApEstimate], tolerance: float = 0.1) -> bool:
    """Per-level constants agree when their spread is at most ``tolerance`` of the max."""
    vals = [e.constant for e in estimates]
    return max(vals) - min(vals) <= tolerance * max(vals)


def level_ap_estimates(t: WeightSequence, power: float, p: float, cubes: CubeFamily) -> list[ApEstimate]:
    """A_p estimates of ``t_k**power`` for every window level ``k``."""
    grid = t.on_grid(cubes.window)
    return [estimate_ap_from_values(grid[i] ** power, p, cubes) for i in range(grid.shape[0])]


# ---------------------------------------------------------------------------
# two-index class check


@dataclass(frozen=True)
class TyulenevReport:
    p: float
    sigma: tuple[float, float]
    alpha1: float
    alpha2: float
    C1: float
    C2: float
    gaps1: tuple[tuple[int, float], ...]  # (j - k, sup L1)
    gaps2: tuple[tuple[int, float], ...]  # (j - k, sup L2)
    degenerate: bool

    @property
    def certified(self) -> bool:
        """Whether the fitted bounds hold on every tested gap."""
        if self.degenerate:
            return True
        ok1 = all(v <= self.C1 * 2.0 ** (-self.alpha1 * d) * (1 + 1e-9) for d, v in self.gaps1)
        ok2 = all(v <= self.C2 * 2.0 ** (self.alpha2 * d) * (1 + 1e-9) for d, v in self.gaps2)
        return ok1 and ok2

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "sigma": list(self.sigma),
            "alpha1": self.alpha1,
            "alpha2": self.alpha2,
            "C1": self.C1,
            "C2": self.C2,
            "gaps1": [list(g) for g in self.gaps1],
            "gaps2": [list(g) for g in self.gaps2],
            "degenerate": self.degenerate,
        }


def _fit_rate(gaps: np.ndarray, sups: np.ndarray, sign: float) -> tuple[float, float]:
    """Fit ``sup_d <= C 2**(sign*alpha*d)``: alpha by least squares, C from the max residual."""
    y = np.log2(sups)
    slope, intercept = np.polyfit(gaps, y, 1)
    resid = y - (intercept + slope * gaps)
    C = 2.0 ** (intercept + max(float(resid.max()), 0.0))
    return sign * slope, C


def check_tyulenev(t: WeightSequence, sigma: tuple[float, float], window: IndexWindow) -> TyulenevReport:
    """Fit the rates of the two-index conditions over all window cubes and levels k <= j."""
    s1, s2 = sigma
    if s1 <= 0 or s2 <= 0:
        raise ValueError("sigma entries must be positive")
    p = t.p
    grid = t.on_grid(window)
    K = grid.shape[0]
    sup1 = np.zeros(K)
    sup2 = np.zeros(K)
    for k in window.levels:  # cube level
        b = window.block(k)
        A = _block_power_mean(grid, b, window.n, p)  # M_{Q,p}(t_i), axis 0 = i
        B = _block_power_mean(1.0 / grid, b, window.n, s1)  # M_{Q,s1}(t_j^-1)
        Cm = _block_power_mean(grid, b, window.n, s2)  # M_{Q,s2}(t_j)
        A = A.reshape(K, -1)
        B = B.reshape(K, -1)
        Cm = Cm.reshape(K, -1)
        for i in range(K):
            for j in range(i, K):
                d = j - i
                sup1[d] = max(sup1[d], float(np.max(A[i] * B[j])))
                sup2[d] = max(sup2[d], float(np.max(Cm[j] / A[i])))
    gaps = np.arange(K, dtype=float)
    if K == 1:
        return TyulenevReport(p, (s1, s2), math.nan, math.nan, float(sup1[0]), float(sup2[0]),
                              ((0, float(sup1[0])),), ((0, float(sup2[0])),), True)
    a1, C1 = _fit_rate(gaps, sup1, -1.0)
    a2, C2 = _fit_rate(gaps, sup2, 1.0)
    return TyulenevReport(
        p, (s1, s2), float(a1), float(a2), float(C1), float(C2),
        tuple((int(d), float(v)) for d, v in zip(gaps, sup1)),
        tuple((int(d), float(v)) for d, v in zip(gaps, sup2)),
        False,
    )
