"""Discrete Hardy-Littlewood maximal operators and vector-valued inequality ratios.

Fields are arrays on the window grid (shape ``window.grid_shape``); a stack
of fields carries one leading axis for the level index.  The supremum runs
over a finite ``CubeFamily``, so every maximal function here is an
under-approximation of the continuous one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dyadic import CubeFamily, IndexWindow
from .weights import WeightSequence, estimate_ap_from_values, same_constant


def hl_maximal(f: np.ndarray, cubes: CubeFamily) -> np.ndarray:
    """Largest family-cube mean of ``|f|`` over the cubes containing each node."""
    out = cubes.sup_of_means(np.abs(f))
    if np.any(np.isneginf(out)):
        raise ValueError("some nodes are covered by no cube of the family")
    return out


def power_maximal(f: np.ndarray, sigma: float, cubes: CubeFamily) -> np.ndarray:
    """``(M |f|**sigma)**(1/sigma)``."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if sigma == 1:
        return hl_maximal(f, cubes)
    return hl_maximal(np.abs(f) ** sigma, cubes) ** (1.0 / sigma)


def lp_norm(f: np.ndarray, p: float, window: IndexWindow, weight: np.ndarray | None = None) -> float:
    """Quadrature ``L_p`` norm on the grid, optionally against the weight ``weight`` (``int |f|^p weight``)."""
    a = np.abs(f)
    if math.isinf(p):
        return float(np.max(a))
    vals = a ** p if weight is None else a ** p * weight
    return float((np.sum(vals) * window.cell_volume) ** (1.0 / p))


def _lq_sum(stack: np.ndarray, q: float) -> np.ndarray:
    if math.isinf(q):
        return np.max(stack, axis=0)
    return np.sum(stack ** q, axis=0) ** (1.0 / q)


def fefferman_stein_ratio(fs: np.ndarray, p: float, q: float, sigma: float, cubes: CubeFamily) -> float:
    """``||(sum M_sigma(f_k)^q)^(1/q)||_p / ||(sum |f_k|^q)^(1/q)||_p``."""
    if not (0 < sigma < min(p, q)) or math.isinf(p):
        raise ValueError("need 0 < sigma < min(p, q) and p < inf")
    w = cubes.window
    den = lp_norm(_lq_sum(np.abs(fs), q), p, w)
    if den == 0:
        raise ZeroDivisionError("zero field stack")
    mf = np.stack([power_maximal(f, sigma, cubes) for f in fs])
    return lp_norm(_lq_sum(mf, q), p, w) / den


@dataclass(frozen=True)
class WeightedRatio:
    ratio: float
    precondition_ok: bool
    ap_constants: tuple[float, ...]

    def to_dict(self) -> dict:
        return {"ratio": self.ratio, "precondition_ok": self.precondition_ok, "ap_constants": list(self.ap_constants)}


def check_level_ap(t: WeightSequence, p: float, theta: float, cubes: CubeFamily, exponent: str = "p/theta"):
    """A_{p/theta} (or A_p) estimates of ``t_k**p`` on every level, plus the same-constant verdict."""
    target = p / theta if exponent == "p/theta" else p
    grid = t.on_grid(cubes.window)
    ests = [estimate_ap_from_values(g ** p, target, cubes) for g in grid]
    ok = same_constant(ests) and all(e.verdict == "stable" for e in ests)
    return ok, ests


def weighted_maximal_ratio(
    fs: np.ndarray,
    t: WeightSequence,
    p: float,
    q: float,
    cubes: CubeFamily,
    theta: float = 1.0,
    exponent: str = "p/theta",
) -> WeightedRatio:
    """``||(sum t_k^q M(f_k)^q)^(1/q)||_p / ||(sum t_k^q |f_k|^q)^(1/q)||_p``.

    The level weights are checked against ``A_{p/theta}`` (``exponent="p/theta"``)
    or ``A_p`` (``exponent="p"``); a failed check is reported, not raised.
    """
    if not (1 < p < math.inf and 1 < q < math.inf):
        raise ValueError("need 1 < p, q < inf")
    w = cubes.window
    tg = t.on_grid(w)
    if tg.shape[0] != fs.shape[0]:
        raise ValueError("stack depth must match the number of window levels")
    den = lp_norm(_lq_sum(tg * np.abs(fs), q), p, w)
    if den == 0:
        raise ZeroDivisionError("zero field stack")
    mf = np.stack([hl_maximal(f, cubes) for f in fs])
    ratio = lp_norm(_lq_sum(tg * mf, q), p, w) / den
    ok, ests = check_level_ap(t, p, theta, cubes, exponent)
    return WeightedRatio(ratio, ok, tuple(e.constant for e in ests))


def random_field(window: IndexWindow, rng: np.random.Generator, kind: str = "mixed", spikes: int = 4) -> np.ndarray:
    """Standard normal per node, a few single-node spikes (scale 8), or both."""
    shape = window.grid_shape
    f = np.zeros(shape)
    if kind in ("gaussian", "mixed"):
        f += rng.standard_normal(shape)
    if kind in ("spikes", "mixed"):
        flat = f.reshape(-1)
        idx = rng.choice(flat.size, size=min(spikes, flat.size), replace=False)
        flat[idx] += rng.standard_normal(idx.size) * 8.0
    if kind not in ("gaussian", "spikes", "mixed"):
        raise ValueError(f"unknown field kind {kind!r}")
    return f


def random_stack(window: IndexWindow, rng: np.random.Generator, depth: int | None = None, kind: str = "mixed") -> np.ndarray:
    depth = window.num_levels if depth is None else depth
    return np.stack([random_field(window, rng, kind) for _ in range(depth)])
