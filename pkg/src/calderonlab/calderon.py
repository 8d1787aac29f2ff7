"""Calderón products of weighted sequence spaces.

Given ``lambda`` in the interpolated space, the factorization routines build
``lambda0`` and ``lambda1`` with ``|lambda| = lambda0**(1-theta) * lambda1**theta``
entrywise.  ``product_norm_bounds`` then sandwiches the Calderón product norm:
the lower bound is the interpolated-space norm (Hölder makes it a true lower
bound for any feasible pair) and the upper bound is the cost of the
constructed pair.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .dyadic import IndexWindow, block_sum, upsample
from .seqspace import (
    CoeffField,
    LocalWeightTable,
    SpaceSpec,
    bnorm,
    finf_norm_esets,
    fnorm,
    fnorm_star,
    holder_combine,
    local_weight_table,
)
from .weights import WeightSequence

NO_LEVEL = np.iinfo(np.int64).min  # assignment sentinel for zero coefficients


@dataclass(frozen=True)
class InterpolationSetup:
    """Two spaces, an interpolation parameter and everything derived from them."""

    theta: float
    space0: SpaceSpec
    space1: SpaceSpec

    def __post_init__(self):
        if not 0 < self.theta < 1:
            raise ValueError("theta must lie in (0, 1)")
        f0, f1 = self.space0.family, self.space1.family
        if (f0, f1) not in {("f", "f"), ("b", "b"), ("f", "f_infinity")}:
            raise ValueError(f"unsupported pair of spaces ({f0}, {f1})")
        for v in (self.space0.p, self.space0.q, self.space1.q):
            if v < 1:
                raise ValueError("exponents must be at least 1")
        if self.variant != "f_infinity" and self.space1.p < 1:
            raise ValueError("exponents must be at least 1")

    @property
    def variant(self) -> str:
        return self.space1.family

    @property
    def n_exponents(self) -> tuple[float, float, float, float]:
        s0, s1 = self.space0, self.space1
        return s0.p, s1.p, s0.q, s1.q

    @property
    def within_proof_hypotheses(self) -> bool:
        """Whether all exponents are strictly above 1, as the proofs assume."""
        p0, p1, q0, q1 = self.n_exponents
        vals = [p0, q0, q1] + ([] if self.variant == "f_infinity" else [p1])
        return all(v > 1 for v in vals)

    @property
    def p(self) -> float:
        t = self.theta
        p0, p1, _, _ = self.n_exponents
        if self.variant == "f_infinity":
            return p0 / (1 - t)
        return 1.0 / ((1 - t) / p0 + t / p1)

    @property
    def q(self) -> float:
        t = self.theta
        _, _, q0, q1 = self.n_exponents
        return 1.0 / ((1 - t) / q0 + t / q1)

    @property
    def kappa(self) -> float:
        """``1/(kappa p) = (1-theta)/p0 + theta/q1`` (f-infinity pairs only)."""
        t = self.theta
        p0, _, _, q1 = self.n_exponents
        return 1.0 / (self.p * ((1 - t) / p0 + t / q1))

    @property
    def gamma(self) -> float:
        return self.p / self.space0.p - self.q / self.space0.q

    @property
    def delta(self) -> float:
        if self.variant == "f_infinity":
            return -self.q / self.space1.q
        return self.p / self.space1.p - self.q / self.space1.q

    @property
    def mu(self) -> float:
        return self.q / self.space0.q - self.p / self.space0.p

    @property
    def tau(self) -> float:
        return self.q / self.space1.q - self.p / self.space1.p

    def exponents(self, n: int) -> tuple[float, float]:
        """``(u, v)`` for dimension ``n``."""
        p0, p1, q0, q1 = self.n_exponents
        p, q = self.p, self.q
        if self.variant == "b":
            return n / 2 * (q / q0 - 1), n / 2 * (q / q1 - 1)
        if self.variant == "f":
            u = n * (q / (q0 * p) - 1 / p0) + n / 2 * (q / q0 - 1)
            v = n * (q / (q1 * p) - 1 / p1) + n / 2 * (q / q1 - 1)
            return u, v
        kp = self.kappa * p
        u = n * (q / (q0 * kp) - 1 / p0) + n / 2 * (q / q0 - 1)
        v = n * (q / (q1 * kp) - 1 / q1) + n / 2 * (q / q1 - 1)
        return u, v

    @property
    def omega(self) -> WeightSequence:
        return holder_combine(self.space0.weights, self.space1.weights, self.theta)

    @property
    def target(self) -> SpaceSpec:
        """The interpolated space (family of ``space0``, exponents ``p``, ``q``, weights ``omega``)."""
        return SpaceSpec(self.space0.family, self.p, self.q, self.omega)

    @property
    def branch(self) -> str:
        if self.variant == "b":
            return "b"
        g = self.gamma
        if abs(g) < 1e-14:
            return "gamma=0"
        return "gamma>0" if g > 0 else "gamma<0"

    def to_dict(self) -> dict:
        return {"theta": self.theta, "space0": self.space0.to_dict(), "space1": self.space1.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "InterpolationSetup":
        return cls(float(d["theta"]), SpaceSpec.from_dict(d["space0"]), SpaceSpec.from_dict(d["space1"]))


@dataclass
class Factorization:
    lambda0: CoeffField
    lambda1: CoeffField
    M: float
    branch: str
    assignments: list[np.ndarray] | None = None  # per level, ell of each cube (NO_LEVEL if zero)
    unassigned: int = 0

    def reconstruct(self, theta: float) -> CoeffField:
        return CoeffField(
            self.lambda0.window,
            [self.M * np.abs(a) ** (1 - theta) * np.abs(b) ** theta for a, b in zip(self.lambda0.data, self.lambda1.data)],
        )

    def to_dict(self) -> dict:
        def pack(c: CoeffField):
            return [{"k": k, "m": list(m), "value": v.real} for k, m, v in c.entries()]

        out = {"M": self.M, "branch": self.branch, "lambda0": pack(self.lambda0), "lambda1": pack(self.lambda1)}
        rows = []
        if self.assignments is not None:
            w = self.lambda0.window
            for k, a in zip(w.levels, self.assignments):
                off = w.position_offset(k)
                for idx in zip(*np.nonzero(a != NO_LEVEL)):
                    rows.append({"k": k, "m": [int(i) + off for i in idx], "l": int(a[idx])})
        out["assignments"] = rows
        out["unassigned"] = self.unassigned
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


# ---------------------------------------------------------------------------
# level sets


def g_function(lam: CoeffField, table: LocalWeightTable, q: float) -> np.ndarray:
    """``(sum 2^{kn(1/r + 1/2) q} omega_{k,m}^q |lambda|^q chi_{k,m})^{1/q}`` with ``r`` the table exponent."""
    w = lam.window
    r = table.exponent
    acc = np.zeros(w.grid_shape)
    for i, k in enumerate(w.levels):
        coef = 2.0 ** (k * w.n * (1 / r + 0.5) * q) * (table.values[i] * np.abs(lam.data[i])) ** q
        acc += upsample(coef, w.block(k), w.n)
    return acc ** (1.0 / q)


def ell_range(g: np.ndarray) -> range:
    """Levels ``ell`` that can carry a nonempty ``C_ell``.

    ``A_ell = {g > 2^ell}``; a cube where ``g`` equals an exact power of two
    ``2^j`` belongs to ``C_{j-1}``, so the range starts one below
    ``floor(log2 min g)``.
    """
    pos = g[g > 0]
    if pos.size == 0:
        return range(0)
    lo = math.floor(math.log2(float(pos.min()))) - 1
    hi = math.ceil(math.log2(float(pos.max())))
    return range(lo, hi + 1)


def level_sets(lam: CoeffField, g: np.ndarray) -> tuple[range, list[np.ndarray], int]:
    """Assign each nonzero coefficient to the ``ell`` with ``(k, m)`` in ``C_ell``.

    ``C_ell``: more than half of the cube's nodes lie in ``A_ell`` and at most
    half lie in ``A_{ell+1}``.  Returns the ell range, one integer array per
    level (``NO_LEVEL`` for zero or unassigned coefficients) and the number of
    nonzero coefficients that fell in no ``C_ell``.
    """
    w = lam.window
    ells = ell_range(g)
    out = []
    unassigned = 0
    for i, k in enumerate(w.levels):
        b = w.block(k)
        nodes = b ** w.n
        assign = np.full(w.level_shape(k), NO_LEVEL, dtype=np.int64)
        if len(ells):
            counts = np.stack([block_sum((g > 2.0 ** l).astype(np.int64), b, w.n) for l in ells] + [
                block_sum((g > 2.0 ** (ells[-1] + 1)).astype(np.int64), b, w.n)
            ])
            for j, l in enumerate(ells):
                member = (2 * counts[j] > nodes) & (2 * counts[j + 1] <= nodes)
                assign[member] = l
        nz = lam.data[i] != 0
        missing = nz & (assign == NO_LEVEL)
        if np.any(missing):
            unassigned += int(missing.sum())
            # fall back to the ell whose A_ell covers the largest share of the cube
            frac = np.stack([block_sum((g > 2.0 ** l).astype(float), b, w.n) for l in ells])
            assign[missing] = np.asarray(ells)[np.argmax(frac, axis=0)][missing]
        assign[~nz] = NO_LEVEL
        out.append(assign)
    return ells, out, unassigned


# ---------------------------------------------------------------------------
# factorizations


def _theta_eps(tab_t: LocalWeightTable, tab_w: LocalWeightTable, i: int, theta: float, e0: float, e1: float):
    """Per-cube factors ``w^{theta e0} t^{-theta e1}`` and ``t^{(1-theta) e1} w^{-(1-theta) e0}``."""
    t = tab_t.values[i]
    w = tab_w.values[i]
    if np.any(t <= 0) or np.any(w <= 0):
        raise ValueError("vanishing per-cube weight norm")
    return w ** (theta * e0) * t ** (-theta * e1), t ** ((1 - theta) * e1) * w ** (-(1 - theta) * e0)


def _level_factorization(lam: CoeffField, setup: InterpolationSetup, tab_t, tab_w, tab_g) -> Factorization:
    window = lam.window
    th, q = setup.theta, setup.q
    q0, q1 = setup.space0.q, setup.space1.q
    u, v = setup.exponents(window.n)
    branch = setup.branch
    gam, dlt = (0.0, 0.0) if branch == "gamma=0" else (setup.gamma, setup.delta)
    g = g_function(lam, tab_g, q)
    _, assign, unassigned = level_sets(lam, g)
    l0, l1 = [], []
    for i, k in enumerate(window.levels):
        a = np.abs(lam.data[i])
        nz = a > 0
        ell = np.where(nz, assign[i], 0).astype(float)
        vt, ep = _theta_eps(tab_t, tab_w, i, th, q / q0, q / q1)
        x0 = vt * 2.0 ** (k * u) * 2.0 ** (ell * gam) * a ** (q / q0)
        x1 = ep * 2.0 ** (k * v) * 2.0 ** (ell * dlt) * a ** (q / q1)
        l0.append(np.where(nz, x0, 0.0).astype(complex))
        l1.append(np.where(nz, x1, 0.0).astype(complex))
    return Factorization(CoeffField(window, l0), CoeffField(window, l1), 1.0, branch, assign, unassigned)


def factorize_f(lam: CoeffField, setup: InterpolationSetup) -> Factorization:
    """Level-set factorization between two f-spaces.

    The same ``C_ell`` assignment serves every sign of ``gamma``: the sign only
    changes which measure estimate bounds the factors, not the construction.
    For ``gamma = 0`` the ``2^{ell gamma}``, ``2^{ell delta}`` factors drop out.
    """
    if setup.variant != "f":
        raise ValueError("factorize_f needs two f-spaces")
    w = lam.window
    s0, s1 = setup.space0, setup.space1
    tab_t = local_weight_table(s0.weights, w, s0.p)
    tab_w = local_weight_table(s1.weights, w, s1.p)
    tab_g = local_weight_table(setup.omega, w, setup.p)
    return _level_factorization(lam, setup, tab_t, tab_w, tab_g)


def factorize_finf(lam: CoeffField, setup: InterpolationSetup) -> Factorization:
    """Level-set factorization into an f-space and an f-infinity space."""
    if setup.variant != "f_infinity":
        raise ValueError("factorize_finf needs an (f, f_infinity) pair")
    w = lam.window
    s0, s1 = setup.space0, setup.space1
    tab_t = local_weight_table(s0.weights, w, s0.p)
    tab_w = local_weight_table(s1.weights, w, s1.q)
    tab_g = local_weight_table(setup.omega, w, setup.p, setup.kappa)
    return _level_factorization(lam, setup, tab_t, tab_w, tab_g)


def factorize_b(lam: CoeffField, setup: InterpolationSetup, level_weights: str = "omega") -> Factorization:
    """Level-by-level factorization between two b-spaces.

    Each level is rescaled by ``S_k = sum_h |lambda_{k,h}|^p c_{k,h}^p`` where
    ``c`` are the per-cube norms of ``omega`` (``level_weights="omega"``) or of
    ``t`` (``"t"``).  The reconstruction identity holds for either choice.
    """
    if setup.variant != "b":
        raise ValueError("factorize_b needs two b-spaces")
    window = lam.window
    s0, s1 = setup.space0, setup.space1
    th, p = setup.theta, setup.p
    p0, p1 = s0.p, s1.p
    mu, tau = setup.mu, setup.tau
    u, v = setup.exponents(window.n)
    tab_t = local_weight_table(s0.weights, window, p0)
    tab_w = local_weight_table(s1.weights, window, p1)
    if level_weights == "omega":
        tab_s = local_weight_table(setup.omega, window, p)
    elif level_weights == "t":
        tab_s = local_weight_table(s0.weights, window, p)
    else:
        raise ValueError(f"unknown level weights {level_weights!r}")
    l0, l1 = [], []
    for i, k in enumerate(window.levels):
        a = np.abs(lam.data[i])
        nz = a > 0
        S = float(np.sum((a * tab_s.values[i]) ** p))
        if np.any(nz) and S <= 0:
            raise ValueError(f"vanishing level sum at level {k}")
        vt, ep = _theta_eps(tab_t, tab_w, i, th, p / p0, p / p1)
        with np.errstate(divide="ignore"):
            x0 = vt * 2.0 ** (k * u) * a ** (p / p0) * (S ** (mu / p) if S > 0 else 0.0)
            x1 = ep * 2.0 ** (k * v) * a ** (p / p1) * (S ** (tau / p) if S > 0 else 0.0)
        l0.append(np.where(nz, x0, 0.0).astype(complex))
        l1.append(np.where(nz, x1, 0.0).astype(complex))
    return Factorization(CoeffField(window, l0), CoeffField(window, l1), 1.0, "b")


def factorize(lam: CoeffField, setup: InterpolationSetup) -> Factorization:
    return {"f": factorize_f, "b": factorize_b, "f_infinity": factorize_finf}[setup.variant](lam, setup)


# ---------------------------------------------------------------------------
# two-sided bounds


def lower_norm(lam: CoeffField, setup: InterpolationSetup) -> float:
    """Norm of ``lambda`` in the interpolated space (κ-starred form for f-infinity pairs)."""
    w = lam.window
    if setup.variant == "f":
        return fnorm(lam, setup.target)
    if setup.variant == "b":
        return bnorm(lam, setup.target)
    tab = local_weight_table(setup.omega, w, setup.p, setup.kappa)
    return fnorm_star(lam, setup.target, tab)


def pair_cost(lam0: CoeffField, lam1: CoeffField, setup: InterpolationSetup) -> float:
    """``||lambda0||_0^{1-theta} ||lambda1||_1^theta`` in the endpoint spaces."""
    th = setup.theta
    s0, s1 = setup.space0, setup.space1
    w = lam0.window
    if setup.variant == "f":
        a, b = fnorm(lam0, s0), fnorm(lam1, s1)
    elif setup.variant == "b":
        a, b = bnorm(lam0, s0), bnorm(lam1, s1)
    else:
        a = fnorm_star(lam0, s0, local_weight_table(s0.weights, w, s0.p))
        b = finf_norm_esets(lam1, s1, local_weight_table(s1.weights, w, s1.q))
    return a ** (1 - th) * b ** th


@dataclass(frozen=True)
class ProductBounds:
    lower: float
    upper: float
    branch: str
    unassigned: int

    @property
    def ratio(self) -> float:
        return self.upper / self.lower if self.lower > 0 else 1.0

    def to_dict(self) -> dict:
        return {"lower": self.lower, "upper": self.upper, "ratio": self.ratio, "branch": self.branch, "unassigned": self.unassigned}


def product_norm_bounds(lam: CoeffField, setup: InterpolationSetup) -> ProductBounds:
    """Certified ``lower <= ||lambda||_{X0^{1-theta} X1^theta} <= upper``."""
    fac = factorize(lam, setup)
    return ProductBounds(lower_norm(lam, setup), pair_cost(fac.lambda0, fac.lambda1, setup), fac.branch, fac.unassigned)
