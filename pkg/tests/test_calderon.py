from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from calderonlab.calderon import (
    NO_LEVEL,
    InterpolationSetup,
    factorize,
    g_function,
    level_sets,
    lower_norm,
    pair_cost,
    product_norm_bounds,
)
from calderonlab.dyadic import IndexWindow
from calderonlab.seqspace import CoeffField, SpaceSpec, finf_norm_esets, local_weight_table, random_coeffs
from calderonlab.weights import GeometricSequence, PowerWeight, ShiftedPowerWeight

W = IndexWindow(1, 2, -1, 2, 4)
T = GeometricSequence(0.5, ShiftedPowerWeight(0.3), 2.0)
U = GeometricSequence(-0.4, PowerWeight(0.2), 3.0)
INF = math.inf


def setups():
    return {
        "f": InterpolationSetup(0.4, SpaceSpec("f", 2.0, 1.5, T), SpaceSpec("f", 3.0, 4.0, U)),
        "b": InterpolationSetup(0.4, SpaceSpec("b", 2.0, 1.5, T), SpaceSpec("b", 3.0, 4.0, U)),
        "f_infinity": InterpolationSetup(0.4, SpaceSpec("f", 2.0, 1.5, T), SpaceSpec("f_infinity", INF, 4.0, U)),
        "f_pos": InterpolationSetup(0.4, SpaceSpec("f", 2.0, 3.0, T), SpaceSpec("f", 3.0, 1.5, U)),
    }


def test_setup_validation_and_json():
    with pytest.raises(ValueError):
        InterpolationSetup(1.0, SpaceSpec("f", 2, 2), SpaceSpec("f", 2, 2))
    with pytest.raises(ValueError):
        InterpolationSetup(0.5, SpaceSpec("b", 2, 2), SpaceSpec("f", 2, 2))
    with pytest.raises(ValueError):
        InterpolationSetup(0.5, SpaceSpec("f", 0.5, 2), SpaceSpec("f", 2, 2))
    s = setups()["f_infinity"]
    assert InterpolationSetup.from_dict(s.to_dict()) == s
    assert not InterpolationSetup(0.5, SpaceSpec("f", 1.0, 2), SpaceSpec("f", 2, 2)).within_proof_hypotheses


def test_branches():
    s = setups()
    assert s["b"].branch == "b"
    assert s["f"].branch == "gamma<0" and s["f_pos"].branch == "gamma>0"
    assert InterpolationSetup(0.3, SpaceSpec("f", 2, 2), SpaceSpec("f", 3, 3)).branch == "gamma=0"


@pytest.mark.parametrize("name", ["f", "b", "f_infinity", "f_pos"])
@pytest.mark.parametrize("n", [1, 2])
def test_exponent_identities(name, n):
    s = setups()[name]
    th = s.theta
    u, v = s.exponents(n)
    assert (1 - th) * u + th * v == pytest.approx(0, abs=1e-12)
    assert (1 - th) * s.gamma + th * s.delta == pytest.approx(0, abs=1e-12)
    p0, p1, q0, q1 = s.n_exponents
    assert 1 / s.q == pytest.approx((1 - th) / q0 + th / q1)
    if name == "f_infinity":
        assert 1 / s.p == pytest.approx((1 - th) / p0)
        kp = s.kappa * s.p
        assert 1 / kp == pytest.approx((1 - th) / p0 + th / q1)
        assert v + n / q1 + n / 2 == pytest.approx(n * s.q / q1 * (1 / kp + 0.5))
    else:
        assert 1 / s.p == pytest.approx((1 - th) / p0 + th / p1)
        assert s.mu == pytest.approx(-s.gamma)


@pytest.mark.parametrize("fam", ["f", "b"])
def test_identical_spaces_factor_trivially(fam):
    lam = random_coeffs(W, np.random.default_rng(3), 15)
    sp = SpaceSpec(fam, 2.0, 1.5, T)
    s = InterpolationSetup(0.5, sp, sp)
    fac = factorize(lam, s)
    for a, b, c in zip(fac.lambda0.data, fac.lambda1.data, lam.data):
        assert np.allclose(fac.M * a, np.abs(c)) and np.allclose(fac.M * b, np.abs(c))
    bnd = product_norm_bounds(lam, s)
    assert bnd.upper == pytest.approx(bnd.lower, rel=1e-12)


@pytest.mark.parametrize("name,expected", [
    ("f", 2.0 * 2 ** (0.5 - 0.6 / 2 - 0.4 / 3)),
    ("b", 2.0 * 2 ** (0.5 - 0.6 / 2 - 0.4 / 3)),
    ("f_pos", 2.0 * 2 ** (0.5 - 0.6 / 2 - 0.4 / 3)),
    ("f_infinity", 2.0 * 2 ** (0.5 - 0.6 / 2)),
])
def test_single_coefficient_closed_form(name, expected):
    base = setups()[name]
    one = GeometricSequence(0.0)
    s = InterpolationSetup(
        base.theta,
        SpaceSpec(base.space0.family, base.space0.p, base.space0.q, one),
        SpaceSpec(base.space1.family, base.space1.p, base.space1.q, one),
    )
    lam = CoeffField(W)
    lam[1, 0] = -2.0
    bnd = product_norm_bounds(lam, s)
    assert bnd.lower == pytest.approx(expected, rel=1e-12)
    assert bnd.upper == pytest.approx(expected, rel=1e-12)


def _oracle_levels(lam, g):
    """ell = ceil(log2 s) - 1 with s the (floor(b/2)+1)-th largest g on the cube."""
    w = lam.window
    out = []
    for i, k in enumerate(w.levels):
        b = w.block(k)
        a = np.full(w.level_shape(k), NO_LEVEL, dtype=np.int64)
        for j in range(w.level_shape(k)[0]):
            if lam.data[i][j] != 0:
                s = np.sort(g[j * b:(j + 1) * b])[::-1][b // 2]
                a[j] = math.ceil(math.log2(s)) - 1
        out.append(a)
    return out


@given(st.integers(0, 10_000), st.floats(0.5, 3.0))
def test_level_sets_match_order_statistic(seed, q):
    r = np.random.default_rng(seed)
    lam = random_coeffs(W, r, int(r.integers(1, 30)))
    g = g_function(lam, local_weight_table(T, W, 2.0), q)
    _, assign, unassigned = level_sets(lam, g)
    assert unassigned == 0
    for a, b in zip(assign, _oracle_levels(lam, g)):
        assert np.array_equal(a, b)


def test_level_sets_exact_power_of_two():
    lam = CoeffField(W)
    lam[0, 0] = 1.0
    g = np.zeros(W.grid_shape)
    b = W.block(0)
    g[:b] = 4.0  # exactly 2**2, belongs to C_1
    _, assign, _ = level_sets(lam, g)
    assert assign[W.levels.index(0)][0 - W.position_offset(0)] == 1


def test_nested_parent_child_factorization():
    lam = CoeffField(W)
    lam[0, 0] = 1.0
    lam[1, 0] = 5.0
    lam[1, 1] = 0.01
    for name, s in setups().items():
        fac = factorize(lam, s)
        rec = fac.reconstruct(s.theta)
        for a, c in zip(rec.data, lam.data):
            assert np.allclose(a, np.abs(c), rtol=1e-12, atol=0)
        bnd = product_norm_bounds(lam, s)
        assert bnd.lower <= bnd.upper * (1 + 1e-12), name


def test_zero_sequence():
    lam = CoeffField(W)
    for s in setups().values():
        bnd = product_norm_bounds(lam, s)
        assert bnd.lower == 0 and bnd.upper == 0 and bnd.ratio == 1.0


@pytest.mark.parametrize("name", ["f", "b", "f_infinity", "f_pos"])
@given(seed=st.integers(0, 10_000))
def test_reconstruction_and_bound_order(name, seed):
    s = setups()[name]
    lam = random_coeffs(W, np.random.default_rng(seed), 25)
    fac = factorize(lam, s)
    rec = fac.reconstruct(s.theta)
    for a, c in zip(rec.data, lam.data):
        assert np.allclose(a, np.abs(c), rtol=1e-12, atol=0)
    bnd = product_norm_bounds(lam, s)
    assert 0 < bnd.lower <= bnd.upper * (1 + 1e-12)
    assert bnd.branch == fac.branch


@pytest.mark.parametrize("name", ["f", "b", "f_infinity", "f_pos"])
@pytest.mark.parametrize("j", [-3, 2, 5])
def test_scale_equivariance(name, j):
    s = setups()[name]
    lam = random_coeffs(W, np.random.default_rng(11), 25)
    c = 2.0 ** j
    a, b = product_norm_bounds(lam, s), product_norm_bounds(c * lam, s)
    assert b.lower == pytest.approx(c * a.lower, rel=1e-12)
    assert b.upper == pytest.approx(c * a.upper, rel=1e-12)


def test_finf_second_factor_stays_bounded_under_scaling():
    s = setups()["f_infinity"]
    lam = random_coeffs(W, np.random.default_rng(5), 25)
    tab = local_weight_table(U, W, 4.0)
    base = finf_norm_esets(factorize(lam, s).lambda1, s.space1, tab)
    for c in (2.0 ** -10, 2.0 ** 10):
        val = finf_norm_esets(factorize(c * lam, s).lambda1, s.space1, tab)
        assert val == pytest.approx(base, rel=1e-9)
    vals = [finf_norm_esets(factorize(c * lam, s).lambda1, s.space1, tab) for c in (1e-6, 0.3, 7.0, 1e6)]
    assert max(vals) / min(vals) < 2


def test_branch_continuity_near_gamma_zero():
    lam = random_coeffs(W, np.random.default_rng(7), 25)

    def ratio(eps):
        s = InterpolationSetup(0.4, SpaceSpec("f", 2.0, 2.0 * (1 + eps), T), SpaceSpec("f", 3.0, 3.0, U))
        return s.branch, product_norm_bounds(lam, s).ratio

    b0, r0 = ratio(0.0)
    bp, rp = ratio(1e-4)
    bm, rm = ratio(-1e-4)
    assert (b0, bp, bm) == ("gamma=0", "gamma>0", "gamma<0")
    assert rp == pytest.approx(r0, rel=1e-3) and rm == pytest.approx(r0, rel=1e-3)


@pytest.mark.parametrize("name", ["f", "b", "f_infinity"])
@given(seed=st.integers(0, 10_000))
def test_any_pair_costs_at_least_the_norm(name, seed):
    s = setups()[name]
    r = np.random.default_rng(seed)
    l0 = abs(random_coeffs(W, r, 20))
    l1 = l0.map(lambda a: np.where(a != 0, np.exp(r.standard_normal(a.shape)), 0))
    lam = CoeffField(W, [np.abs(a) ** (1 - s.theta) * np.abs(b) ** s.theta for a, b in zip(l0.data, l1.data)])
    assert lower_norm(lam, s) <= pair_cost(l0, l1, s) * (1 + 1e-12)


def test_factorization_json(rng):
    s = setups()["f"]
    lam = random_coeffs(W, rng, 8)
    fac = factorize(lam, s)
    d = fac.to_dict()
    assert len(d["assignments"]) == 8 and len(d["lambda0"]) == 8
    assert d["branch"] == "gamma<0" and d["unassigned"] == 0
    assert fac.to_json() == factorize(lam, s).to_json()
