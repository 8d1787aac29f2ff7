from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from calderonlab.dyadic import (
    CubeFamily,
    DyadicCube,
    IndexWindow,
    block_max,
    block_mean,
    block_sum,
    enumerate_cubes,
    locate,
    quadrature_nodes,
    upsample,
)


def test_enumerate_unit_box_two_levels():
    w = IndexWindow(1, 0.5, 1, 1)  # box [-1/2, 1/2)
    assert [c.position for c in enumerate_cubes(w)] == [(-1,), (0,)]
    # box [0, 1) is not symmetric; emulate the listed example on [-1, 1) restricted to m >= 0
    w = IndexWindow(1, 1, 0, 1)
    cubes = [c for c in enumerate_cubes(w) if c.position[0] >= 0]
    assert [(c.level, c.position) for c in cubes] == [(0, (0,)), (1, (0,)), (1, (1,))]


def test_enumerate_counts():
    w = IndexWindow(2, 1, 1, 1)
    assert len(list(enumerate_cubes(w))) == 16  # [-1,1)^2 at side 1/2
    w = IndexWindow(1, 2, 0, 0)
    assert [c.position for c in enumerate_cubes(w)] == [(-2,), (-1,), (0,), (1,)]
    base = IndexWindow(1, 8, -3, 3)
    assert len(list(enumerate_cubes(base))) == 254


def test_enumeration_order_is_level_then_lexicographic():
    w = IndexWindow(2, 1, 0, 1)
    cubes = list(enumerate_cubes(w))
    keys = [(c.level, c.position) for c in cubes]
    assert keys == sorted(keys)
    assert len(set(keys)) == len(keys)


def test_locate_examples():
    assert locate(0.3, 2) == DyadicCube(2, (1,))
    assert locate(0.0, 5) == DyadicCube(5, (0,))
    assert locate((0.6, 0.1), 1) == DyadicCube(1, (1, 0))
    assert locate(-0.1, 0) == DyadicCube(0, (-1,))


def test_quadrature_examples():
    pts, wts = quadrature_nodes(DyadicCube(0, (0,)), 2)
    assert np.allclose(pts.ravel(), [0.25, 0.75]) and np.allclose(wts, [0.5, 0.5])
    pts, wts = quadrature_nodes(DyadicCube(1, (0,)), 2)
    assert np.allclose(pts.ravel(), [0.125, 0.375]) and np.allclose(wts, [0.25, 0.25])
    pts, wts = quadrature_nodes(DyadicCube(0, (0,)), 2)
    assert np.sum(pts.ravel() * wts) == pytest.approx(0.5)


def test_quadrature_convergence_second_order():
    cube = DyadicCube(0, (0,))
    exact = (np.e - 1)
    errs = []
    for R in (4, 8, 16):
        pts, wts = quadrature_nodes(cube, R)
        errs.append(abs(np.sum(np.exp(pts[:, 0]) * wts) - exact))
    assert errs[0] / errs[1] == pytest.approx(4, rel=0.02)
    assert errs[1] / errs[2] == pytest.approx(4, rel=0.02)


@given(st.integers(-3, 3), st.integers(-20, 20), st.integers(1, 3))
def test_cube_geometry(k, m, n):
    c = DyadicCube(k, (m,) * n)
    assert c.volume == pytest.approx(2.0 ** (-k * n))
    assert c.parent().contains_cube(c)
    kids = c.children()
    assert len(kids) == 2 ** n
    assert sum(kid.volume for kid in kids) == pytest.approx(c.volume)
    assert all(kid.parent() == c for kid in kids)


@given(st.floats(-7.99, 7.99), st.integers(-2, 3))
def test_locate_nesting(x, k):
    w = IndexWindow(1, 8, -3, 3)
    child = locate(x, k, w)
    assert child.contains([x])
    assert locate(x, k - 1, w).contains_cube(child)


def test_partition_of_nodes():
    w = IndexWindow(2, 1, 0, 2, 2)
    for k in w.levels:
        count = np.zeros(w.grid_shape)
        for c in w.cubes(k):
            count[w.cube_slices(c)] += 1
        assert np.all(count == 1)


def test_window_refine_and_grow():
    w = IndexWindow(1, 8, -3, 3, 4)
    r = w.refined()
    assert r.R == 8 and r.grid_size == 2 * w.grid_size
    g = w.grown()
    assert (g.k_min, g.k_max) == (-4, 4) and g.L == 16
    assert IndexWindow.from_json(w.to_json()) == w


def test_window_validation():
    with pytest.raises(ValueError):
        IndexWindow(1, 0.5, 0, 1)
    with pytest.raises(ValueError):
        IndexWindow(1, 1, 0, 1, R=1)
    with pytest.raises(ValueError):
        IndexWindow(1, 1, 2, 1)


def test_block_helpers_batch():
    a = np.arange(2 * 8, dtype=float).reshape(2, 8)
    assert np.array_equal(block_sum(a, 4, 1), [[6, 22], [38, 54]])
    assert np.array_equal(block_mean(a, 2, 1)[0], [0.5, 2.5, 4.5, 6.5])
    assert np.array_equal(block_max(a, 8, 1), [[7], [15]])
    assert upsample(np.array([1.0, 2.0]), 3, 1).tolist() == [1, 1, 1, 2, 2, 2]
    b = np.arange(16.0).reshape(4, 4)
    assert np.array_equal(block_sum(b, 2, 2), [[10, 18], [42, 50]])


def test_family_sizes_and_coverage(base_window):
    dy = CubeFamily.dyadic(base_window)
    assert len(dy) == 254
    sh = CubeFamily.shifted(base_window)
    assert len(sh) == sum(base_window.per_side(k) - 1 for k in base_window.levels)
    en = CubeFamily.enlarged(base_window)
    assert len(en) == len(dy) + len(sh) + base_window.grid_size
    out = en.sup_of_means(np.ones(base_window.grid_shape))
    assert np.all(out == 1)


def test_custom_family(small_window):
    fam = CubeFamily.custom(small_window, [((0.0,), 1.0)])
    (center, side, prov), = list(fam.cubes())
    assert center[0] == pytest.approx(0.5) and side == 1.0 and prov == "custom"
    f = np.zeros(small_window.grid_shape)
    f[small_window.axis_nodes() >= 0] = 1
    out = fam.sup_of_means(f)
    assert np.isneginf(out[small_window.axis_nodes() < 0]).all()
    with pytest.raises(ValueError):
        CubeFamily.custom(small_window, [((1.5,), 1.0)])


def test_shifted_cubes_straddle_dyadic_boundaries(small_window):
    fam = CubeFamily.shifted(small_window, [0])
    centers = sorted(c[0][0] for c in fam.cubes())
    assert centers == pytest.approx([-1.0, 0.0, 1.0])
