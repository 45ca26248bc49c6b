import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mortar_schwarz.mortar import (
    InterfaceGrid,
    MortarSpace,
    PiecewiseLinearTrace,
    build_mortar,
    build_projection,
    end_segment_psi,
    end_segment_quantities,
    hat_cross_mass,
    merge_grids,
    robin_moment,
)

from conftest import dense_projection_oracle, mortar_basis_oracle, random_grid


@st.composite
def grids(draw, min_n=2, max_n=12):
    n = draw(st.integers(min_n, max_n))
    cuts = draw(st.lists(st.floats(0.01, 0.99), min_size=n - 1, max_size=n - 1, unique=True))
    s = np.concatenate([[0.0], np.sort(cuts), [1.0]])
    if np.min(np.diff(s)) < 1e-3:
        s = np.linspace(0, 1, n + 1)
    return InterfaceGrid(s, 0, 0)


def test_mortar_dimension_and_constant_basis():
    assert build_mortar(InterfaceGrid([0, 1 / 3, 2 / 3, 1])).dim == 2
    m = build_mortar(InterfaceGrid([0, 0.5, 1]))
    assert m.dim == 1
    x = np.linspace(0, 1, 17)
    np.testing.assert_allclose(m.basis_values(x)[:, 0], 1.0)
    with pytest.raises(ValueError):
        build_mortar(InterfaceGrid([0, 1]))


@given(grids())
def test_basis_partition_of_unity(grid):
    m = MortarSpace(grid)
    x = np.linspace(0, 1, 101)
    np.testing.assert_allclose(m.basis_values(x).sum(axis=1), 1.0, atol=1e-13)


@given(grids())
def test_basis_matches_piecewise_definition(grid):
    m = MortarSpace(grid)
    x = np.linspace(0, 1, 57)
    for i in range(m.dim):
        np.testing.assert_allclose(m.basis_values(x)[:, i], mortar_basis_oracle(grid.s, i, x), atol=1e-13)


def test_merge_examples():
    a = InterfaceGrid([0, 0.5, 1])
    b = InterfaceGrid([0, 1 / 3, 2 / 3, 1])
    np.testing.assert_allclose(merge_grids(a, b), [0, 1 / 3, 0.5, 2 / 3, 1])
    np.testing.assert_array_equal(merge_grids(b, b), b.s)
    with pytest.raises(ValueError):
        merge_grids(a, InterfaceGrid([0, 0.5, 1.1]))


@given(grids(1), grids(1))
def test_merge_segments_nested(a, b):
    m = merge_grids(a, b)
    assert len(m) - 1 <= a.n + b.n - 1
    mids = 0.5 * (m[:-1] + m[1:])
    for g in (a, b):
        seg = g.locate(mids)
        assert np.all(g.s[seg] <= m[:-1] + 1e-12) and np.all(m[1:] <= g.s[seg + 1] + 1e-12)


def test_projection_frozen_value():
    source = InterfaceGrid([0, 0.5, 1], 1, 0)
    target = MortarSpace(InterfaceGrid([0, 1 / 3, 2 / 3, 1], 0, 0))
    coeffs = build_projection(source, target)([0, 1, 0])
    # exact rational oracle: M = [[4/9, 1/18], [1/18, 4/9]], moments = [1/4, 1/4]
    np.testing.assert_allclose(coeffs, [0.5, 0.5], atol=1e-14)
    np.testing.assert_allclose(coeffs, dense_projection_oracle(source.s, target.grid.s, [0, 1, 0]), atol=1e-13)


def test_projection_against_dense_oracle(rng):
    for _ in range(20):
        s = random_grid(rng, rng.integers(1, 15))
        t = random_grid(rng, rng.integers(2, 15))
        v = rng.standard_normal(len(s))
        proj = build_projection(InterfaceGrid(s), MortarSpace(InterfaceGrid(t)))
        np.testing.assert_allclose(proj(v), dense_projection_oracle(s, t, v), atol=1e-12)


@given(grids(), grids(1))
def test_projection_fixes_range_and_constants(target_grid, source_grid):
    target = MortarSpace(target_grid)
    same = build_projection(target_grid, target)
    c = np.arange(1.0, target.dim + 1)
    np.testing.assert_allclose(same(target.to_trace(c)), c, atol=1e-11)
    other = build_projection(source_grid, target)
    np.testing.assert_allclose(other(np.full(source_grid.n + 1, 2.5)), 2.5, atol=1e-12)


def _l2(grid_a, va, grid_b, vb):
    return float(va @ hat_cross_mass(grid_a, grid_b) @ vb)


@settings(max_examples=50)
@given(grids(), grids(), st.integers(0, 2**31 - 1))
def test_projection_properties(gk, gl, seed):
    rng = np.random.default_rng(seed)
    mk, ml = MortarSpace(gk), MortarSpace(gl)
    pk = build_projection(gl, mk)  # side-l data onto side-k mortar
    v = rng.standard_normal(gl.n + 1)
    pv = mk.to_trace(pk(v))
    # orthogonality of the residual in every moment
    resid = mk.cross_moments(gk) @ pv - mk.cross_moments(gl) @ v
    assert np.max(np.abs(resid)) <= 1e-12 * max(1.0, np.abs(v).max())
    # idempotence
    np.testing.assert_allclose(build_projection(gk, mk)(pv), pk(v), atol=1e-11)
    # contraction
    assert _l2(gk, pv, gk, pv) <= _l2(gl, v, gl, v) + 1e-12
    # best approximation
    err = lambda w: _l2(gl, v, gl, v) - 2 * _l2(gl, v, gk, w) + _l2(gk, w, gk, w)
    best = err(pv)
    for _ in range(20):
        w = mk.to_trace(rng.standard_normal(mk.dim))
        assert best <= err(w) + 1e-12
    # self-adjointness between the two sides
    u = rng.standard_normal(gl.n + 1)
    w = ml.to_trace(rng.standard_normal(ml.dim))
    lhs = _l2(gk, mk.to_trace(pk(u)), gk, mk.to_trace(build_projection(gl, mk)(w)))
    rhs = _l2(gl, u, gk, mk.to_trace(pk(w)))
    assert lhs == pytest.approx(rhs, abs=1e-12)


def test_projection_approximation_order():
    errs = []
    for n in (8, 16, 32, 64, 128):
        src = InterfaceGrid(np.linspace(0, 1, n + 1))
        tgt = MortarSpace(InterfaceGrid(np.linspace(0, 1, int(1.5 * n) + 1)))
        x = np.linspace(0, 1, 20001)
        v = np.sin(np.pi * src.s)
        pv = tgt.evaluate(build_projection(src, tgt)(v), x)
        errs.append(np.sqrt(np.trapezoid((np.sin(np.pi * x) - pv) ** 2, x)))
    rates = np.log(np.array(errs[:-1]) / errs[1:]) / np.log(2)
    assert np.all(rates >= 0.9)


def test_projection_rejects_other_interface():
    with pytest.raises(ValueError):
        build_projection(InterfaceGrid([0, 1], 0, 1), MortarSpace(InterfaceGrid([0, 0.5, 1], 0, 0)))


def test_robin_moment_cases(rng):
    a = MortarSpace(InterfaceGrid([0, 0.2, 0.5, 1.0], 0, 0))
    b = MortarSpace(InterfaceGrid([0, 0.3, 0.6, 0.8, 1.0], 1, 0))
    np.testing.assert_allclose(robin_moment(np.zeros(5), np.zeros(3), 4.0, b, a), 0.0)
    u1, u2 = rng.standard_normal((2, 5))
    p1, p2 = rng.standard_normal((2, 3))
    np.testing.assert_allclose(robin_moment(u1, p1, 4.0, b, a) + robin_moment(u2, p2, 4.0, b, a),
                               robin_moment(u1 + u2, p1 + p2, 4.0, b, a), atol=1e-13)
    # conforming grids: -M_W p + alpha C u with same-grid matrices
    c = MortarSpace(InterfaceGrid(a.grid.s, 1, 0))
    u = rng.standard_normal(4)
    p = rng.standard_normal(2)
    np.testing.assert_allclose(robin_moment(u, p, 4.0, c, a),
                               -a.mass_matrix @ p + 4.0 * a.trace_moments() @ u, atol=1e-13)
    with pytest.raises(ValueError):
        robin_moment(u, p, 1.0, MortarSpace(InterfaceGrid(a.grid.s, 1, 5)), a)


def test_end_segment_psi_examples():
    g = InterfaceGrid([0, 0.25, 0.5, 0.75, 1.0])
    zero = end_segment_psi(PiecewiseLinearTrace(g, np.zeros(5)))
    np.testing.assert_array_equal(zero.values, 0)
    hat = end_segment_psi(PiecewiseLinearTrace(g, [0, 1, 0, 0, 0]))
    np.testing.assert_array_equal(hat.values, [1, 1, 0, 0, 0])
    mid = end_segment_psi(PiecewiseLinearTrace(g, [0, 0, 2, 0, 0]))
    np.testing.assert_array_equal(mid.values, [0, 0, 2, 0, 0])
    with pytest.raises(ValueError):
        end_segment_psi(PiecewiseLinearTrace(g, [1, 0, 0, 0, 0]))
    # psi lies in the mortar space
    m = MortarSpace(g)
    psi = end_segment_psi(PiecewiseLinearTrace(g, [0, 0.3, -1, 2, 0]))
    np.testing.assert_allclose(m.to_trace(psi.values[1:-1]), psi.values)


def test_end_segment_inequality_random(rng):
    worst = 0.0
    for _ in range(100):
        gl = InterfaceGrid(random_grid(rng, rng.integers(2, 20)))
        gk = InterfaceGrid(random_grid(rng, rng.integers(2, 20)))
        eta = np.concatenate([[0], rng.standard_normal(gl.n - 1), [0]])
        q = end_segment_quantities(PiecewiseLinearTrace(gl, eta), gk)
        assert q["lhs"] >= q["eta_sq"] - 1e-10
        worst = max(worst, q["psi_norm"] / q["eta_norm"])
    # end segments give at most sqrt(3)
    assert worst <= np.sqrt(3) + 1e-12
