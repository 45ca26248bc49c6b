import numpy as np
import pytest
import scipy.linalg as sla

from mortar_schwarz.fem import (
    P1Space,
    ScalarField2D,
    assemble_interface_cross_mass,
    assemble_load,
    assemble_mass,
    assemble_stiffness,
    assemble_stiffness_mass,
    constant_field,
    element_mass,
    element_stiffness,
    error_norms,
    solve_dirichlet,
    solve_local_robin,
)
from mortar_schwarz.mesh import InterfaceDecl, Rect, generate_structured
from mortar_schwarz.mortar import InterfaceGrid, MortarSpace
from mortar_schwarz.problems import manufactured
from mortar_schwarz.quadrature import _RULES, triangle_rule

REF = np.array([[0, 0], [1, 0], [0, 1]], float)


def test_reference_element_matrices():
    np.testing.assert_allclose(element_stiffness(REF), 0.5 * np.array([[2, -1, -1], [-1, 1, 0], [-1, 0, 1]]),
                               atol=1e-15)
    np.testing.assert_allclose(element_mass(REF), np.array([[2, 1, 1], [1, 2, 1], [1, 1, 2]]) / 24, atol=1e-15)


@pytest.mark.parametrize("deg", sorted(_RULES))
def test_triangle_rules_exact_on_monomials(deg):
    from math import factorial
    bary, w = triangle_rule(deg)
    x, y = bary[:, 1], bary[:, 2]
    for a in range(deg + 1):
        for b in range(deg + 1 - a):
            exact = factorial(a) * factorial(b) / factorial(a + b + 2)
            assert 0.5 * np.sum(w * x**a * y**b) == pytest.approx(exact, abs=1e-14)


def test_constant_field_rows():
    space = P1Space(generate_structured(Rect(0, 0, 1, 1), 3, 2))
    ones = np.ones(space.dof_count)
    np.testing.assert_allclose(assemble_stiffness(space) @ ones, 0, atol=1e-13)
    A = assemble_stiffness_mass(space)
    load = assemble_load(space, constant_field(1.0))
    np.testing.assert_allclose(A @ ones, load, atol=1e-14)
    assert load.sum() == pytest.approx(1.0, abs=1e-14)


def test_symmetry_and_definiteness():
    space = P1Space(generate_structured(Rect(0, 0, 0.5, 1), 3, 5, "alternate"))
    A = assemble_stiffness_mass(space).toarray()
    assert np.max(np.abs(A - A.T)) <= 1e-14
    assert np.linalg.eigvalsh(A).min() > 0


def test_load_linear_field_exact():
    space = P1Space(generate_structured(Rect(0, 0, 1, 1), 1, 1))
    F = assemble_load(space, ScalarField2D(lambda x, y: x))
    # int x lambda_i over a triangle = area/12 * (sum of x + x_i)
    expected = np.zeros(4)
    m = space.mesh
    for t, area in zip(m.triangles, m.signed_areas()):
        xs = m.vertices[t, 0]
        expected[t] += area / 12 * (xs.sum() + xs)
    np.testing.assert_allclose(F, expected, atol=1e-15)


def test_manufactured_rhs_finite():
    space = P1Space(generate_structured(Rect(0, 0, 1, 1), 4, 4))
    f = manufactured().f
    assert np.all(np.isfinite(space.interpolate(f)))
    assert np.all(np.isfinite(assemble_load(space, f)))


def test_load_quadrature_orders_converge():
    f = manufactured().f
    diffs = []
    for n in (2, 4, 8):
        space = P1Space(generate_structured(Rect(0, 0, 1, 1), n, n))
        diffs.append(np.abs(assemble_load(space, f, 4) - assemble_load(space, f, 7)).sum())
    assert diffs[0] > diffs[1] > diffs[2]


def test_gradient_rule_matches_differences(rng):
    u = manufactured().exact
    assert u.check_gradient(rng.uniform(0, 1, (50, 2))) < 1e-6


HALF = Rect(0, 0, 0.5, 1)
IFACE = InterfaceDecl(0, ((0.5, 0.0), (0.5, 1.0)), 0, 1)


def test_cross_mass_frozen_values():
    space = P1Space(generate_structured(HALF, 1, 3, interfaces=[IFACE]))
    tv = space.mesh.interface_vertices(0)
    mortar = MortarSpace(InterfaceGrid(space.mesh.interfaces[0].arclength(space.mesh.vertices[tv]), 0, 0))
    B = assemble_interface_cross_mass(space, tv, mortar).toarray()[:, tv]
    expected = np.array([[1 / 6, 5 / 18, 1 / 18, 0], [0, 1 / 18, 5 / 18, 1 / 6]])
    np.testing.assert_allclose(B, expected, atol=1e-15)


def test_cross_mass_row_sums_and_scaling():
    for length in (1.0, 2.0):
        rect = Rect(0, 0, 0.5, length)
        decl = InterfaceDecl(0, ((0.5, 0.0), (0.5, length)), 0, 1)
        space = P1Space(generate_structured(rect, 1, 2, interfaces=[decl]))
        tv = space.mesh.interface_vertices(0)
        mortar = MortarSpace(InterfaceGrid(decl.arclength(space.mesh.vertices[tv]), 0, 0))
        B = assemble_interface_cross_mass(space, tv, mortar)
        # single mortar function equal to 1: row sum is the interface length
        np.testing.assert_allclose(B @ np.ones(space.dof_count), [length], rtol=1e-14)
        np.testing.assert_allclose(B.toarray()[0, tv], length * np.array([0.25, 0.5, 0.25]), rtol=1e-14)


def test_cross_mass_grid_mismatch():
    space = P1Space(generate_structured(HALF, 1, 3, interfaces=[IFACE]))
    tv = space.mesh.interface_vertices(0)
    wrong = MortarSpace(InterfaceGrid([0, 0.5, 1], 0, 0))
    with pytest.raises(ValueError):
        assemble_interface_cross_mass(space, tv, wrong)


def _robin_setup(alpha=3.0):
    space = P1Space(generate_structured(HALF, 3, 4, interfaces=[IFACE]))
    tv = space.mesh.interface_vertices(0)
    grid = InterfaceGrid(IFACE.arclength(space.mesh.vertices[tv]), 0, 0)
    mortar = MortarSpace(grid)
    B = assemble_interface_cross_mass(space, tv, mortar)
    A = assemble_stiffness_mass(space)
    return space, A, B, mortar


def test_local_robin_zero_data():
    space, A, B, mortar = _robin_setup()
    u, (p,) = solve_local_robin(space, A, [B], [mortar.mass_matrix], 3.0, np.zeros(space.dof_count),
                                [np.zeros(mortar.dim)], np.zeros(space.dof_count))
    assert np.all(u == 0) and np.all(p == 0)


def test_local_robin_block_residual(rng):
    alpha = 3.0
    space, A, B, mortar = _robin_setup(alpha)
    F = rng.standard_normal(space.dof_count)
    G = rng.standard_normal(mortar.dim)
    g = rng.standard_normal(space.dof_count)
    u, (p,) = solve_local_robin(space, A, [B], [mortar.mass_matrix], alpha, F, [G], g)
    free, dir_ = space.free_dofs, space.dirichlet_dofs
    np.testing.assert_allclose(u[dir_], g[dir_])
    r1 = (A @ u - B.T @ p - F)[free]
    r2 = mortar.mass_matrix @ p + alpha * (B @ u) - G
    assert np.linalg.norm(r1) <= 1e-10 * np.linalg.norm(F)
    assert np.linalg.norm(r2) <= 1e-10 * np.linalg.norm(G)


def test_schur_operator_spd(rng):
    alpha = 7.0
    space, A, B, mortar = _robin_setup(alpha)
    free = space.free_dofs
    Bf = B.toarray()[:, free]
    S = A.toarray()[np.ix_(free, free)] + alpha * Bf.T @ sla.solve(mortar.mass_matrix, Bf)
    assert np.max(np.abs(S - S.T)) <= 1e-12
    for _ in range(20):
        x = rng.standard_normal(len(free))
        assert x @ S @ x > 0


def test_affine_exact_solution_reproduced():
    space = P1Space(generate_structured(Rect(0, 0, 1, 1), 3, 3))
    u = ScalarField2D(lambda x, y: 1 + 2 * x - y, lambda x, y: (2 + 0 * x, -1 + 0 * y))
    e = error_norms(space, space.interpolate(u), u)
    assert e.h1 <= 1e-12
    # (Id - Laplace) u = u for affine u
    uh = solve_dirichlet(space, u, u)
    assert error_norms(space, uh, u).h1 <= 1e-12


def test_zero_discrete_solution_relative_error_one():
    space = P1Space(generate_structured(Rect(0, 0, 1, 1), 4, 4))
    u = manufactured().exact
    e = error_norms(space, np.zeros(space.dof_count), u)
    assert e.h1 / e.h1_exact == pytest.approx(1.0, rel=1e-14)


def test_dirichlet_galerkin_residual():
    space = P1Space(generate_structured(Rect(0, 0, 1, 1), 6, 6))
    prob = manufactured()
    uh = solve_dirichlet(space, prob.f, prob.g)
    A = assemble_stiffness_mass(space)
    F = assemble_load(space, prob.f)
    r = (A @ uh - F)[space.free_dofs]
    assert np.linalg.norm(r) <= 1e-10 * np.linalg.norm(F)


def test_single_domain_self_convergence():
    prob = manufactured()
    errs = []
    for n in (4, 8, 16, 32):
        space = P1Space(generate_structured(Rect(0, 0, 1, 1), n, n))
        errs.append(error_norms(space, solve_dirichlet(space, prob.f, prob.g), prob.exact).h1)
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    np.testing.assert_allclose(ratios, 2.0, atol=0.15)


def test_mass_matrix_integrates_products():
    space = P1Space(generate_structured(Rect(0, 0, 1, 1), 2, 2))
    x = space.mesh.vertices[:, 0]
    # int x^2 over the unit square, exact for P1 interpolants of x
    assert x @ assemble_mass(space) @ x == pytest.approx(1 / 3, abs=1e-14)
