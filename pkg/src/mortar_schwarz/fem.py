"""P1 Lagrange elements for (Id - Laplace) on one subdomain."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .mesh import Mesh2D
from .quadrature import triangle_rule

SOLVE_RTOL = 1e-13


@dataclass(frozen=True)
class ScalarField2D:
    """Vectorized field ``value(x, y)`` with an optional ``grad(x, y) -> (gx, gy)``."""

    value: Callable[[np.ndarray, np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]] | None = None

    def __call__(self, x, y):
        return np.broadcast_to(self.value(x, y), np.broadcast(x, y).shape).astype(float)

    def gradient(self, x, y):
        if self.grad is None:
            raise ValueError("field has no gradient rule")
        gx, gy = self.grad(x, y)
        shape = np.broadcast(x, y).shape
        return np.broadcast_to(gx, shape).astype(float), np.broadcast_to(gy, shape).astype(float)

    def check_gradient(self, points: np.ndarray, step: float = 1e-5) -> float:
        """Largest relative mismatch between ``grad`` and centered differences."""
        x, y = points[:, 0], points[:, 1]
        gx, gy = self.gradient(x, y)
        fx = (self(x + step, y) - self(x - step, y)) / (2 * step)
        fy = (self(x, y + step) - self(x, y - step)) / (2 * step)
        scale = np.maximum(1.0, np.hypot(gx, gy))
        return float(np.max(np.hypot(gx - fx, gy - fy) / scale))


def constant_field(c: float) -> ScalarField2D:
    return ScalarField2D(lambda x, y: c + 0.0 * x, lambda x, y: (0.0 * x, 0.0 * y))


class P1Space:
    """Nodal P1 space on a mesh; exterior-boundary vertices are Dirichlet dofs."""

    def __init__(self, mesh: Mesh2D):
        self.mesh = mesh
        self.dof_count = mesh.n_vertices
        self.dirichlet_dofs = mesh.exterior_vertices()
        mask = np.ones(self.dof_count, dtype=bool)
        mask[self.dirichlet_dofs] = False
        self.free_dofs = np.flatnonzero(mask)

    def interpolate(self, field: ScalarField2D) -> np.ndarray:
        v = self.mesh.vertices
        return field(v[:, 0], v[:, 1])


def _geometry(mesh: Mesh2D):
    p = mesh.vertices[mesh.triangles]
    area = mesh.signed_areas()
    if np.any(area <= 0):
        raise ValueError("degenerate or clockwise triangle in mesh")
    # gradients of barycentric coordinates
    x, y = p[:, :, 0], p[:, :, 1]
    gx = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1) / (2 * area[:, None])
    gy = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1) / (2 * area[:, None])
    return p, area, gx, gy


_MASS_REF = (np.ones((3, 3)) + np.eye(3)) / 12.0


def element_stiffness(xy: np.ndarray) -> np.ndarray:
    mesh = Mesh2D(np.asarray(xy, float), np.array([[0, 1, 2]]), np.zeros((0, 2), int),
                  np.zeros(0, int), None)
    _, area, gx, gy = _geometry(mesh)
    return area[0] * (np.outer(gx[0], gx[0]) + np.outer(gy[0], gy[0]))


def element_mass(xy: np.ndarray) -> np.ndarray:
    xy = np.asarray(xy, float)
    e1, e2 = xy[1] - xy[0], xy[2] - xy[0]
    area = 0.5 * (e1[0] * e2[1] - e1[1] * e2[0])
    return area * _MASS_REF


def _scatter(mesh: Mesh2D, local: np.ndarray) -> sp.csr_matrix:
    t = mesh.triangles
    rows = np.repeat(t, 3, axis=1).ravel()
    cols = np.tile(t, (1, 3)).ravel()
    n = mesh.n_vertices
    return sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def assemble_stiffness(space: P1Space) -> sp.csr_matrix:
    _, area, gx, gy = _geometry(space.mesh)
    local = area[:, None, None] * (gx[:, :, None] * gx[:, None, :] + gy[:, :, None] * gy[:, None, :])
    return _scatter(space.mesh, local)


def assemble_mass(space: P1Space) -> sp.csr_matrix:
    _, area, _, _ = _geometry(space.mesh)
    return _scatter(space.mesh, area[:, None, None] * _MASS_REF[None])


def assemble_stiffness_mass(space: P1Space) -> sp.csr_matrix:
    """Matrix of the H1 inner product: int grad(phi_i).grad(phi_j) + phi_i phi_j."""
    return (assemble_stiffness(space) + assemble_mass(space)).tocsr()


def _quad_points(mesh: Mesh2D, order: int):
    bary, w = triangle_rule(order)
    p = mesh.vertices[mesh.triangles]
    pts = np.einsum("qi,tid->tqd", bary, p)
    return bary, w, pts


def assemble_load(space: P1Space, f: ScalarField2D, quadrature_order: int = 4) -> np.ndarray:
    """Vector of int f phi_i by a symmetric triangle rule."""
    if quadrature_order < 2:
        raise ValueError("load quadrature order must be >= 2")
    mesh = space.mesh
    _, area, _, _ = _geometry(mesh)
    bary, w, pts = _quad_points(mesh, quadrature_order)
    fq = f(pts[..., 0], pts[..., 1])
    local = area[:, None] * np.einsum("tq,q,qi->ti", fq, w, bary)
    return np.bincount(mesh.triangles.ravel(), local.ravel(), minlength=mesh.n_vertices)


def assemble_interface_cross_mass(space: P1Space, trace_vertices: np.ndarray, mortar) -> sp.csr_matrix:
    """B[i, j] = int_Gamma psi_i phi_j for the mortar basis on this side's own trace grid."""
    mesh = space.mesh
    decl = mesh.interfaces[mortar.grid.interface_id]
    s = decl.arclength(mesh.vertices[trace_vertices])
    if len(s) != len(mortar.grid.s) or np.max(np.abs(s - mortar.grid.s)) > 1e-12:
        raise ValueError("mortar grid does not match the subdomain trace grid")
    local = mortar.trace_moments()  # (dim, n+1) dense
    rows = np.repeat(np.arange(local.shape[0]), local.shape[1])
    cols = np.tile(trace_vertices, local.shape[0])
    return sp.coo_matrix((local.ravel(), (rows, cols)),
                         shape=(local.shape[0], space.dof_count)).tocsr()


class LocalRobinSolver:
    """Cached solver for the local Robin problem of one subdomain.

    Solves ``A u - sum_s B_s^T p_s = F`` on free dofs together with
    ``M_s p_s + alpha B_s u = G_s`` on each interface side by eliminating the
    multipliers and factorizing the SPD Schur operator once.
    """

    def __init__(self, space: P1Space, A, Bs: Sequence, mass_factors: Sequence, alpha: float,
                 F: np.ndarray, dirichlet_values: np.ndarray):
        if alpha <= 0:
            raise ValueError("Robin parameter must be positive")
        self.space = space
        self.alpha = alpha
        self.Bs = [sp.csr_matrix(B) for B in Bs]
        self.mass_factors = list(mass_factors)
        free, dir_ = space.free_dofs, space.dirichlet_dofs
        self.free = free
        A = sp.csr_matrix(A)
        self.A_full = A
        uD = np.zeros(space.dof_count)
        uD[dir_] = np.asarray(dirichlet_values)[dir_]
        self.uD = uD

        S = A[free][:, free].tocsr()
        rhs = np.asarray(F, float)[free] - A[free] @ uD
        self._BfT_Minv = []
        for B, fac in zip(self.Bs, self.mass_factors):
            cols = np.unique(B.indices)
            Bf_cols = np.searchsorted(free, cols)
            is_free = np.isin(cols, free)
            Bd = B[:, cols].toarray()
            MinvB = sla.cho_solve(fac, Bd)
            # block of alpha * B^T M^-1 B on the interface dofs
            fc = Bf_cols[is_free]
            block = alpha * Bd[:, is_free].T @ MinvB[:, is_free]
            ii, jj = np.meshgrid(fc, fc, indexing="ij")
            S = S + sp.coo_matrix((block.ravel(), (ii.ravel(), jj.ravel())), shape=S.shape)
            Bu_D = B @ uD
            rhs -= alpha * (B[:, free].T @ sla.cho_solve(fac, Bu_D))
            self._BfT_Minv.append(B[:, free].T.tocsr())
        self.S = sp.csc_matrix(S)
        self._lu = spla.splu(self.S)
        self._rhs0 = rhs

    def solve(self, Gs: Sequence[np.ndarray]) -> tuple[np.ndarray, list[np.ndarray]]:
        rhs = self._rhs0.copy()
        for BT, fac, G in zip(self._BfT_Minv, self.mass_factors, Gs):
            rhs += BT @ sla.cho_solve(fac, G)
        uf = self._lu.solve(rhs)
        res = self.S @ uf - rhs
        scale = max(np.linalg.norm(rhs), np.finfo(float).tiny)
        if np.linalg.norm(res) > SOLVE_RTOL * scale:
            uf = uf - self._lu.solve(res)
            res = self.S @ uf - rhs
            if np.linalg.norm(res) > SOLVE_RTOL * scale * 10:
                raise RuntimeError("local Robin solve did not reach the residual tolerance")
        u = self.uD.copy()
        u[self.free] = uf
        ps = [sla.cho_solve(fac, G - self.alpha * (B @ u))
              for B, fac, G in zip(self.Bs, self.mass_factors, Gs)]
        return u, ps


def solve_local_robin(space, A, Bs, mortar_masses, alpha, F, Gs, dirichlet_values):
    """One-shot local Robin solve; see :class:`LocalRobinSolver`."""
    factors = [sla.cho_factor(np.asarray(M)) for M in mortar_masses]
    return LocalRobinSolver(space, A, Bs, factors, alpha, F, dirichlet_values).solve(Gs)


def solve_dirichlet(space: P1Space, f: ScalarField2D, g: ScalarField2D,
                    quadrature_order: int = 4) -> np.ndarray:
    """Conforming solve of (Id - Laplace) u = f with u = g on the exterior."""
    A = assemble_stiffness_mass(space)
    F = assemble_load(space, f, quadrature_order)
    solver = LocalRobinSolver(space, A, [], [], 1.0, F, space.interpolate(g))
    return solver.solve([])[0]


class ErrorNorms(NamedTuple):
    h1: float
    l2: float
    linf: float
    h1_exact: float


def error_norms(space: P1Space, u_h: np.ndarray, exact: ScalarField2D,
                quadrature_order: int = 5) -> ErrorNorms:
    """H1 and L2 errors of a P1 field against ``exact``, plus nodal max error.

    Also returns the H1 norm of ``exact`` on the same mesh (the reference for
    relative errors).
    """
    if quadrature_order < 4:
        raise ValueError("error quadrature order must be >= 4")
    mesh = space.mesh
    _, area, gx, gy = _geometry(mesh)
    bary, w, pts = _quad_points(mesh, quadrature_order)
    ut = np.asarray(u_h)[mesh.triangles]
    uhq = ut @ bary.T
    duh_x = np.sum(ut * gx, axis=1)[:, None]
    duh_y = np.sum(ut * gy, axis=1)[:, None]
    uq = exact(pts[..., 0], pts[..., 1])
    dx, dy = exact.gradient(pts[..., 0], pts[..., 1])
    wa = area[:, None] * w[None, :]
    l2 = np.sum(wa * (uhq - uq) ** 2)
    semi = np.sum(wa * ((duh_x - dx) ** 2 + (duh_y - dy) ** 2))
    ex = np.sum(wa * (uq ** 2 + dx ** 2 + dy ** 2))
    nodal = np.max(np.abs(np.asarray(u_h) - space.interpolate(exact))) if len(u_h) else 0.0
    return ErrorNorms(float(np.sqrt(l2 + semi)), float(np.sqrt(l2)), float(nodal), float(np.sqrt(ex)))
