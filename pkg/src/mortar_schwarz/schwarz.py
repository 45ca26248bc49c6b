"""Robin-Schwarz iteration on non-matching grids and its GMRES acceleration.

Each subdomain k carries a P1 field ``u_k`` and, on each interface side
``(k, l)``, mortar coefficients ``p_kl``. One Jacobi step solves every local
problem with the incoming Robin moments

    G_kl = int (-p_lk + alpha u_l) psi,   psi in the mortar space of side (k, l)

computed from the previous iterate of the neighbour.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .fem import (
    LocalRobinSolver,
    P1Space,
    assemble_interface_cross_mass,
    assemble_load,
    assemble_stiffness_mass,
)
from .gmres import gmres
from .mesh import GEOM_TOL, InterfaceDecl, Mesh2D, Rect, detect_interfaces, generate_structured
from .mortar import InterfaceGrid, MortarSpace
from .problems import ModelProblem, manufactured


@dataclass(eq=False)
class Subdomain:
    index: int
    rect: Rect
    resolution: tuple[int, int]
    mesh: Mesh2D
    space: P1Space
    A: object  # csr matrix of the H1 inner product
    F: np.ndarray
    dirichlet_values: np.ndarray
    sides: list[int] = field(default_factory=list)


@dataclass(eq=False)
class InterfaceSide:
    """Ordered side (owner, neighbor) of one interface."""

    index: int
    interface: InterfaceDecl
    owner: int
    neighbor: int
    trace_vertices: np.ndarray
    grid: InterfaceGrid
    mortar: MortarSpace
    B: object  # (dim, n_owner_dofs) moments of owner traces against own mortar basis
    opposite: int = -1
    cross: np.ndarray | None = None  # (dim, n_neighbor_trace) moments of neighbour hats

    @property
    def mass_factor(self):
        return self.mortar.mass_factor


class DecompositionProblem:
    """Subdomain meshes, interface operators and the Robin parameter."""

    def __init__(self, subdomains: list[Subdomain], sides: list[InterfaceSide],
                 interfaces: list[InterfaceDecl], alpha: float, problem: ModelProblem,
                 diag: str = "same"):
        if not alpha > 0:
            raise ValueError("Robin parameter must be positive")
        self.subdomains = subdomains
        self.sides = sides
        self.interfaces = interfaces
        self.alpha = float(alpha)
        self.problem = problem
        self.diag = diag

    def with_alpha(self, alpha: float) -> "DecompositionProblem":
        """Same meshes and interface operators, new Robin parameter."""
        return DecompositionProblem(self.subdomains, self.sides, self.interfaces, alpha,
                                    self.problem, self.diag)

    @cached_property
    def solvers(self) -> list[LocalRobinSolver]:
        out = []
        for sub in self.subdomains:
            sides = [self.sides[s] for s in sub.sides]
            out.append(LocalRobinSolver(sub.space, sub.A, [s.B for s in sides],
                                        [s.mass_factor for s in sides], self.alpha,
                                        sub.F, sub.dirichlet_values))
        return out

    def interface_grids(self) -> list[InterfaceGrid]:
        return [s.grid for s in self.sides]

    @property
    def h_max(self) -> float:
        return max(sub.mesh.h_max for sub in self.subdomains)

    @property
    def h_interface(self) -> float:
        if not self.sides:
            return 0.0
        return float(max(s.grid.lengths.max() for s in self.sides))

    def describe(self) -> dict:
        return {
            "subdomains": [
                {"rect": [sub.rect.x0, sub.rect.y0, sub.rect.x1, sub.rect.y1],
                 "nx": sub.resolution[0], "ny": sub.resolution[1]}
                for sub in self.subdomains
            ],
            "diag": self.diag,
            "alpha": self.alpha,
            "alpha_h": self.alpha * self.h_interface,
            "problem": self.problem.name,
        }


def check_tiling(rects: Sequence[Rect], interfaces: Sequence[InterfaceDecl]) -> None:
    """Rectangles must tile their bounding box with full shared sides."""
    x0 = min(r.x0 for r in rects)
    y0 = min(r.y0 for r in rects)
    x1 = max(r.x1 for r in rects)
    y1 = max(r.y1 for r in rects)
    if abs(sum(r.area for r in rects) - (x1 - x0) * (y1 - y0)) > 1e-12:
        raise ValueError("subdomains do not tile their bounding box")
    for k, r in enumerate(rects):
        declared = [d.segment for d in interfaces if k in (d.left, d.right)]
        for (a, b) in r.sides().values():
            if any(np.allclose((a, b), seg, atol=GEOM_TOL, rtol=0) for seg in declared):
                continue
            on_bbox = (abs(a[0] - b[0]) <= GEOM_TOL and (abs(a[0] - x0) <= GEOM_TOL or abs(a[0] - x1) <= GEOM_TOL)) or \
                      (abs(a[1] - b[1]) <= GEOM_TOL and (abs(a[1] - y0) <= GEOM_TOL or abs(a[1] - y1) <= GEOM_TOL))
            if not on_bbox:
                raise ValueError(f"side {a}-{b} of subdomain {k} is neither exterior nor a full interface")


def build_decomposition(rects: Sequence[Rect], resolutions: Sequence[tuple[int, int]],
                        alpha: float = 10.0, problem: ModelProblem | None = None,
                        diag: str | Sequence[str] = "same",
                        interfaces: Sequence[InterfaceDecl] | None = None,
                        quadrature_order: int = 4) -> DecompositionProblem:
    """Mesh every rectangle independently and build all interface operators."""
    problem = manufactured() if problem is None else problem
    rects = list(rects)
    if len(resolutions) != len(rects):
        raise ValueError("one (nx, ny) per subdomain required")
    interfaces = detect_interfaces(rects) if interfaces is None else list(interfaces)
    check_tiling(rects, interfaces)
    diags = [diag] * len(rects) if isinstance(diag, str) else list(diag)

    subdomains = []
    for k, (rect, (nx, ny)) in enumerate(zip(rects, resolutions)):
        own = [d for d in interfaces if k in (d.left, d.right)]
        mesh = generate_structured(rect, nx, ny, diags[k], own)
        space = P1Space(mesh)
        subdomains.append(Subdomain(k, rect, (nx, ny), mesh, space, assemble_stiffness_mass(space),
                                    assemble_load(space, problem.f, quadrature_order),
                                    space.interpolate(problem.g)))

    sides: list[InterfaceSide] = []
    for decl in interfaces:
        pair = []
        for owner, nb in ((decl.left, decl.right), (decl.right, decl.left)):
            sub = subdomains[owner]
            tv = sub.mesh.interface_vertices(decl.id)
            grid = InterfaceGrid(decl.arclength(sub.mesh.vertices[tv]), owner, decl.id)
            mortar = MortarSpace(grid)
            B = assemble_interface_cross_mass(sub.space, tv, mortar)
            side = InterfaceSide(len(sides), decl, owner, nb, tv, grid, mortar, B)
            sides.append(side)
            sub.sides.append(side.index)
            pair.append(side)
        a, b = pair
        a.opposite, b.opposite = b.index, a.index
        a.cross = a.mortar.cross_moments(b.grid)
        b.cross = b.mortar.cross_moments(a.grid)
    label = diag if isinstance(diag, str) else ",".join(diags)
    return DecompositionProblem(subdomains, sides, interfaces, alpha, problem, label)


@dataclass
class SchwarzState:
    u: list[np.ndarray]
    p: list[np.ndarray]

    def copy(self) -> "SchwarzState":
        return SchwarzState([x.copy() for x in self.u], [x.copy() for x in self.p])


def zero_state(problem: DecompositionProblem) -> SchwarzState:
    return SchwarzState([np.zeros(s.space.dof_count) for s in problem.subdomains],
                        [np.zeros(s.mortar.dim) for s in problem.sides])


def incoming_moment(problem: DecompositionProblem, state: SchwarzState, side: int) -> np.ndarray:
    """Robin data of the neighbour tested against the mortar basis of ``side``."""
    s = problem.sides[side]
    o = problem.sides[s.opposite]
    data = -o.mortar.to_trace(state.p[o.index]) + problem.alpha * state.u[s.neighbor][o.trace_vertices]
    return s.cross @ data


def local_solves(problem: DecompositionProblem, moments: Sequence[np.ndarray]) -> SchwarzState:
    """Solve every local Robin problem for given incoming moments (one per side)."""
    u = [None] * len(problem.subdomains)
    p = [None] * len(problem.sides)
    for sub, solver in zip(problem.subdomains, problem.solvers):
        uk, pk = solver.solve([moments[s] for s in sub.sides])
        u[sub.index] = uk
        for s, ps in zip(sub.sides, pk):
            p[s] = ps
    return SchwarzState(u, p)


def schwarz_step(problem: DecompositionProblem, state: SchwarzState) -> SchwarzState:
    """One Jacobi sweep: all subdomains advance from the same previous state."""
    moments = [incoming_moment(problem, state, s.index) for s in problem.sides]
    return local_solves(problem, moments)


def side_jumps(problem: DecompositionProblem, state: SchwarzState) -> list[float]:
    out = []
    for s in problem.sides:
        d = (s.mortar.mass_matrix @ state.p[s.index] + problem.alpha * (s.B @ state.u[s.owner])
             - incoming_moment(problem, state, s.index))
        out.append(float(np.sqrt(max(d @ s.mortar.solve_mass(d), 0.0))))
    return out


def jump_residual(problem: DecompositionProblem, state: SchwarzState) -> float:
    """Max over sides of the L2 norm of the projected Robin-data mismatch."""
    jumps = side_jumps(problem, state)
    return max(jumps) if jumps else 0.0


def energies(problem: DecompositionProblem, state: SchwarzState) -> tuple[float, float]:
    """Subdomain energy E and interface energy B of a state."""
    E = 0.0
    for sub in problem.subdomains:
        u = state.u[sub.index]
        E += float(u @ (sub.A @ u))
    Bn = 0.0
    for s in problem.sides:
        w = state.p[s.index] - problem.alpha * s.mortar.solve_mass(s.B @ state.u[s.owner])
        Bn += float(w @ s.mortar.mass_matrix @ w)
    return E, Bn / (4.0 * problem.alpha)


def relative_errors(problem: DecompositionProblem, state: SchwarzState,
                    reference: SchwarzState) -> tuple[float, float]:
    """Relative broken-H1 and nodal max errors of ``state`` against ``reference``."""
    num = den = 0.0
    dmax = rmax = 0.0
    for sub in problem.subdomains:
        d = state.u[sub.index] - reference.u[sub.index]
        r = reference.u[sub.index]
        num += float(d @ (sub.A @ d))
        den += float(r @ (sub.A @ r))
        dmax = max(dmax, float(np.max(np.abs(d))))
        rmax = max(rmax, float(np.max(np.abs(r))))
    h1 = np.sqrt(num / den) if den > 0 else np.sqrt(num)
    linf = dmax / rmax if rmax > 0 else dmax
    return float(h1), float(linf)


@dataclass
class IterationRecord:
    n: int
    jump_residual: float
    E: float
    B: float
    err_h1: float | None = None
    err_linf: float | None = None
    krylov_residual: float | None = None


@dataclass
class SolverReport:
    solver: str
    records: list[IterationRecord] = field(default_factory=list)
    converged: bool = False
    iterations_used: int = 0
    final_jump_residual: float = float("nan")
    config: dict = field(default_factory=dict)
    wall_time: float = 0.0


def _record(problem, state, n, reference, **extra) -> IterationRecord:
    E, Bn = energies(problem, state)
    rec = IterationRecord(n, jump_residual(problem, state), E, Bn, **extra)
    if reference is not None:
        rec.err_h1, rec.err_linf = relative_errors(problem, state, reference)
    return rec


def solve_schwarz(problem: DecompositionProblem, tol: float = 1e-8, max_iter: int = 2000,
                  initial: SchwarzState | None = None,
                  reference: SchwarzState | None = None) -> tuple[SchwarzState, SolverReport]:
    """Iterate :func:`schwarz_step` until the jump residual drops below ``tol``.

    Non-convergence within ``max_iter`` is reported, never raised.
    """
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    t0 = time.perf_counter()
    report = SolverReport("schwarz", config=problem.describe() | {"tol": tol, "max_iter": max_iter})
    state = zero_state(problem) if initial is None else initial.copy()
    if not problem.sides:
        # plain FEM solve, nothing to iterate
        state = local_solves(problem, [])
        report.records.append(_record(problem, state, 0, reference))
        report.converged, report.final_jump_residual = True, 0.0
        report.wall_time = time.perf_counter() - t0
        return state, report
    report.records.append(_record(problem, state, 0, reference))
    for n in range(1, max_iter + 1):
        state = schwarz_step(problem, state)
        rec = _record(problem, state, n, reference)
        report.records.append(rec)
        report.iterations_used = n
        if not np.isfinite(rec.jump_residual):
            break
        if rec.jump_residual < tol:
            report.converged = True
            break
    report.final_jump_residual = report.records[-1].jump_residual
    report.wall_time = time.perf_counter() - t0
    return state, report


class InterfaceFixedPointMap:
    """Affine map on concatenated incoming moments: one local-solve pass.

    ``lam`` stacks ``G_s`` for all sides in order; ``self(lam)`` solves the
    local problems with these moments and returns the new incoming moments.
    The map equals ``T lam + c`` with ``c = self(0)``.
    """

    def __init__(self, problem: DecompositionProblem):
        self.problem = problem
        dims = [s.mortar.dim for s in problem.sides]
        self.offsets = np.concatenate([[0], np.cumsum(dims)]).astype(int)
        self.size = int(self.offsets[-1])

    def split(self, lam: np.ndarray) -> list[np.ndarray]:
        return [lam[a:b] for a, b in zip(self.offsets[:-1], self.offsets[1:])]

    def state(self, lam: np.ndarray) -> SchwarzState:
        return local_solves(self.problem, self.split(np.asarray(lam, float)))

    def moments(self, state: SchwarzState) -> np.ndarray:
        if not self.problem.sides:
            return np.zeros(0)
        return np.concatenate([incoming_moment(self.problem, state, s.index) for s in self.problem.sides])

    def __call__(self, lam: np.ndarray) -> np.ndarray:
        return self.moments(self.state(lam))

    @cached_property
    def c(self) -> np.ndarray:
        return self(np.zeros(self.size))

    def linear(self, lam: np.ndarray) -> np.ndarray:
        return self(lam) - self.c

    def dense_operator(self) -> np.ndarray:
        return np.column_stack([self.linear(e) for e in np.eye(self.size)])


def interface_fixed_point_map(problem: DecompositionProblem) -> InterfaceFixedPointMap:
    return InterfaceFixedPointMap(problem)


def estimate_spectral_radius(fmap: InterfaceFixedPointMap, iterations: int = 200, seed: int = 0) -> float:
    """Power-iteration estimate of the spectral radius of the linear part."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(fmap.size)
    x /= np.linalg.norm(x)
    norms = []
    for _ in range(iterations):
        y = fmap.linear(x)
        nrm = np.linalg.norm(y)
        if nrm == 0:
            return 0.0
        norms.append(nrm)
        x = y / nrm
    # geometric mean of the last growth factors smooths complex-pair oscillation
    tail = np.log(norms[len(norms) // 2:])
    return float(np.exp(tail.mean()))


def solve_gmres(problem: DecompositionProblem, tol: float = 1e-8, max_iter: int = 500,
                reference: SchwarzState | None = None,
                record_states: bool = False) -> tuple[SchwarzState, SolverReport]:
    """Solve ``(I - T) lam = c`` by GMRES and rebuild the state by one local pass."""
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    t0 = time.perf_counter()
    fmap = InterfaceFixedPointMap(problem)
    report = SolverReport("gmres", config=problem.describe() | {"tol": tol, "max_iter": max_iter})
    if fmap.size == 0:
        state = local_solves(problem, [])
        report.records.append(_record(problem, state, 0, reference, krylov_residual=0.0))
        report.converged, report.final_jump_residual = True, 0.0
        report.wall_time = time.perf_counter() - t0
        return state, report
    c = fmap.c
    track = record_states or reference is not None
    report.records.append(_record(problem, zero_state(problem), 0, reference, krylov_residual=1.0))

    def callback(k, rel, current):
        if track:
            report.records.append(_record(problem, fmap.state(current()), k, reference,
                                          krylov_residual=rel))
        else:
            report.records.append(IterationRecord(k, float("nan"), float("nan"), float("nan"),
                                                  krylov_residual=rel))

    res = gmres(lambda lam: lam - fmap.linear(lam), c, tol=tol, max_iter=max_iter, callback=callback)
    state = fmap.state(res.x)
    report.converged = res.converged
    report.iterations_used = res.iterations
    report.final_jump_residual = jump_residual(problem, state)
    report.wall_time = time.perf_counter() - t0
    return state, report


def solve(problem: DecompositionProblem, solver: str = "schwarz", tol: float = 1e-8,
          max_iter: int = 2000, reference: SchwarzState | None = None,
          record_states: bool = False) -> tuple[SchwarzState, SolverReport]:
    if solver == "schwarz":
        return solve_schwarz(problem, tol, max_iter, reference=reference)
    if solver == "gmres":
        return solve_gmres(problem, tol, max_iter, reference=reference, record_states=record_states)
    raise ValueError(f"unknown solver {solver!r}")
