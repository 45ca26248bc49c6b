"""Mortar multiplier spaces and L2 projections between non-matching 1D grids.

All interface functions are piecewise linear on their own grid, so every
product integral is computed exactly with 2-point Gauss on each segment of
the merged grid.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg as sla

from .quadrature import gauss_interval

MERGE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class InterfaceGrid:
    s: np.ndarray
    owner: int = -1
    interface_id: int = -1

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float)
        object.__setattr__(self, "s", s)
        if s.ndim != 1 or len(s) < 2:
            raise ValueError("interface grid needs at least two breakpoints")
        if np.any(np.diff(s) <= 0):
            raise ValueError("interface breakpoints must be strictly increasing")

    @property
    def n(self) -> int:
        """Number of segments."""
        return len(self.s) - 1

    @property
    def lengths(self) -> np.ndarray:
        return np.diff(self.s)

    def locate(self, x: np.ndarray) -> np.ndarray:
        return np.clip(np.searchsorted(self.s, x, side="right") - 1, 0, self.n - 1)

    def hat_values(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Segment index and the two nonzero hat values at points ``x``."""
        seg = self.locate(x)
        t = (x - self.s[seg]) / self.lengths[seg]
        return seg, 1.0 - t, t

    def evaluate(self, values: np.ndarray, x: np.ndarray) -> np.ndarray:
        seg, l, r = self.hat_values(np.asarray(x, float))
        v = np.asarray(values)
        return l * v[seg] + r * v[seg + 1]

    def mass(self) -> np.ndarray:
        return hat_cross_mass(self, self)


def merge_grids(a: InterfaceGrid, b: InterfaceGrid, tol: float = MERGE_TOL) -> np.ndarray:
    """Sorted union of two grids spanning the same interval."""
    if abs(a.s[0] - b.s[0]) > tol or abs(a.s[-1] - b.s[-1]) > tol:
        raise ValueError("interface grids do not share endpoints")
    pts = np.sort(np.concatenate([a.s, b.s]), kind="stable")
    keep = np.concatenate([[True], np.diff(pts) > tol])
    merged = pts[keep]
    merged[0], merged[-1] = a.s[0], a.s[-1]
    return merged


def hat_cross_mass(a: InterfaceGrid, b: InterfaceGrid) -> np.ndarray:
    """X[i, j] = int chi^a_i chi^b_j over the interface (dense)."""
    merged = merge_grids(a, b)
    x, w = gauss_interval(2)
    h = np.diff(merged)
    pts = (merged[:-1, None] + h[:, None] * x[None, :]).ravel()
    wts = (h[:, None] * w[None, :]).ravel()
    sa, la, ra = a.hat_values(pts)
    sb, lb, rb = b.hat_values(pts)
    X = np.zeros((a.n + 1, b.n + 1))
    for ia, va in ((sa, la), (sa + 1, ra)):
        for ib, vb in ((sb, lb), (sb + 1, rb)):
            np.add.at(X, (ia, ib), wts * va * vb)
    return X


class MortarSpace:
    """Continuous P1 functions on the grid that are constant on both end segments.

    Basis function ``i`` (``0 <= i < n-1``) is the hat at interior node
    ``s[i+1]``; the first and last ones are extended by a constant over the end
    segments.
    """

    def __init__(self, grid: InterfaceGrid):
        if grid.n < 2:
            raise ValueError("mortar space needs at least one interior node (n >= 2)")
        self.grid = grid

    @property
    def dim(self) -> int:
        return self.grid.n - 1

    @cached_property
    def nodal(self) -> np.ndarray:
        """(n+1, dim) nodal values of the basis on the grid."""
        Q = np.zeros((self.grid.n + 1, self.dim))
        Q[1:-1] = np.eye(self.dim)
        Q[0, 0] = 1.0
        Q[-1, -1] = 1.0
        return Q

    def to_trace(self, coeffs: np.ndarray) -> np.ndarray:
        return self.nodal @ np.asarray(coeffs)

    def evaluate(self, coeffs: np.ndarray, x: np.ndarray) -> np.ndarray:
        return self.grid.evaluate(self.to_trace(coeffs), x)

    def basis_values(self, x: np.ndarray) -> np.ndarray:
        """(len(x), dim) values of all basis functions."""
        x = np.asarray(x, float)
        return np.stack([self.evaluate(e, x) for e in np.eye(self.dim)], axis=1)

    @cached_property
    def mass_matrix(self) -> np.ndarray:
        return self.nodal.T @ self.grid.mass() @ self.nodal

    @cached_property
    def mass_factor(self):
        return sla.cho_factor(self.mass_matrix)

    def trace_moments(self) -> np.ndarray:
        """(dim, n+1) matrix int psi_i chi_j with chi the hats of the same grid."""
        return self.nodal.T @ self.grid.mass()

    def cross_moments(self, source: InterfaceGrid) -> np.ndarray:
        """(dim, m+1) matrix int psi_i chi^source_j."""
        return self.nodal.T @ hat_cross_mass(self.grid, source)

    def solve_mass(self, rhs: np.ndarray) -> np.ndarray:
        return sla.cho_solve(self.mass_factor, rhs)

    def norm(self, coeffs: np.ndarray) -> float:
        c = np.asarray(coeffs)
        return float(np.sqrt(max(c @ self.mass_matrix @ c, 0.0)))


def build_mortar(grid: InterfaceGrid) -> MortarSpace:
    return MortarSpace(grid)


@dataclass(eq=False)
class ProjectionOperator:
    """L2-orthogonal projection of P1 data on ``source`` onto ``target``."""

    source: InterfaceGrid
    target: MortarSpace
    cross: np.ndarray  # (target.dim, source.n+1)

    def __call__(self, values: np.ndarray) -> np.ndarray:
        """Mortar coefficients of the projection of nodal ``values``."""
        return self.target.solve_mass(self.cross @ np.asarray(values))

    def moments(self, values: np.ndarray) -> np.ndarray:
        return self.cross @ np.asarray(values)


def build_projection(source: InterfaceGrid, target: MortarSpace) -> ProjectionOperator:
    if source.interface_id != target.grid.interface_id:
        raise ValueError("source and target grids belong to different interfaces")
    return ProjectionOperator(source, target, target.cross_moments(source))


def robin_moment(u_trace: np.ndarray, p_coeffs: np.ndarray, alpha: float,
                 source: MortarSpace, target: MortarSpace,
                 cross: np.ndarray | None = None) -> np.ndarray:
    """Moments int (-p + alpha u) psi_i of the neighbour's Robin data.

    ``u_trace`` and ``p_coeffs`` live on ``source`` (the neighbour side); the
    test functions ``psi_i`` span ``target``.
    """
    if source.grid.interface_id != target.grid.interface_id:
        raise ValueError("mortar spaces belong to different interfaces")
    if cross is None:
        cross = target.cross_moments(source.grid)
    data = -source.to_trace(p_coeffs) + alpha * np.asarray(u_trace)
    return cross @ data


@dataclass
class PiecewiseLinearTrace:
    grid: InterfaceGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if len(self.values) != self.grid.n + 1:
            raise ValueError("trace needs one value per breakpoint")

    def inner(self, other: "PiecewiseLinearTrace") -> float:
        return float(self.values @ hat_cross_mass(self.grid, other.grid) @ other.values)

    def l2_norm(self) -> float:
        return float(np.sqrt(max(self.inner(self), 0.0)))


def end_segment_psi(eta: PiecewiseLinearTrace) -> PiecewiseLinearTrace:
    """Mortar test function matched to a trace vanishing at both ends.

    Equal to ``eta`` on interior segments and constant on each end segment
    (the value of ``eta`` at the adjacent interior node).
    """
    v = eta.values
    if eta.grid.n < 2:
        raise ValueError("need at least one interior node")
    scale = max(1.0, np.max(np.abs(v)))
    if abs(v[0]) > 1e-12 * scale or abs(v[-1]) > 1e-12 * scale:
        raise ValueError("eta must vanish at both interface endpoints")
    psi = v.copy()
    psi[0], psi[-1] = v[1], v[-2]
    return PiecewiseLinearTrace(eta.grid, psi)


def end_segment_quantities(eta: PiecewiseLinearTrace, other: InterfaceGrid) -> dict[str, float]:
    """Terms of the coupling inequality for ``eta`` and the other side's mortar.

    Returns ``lhs = int (eta + pi(eta)) psi``, ``eta_sq = int eta^2`` and the
    L2 norms of ``psi`` and ``eta``; ``pi`` projects onto the mortar space of
    ``other``.
    """
    target = MortarSpace(other)
    proj = ProjectionOperator(eta.grid, target, target.cross_moments(eta.grid))
    pi_eta = PiecewiseLinearTrace(other, target.to_trace(proj(eta.values)))
    psi = end_segment_psi(eta)
    lhs = eta.inner(psi) + pi_eta.inner(psi)
    return {
        "lhs": lhs,
        "eta_sq": eta.inner(eta),
        "psi_norm": psi.l2_norm(),
        "eta_norm": eta.l2_norm(),
    }
