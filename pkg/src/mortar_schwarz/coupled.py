"""Direct solve of the coupled non-conforming problem as one sparse block system.

Unknowns are all subdomain nodal values and all mortar coefficients. Rows are
the Galerkin equations on free dofs of every subdomain and the Robin coupling
moments of every interface side. Dirichlet columns are moved to the
right-hand side. This path shares no code with the iteration itself.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .schwarz import DecompositionProblem, SchwarzState


def coupled_system(problem: DecompositionProblem):
    """Return ``(K, rhs, u_offsets, p_offsets, known_mask, known_values)`` on the full unknown vector."""
    subs, sides, alpha = problem.subdomains, problem.sides, problem.alpha
    nu = [s.space.dof_count for s in subs]
    npm = [s.mortar.dim for s in sides]
    u_off = np.concatenate([[0], np.cumsum(nu)]).astype(int)
    p_off = u_off[-1] + np.concatenate([[0], np.cumsum(npm)]).astype(int)
    n = int(p_off[-1])

    blocks = [[None] * (len(subs) + len(sides)) for _ in range(len(subs) + len(sides))]
    rhs_parts = []
    for k, sub in enumerate(subs):
        blocks[k][k] = sub.A
        for s in sub.sides:
            blocks[k][len(subs) + s] = -sides[s].B.T
        rhs_parts.append(sub.F)
    for s in sides:
        o = sides[s.opposite]
        row = len(subs) + s.index
        blocks[row][len(subs) + s.index] = sp.csr_matrix(s.mortar.mass_matrix)
        blocks[row][s.owner] = alpha * s.B
        # neighbour Robin data: -(-Q p_o + alpha R u_l) tested against own mortar
        blocks[row][len(subs) + o.index] = sp.csr_matrix(s.cross @ o.mortar.nodal)
        R = sp.coo_matrix((np.ones(len(o.trace_vertices)),
                           (np.arange(len(o.trace_vertices)), o.trace_vertices)),
                          shape=(len(o.trace_vertices), nu[s.neighbor]))
        blocks[row][s.neighbor] = -alpha * sp.csr_matrix(s.cross) @ R
        rhs_parts.append(np.zeros(s.mortar.dim))
    for i in range(len(blocks)):
        if blocks[i][i] is None:
            blocks[i][i] = sp.csr_matrix((npm[i - len(subs)],) * 2)
    K = sp.bmat(blocks, format="csr")
    rhs = np.concatenate(rhs_parts) if rhs_parts else np.zeros(0)

    known = np.zeros(n, dtype=bool)
    values = np.zeros(n)
    for k, sub in enumerate(subs):
        d = sub.space.dirichlet_dofs
        known[u_off[k] + d] = True
        values[u_off[k] + d] = sub.dirichlet_values[d]
    return K, rhs, u_off, p_off, known, values


def solve_coupled(problem: DecompositionProblem) -> SchwarzState:
    K, rhs, u_off, p_off, known, values = coupled_system(problem)
    free = ~known
    b = rhs[free] - K[free][:, known] @ values[known]
    x = values.copy()
    x[free] = spla.spsolve(K[free][:, free].tocsc(), b)
    u = [x[u_off[k]:u_off[k + 1]] for k in range(len(problem.subdomains))]
    p = [x[p_off[s]:p_off[s + 1]] for s in range(len(problem.sides))]
    return SchwarzState(u, p)
