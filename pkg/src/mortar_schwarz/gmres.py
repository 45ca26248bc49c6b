"""Restart-free GMRES with modified Gram-Schmidt and Givens rotations."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


@dataclass
class GMRESResult:
    x: np.ndarray
    residuals: list[float] = field(default_factory=list)  # relative, index 0 is the initial one
    converged: bool = False
    stagnated: bool = False

    @property
    def iterations(self) -> int:
        return len(self.residuals) - 1


def gmres(matvec: Callable[[np.ndarray], np.ndarray], b: np.ndarray, x0: np.ndarray | None = None,
          tol: float = 1e-8, max_iter: int | None = None,
          callback: Callable[[int, float, Callable[[], np.ndarray]], None] | None = None) -> GMRESResult:
    """Solve ``A x = b`` to relative residual ``tol`` (relative to ``|b|``).

    ``callback(k, rel_residual, current_x)`` is called after every iteration;
    ``current_x()`` builds the k-th iterate on demand.
    """
    b = np.asarray(b, dtype=float)
    n = len(b)
    max_iter = n if max_iter is None else min(max_iter, n)
    x0 = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        bnorm = 1.0
    r0 = b - matvec(x0)
    beta = np.linalg.norm(r0)
    result = GMRESResult(x0.copy(), [beta / bnorm])
    if beta / bnorm < tol or max_iter == 0:
        result.converged = beta / bnorm < tol
        return result

    V = np.zeros((max_iter + 1, n))
    H = np.zeros((max_iter + 1, max_iter))
    cs = np.zeros(max_iter)
    sn = np.zeros(max_iter)
    g = np.zeros(max_iter + 1)
    g[0] = beta
    V[0] = r0 / beta

    def iterate(k):
        y = np.linalg.solve(np.triu(H[:k, :k]), g[:k])
        return x0 + V[:k].T @ y

    k = 0
    for j in range(max_iter):
        w = matvec(V[j])
        for i in range(j + 1):
            H[i, j] = V[i] @ w
            w = w - H[i, j] * V[i]
        H[j + 1, j] = np.linalg.norm(w)
        for i in range(j):
            hi, hi1 = H[i, j], H[i + 1, j]
            H[i, j] = cs[i] * hi + sn[i] * hi1
            H[i + 1, j] = -sn[i] * hi + cs[i] * hi1
        denom = np.hypot(H[j, j], H[j + 1, j])
        cs[j], sn[j] = H[j, j] / denom, H[j + 1, j] / denom
        breakdown = H[j + 1, j] <= 1e-14 * denom
        if not breakdown:
            V[j + 1] = w / H[j + 1, j]
        H[j, j] = denom
        H[j + 1, j] = 0.0
        g[j + 1] = -sn[j] * g[j]
        g[j] = cs[j] * g[j]
        k = j + 1
        rel = abs(g[k]) / bnorm
        result.residuals.append(float(rel))
        if callback is not None:
            callback(k, float(rel), lambda k=k: iterate(k))
        if rel < tol:
            result.converged = True
            break
        if breakdown:
            result.stagnated = True
            break
    result.x = iterate(k)
    return result
