"""Numerical checks of the end-interval polynomial lemma for high-order mortars.

On [-1, 1], a polynomial ``eta`` of degree p with ``eta(-1) = 0`` is written
as ``sum_m eta_m (L_m + L_{m-1})``; the lemma asks for ``psi`` of degree p-1
with ``psi(1) = eta(1)`` and

    J(psi; eta) = int (eta psi - (eta - psi)^2 / 4) > 0.

The maximizer ``S(eta)`` is explicit, and positivity of its value reduces to
negativity of a quadratic form ``Delta(eta)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

N_QUAD = 64


def legendre_values(P: int, x: np.ndarray) -> np.ndarray:
    """(P+1, len(x)) values of L_0..L_P by the three-term recurrence."""
    x = np.asarray(x, dtype=float)
    L = np.zeros((P + 1,) + x.shape)
    L[0] = 1.0
    if P >= 1:
        L[1] = x
    for m in range(1, P):
        L[m + 1] = ((2 * m + 1) * x * L[m] - m * L[m - 1]) / (m + 1)
    return L


def legendre_derivatives(P: int, x: np.ndarray) -> np.ndarray:
    """(P+1, len(x)) values of L'_0..L'_P via L'_{m+1} = L'_{m-1} + (2m+1) L_m."""
    x = np.asarray(x, dtype=float)
    L = legendre_values(P, x)
    dL = np.zeros_like(L)
    if P >= 1:
        dL[1] = 1.0
    for m in range(1, P):
        dL[m + 1] = dL[m - 1] + (2 * m + 1) * L[m]
    return dL


@lru_cache(maxsize=None)
def gauss_legendre(n: int = N_QUAD) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [-1, 1] by Newton iteration on the roots of L_n."""
    k = np.arange(1, n + 1)
    x = np.cos(np.pi * (k - 0.25) / (n + 0.5))
    for _ in range(100):
        L = legendre_values(n, x)
        dLn = n * (x * L[n] - L[n - 1]) / (x**2 - 1.0)
        dx = L[n] / dLn
        x = x - dx
        if np.max(np.abs(dx)) < 1e-16:
            break
    L = legendre_values(n, x)
    dLn = n * (x * L[n] - L[n - 1]) / (x**2 - 1.0)
    w = 2.0 / ((1.0 - x**2) * dLn**2)
    order = np.argsort(x)
    return x[order], w[order]


def integrate(values: np.ndarray, n: int = N_QUAD) -> float:
    _, w = gauss_legendre(n)
    return float(np.sum(w * values))


@dataclass(frozen=True)
class EtaPoly:
    """Coefficients eta_1..eta_p in the basis {L_m + L_{m-1}}."""

    coeffs: np.ndarray

    @property
    def p(self) -> int:
        return len(self.coeffs)

    def legendre_coeffs(self) -> np.ndarray:
        c = np.zeros(self.p + 1)
        c[1:] += self.coeffs
        c[:-1] += self.coeffs
        return c

    def __call__(self, x) -> np.ndarray:
        return self.legendre_coeffs() @ legendre_values(self.p, x)

    @property
    def at_one(self) -> float:
        return float(2.0 * np.sum(self.coeffs))

    @property
    def top(self) -> float:
        return float(self.coeffs[-1])

    def norm_sq(self) -> float:
        c = self.legendre_coeffs()
        return float(np.sum(c**2 * 2.0 / (2 * np.arange(self.p + 1) + 1)))


@dataclass(frozen=True)
class PsiPoly:
    """Coefficients psi_0..psi_{p-1} in the Legendre basis."""

    coeffs: np.ndarray

    def __call__(self, x) -> np.ndarray:
        return self.coeffs @ legendre_values(len(self.coeffs) - 1, x)


def R_coeffs(p: int) -> np.ndarray:
    """Legendre coefficients of R_{p-1} = sum_{m<p} (2m+1) L_m."""
    return 2.0 * np.arange(p) + 1.0


def optimal_multiplier(eta: EtaPoly) -> float:
    return (2.0 * eta.at_one - 3.0 * eta.top) / eta.p**2


def compute_S(eta: EtaPoly) -> PsiPoly:
    """Maximizer of J(.; eta) over degree p-1 polynomials with psi(1) = eta(1)."""
    p = eta.p
    if p < 1:
        raise ValueError("eta must have degree >= 1")
    mu = optimal_multiplier(eta)
    c = eta.legendre_coeffs()
    return PsiPoly(3.0 * c[:p] - mu * R_coeffs(p))


def functional_J(psi: PsiPoly, eta: EtaPoly, n: int = N_QUAD) -> float:
    x, _ = gauss_legendre(n)
    e, s = eta(x), psi(x)
    return integrate(e * s - 0.25 * (e - s) ** 2, n)


def dual_G(mu: float, eta: EtaPoly) -> float:
    p = eta.p
    return (0.5 * p**2 * mu**2 - mu * (2.0 * eta.at_one - 3.0 * eta.top)
            + 2.0 * eta.norm_sq() - 4.5 * eta.top**2 / (2 * p + 1))


def discriminant_delta(eta: EtaPoly) -> float:
    p = eta.p
    return (2.0 * eta.at_one - 3.0 * eta.top) ** 2 + p**2 * (
        -4.0 * eta.norm_sq() + 9.0 * eta.top**2 / (2 * p + 1))


def _polarize(fn, p: int) -> np.ndarray:
    E = np.eye(p)
    diag = np.array([fn(EtaPoly(E[i])) for i in range(p)])
    D = np.empty((p, p))
    for i in range(p):
        for j in range(p):
            D[i, j] = diag[i] if i == j else 0.5 * (fn(EtaPoly(E[i] + E[j])) - diag[i] - diag[j])
    return D


def delta_form(p: int) -> np.ndarray:
    """Symmetric matrix of Delta on the eta-coefficient space."""
    return _polarize(discriminant_delta, p)


def gram_matrix(p: int) -> np.ndarray:
    """L2 Gram matrix of the basis {L_m + L_{m-1}}."""
    return _polarize(lambda e: e.norm_sq(), p)


def _generalized_eigh(D: np.ndarray, N: np.ndarray):
    C = np.linalg.cholesky(N)
    Ci = np.linalg.inv(C)
    w, V = np.linalg.eigh(Ci @ D @ Ci.T)
    return w, Ci.T @ V


@dataclass
class ScanResult:
    p: int
    max_eigenvalue: float
    witness: EtaPoly


def extremal_scan(p: int) -> ScanResult:
    """Largest value of Delta(eta)/|eta|^2 and an eta attaining it."""
    if not 2 <= p <= 20:
        raise ValueError("scan supports 2 <= p <= 20")
    w, V = _generalized_eigh(delta_form(p), gram_matrix(p))
    v = V[:, -1]
    v = v / np.sqrt(EtaPoly(v).norm_sq())
    return ScanResult(p, float(w[-1]), EtaPoly(v))


def min_J_ratio(p: int) -> float:
    """min over eta of J(S(eta); eta) / |eta|^2, by quadrature of the quadratic form."""
    D = _polarize(lambda e: functional_J(compute_S(e), e), p)
    w, _ = _generalized_eigh(D, gram_matrix(p))
    return float(w[0])


def stability_constant(p: int) -> float:
    """max over eta of |S(eta)|^2 / |eta|^2."""
    def psi_sq(e):
        c = compute_S(e).coeffs
        return float(np.sum(c**2 * 2.0 / (2 * np.arange(len(c)) + 1)))
    w, _ = _generalized_eigh(_polarize(psi_sq, p), gram_matrix(p))
    return float(w[-1])


def p2_form_coefficients() -> tuple[float, float, float]:
    """(a, b, c) with Delta = a eta_1^2 + b eta_1 eta_2 + c eta_2^2 for p = 2."""
    D = delta_form(2)
    return float(D[0, 0]), float(2.0 * D[0, 1]), float(D[1, 1])


def p2_form_discriminant() -> float:
    a, b, c = p2_form_coefficients()
    return b * b - 4.0 * a * c


def case2_eta(p: int) -> EtaPoly:
    """eta = lambda2 L'_p + L'_{p-1} with lambda2 = (p-1)/(p+1), in the eta basis."""
    x, w = gauss_legendre()
    dL = legendre_derivatives(p, x)
    vals = (p - 1) / (p + 1) * dL[p] + dL[p - 1]
    return eta_from_values(vals, p)


def eta_from_values(values: np.ndarray, p: int) -> EtaPoly:
    """Project quadrature-node values of a degree-p polynomial vanishing at -1 onto the eta basis."""
    x, w = gauss_legendre()
    L = legendre_values(p, x)
    c = (L * w) @ values * (2 * np.arange(p + 1) + 1) / 2.0
    # c_m = e_m + e_{m+1}, c_p = e_p
    e = np.zeros(p)
    e[p - 1] = c[p]
    for m in range(p - 1, 0, -1):
        e[m - 1] = c[m] - e[m]
    return EtaPoly(e)


def appendix_rows(p_values=range(2, 15)) -> list[dict]:
    rows = []
    for p in p_values:
        rows.append({
            "p": p,
            "max_eig": extremal_scan(p).max_eigenvalue,
            "min_J_ratio": min_J_ratio(p),
            "stability_C": stability_constant(p),
        })
    return rows
