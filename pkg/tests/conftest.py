import numpy as np
import pytest

from mortar_schwarz.config import preset
from mortar_schwarz.mesh import Rect
from mortar_schwarz.schwarz import build_decomposition


def mortar_basis_oracle(s, i, x):
    """Mortar basis function i on breakpoints s, written out piecewise."""
    s = np.asarray(s)
    n = len(s) - 1
    j = i + 1
    x = np.asarray(x, float)
    out = np.zeros_like(x)
    left = (x >= s[j - 1]) & (x <= s[j])
    right = (x >= s[j]) & (x <= s[j + 1])
    out[left] = (x[left] - s[j - 1]) / (s[j] - s[j - 1])
    out[right] = (s[j + 1] - x[right]) / (s[j + 1] - s[j])
    if j == 1:
        out[x <= s[1]] = 1.0
    if j == n - 1:
        out[x >= s[n - 1]] = 1.0
    return out


def dense_projection_oracle(source, target, values, npts=10):
    """Mortar coefficients of the L2 projection by brute-force quadrature."""
    source, target = np.asarray(source), np.asarray(target)
    brk = np.unique(np.round(np.concatenate([source, target]), 13))
    xg, wg = np.polynomial.legendre.leggauss(npts)
    a, b = brk[:-1, None], brk[1:, None]
    x = (0.5 * (b - a) * xg + 0.5 * (a + b)).ravel()
    w = (0.5 * (b - a) * wg).ravel()
    dim = len(target) - 2
    psi = np.stack([mortar_basis_oracle(target, i, x) for i in range(dim)])
    v = np.interp(x, source, values)
    M = (psi * w) @ psi.T
    rhs = (psi * w) @ v
    return np.linalg.solve(M, rhs)


@pytest.fixture(scope="session")
def two_small():
    cfg = preset("two-small")
    return build_decomposition(cfg.rects, cfg.resolutions, alpha=10.0)


@pytest.fixture(scope="session")
def quarters_nc():
    cfg = preset("nc2")
    return build_decomposition(cfg.rects, cfg.resolutions, alpha=10.0)


def random_grid(rng, n, length=1.0):
    """Sorted grid on [0, length] with n segments, no tiny segments."""
    while True:
        inner = np.sort(rng.uniform(0, length, n - 1))
        s = np.concatenate([[0.0], inner, [length]])
        if np.min(np.diff(s)) > 1e-3 * length / n:
            return s


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


UNIT = Rect(0, 0, 1, 1)


ACCEPTANCE_LINES: list[str] = []


def acceptance_line(number: int, ok: bool, detail: str) -> str:
    line = f"{'PASS' if ok else 'FAIL'} criterion {number:2d}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
