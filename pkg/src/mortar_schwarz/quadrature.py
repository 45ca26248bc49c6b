"""Symmetric triangle rules (barycentric points, weights summing to 1)."""
from __future__ import annotations

import numpy as np


def _orbit3(a, w):
    b = 1.0 - 2.0 * a
    return [(a, a, b), (a, b, a), (b, a, a)], [w] * 3


def _orbit6(a, b, w):
    c = 1.0 - a - b
    pts = [(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)]
    return pts, [w] * 6


def _build(*orbits):
    pts, wts = [], []
    for p, w in orbits:
        pts += p
        wts += w
    return np.array(pts), np.array(wts)


# Dunavant rules keyed by degree of exactness.
_RULES = {
    1: (np.array([[1 / 3, 1 / 3, 1 / 3]]), np.array([1.0])),
    2: _build(_orbit3(1 / 6, 1 / 3)),
    4: _build(
        _orbit3(0.445948490915965, 0.223381589678011),
        _orbit3(0.091576213509771, 0.109951743655322),
    ),
    5: _build(
        ([(1 / 3, 1 / 3, 1 / 3)], [0.225]),
        _orbit3(0.470142064105115, 0.132394152788506),
        _orbit3(0.101286507323456, 0.125939180544827),
    ),
    7: _build(
        ([(1 / 3, 1 / 3, 1 / 3)], [-0.149570044467682]),
        _orbit3(0.260345966079040, 0.175615257433208),
        _orbit3(0.065130102902216, 0.053347235608838),
        _orbit6(0.048690315425316, 0.312865496004874, 0.077113760890257),
    ),
}


def triangle_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Smallest tabulated rule exact for polynomials of degree ``order``."""
    for deg in sorted(_RULES):
        if deg >= order:
            return _RULES[deg]
    raise ValueError(f"no triangle rule of degree {order} (max {max(_RULES)})")


def gauss_interval(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre points and weights mapped to [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w
