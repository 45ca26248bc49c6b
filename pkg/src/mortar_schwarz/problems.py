"""Model problems for (Id - Laplace) u = f on the unit square."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fem import ScalarField2D, constant_field


@dataclass(frozen=True)
class ModelProblem:
    name: str
    f: ScalarField2D
    g: ScalarField2D
    exact: ScalarField2D | None = None


def _u(x, y):
    return x**3 * y**2 + np.sin(x * y)


def _grad_u(x, y):
    return 3 * x**2 * y**2 + y * np.cos(x * y), 2 * x**3 * y + x * np.cos(x * y)


def _f(x, y):
    return x**3 * (y**2 - 2) - 6 * x * y**2 + (1 + x**2 + y**2) * np.sin(x * y)


def manufactured() -> ModelProblem:
    """u = x^3 y^2 + sin(xy) with matching right-hand side and boundary data."""
    u = ScalarField2D(_u, _grad_u)
    return ModelProblem("manufactured", ScalarField2D(_f), u, u)


def zero() -> ModelProblem:
    z = constant_field(0.0)
    return ModelProblem("zero", z, z, z)


PROBLEMS = {"manufactured": manufactured, "zero": zero}


def get_problem(name: str) -> ModelProblem:
    try:
        return PROBLEMS[name]()
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; choose from {sorted(PROBLEMS)}") from None
