"""Robin parameter choices from interface mesh sizes."""
from __future__ import annotations

import math
import re
from typing import Sequence

import numpy as np

from .mortar import InterfaceGrid

RULES = ("min", "mean", "max", "opt")
_TOKEN = re.compile(r"^\s*(?:(?P<num>[0-9.eE+-]+)|(?P<rule>min|mean|max|opt)\s*(?:(?P<op>[*/])\s*(?P<fac>[0-9.eE+-]+))?"
                    r"|(?P<pre>[0-9.eE+-]+)\s*\*\s*(?P<rule2>min|mean|max|opt))\s*$")


def alpha_formula(h: float) -> float:
    """[(pi^2 + 1)((pi/h)^2 + 1)]^(1/4)."""
    return ((math.pi**2 + 1.0) * ((math.pi / h) ** 2 + 1.0)) ** 0.25


def interface_sizes(grids: Sequence[InterfaceGrid]) -> tuple[float, float, float]:
    """(h_min, h_mean, h_max) over all segments of all interface grids."""
    if not grids:
        raise ValueError("no interface grids")
    lengths = np.concatenate([g.lengths for g in grids])
    return float(lengths.min()), float(lengths.mean()), float(lengths.max())


def alpha_from_rule(rule: str | float, grids: Sequence[InterfaceGrid]) -> float:
    """Evaluate an alpha rule: a number, ``min|mean|max|opt``, or ``mean/10``, ``10*mean``.

    ``opt`` uses the single mesh size of conforming grids (equal to ``max``
    when the grids do not match).
    """
    if isinstance(rule, (int, float)):
        value = float(rule)
    else:
        m = _TOKEN.match(str(rule))
        if not m:
            raise ValueError(f"cannot parse alpha rule {rule!r}")
        if m["num"] is not None:
            value = float(m["num"])
        else:
            name = m["rule"] or m["rule2"]
            h_min, h_mean, h_max = interface_sizes(grids)
            h = {"min": h_min, "mean": h_mean, "max": h_max, "opt": h_max}[name]
            value = alpha_formula(h)
            if m["op"] == "*":
                value *= float(m["fac"])
            elif m["op"] == "/":
                value /= float(m["fac"])
            elif m["pre"] is not None:
                value *= float(m["pre"])
    if not value > 0:
        raise ValueError("alpha must be positive")
    return value
