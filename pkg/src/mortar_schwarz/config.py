"""Study configuration: INI-style sections, named presets, round-trip serialization.

Grammar::

    [study]
    name = nc2
    problem = manufactured    ; manufactured | zero
    alpha = mean              ; number | min | mean | max | opt | mean/10 | 10*mean
    alphas = mean/10, mean, mean*10
    solver = schwarz          ; schwarz | gmres
    tol = 1e-08
    max_iter = 2000
    refinements = 4

    [subdomain 1]             ; numbered from 1
    rect = 0 0 0.5 0.5        ; x0 y0 x1 y1
    nx = 4
    ny = 4
    diag = same               ; same | alternate

    [interface 1]             ; optional; detected from shared sides if absent
    subdomains = 1 2
    segment = 0.5 0 0.5 0.5
"""
from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, replace
from pathlib import Path

from .mesh import InterfaceDecl, Rect


@dataclass(frozen=True)
class SubdomainSpec:
    rect: Rect
    nx: int
    ny: int
    diag: str = "same"


@dataclass
class StudyConfig:
    subdomains: list[SubdomainSpec]
    interfaces: list[InterfaceDecl] | None = None
    name: str = "custom"
    problem: str = "manufactured"
    alpha: str = "mean"
    alphas: list[str] = field(default_factory=lambda: ["mean/10", "mean", "mean*10"])
    solver: str = "schwarz"
    tol: float = 1e-8
    max_iter: int = 2000
    refinements: int = 4

    def __post_init__(self):
        if not self.subdomains:
            raise ValueError("config needs at least one subdomain")
        if self.solver not in ("schwarz", "gmres"):
            raise ValueError(f"unknown solver {self.solver!r}")
        if self.tol <= 0 or self.max_iter < 1 or self.refinements < 0:
            raise ValueError("tol > 0, max_iter >= 1 and refinements >= 0 required")

    def refined(self, level: int) -> "StudyConfig":
        """Same decomposition with every resolution multiplied by 2**level."""
        f = 2**level
        subs = [replace(s, nx=s.nx * f, ny=s.ny * f) for s in self.subdomains]
        return replace(self, subdomains=subs)

    @property
    def rects(self) -> list[Rect]:
        return [s.rect for s in self.subdomains]

    @property
    def resolutions(self) -> list[tuple[int, int]]:
        return [(s.nx, s.ny) for s in self.subdomains]


def _fmt(x: float) -> str:
    return repr(float(x))


def serialize(cfg: StudyConfig) -> str:
    cp = configparser.ConfigParser(interpolation=None)
    cp["study"] = {
        "name": cfg.name,
        "problem": cfg.problem,
        "alpha": str(cfg.alpha),
        "alphas": ", ".join(str(a) for a in cfg.alphas),
        "solver": cfg.solver,
        "tol": _fmt(cfg.tol),
        "max_iter": str(cfg.max_iter),
        "refinements": str(cfg.refinements),
    }
    for k, s in enumerate(cfg.subdomains, start=1):
        r = s.rect
        cp[f"subdomain {k}"] = {
            "rect": " ".join(_fmt(v) for v in (r.x0, r.y0, r.x1, r.y1)),
            "nx": str(s.nx), "ny": str(s.ny), "diag": s.diag,
        }
    for d in cfg.interfaces or []:
        (ax, ay), (bx, by) = d.segment
        cp[f"interface {d.id + 1}"] = {
            "subdomains": f"{d.left + 1} {d.right + 1}",
            "segment": " ".join(_fmt(v) for v in (ax, ay, bx, by)),
        }
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def parse(text: str) -> StudyConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    cp.read_string(text)
    study = cp["study"] if cp.has_section("study") else {}
    subs, ifaces = {}, {}
    for sec in cp.sections():
        kind, _, num = sec.partition(" ")
        if kind == "subdomain":
            s = cp[sec]
            x0, y0, x1, y1 = (float(v) for v in s["rect"].split())
            subs[int(num)] = SubdomainSpec(Rect(x0, y0, x1, y1), s.getint("nx"), s.getint("ny"),
                                           s.get("diag", "same"))
        elif kind == "interface":
            s = cp[sec]
            left, right = (int(v) - 1 for v in s["subdomains"].split())
            ax, ay, bx, by = (float(v) for v in s["segment"].split())
            ifaces[int(num)] = InterfaceDecl(int(num) - 1, ((ax, ay), (bx, by)), left, right)
        elif kind != "study":
            raise ValueError(f"unknown config section [{sec}]")
    if sorted(subs) != list(range(1, len(subs) + 1)):
        raise ValueError("subdomains must be numbered 1..K")
    if ifaces and sorted(ifaces) != list(range(1, len(ifaces) + 1)):
        raise ValueError("interfaces must be numbered 1..M")
    alphas = study.get("alphas")
    kwargs = dict(
        name=study.get("name", "custom"),
        problem=study.get("problem", "manufactured"),
        alpha=study.get("alpha", "mean"),
        solver=study.get("solver", "schwarz"),
        tol=float(study.get("tol", 1e-8)),
        max_iter=int(study.get("max_iter", 2000)),
        refinements=int(study.get("refinements", 4)),
    )
    if alphas is not None:
        kwargs["alphas"] = [a.strip() for a in alphas.split(",") if a.strip()]
    return StudyConfig([subs[k] for k in sorted(subs)],
                       [ifaces[k] for k in sorted(ifaces)] if ifaces else None, **kwargs)


def load(path: str | Path) -> StudyConfig:
    return parse(Path(path).read_text())


def _quarters(n1, n2, n3, n4, name, **kw) -> StudyConfig:
    rects = [Rect(0, 0, .5, .5), Rect(.5, 0, 1, .5), Rect(0, .5, .5, 1), Rect(.5, .5, 1, 1)]
    subs = [SubdomainSpec(r, n, n) for r, n in zip(rects, (n1, n2, n3, n4))]
    return StudyConfig(subs, name=name, **kw)


def _halves(left, right, name, **kw) -> StudyConfig:
    subs = [SubdomainSpec(Rect(0, 0, .5, 1), *left), SubdomainSpec(Rect(.5, 0, 1, 1), *right)]
    return StudyConfig(subs, name=name, **kw)


# Approximations of the meshes used in the experiments; exact node counts are
# not recoverable except for the 2-subdomain case (81 and 153 nodes).
PRESETS = {
    "single": lambda: StudyConfig([SubdomainSpec(Rect(0, 0, 1, 1), 4, 4)], name="single"),
    "two": lambda: _halves((8, 8), (8, 16), "two"),
    "two-small": lambda: _halves((4, 8), (6, 12), "two-small"),
    "conf1": lambda: _quarters(4, 4, 4, 4, "conf1"),
    "nc2": lambda: _quarters(4, 6, 6, 8, "nc2"),
    "nc3": lambda: _quarters(6, 8, 8, 4, "nc3"),
    "conf4": lambda: _quarters(8, 8, 8, 8, "conf4"),
    "demo": lambda: _quarters(4, 6, 6, 8, "demo", alpha="10"),
}


def preset(name: str) -> StudyConfig:
    try:
        return PRESETS[name]()
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
