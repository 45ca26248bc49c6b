"""Reproduction studies: demo solve, refinement study, alpha study, appendix scan."""
from __future__ import annotations

import csv
import math
import platform
import sys
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy

from . import __version__
from .alpha import alpha_from_rule
from .config import StudyConfig, serialize
from .coupled import solve_coupled
from .fem import error_norms
from .legendre import appendix_rows
from .problems import get_problem
from .schwarz import DecompositionProblem, SolverReport, build_decomposition, solve

CONVERGENCE_HEADER = ["refinement", "h", "E_rel", "rate"]
ALPHA_HEADER = ["alpha", "iters", "final_residual"]
HISTORY_HEADER = ["iter", "jump_residual", "E", "B", "errH1", "errLinf"]
APPENDIX_HEADER = ["p", "max_eig", "min_J_ratio", "stability_C"]


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    return "nan" if math.isnan(x) else f"{x:.10e}"


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def write_manifest(out: Path, command: str, cfg: StudyConfig | None, extra: dict | None = None) -> None:
    lines = [
        f"command: {command}",
        f"mortar_schwarz: {__version__}",
        f"python: {platform.python_version()}",
        f"numpy: {np.__version__}",
        f"scipy: {scipy.__version__}",
    ]
    for k, v in (extra or {}).items():
        lines.append(f"{k}: {v}")
    if cfg is not None:
        lines += ["", "# config", serialize(cfg)]
    out.mkdir(parents=True, exist_ok=True)
    (out / "run_manifest.txt").write_text("\n".join(lines) + "\n")


def build_problem(cfg: StudyConfig, alpha=None) -> DecompositionProblem:
    """Decomposition for a config with alpha resolved from its rule."""
    problem = build_decomposition(cfg.rects, cfg.resolutions, 1.0, get_problem(cfg.problem),
                                  diag=[s.diag for s in cfg.subdomains], interfaces=cfg.interfaces)
    rule = cfg.alpha if alpha is None else alpha
    if problem.sides:
        return problem.with_alpha(alpha_from_rule(rule, problem.interface_grids()))
    return problem


def subdomain_errors(problem: DecompositionProblem, state) -> tuple[list[float], float]:
    """Per-subdomain H1 errors against the exact solution and its H1 norm."""
    exact = problem.problem.exact
    errs, ex_sq = [], 0.0
    for sub in problem.subdomains:
        e = error_norms(sub.space, state.u[sub.index], exact)
        errs.append(e.h1)
        ex_sq += e.h1_exact**2
    return errs, math.sqrt(ex_sq)


def history_rows(report: SolverReport):
    for r in report.records:
        yield [r.n, r.jump_residual, r.E, r.B, r.err_h1, r.err_linf]


def run_demo(cfg: StudyConfig, out: str | Path | None = None) -> dict:
    """Solve once, export the solution per subdomain and the iteration history."""
    problem = build_problem(cfg)
    state, report = solve(problem, cfg.solver, cfg.tol, cfg.max_iter, record_states=True)
    errs, e_ex = subdomain_errors(problem, state)
    e_rel = math.sqrt(sum(e * e for e in errs)) / e_ex
    result = {"alpha": problem.alpha, "iterations": report.iterations_used,
              "converged": report.converged, "jump_residual": report.final_jump_residual,
              "E_rel": e_rel, "report": report, "state": state, "problem": problem}
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        write_csv(out / "demo_history.csv", HISTORY_HEADER, history_rows(report))
        for sub in problem.subdomains:
            sub.mesh.dump(out / f"mesh_sub{sub.index + 1}.txt")
            write_csv(out / f"solution_sub{sub.index + 1}.csv", ["x", "y", "u"],
                      (list(v) + [u] for v, u in zip(sub.mesh.vertices, state.u[sub.index])))
        write_manifest(out, "demo", cfg, {"alpha": fmt(problem.alpha),
                                          "iterations": report.iterations_used,
                                          "converged": report.converged,
                                          "relative_H1_error": fmt(e_rel),
                                          "wall_time_s": f"{report.wall_time:.3f}"})
    return result


def run_convergence_study(cfg: StudyConfig, out: str | Path | None = None) -> list[dict]:
    """Relative H1 error of the converged solution over uniform refinements."""
    if cfg.refinements < 1:
        raise ValueError("convergence study needs refinements >= 1")
    rows = []
    for level in range(cfg.refinements + 1):
        problem = build_problem(cfg.refined(level))
        state, report = solve(problem, cfg.solver, cfg.tol, cfg.max_iter)
        errs, e_ex = subdomain_errors(problem, state)
        E = math.sqrt(sum(e * e for e in errs))
        row = {
            "refinement": level,
            "h": problem.h_max,
            "E_sub_rel": [e / e_ex for e in errs],
            "E_rel": E / e_ex,
            "alpha": problem.alpha,
            "iterations": report.iterations_used,
            "converged": report.converged,
            "rate": None,
        }
        if rows:
            row["rate"] = math.log2(rows[-1]["E_rel"] / row["E_rel"])
        rows.append(row)
    if out is not None:
        out = Path(out)
        write_csv(out / "convergence.csv", CONVERGENCE_HEADER,
                  ([r["refinement"], r["h"], r["E_rel"], r["rate"]] for r in rows))
        K = len(cfg.subdomains)
        write_csv(out / "convergence_subdomains.csv",
                  ["refinement", "h", "alpha"] + [f"E_rel_{k + 1}" for k in range(K)]
                  + ["E_rel", "iterations", "converged"],
                  ([r["refinement"], r["h"], r["alpha"], *r["E_sub_rel"], r["E_rel"],
                    r["iterations"], r["converged"]] for r in rows))
        write_manifest(out, "convergence", cfg)
    return rows


def run_alpha_study(cfg: StudyConfig, alphas: Sequence[str | float] | None = None,
                    out: str | Path | None = None, solver: str | None = None) -> list[dict]:
    """Iterations and error histories for several Robin parameters.

    Errors in the histories are relative to the converged discrete solution,
    obtained by a direct solve of the coupled system.
    """
    alphas = list(cfg.alphas if alphas is None else alphas)
    if len(alphas) < 2:
        raise ValueError("alpha study needs at least two values")
    solver = cfg.solver if solver is None else solver
    base = build_problem(cfg)
    if not base.sides:
        raise ValueError("alpha study needs at least one interface")
    grids = base.interface_grids()
    rows = []
    for rule in alphas:
        problem = base.with_alpha(alpha_from_rule(rule, grids))
        reference = solve_coupled(problem)
        state, report = solve(problem, solver, cfg.tol, cfg.max_iter, reference=reference)
        rows.append({"rule": str(rule), "alpha": problem.alpha, "iters": report.iterations_used,
                     "converged": report.converged, "final_residual": report.final_jump_residual,
                     "report": report})
    if out is not None:
        out = Path(out)
        write_csv(out / "alpha_study.csv", ALPHA_HEADER,
                  ([r["alpha"], r["iters"], r["final_residual"]] for r in rows))
        for i, r in enumerate(rows, start=1):
            write_csv(out / f"alpha_history_{i}.csv", HISTORY_HEADER, history_rows(r["report"]))
        write_manifest(out, "alpha-study", cfg, {"solver": solver,
                                                 "alphas": ", ".join(r["rule"] for r in rows)})
    return rows


def run_solver_comparison(cfg: StudyConfig, alpha: str | float = "mean",
                          out: str | Path | None = None) -> dict:
    """Schwarz and GMRES iteration counts for one alpha."""
    problem = build_problem(cfg, alpha)
    _, rs = solve(problem, "schwarz", cfg.tol, cfg.max_iter)
    _, rg = solve(problem, "gmres", cfg.tol, cfg.max_iter)
    result = {"alpha": problem.alpha, "schwarz_iters": rs.iterations_used,
              "gmres_iters": rg.iterations_used, "schwarz_converged": rs.converged,
              "gmres_converged": rg.converged}
    if out is not None:
        out = Path(out)
        write_csv(out / "solver_comparison.csv",
                  ["alpha", "schwarz_iters", "gmres_iters", "schwarz_converged", "gmres_converged"],
                  [[result[k] for k in ("alpha", "schwarz_iters", "gmres_iters",
                                        "schwarz_converged", "gmres_converged")]])
        write_manifest(out, "compare", cfg)
    return result


def run_verify_appendix(p_max: int = 14, out: str | Path | None = None) -> list[dict]:
    rows = appendix_rows(range(2, p_max + 1))
    if out is not None:
        out = Path(out)
        write_csv(out / "appendix.csv", APPENDIX_HEADER,
                  ([r["p"], r["max_eig"], r["min_J_ratio"], r["stability_C"]] for r in rows))
        write_manifest(out, "verify-appendix", None, {"p_max": p_max})
    return rows
