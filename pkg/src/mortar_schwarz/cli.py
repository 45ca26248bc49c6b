"""Command-line entry point."""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from . import config as config_mod
from .study import (
    run_convergence_study,
    run_alpha_study,
    run_demo,
    run_solver_comparison,
    run_verify_appendix,
)

DEFAULT_PRESET = {"demo": "demo", "convergence": "nc2", "alpha-study": "two", "compare": "two"}


def _load_config(args):
    if args.config:
        cfg = config_mod.load(args.config)
    else:
        cfg = config_mod.preset(args.preset or DEFAULT_PRESET[args.command])
    updates = {}
    if args.tol is not None:
        updates["tol"] = args.tol
    if args.max_iter is not None:
        updates["max_iter"] = args.max_iter
    if args.solver is not None:
        updates["solver"] = args.solver
    if args.alpha is not None:
        updates["alpha"] = args.alpha
    if getattr(args, "refinements", None) is not None:
        updates["refinements"] = args.refinements
    return replace(cfg, **updates)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mortar-schwarz",
                                     description="Robin-Schwarz domain decomposition on non-matching grids")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="study config file (INI sections)")
        p.add_argument("--preset", choices=sorted(config_mod.PRESETS), help="named configuration")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--tol", type=float)
        p.add_argument("--max-iter", type=int, dest="max_iter")
        p.add_argument("--solver", choices=("schwarz", "gmres"))
        p.add_argument("--alpha", help="number or rule: min, mean, max, opt, mean/10, 10*mean")
        return p

    common(sub.add_parser("demo", help="solve once and export the solution"))
    conv = common(sub.add_parser("convergence", help="relative H1 error under refinement"))
    conv.add_argument("--refinements", type=int)
    alpha = common(sub.add_parser("alpha-study", help="iterations for several alphas"))
    alpha.add_argument("--alphas", help="comma-separated alpha rules")
    common(sub.add_parser("compare", help="Schwarz vs GMRES iteration counts"))
    app = sub.add_parser("verify-appendix", help="scan the high-order end-interval lemma")
    app.add_argument("--out", default="out")
    app.add_argument("--p-max", type=int, default=14, dest="p_max")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "verify-appendix":
        rows = run_verify_appendix(args.p_max, args.out)
        for r in rows:
            status = "negative" if r["max_eig"] < 0 else "NOT negative"
            print(f"p={r['p']:2d}  max eigenvalue {r['max_eig']: .6e}  ({status})")
        return 0
    cfg = _load_config(args)
    if args.command == "demo":
        res = run_demo(cfg, args.out)
        print(f"alpha={res['alpha']:.6g} iterations={res['iterations']} converged={res['converged']} "
              f"jump={res['jump_residual']:.3e} relative H1 error={res['E_rel']:.4e}")
    elif args.command == "convergence":
        for r in run_convergence_study(cfg, args.out):
            rate = "" if r["rate"] is None else f" rate={r['rate']:.3f}"
            print(f"refinement {r['refinement']}: h={r['h']:.4e} E/E_ex={r['E_rel']:.4e}{rate}")
    elif args.command == "alpha-study":
        alphas = [a.strip() for a in args.alphas.split(",")] if args.alphas else None
        for r in run_alpha_study(cfg, alphas, args.out):
            print(f"alpha={r['alpha']:.6g} ({r['rule']}): iterations={r['iters']} "
                  f"residual={r['final_residual']:.3e}")
    elif args.command == "compare":
        r = run_solver_comparison(cfg, cfg.alpha, args.out)
        print(f"alpha={r['alpha']:.6g}: schwarz {r['schwarz_iters']} iterations, "
              f"gmres {r['gmres_iters']} iterations")
    return 0


if __name__ == "__main__":
    sys.exit(main())
