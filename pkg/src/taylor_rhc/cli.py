"""Command-line front end: ``taylor-rhc {riccati,solve,rhc,paper-tables,check}``.

Exit codes: 0 success, 1 configuration error, 2 numerical failure (including
failed acceptance checks), 3 partial results.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys as _sys
from pathlib import Path

import numpy as np

from . import __version__
from .checks import run_checks
from .config import config_system, config_y0, load_config
from .errors import InvalidInputError, InvalidSystemError, NumericalError, PartialResultError
from .experiments import (
    PENALTY_KINDS,
    SweepSpec,
    export,
    monotonicity_report,
    rho_table,
    rho_variation,
    run_sweep,
)
from .ocp import SolverOptions, reference_solution, solve_finite_horizon
from .rhc import RhcConfig, compare_to_reference, decay_certificate, run_rhc
from .riccati import solve_are
from .taylor import penalty_from_config

log = logging.getLogger("taylor_rhc")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_PARTIAL = 0, 1, 2, 3

# acceptance bounds on the rho spread over tau >= 0.4, per penalty order
RHO_VARIATION_LIMITS = {1: 1.8, 2: 3.6, 3: 4.7}
MONOTONE_FLOOR = 1e-7
LQ_EXACTNESS_TOL = 1e-5


def _setup_logging():
    level = os.environ.get("RHC_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def _write_json(out: Path | None, name: str, payload: dict):
    if out is None:
        return
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _penalty(cfg, sys, ric=None):
    spec = cfg.get("penalty", "taylor2")
    if isinstance(spec, int) or (isinstance(spec, str) and spec.isdigit()):
        spec = PENALTY_KINDS.get(int(spec), spec)
    return penalty_from_config(spec if isinstance(spec, dict) else {"kind": spec}, sys, ric)


def _fmt_matrix(M) -> str:
    return "\n".join("  " + "  ".join(f"{x: .10f}" for x in row) for row in np.atleast_2d(M))


def cmd_riccati(cfg, args) -> int:
    sys = config_system(cfg)
    ric = solve_are(sys)
    print("Pi =")
    print(_fmt_matrix(ric.Pi))
    print("A_pi = A - B B^T Pi / alpha =")
    print(_fmt_matrix(ric.A_pi))
    print(f"lambda = {ric.lam:.12g}")
    print(f"residual = {ric.residual:.3e}  (Newton iterations: {ric.iterations})")
    _write_json(args.out, "riccati.json", {"Pi": ric.Pi.tolist(), "A_pi": ric.A_pi.tolist(), "lambda": ric.lam,
                                           "residual": ric.residual, "iterations": ric.iterations})
    return EXIT_OK


def cmd_solve(cfg, args) -> int:
    sys = config_system(cfg)
    opts = SolverOptions.from_config(cfg.get("solver"))
    phi = _penalty(cfg, sys)
    T = float(cfg.get("T", 1.0))
    sol = solve_finite_horizon(sys, T, phi, config_y0(cfg, sys.n), opts)
    c = sol.cost
    print(f"horizon T={T:g}, penalty {phi.kind}")
    print(f"cost {c.total:.12e} (state {c.state_cost:.6e}, control {c.control_cost:.6e}, terminal {c.terminal_cost:.6e})")
    print(f"gradient norm {sol.grad_norm:.3e} after {sol.iterations} iterations, converged: {sol.converged}")
    print(f"y(T) = {np.array2string(sol.y.final, precision=8)}")
    _write_json(args.out, "solve.json", {
        "T": T, "penalty": phi.kind, "cost": c.total, "grad_norm": sol.grad_norm, "iterations": sol.iterations,
        "converged": sol.converged, "t": sol.u.grid.nodes[:-1].tolist(), "u_left": sol.u.left.tolist(),
        "u_right": sol.u.right.tolist(), "y": sol.y.states.tolist(),
    })
    return EXIT_OK if sol.converged else EXIT_NUMERICAL


def cmd_rhc(cfg, args) -> int:
    sys = config_system(cfg)
    opts = SolverOptions.from_config(cfg.get("solver"))
    ric = solve_are(sys)
    phi = _penalty(cfg, sys, ric)
    y0 = config_y0(cfg, sys.n)
    L = float(cfg.get("L", 5.0))
    rcfg = RhcConfig(float(cfg.get("tau", 0.4)), float(cfg.get("T", 1.0)), phi, L, opts)
    ref = reference_solution(sys, y0, L, opts)
    res = run_rhc(sys, y0, rcfg, reference=ref)
    m = compare_to_reference(res, ref)
    cert = decay_certificate(res, ric.lam) if len(res.windows) >= 3 else None
    print(f"tau={rcfg.tau:g} T={rcfg.T:g} L={L:g} penalty {phi.kind}: {len(res.windows)} windows")
    print(f"|u_RH - u_ref|_L2 = {m.control_error:.3e}")
    print(f"max |y_RH - y_ref| = {m.state_error:.3e}")
    print(f"J(u_RH) - J(u_ref) = {m.suboptimality:.3e}")
    if cert is not None:
        print(f"fitted decay rate {cert.rate:.4f} (lambda {ric.lam:.4f})")
    _write_json(args.out, "rhc.json", {
        "tau": rcfg.tau, "T": rcfg.T, "L": L, "penalty": phi.kind, "control_error": m.control_error,
        "state_error": m.state_error, "suboptimality": m.suboptimality, "windows": len(res.windows),
        "a_n": res.a_n.tolist(), "b_n": res.b_n.tolist(),
        "decay_rate": None if cert is None else cert.rate,
    })
    return EXIT_OK


def _table_checks(tables: dict, rhos: dict, spec: SweepSpec) -> list:
    checks = []
    mono = monotonicity_report(tables, floor=MONOTONE_FLOOR)
    checks.append(("monotone in tau, T and k (above 1e-7)", mono.ok,
                   "no violations" if mono.ok else f"{len(mono.violations)} violations: " + "; ".join(mono.lines())))
    linear = not np.any(spec.system.N)
    # with N = 0 the k=2 errors are rounding noise and rho carries no information
    for k, r in ({} if linear else rhos).items():
        var = rho_variation(r, 0.4)
        lim = RHO_VARIATION_LIMITS[k]
        checks.append((f"rho variation k={k} over tau>=0.4", var <= lim, f"{var:.2f} (limit {lim})"))
    if linear and 2 in tables:
        worst = float(np.nanmax(tables[2].values))
        checks.append(("linear-quadratic exactness k=2", worst <= LQ_EXACTNESS_TOL,
                       f"max error {worst:.2e} (limit {LQ_EXACTNESS_TOL:g})"))
    return checks


def cmd_paper_tables(cfg, args) -> int:
    spec = SweepSpec.from_config(cfg)
    out = args.out or Path("tables")
    out.mkdir(parents=True, exist_ok=True)
    tables = run_sweep(spec, jobs=args.jobs)
    ext = "csv" if args.format == "csv" else "md"
    rhos = {}
    for k, t in tables.items():
        rhos[k] = rho_table(t, t.meta["lambda"], k)
        export(t, out / f"error_k{k}.{ext}", args.format)
        export(rhos[k], out / f"rho_k{k}.{ext}", args.format)

    checks = _table_checks(tables, rhos, spec)
    failed_cells = sum(len(t.errors) for t in tables.values())
    lines = [f"cells per table: {next(iter(tables.values())).n_cells()}",
             f"lambda: {next(iter(tables.values())).meta['lambda']:.10f}",
             f"reference certificate: {next(iter(tables.values())).meta['reference_certificate']:.2e}",
             f"failed cells: {failed_cells}"]
    lines += [f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}" for name, ok, detail in checks]
    text = "\n".join(lines) + "\n"
    (out / "summary.txt").write_text(text)
    print(text, end="")
    print(f"tables written to {out}")
    if failed_cells:
        return EXIT_PARTIAL
    return EXIT_OK if all(ok for _, ok, _ in checks) else EXIT_NUMERICAL


def cmd_check(cfg, args) -> int:
    results = run_checks(quick=args.quick)
    for r in results:
        print(r.line())
    bad = [r for r in results if not r.passed]
    print(f"{len(results) - len(bad)}/{len(results)} checks passed")
    return EXIT_OK if not bad else EXIT_NUMERICAL


COMMANDS = {
    "riccati": cmd_riccati,
    "solve": cmd_solve,
    "rhc": cmd_rhc,
    "paper-tables": cmd_paper_tables,
    "check": cmd_check,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None,
                        help="JSON config; defaults to the shipped two-state example")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config entry by dotted path, e.g. --set sweep.penalties=[2]")
    common.add_argument("--out", type=Path, default=None, help="output directory")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
    common.add_argument("--format", choices=("csv", "md"), default="csv", help="table format")

    p = argparse.ArgumentParser(prog="taylor-rhc", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("riccati", parents=[common], help="solve the Riccati equation and print Pi, A_pi, lambda")
    sub.add_parser("solve", parents=[common], help="solve one finite-horizon problem")
    sub.add_parser("rhc", parents=[common], help="run receding-horizon control and compare with the reference")
    sub.add_parser("paper-tables", parents=[common], help="sweep (tau, T) and write error and rho tables")
    chk = sub.add_parser("check", parents=[common], help="run the embedded verification suite")
    chk.add_argument("--quick", action="store_true", help="fewer directions and cells")
    return p


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    if args.jobs < 1:
        print("error: --jobs must be at least 1", file=_sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config, args.overrides)
        return COMMANDS[args.command](cfg, args)
    except PartialResultError as exc:
        print(f"partial result: {exc}", file=_sys.stderr)
        return EXIT_PARTIAL
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=_sys.stderr)
        return EXIT_NUMERICAL
    except (InvalidInputError, InvalidSystemError, KeyError, TypeError, ValueError) as exc:
        print(f"config error: {exc}", file=_sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=_sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
