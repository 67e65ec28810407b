"""Command line front end: certification, order checks, optimization runs,
TVD sweeps and convergence studies, with CSV and figure output.

Exit codes: 0 success, 1 usage error, 2 numerical failure, 3 I/O error.
"""

import argparse
import os
import sys

import numpy as np

from . import (
    certify,
    figures,
    harness,
    optimize,
    order_conditions,
    steppers,
    tableau,
)

__all__ = ["main"]


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _read_config(path):
    """key = value lines, '#' comments."""
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise _UsageError(f"{path}:{lineno}: expected 'key = value'")
            key, val = (part.strip() for part in line.split("=", 1))
            out[key] = val
    return out


def _build_parser():
    parser = _Parser(
        prog="sspif",
        description=(
            "SSP two-step Runge-Kutta methods with non-decreasing abscissas "
            "and integrating factor time stepping"
        ),
    )
    parser.add_argument(
        "--registry",
        action="append",
        default=[],
        metavar="DIR",
        help="extra method directories searched before the builtin registry",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("certify", help="SSP coefficient and order report")
    p.add_argument("method")
    p.add_argument("--tol", type=float, default=1e-8, help="bisection width")
    p.add_argument("--r-max", type=float, default=None)

    p = sub.add_parser("order-check", help="order condition residuals")
    p.add_argument("method")
    p.add_argument("--order", type=int, default=8, help="evaluate through this order")
    p.add_argument("--tol", type=float, default=1e-10)

    p = sub.add_parser("abscissas", help="print the stage abscissas")
    p.add_argument("method")

    p = sub.add_parser("optimize", help="search for an optimal method")
    p.add_argument("--stages", type=int, required=True)
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--monotone", dest="monotone", action="store_true", default=True)
    p.add_argument("--no-monotone", dest="monotone", action="store_false")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--starts", type=int, default=None)
    p.add_argument("--out-dir", default="registry", help="directory for the result file")

    p = sub.add_parser("sweep", help="TVD lambda sweep")
    p.add_argument("--method", required=True)
    p.add_argument("--example", choices=["linear", "burgers"], default="linear")
    p.add_argument("--a", type=float, default=1.0, help="linear wavespeed")
    p.add_argument("--m", type=int, default=None, help="grid points")
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--mode", choices=["if", "explicit"], default="if")
    p.add_argument("--allow-nonmonotone", action="store_true")
    p.add_argument("--lambdas", default=None, help="comma-separated values")
    p.add_argument("--lmin", type=float, default=0.02)
    p.add_argument("--lmax", type=float, default=8.0)
    p.add_argument("--dl", type=float, default=0.02)
    p.add_argument("--threshold", type=float, default=1e-12)
    p.add_argument(
        "--observed",
        action="store_true",
        help="report the observed TVD threshold (theory-guided scan)",
    )
    p.add_argument("--config", default=None)
    p.add_argument("--out", default=None, help="CSV path")
    p.add_argument("--plotdata", default=None, help="log10 plot-data CSV path")
    p.add_argument("--plot", default=None, help="figure path (png/pdf)")

    p = sub.add_parser("converge", help="van der Pol convergence study")
    p.add_argument("--method", action="append", required=True)
    p.add_argument("--dts", default=None, help="comma-separated dt values")
    p.add_argument("--t-final", type=float, default=2.0)
    p.add_argument("--config", default=None)
    p.add_argument("--out", default=None, help="CSV path (per method suffix)")
    p.add_argument("--plot", default=None, help="figure path (png/pdf)")

    p = sub.add_parser("registry", help="inspect the method registry")
    p.add_argument("action", choices=["list", "show"])
    p.add_argument("name", nargs="?")
    return parser


def _cmd_certify(args):
    m = tableau.get_method(args.method, args.registry)
    C = certify.ssp_coefficient(
        tableau.to_spijker(m), r_max=args.r_max, tol=args.tol
    )
    mono = certify.abscissa_monotone(tableau.abscissas(m))
    order = order_conditions.attained_order(m, 1e-10)
    print(
        f"C = {C:.6f}, monotone_abscissas = {str(mono).lower()}, "
        f"order = {order}"
    )
    return 0


def _cmd_order_check(args):
    m = tableau.get_method(args.method, args.registry)
    report = order_conditions.residuals_up_to(m, args.order)
    for cond in report.conditions:
        mark = "ok" if abs(cond.value) <= args.tol else "FAIL"
        print(f"order {cond.order}  {cond.name:<14s} {cond.value:+.3e}  {mark}")
    print(f"attained order (tol {args.tol:g}): "
          f"{report.attained_order(args.tol)}")
    return 0


def _cmd_abscissas(args):
    m = tableau.get_method(args.method, args.registry)
    c = tableau.abscissas(m)
    mono = certify.abscissa_monotone(c)
    print("c =", " ".join(f"{x:.12g}" for x in c))
    print(f"monotone = {str(mono).lower()}")
    return 0


def _cmd_optimize(args):
    problem = optimize.OptimizationProblem(
        s=args.stages,
        p=args.order,
        require_monotone_abscissas=args.monotone,
        multistarts=args.starts,
        seed=args.seed,
    )
    res = optimize.optimize_tsrk(problem)
    os.makedirs(args.out_dir, exist_ok=True)
    path = os.path.join(args.out_dir, f"{res.method.name}.txt")
    tableau.save_method(res.method, path)
    mono = certify.abscissa_monotone(tableau.abscissas(res.method))
    print(
        f"{res.method.name}: C = {res.certified_C:.6f}, "
        f"max order residual = {res.order_report.max_abs():.2e}, "
        f"monotone_abscissas = {str(mono).lower()}, "
        f"starts_used = {res.starts_used}"
    )
    print(f"wrote {path}")
    return 0


def _example_from_args(args, cfg):
    m = args.m or int(cfg.get("m", 1000 if args.example == "linear" else 400))
    steps = args.steps or int(
        cfg.get("steps", 10 if args.example == "linear" else 25)
    )
    if args.example == "linear":
        return harness.linear_example(args.a, m=m, steps=steps)
    return harness.burgers_example(args.a, m=m, steps=steps)


def _cmd_sweep(args):
    cfg = _read_config(args.config) if args.config else {}
    example = _example_from_args(args, cfg)
    threshold = float(cfg.get("threshold", args.threshold))
    method = tableau.get_method(args.method, args.registry)
    sweeper = harness.TvdSweeper(
        method,
        example,
        mode=args.mode,
        allow_nonmonotone=args.allow_nonmonotone,
    )
    if args.observed:
        guess = method.certified_C
        if guess is None:
            guess = certify.ssp_coefficient(tableau.to_spijker(method))
        lam_obs, rec = harness.observed_lambda_search(
            sweeper, guess, threshold=threshold
        )
        print(f"observed lambda = {lam_obs:.4g} (threshold {threshold:g})")
    else:
        if args.lambdas:
            lams = tuple(float(t) for t in args.lambdas.split(","))
        else:
            lmin = float(cfg.get("lambda_min", args.lmin))
            lmax = float(cfg.get("lambda_max", args.lmax))
            dl = float(cfg.get("lambda_step", args.dl))
            lams = harness.default_lambda_grid(lmin, lmax, dl)
        rec = sweeper.sweep(lams)
        worst = max(rec.rises)
        print(
            f"{rec.method} on {rec.kind}(a={rec.a:g}), m={rec.m}, "
            f"steps={rec.steps}: max rise {worst:.3e} over "
            f"{len(rec.lambdas)} lambda values"
        )
    if args.out:
        harness.emit_csv(rec, args.out)
        print(f"wrote {args.out}")
    if args.plotdata:
        harness.emit_plotdata(rec, args.plotdata)
        print(f"wrote {args.plotdata}")
    if args.plot:
        figures.render_sweeps([rec], args.plot, threshold=threshold)
        print(f"wrote {args.plot}")
    return 0


def _cmd_converge(args):
    cfg = _read_config(args.config) if args.config else {}
    if args.dts:
        dts = tuple(float(t) for t in args.dts.split(","))
    elif "dts" in cfg:
        dts = tuple(float(t) for t in cfg["dts"].split(","))
    else:
        dts = harness.PAPER_DT_SET
    t_final = float(cfg.get("t_final", args.t_final))
    records = []
    for name in args.method:
        rec = harness.convergence_study(
            name, dts=dts, t_final=t_final, registry_dirs=args.registry
        )
        records.append(rec)
        print(f"{rec.method}: fitted slope = {rec.slope:.3f}")
        if args.out:
            base, ext = os.path.splitext(args.out)
            path = f"{base}_{rec.method}{ext}" if len(args.method) > 1 else args.out
            harness.emit_csv(rec, path)
            print(f"wrote {path}")
    if args.plot:
        figures.render_convergence(records, args.plot)
        print(f"wrote {args.plot}")
    return 0


def _cmd_registry(args):
    if args.action == "list":
        rows = []
        for name in tableau.registry_names(args.registry):
            m = tableau.get_method(name, args.registry)
            C = m.certified_C
            if C is None:
                C = certify.ssp_coefficient(tableau.to_spijker(m))
            mono = certify.abscissa_monotone(tableau.abscissas(m))
            rows.append((name, m.s, m.order, C, mono))
        width = max(len(r[0]) for r in rows)
        print(f"{'name':<{width}}  s  p  C         monotone")
        for name, s, p, C, mono in rows:
            print(f"{name:<{width}}  {s}  {p}  {C:<8.4f}  {str(mono).lower()}")
        return 0
    if not args.name:
        raise _UsageError("registry show needs a method name")
    m = tableau.get_method(args.name, args.registry)
    np.set_printoptions(precision=17, linewidth=120)
    print(f"name = {m.name}, k = {m.k}, s = {m.s}, order = {m.order}")
    for label in ("D", "Ahat", "A", "theta", "bhat", "b"):
        print(f"{label} =\n{getattr(m, label)}")
    if m.certified_C is not None:
        print(f"certified_C = {m.certified_C:.17g}")
    for key, val in m.provenance.items():
        print(f"{key} = {val}")
    return 0


_COMMANDS = {
    "certify": _cmd_certify,
    "order-check": _cmd_order_check,
    "abscissas": _cmd_abscissas,
    "optimize": _cmd_optimize,
    "sweep": _cmd_sweep,
    "converge": _cmd_converge,
    "registry": _cmd_registry,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except KeyError as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return 2
    except (
        certify.CertifyError,
        optimize.OptimizeError,
        steppers.StepperError,
        tableau.TableauError,
        ValueError,
        RuntimeError,
    ) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
