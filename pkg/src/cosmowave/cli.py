"""Command-line surface: classify, simulate, sweep, oracle, compare, selftest.

Exit codes: 0 success, 1 configuration/validation error, 2 runtime
failure, 3 comparison (scaling-check) failure, 64 usage error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from . import config as cfg
from . import experiments as ex
from . import ode_oracle, pde_solver, serialization, theory
from .errors import (
    CosmowaveError,
    DomainError,
    ParseError,
    ValidationError,
)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2
EXIT_COMPARISON = 3
EXIT_USAGE = 64

_CLASSIFIABLE = {"abs_ut_p", "abs_u_p", "abs_grad_u_p"}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser():
    parser = _Parser(prog="cosmowave", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command")

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", required=True, help="run configuration (TOML)")
        sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument("--quiet", action="store_true")
        sp.add_argument(
            "--figures", action="store_true",
            help="render PNG figures next to the delimited output",
        )

    common(sub.add_parser("classify", help="print the regime report"))
    common(sub.add_parser("simulate", help="run one PDE instance"))
    sp = sub.add_parser("sweep", help="run an epsilon sweep")
    common(sp)
    sp.add_argument("--engine", choices=["pde", "ode"], default=None)
    common(sub.add_parser("oracle", help="integrate the reduced dynamics"))
    sp = sub.add_parser("compare", help="join a sweep with a regime report")
    sp.add_argument("--sweep", required=True, help="sweep CSV or JSON")
    sp.add_argument("--report", required=True, help="regime report JSON")
    sp.add_argument("--out", default=None)
    sp.add_argument("--quiet", action="store_true")
    sp.add_argument("--figures", action="store_true")
    sp = sub.add_parser("selftest", help="run the built-in example battery")
    sp.add_argument("--quiet", action="store_true")
    return parser


def _out_dir(args, conf=None):
    path = args.out or (conf.out_dir if conf else "out")
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _say(args, message):
    if not args.quiet:
        print(message)


def _cmd_classify(args):
    conf = cfg.load_config(args.config)
    if conf.nonlinearity not in _CLASSIFIABLE:
        raise ValidationError(
            "problem.nonlinearity",
            f"classification covers {sorted(_CLASSIFIABLE)}",
        )
    report = theory.classify(
        conf.profile, conf.n, conf.p, theory.FKind(conf.nonlinearity), R=conf.R
    )
    doc = report.to_dict()
    out = _out_dir(args, conf)
    serialization.write_json(doc, out / "report.json")
    import json

    print(json.dumps(doc, indent=2))
    return EXIT_OK


def _cmd_simulate(args):
    conf = cfg.load_config(args.config)
    spec = conf.problem_spec()
    result = pde_solver.run(
        spec, conf.grid_config(), conf.stop_rule(), stride=conf.stride
    )
    out = _out_dir(args, conf)
    serialization.write_trace_csv(result.trace, out / "trace.csv")
    summary = {
        "outcome": result.outcome.value,
        "t_end": result.t_end,
        "T_est": result.T_est,
        "fit_quality": result.fit_quality,
        "confidence_width": result.confidence_width,
        "T_lower_witness": result.T_lower_witness,
        "forcing_budget_final": float(result.trace.forcing_budget[-1]),
        "grid": result.grid_echo,
        "spec_echo": {
            "profile": conf.profile.to_dict(),
            "n": conf.n,
            "p": conf.p,
            "F_kind": conf.nonlinearity,
            "epsilon": conf.epsilon,
            "R": conf.R,
        },
    }
    serialization.write_json(summary, out / "summary.json")
    if args.figures:
        from . import figures

        profile = conf.profile
        figures.render_trace_figure(
            result.trace,
            out / "trace.png",
            support_bound=lambda t: profile.big_A(t) + conf.R,
            title=f"simulate: {result.outcome.value}",
        )
    _say(args, f"outcome: {result.outcome.value}  t_end: {result.t_end:.6g}"
         + (f"  T_est: {result.T_est:.6g}" if result.T_est else ""))
    _say(args, f"wrote {out / 'trace.csv'} and {out / 'summary.json'}")
    return EXIT_OK


def _cmd_sweep(args):
    conf = cfg.load_config(args.config)
    if not conf.epsilons:
        raise ValidationError("sweep.epsilons", "required for the sweep command")
    engine = ex.Engine(args.engine or conf.engine)
    spec = conf.problem_spec()
    sweep = ex.run_sweep(
        spec,
        conf.epsilons,
        engine,
        grid=conf.grid_config(),
        stop=conf.stop_rule(),
        stride=conf.stride,
        t_cap=conf.t_cap,
        rtol=conf.rtol,
    )
    out = _out_dir(args, conf)
    serialization.write_sweep_csv(sweep, out / "sweep.csv")
    serialization.write_sweep_dat(sweep, out / "sweep.dat")
    serialization.write_json(serialization.sweep_to_dict(sweep), out / "sweep.json")
    fit = None
    try:
        fit = ex.fit_power_law(sweep.points)
        _say(args, f"power-law fit: slope {fit.slope:.4f}, r^2 {fit.r_squared:.5f}")
    except CosmowaveError:
        _say(args, "too few uncensored points for a fit")
    if args.figures:
        from . import figures

        figures.render_sweep_figure(
            sweep, out / "sweep.png", fit=fit, title=f"{engine.value} sweep"
        )
    _say(args, f"wrote {out / 'sweep.csv'}, {out / 'sweep.dat'}, {out / 'sweep.json'}")
    return EXIT_OK


def _cmd_oracle(args):
    conf = cfg.load_config(args.config)
    w0 = conf.epsilon * ex.initial_velocity_integral(
        conf.problem_spec().data, conf.n
    )
    problem = ode_oracle.OdeProblem(
        profile=conf.profile, n=conf.n, p=conf.p, R=conf.R, W0=w0
    )
    result = ode_oracle.integrate_reduced_ode(problem, conf.t_cap, rtol=conf.rtol)
    out = _out_dir(args, conf)
    serialization.write_oracle_trace_csv(result.t, result.W, out / "oracle_trace.csv")
    serialization.write_json(
        {
            "blowup_time": result.blowup_time,
            "reason": result.reason,
            "W0": w0,
            "t_cap": conf.t_cap,
            "spec_echo": {
                "profile": conf.profile.to_dict(),
                "n": conf.n,
                "p": conf.p,
                "epsilon": conf.epsilon,
                "R": conf.R,
            },
        },
        out / "oracle_summary.json",
    )
    if args.figures:
        from . import figures

        figures.render_oracle_figure(
            result.t, result.W, out / "oracle.png",
            blowup_time=result.blowup_time,
        )
    _say(
        args,
        f"oracle: {result.reason}"
        + (f", blow-up at t = {result.blowup_time:.8g}" if result.blowup_time else ""),
    )
    return EXIT_OK


def _cmd_compare(args):
    sweep_path = Path(args.sweep)
    if sweep_path.suffix == ".json":
        sweep = serialization.sweep_from_dict(serialization.read_json(sweep_path))
    else:
        sweep = serialization.read_sweep_csv(sweep_path)
    report = theory.report_from_dict(serialization.read_json(args.report))
    comparison = ex.compare_to_theory(sweep, report)
    out = _out_dir(args)
    serialization.write_json(comparison.to_dict(), out / "comparison.json")
    if args.figures:
        from . import figures

        figures.render_comparison_figure(comparison, sweep, out / "comparison.png")
    for check in comparison.checks:
        _say(
            args,
            f"[{'PASS' if check.passed else 'FAIL'}] {check.law}"
            + (
                f": predicted {check.predicted:.4g}, fitted {check.fitted:.4g}"
                if check.predicted is not None and check.fitted is not None
                else ""
            ),
        )
    _say(args, f"wrote {out / 'comparison.json'}")
    return EXIT_OK if comparison.overall_pass else EXIT_COMPARISON


def command_dispatch(argv):
    """Parse argv (without the program name) and run one subcommand."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        if args.command == "classify":
            return _cmd_classify(args)
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "oracle":
            return _cmd_oracle(args)
        if args.command == "compare":
            return _cmd_compare(args)
        if args.command == "selftest":
            from .selftest import run_selftest

            return EXIT_OK if run_selftest(quiet=args.quiet) == 0 else EXIT_RUNTIME
    except (ValidationError, ParseError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except CosmowaveError as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_USAGE


def main(argv=None):
    return command_dispatch(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
