#!/usr/bin/env python3
"""
StableCall command line

    python -m app.cli density --alpha 1.5 --delta 0 --y 0
    python -m app.cli bounds --preset pareto --alpha 1.5 --n 1000 --M 2
    python -m app.cli experiment --plan rate_recovery --out results/

JSON goes to stdout, diagnostics to stderr. Exit codes: 0 success, 1 bad
input, 2 numerical failure, 3 failed audit (experiment, verify-stein).
"""

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from dotenv import dotenv_values

from app.config import EXPERIMENT_PLANS, OUTPUT_DIR, resolve_threads
from app.errors import InvalidParameter, NumericalFailure, ValidationFailure
from app.services.attraction_domain import PRESETS, preset_law
from app.services.bounds import assemble_report, bound_inputs_for
from app.services.experiments import (
    ExperimentConfig,
    config_from_plan,
    emit_experiment,
    json_default,
    run_rate_sweep,
    write_csv,
)
from app.services.stable_dist import StableParams, call_expectation_stable, cdf, density, sample
from app.services.stein_core import heat_kernel_envelope_check, regularity_audit

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2
EXIT_AUDIT_FAILED = 3

KINDS = ("ks_rate", "call_error", "density_overlay")


class CliParser(argparse.ArgumentParser):
    """argparse errors become validation failures (exit 1, not argparse's 2)"""

    def error(self, message):
        raise InvalidParameter(message)


def _gamma(value: str) -> Fraction:
    try:
        return Fraction(value)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"gamma must be a number or a fraction like 1/2, got {value!r}")


def _add_law_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=float, required=True, help="stability index, alpha in (1,2)")
    p.add_argument("--delta", type=float, default=0.0, help="skewness, delta in [-1,1] (default 0)")


def _add_preset_flags(p: argparse.ArgumentParser, preset: Optional[str] = "pareto") -> None:
    p.add_argument("--preset", default=preset, choices=sorted(PRESETS), help="attraction-domain law")
    p.add_argument("--gamma", type=_gamma, default=None, help="decay order of B, gamma >= 0 (perturbed_pareto)")
    p.add_argument("--c", type=float, default=None, help="perturbation size (perturbed presets)")
    p.add_argument("--A", type=float, default=None, help="tail constant A > 0 (perturbed presets, default 1/2)")
    p.add_argument("--L", type=float, default=None, help="envelope constant L in |B(x)| <= L/|x|^gamma (checked against the law)")


def build_parser() -> CliParser:
    parser = CliParser(prog="stablecall", description="Stable approximation of call expectations")
    parser.add_argument("--config", default=None, help="key = value file; flags override its values")
    parser.add_argument("--threads", type=int, default=None, help="worker threads, >= 1 (default: STABLE_STEIN_THREADS or cores)")
    sub = parser.add_subparsers(dest="command", parser_class=CliParser)

    p = sub.add_parser("density", help="density of S_alpha(sigma, delta)")
    _add_law_flags(p)
    p.add_argument("--sigma", type=float, default=1.0, help="scale, sigma > 0")
    p.add_argument("--y", type=float, nargs="+", required=True, help="evaluation points (real)")

    p = sub.add_parser("cdf", help="distribution function of S_alpha(sigma, delta)")
    _add_law_flags(p)
    p.add_argument("--sigma", type=float, default=1.0, help="scale, sigma > 0")
    p.add_argument("--y", type=float, nargs="+", required=True, help="evaluation points (real)")

    p = sub.add_parser("sample", help="i.i.d. draws of S_alpha(sigma, delta)")
    _add_law_flags(p)
    p.add_argument("--sigma", type=float, default=1.0, help="scale, sigma > 0")
    p.add_argument("--n", type=int, required=True, help="number of draws, n >= 1")
    p.add_argument("--seed", type=int, default=0, help="64-bit master seed")
    p.add_argument("--format", choices=("csv", "bin"), default="csv", help="output file format")
    p.add_argument("--out", required=True, help="output file")

    p = sub.add_parser("call", help="E(Y - M)_+ for Y ~ S_alpha(sigma, delta)")
    _add_law_flags(p)
    p.add_argument("--sigma", type=float, default=1.0, help="scale, sigma > 0")
    p.add_argument("--M", type=float, required=True, help="strike, M > 0")

    p = sub.add_parser("bounds", help="bound report (JSON) or a sweep of bounds (CSV)")
    _add_law_flags(p)
    _add_preset_flags(p)
    p.add_argument("--n", type=int, default=1000, help="sample size, n >= 1")
    p.add_argument("--M", type=float, default=None, help="strike, M > 0 (enables non-uniform constants)")
    p.add_argument("--sweep-n", type=int, nargs="+", default=None, help="sweep over these n (CSV output)")
    p.add_argument("--sweep-M", type=float, nargs="+", default=None, help="sweep over these M (CSV output)")
    p.add_argument("--out", default=None, help="CSV file for sweeps (default stdout)")

    p = sub.add_parser("experiment", help="run an experiment and write its artifacts")
    p.add_argument("--plan", default=None, help=f"named plan from experiments.json ({', '.join(pl['name'] for pl in EXPERIMENT_PLANS)})")
    p.add_argument("--kind", choices=KINDS, default=None, help="experiment kind when no plan is given")
    p.add_argument("--alpha", type=float, default=None, help="stability index, alpha in (1,2)")
    p.add_argument("--delta", type=float, default=None, help="skewness, delta in [-1,1]")
    _add_preset_flags(p, preset=None)
    p.add_argument("--n-list", type=int, nargs="+", default=None, help="sample sizes, each >= 1")
    p.add_argument("--paths-list", type=int, nargs="+", default=None, help="paths per sample size, each >= 1")
    p.add_argument("--M-list", type=float, nargs="+", default=None, help="strikes, each > 0")
    p.add_argument("--seed", type=int, default=None, help="64-bit master seed")
    p.add_argument("--ks-mode", choices=("exact", "two_sample"), default=None, help="KS against the exact CDF or 500 stable paths")
    p.add_argument("--stable-paths", type=int, default=None, help="reference stable paths for two_sample mode, >= 1")
    p.add_argument("--draw-budget", type=float, default=None, help="maximum n * paths per cell")
    p.add_argument("--no-figures", action="store_true", help="skip the SVG figures")
    p.add_argument("--out", default=OUTPUT_DIR, help="output directory")

    p = sub.add_parser("verify-stein", help="Stein residual, f', f'' and heat-kernel audits (JSON)")
    _add_law_flags(p)
    p.add_argument("--M", type=float, default=2.0, help="strike, M > 0")
    p.add_argument("--y", type=float, nargs="+", default=[-3.0, 0.0, 3.0], help="residual check points")
    return parser


def _config_defaults(argv: Sequence[str]) -> Dict[str, str]:
    """Values from --config, keyed by argparse dest"""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    known, _ = pre.parse_known_args(argv)
    if known.config is None:
        return {}
    path = Path(known.config)
    if not path.exists():
        raise InvalidParameter(f"config file {path} not found", field="config")
    return {key.strip().lstrip("-").replace("-", "_"): value for key, value in dotenv_values(path).items() if value is not None}


def _apply_config(parser: CliParser, values: Dict[str, str]) -> None:
    """File values become defaults (typed by each action), so flags still win"""
    subparsers = [a for a in parser._actions if isinstance(a, argparse._SubParsersAction)]
    targets = [parser] + [p for action in subparsers for p in action.choices.values()]
    for target in targets:
        for action in target._actions:
            if action.dest not in values:
                continue
            raw = values[action.dest]
            convert = action.type or str
            if action.nargs in ("+", "*"):
                action.default = [convert(v) for v in raw.replace(",", " ").split()]
            else:
                action.default = convert(raw)
            action.required = False


def _emit(payload) -> None:
    json.dump(payload, sys.stdout, indent=2, default=json_default)
    sys.stdout.write("\n")


def _cmd_density(args) -> int:
    params = StableParams(args.alpha, args.sigma, args.delta)
    for y in args.y:
        print(f"{density(params, y):.12g}")
    return EXIT_OK


def _cmd_cdf(args) -> int:
    params = StableParams(args.alpha, args.sigma, args.delta)
    for y in args.y:
        print(f"{cdf(params, y):.12g}")
    return EXIT_OK


def _cmd_sample(args) -> int:
    batch = sample(StableParams(args.alpha, args.sigma, args.delta), args.n, args.seed, threads=args.threads)
    if args.format == "bin":
        batch.to_binary(args.out)
    else:
        batch.to_csv(args.out)
    _emit({"n": batch.n, "seed": batch.seed, "label": batch.label, "out": str(args.out)})
    return EXIT_OK


def _cmd_call(args) -> int:
    print(f"{call_expectation_stable(StableParams(args.alpha, args.sigma, args.delta), args.M):.12g}")
    return EXIT_OK


def _cmd_bounds(args) -> int:
    law = preset_law(args.preset, args.alpha, args.delta, args.gamma, args.c, args.A, args.L)
    if args.sweep_n or args.sweep_M:
        frame = run_rate_sweep(law, n_values=args.sweep_n or (), M_values=args.sweep_M or (), n=args.n, M=args.M)
        if args.out:
            write_csv(frame, args.out)
        else:
            frame.to_csv(sys.stdout, index=False, float_format="%.17g", lineterminator="\n")
        return EXIT_OK
    _emit(assemble_report(bound_inputs_for(law, args.n, args.M)).to_dict())
    return EXIT_OK


def _experiment_config(args) -> Tuple[str, ExperimentConfig]:
    overrides = {
        "n_list": args.n_list, "paths_list": args.paths_list, "M_list": args.M_list,
        "ks_mode": args.ks_mode, "stable_paths": args.stable_paths, "draw_budget": args.draw_budget,
        "delta": args.delta, "preset": args.preset, "gamma": args.gamma, "c": args.c, "A": args.A, "L": args.L,
    }
    if args.plan is not None:
        matches = [pl for pl in EXPERIMENT_PLANS if pl["name"] == args.plan]
        if not matches:
            raise InvalidParameter(f"unknown plan {args.plan!r}", field="plan")
        plan = dict(matches[0])
    elif args.kind is not None:
        plan = {"kind": args.kind}
    else:
        raise InvalidParameter("give --plan or --kind", field="plan")
    plan.update({key: value for key, value in overrides.items() if value is not None})
    if args.kind is not None:
        plan["kind"] = args.kind
    alpha = args.alpha if args.alpha is not None else plan.get("alpha", (plan.get("alphas") or [None])[0])
    if alpha is None:
        raise InvalidParameter("--alpha is required", field="alpha")
    for key in ("n_list", "paths_list"):
        if key not in plan:
            raise InvalidParameter(f"--{key.replace('_', '-')} is required", field=key)
    config = config_from_plan(plan, alpha=alpha, seed=args.seed, output_dir=args.out, threads=args.threads)
    return plan["kind"], config


def _cmd_experiment(args) -> int:
    kind, config = _experiment_config(args)
    print(f"[experiment] {kind} for {config.law.name} (alpha={config.law.alpha:g}) -> {config.output_dir}", file=sys.stderr)
    report = emit_experiment(kind, config, figures=not args.no_figures)
    _emit({key: report[key] for key in report if key not in ("cells", "tail_masses")})
    return EXIT_OK if report.get("passed") else EXIT_AUDIT_FAILED


def _cmd_verify_stein(args) -> int:
    audit = regularity_audit(args.M, args.alpha, args.delta, residual_points=tuple(args.y))
    envelopes = heat_kernel_envelope_check(args.alpha, args.delta)
    audit["pass"]["envelope"] = bool(envelopes["magnitude"]["density_ok"] and envelopes["magnitude"]["derivative_ok"])
    audit["envelopes"] = envelopes
    _emit(audit)
    ok = all(flag is not False for flag in audit["pass"].values())
    return EXIT_OK if ok else EXIT_AUDIT_FAILED


COMMANDS = {
    "density": _cmd_density,
    "cdf": _cmd_cdf,
    "sample": _cmd_sample,
    "call": _cmd_call,
    "bounds": _cmd_bounds,
    "experiment": _cmd_experiment,
    "verify-stein": _cmd_verify_stein,
}


def _validate(args) -> None:
    """Domains checked before any computation; messages name the flag"""
    alpha = getattr(args, "alpha", None)
    if alpha is not None and not 1.0 < alpha < 2.0:
        raise InvalidParameter(f"alpha must lie in (1,2), got {alpha}", field="alpha")
    delta = getattr(args, "delta", None)
    if delta is not None and not -1.0 <= delta <= 1.0:
        raise InvalidParameter(f"delta must lie in [-1,1], got {delta}", field="delta")
    M = getattr(args, "M", None)
    if M is not None and not M > 0:
        raise InvalidParameter(f"M must be positive, got {M}", field="M")
    n = getattr(args, "n", None)
    if n is not None and n < 1:
        raise InvalidParameter(f"n must be >= 1, got {n}", field="n")
    sigma = getattr(args, "sigma", None)
    if sigma is not None and not sigma > 0:
        raise InvalidParameter(f"sigma must be positive, got {sigma}", field="sigma")
    if args.threads is not None and args.threads < 1:
        raise InvalidParameter(f"threads must be >= 1, got {args.threads}", field="threads")


def dispatch(argv: Optional[List[str]] = None) -> int:
    """Run one subcommand; returns the process exit code"""
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        parser = build_parser()
        _apply_config(parser, _config_defaults(argv))
        args = parser.parse_args(argv)
        if args.command is None:
            raise InvalidParameter("a subcommand is required", field="command")
        _validate(args)
        args.threads = resolve_threads(args.threads)
        return COMMANDS[args.command](args)
    except ValidationFailure as exc:
        where = f"--{exc.field.replace('_', '-')}: " if exc.field else ""
        print(f"error: {where}{exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalFailure as exc:
        print(f"numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
