"""Command-line interface.

Exit codes: 0 success, 2 input error, 3 numerical failure, 4 failed
verification.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, mixing as mixing_mod
from .basis import BasisSpec
from .config import ConfigError, load_config, mixing_from, prior_from, schema_help, study_from
from .estimator import EstimatorConfig, FittedEstimator, NumericalError, choose_m, delta_of, fit
from .harness import StudyError, emit_report, run_study
from .mixing import MIXING_KINDS, MixingModel
from .oracle import BayesOracle, NearZeroMarginalError
from .quadrature import QuadratureError

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3
EXIT_VERIFY = 4

U_TOLERANCE = 1e-6


class InputError(ValueError):
    pass


def read_data(path):
    """One positive number per line; blank lines and ``#`` comments skipped."""
    values = []
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                body = line.split("#", 1)[0].strip()
                if not body:
                    continue
                try:
                    v = float(body)
                except ValueError:
                    raise InputError(f"{path}:{lineno}: not a number: {body!r}") from None
                if not (math.isfinite(v) and v > 0):
                    raise InputError(f"{path}:{lineno}: observations must be positive, got {v}")
                values.append(v)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    if not values:
        raise InputError(f"{path}: no observations")
    return np.array(values)


def _write(text, output):
    if output is None or output == "-":
        sys.stdout.write(text)
    else:
        Path(output).write_text(text, encoding="utf-8")


def _load_estimator(path):
    try:
        return FittedEstimator.from_json(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise InputError(f"cannot load estimator {path}: {exc}") from exc


def cmd_fit(args):
    cfg = load_config(args.config)
    model = mixing_from(cfg)
    data = read_data(args.data)
    try:
        model.check_x(data)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    est = cfg.get("estimator", {})
    n = data.size
    r_star = est.get("r_star", 1.0)
    rate_constant = est.get("rate_constant", 1.0)
    M = args.M or est.get("M") or (choose_m(n, r_star, model.beta_exponent, rate_constant)
                                   if n >= 2 else 1)
    delta = args.delta or est.get("delta") or delta_of(n, M)
    config = EstimatorConfig(BasisSpec(model.recommended_a, M), delta, r_star, rate_constant)
    fitted = fit(data, model, config)
    _write(fitted.to_json(), args.output)
    print(f"M={M} delta={delta!r} N={n}", file=sys.stderr)
    return EXIT_OK


def _points(args):
    pts = list(args.y or [])
    if args.points:
        pts.extend(read_data(args.points))
    return [float(v) for v in pts]


def cmd_predict(args):
    fitted = _load_estimator(args.estimator)
    ys = _points(args)
    if not all(y >= 0 for y in ys):
        raise InputError("prediction points must be nonnegative")
    out = ["y,t_hat\n"]
    for y in ys:
        out.append(f"{y!r},{float(fitted.predict(y))!r}\n")
    _write("".join(out), args.output)
    return EXIT_OK


def _models_for_verify(args):
    if args.config:
        return [mixing_from(load_config(args.config))]
    if args.model == "all":
        return [getattr(MixingModel, k)() for k in MIXING_KINDS]
    if not args.model:
        raise InputError("verify-u needs --config or --model")
    params = {k: getattr(args, k) for k in ("alpha", "lo", "hi", "theta_max")
              if getattr(args, k) is not None}
    try:
        return [getattr(MixingModel, args.model)(**params)]
    except (TypeError, ValueError) as exc:
        raise InputError(f"invalid model: {exc}") from exc


def cmd_verify_u(args):
    models = _models_for_verify(args)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["model", "k", "theta", "residual"])
    worst = 0.0
    for model in models:
        thetas = args.thetas if args.thetas else model.theta_grid(5)
        for theta in thetas:
            try:
                model.check_theta(theta)
            except ValueError as exc:
                raise InputError(str(exc)) from exc
            res = mixing_mod.u_identity_residuals(model, args.k_max, float(theta))
            for k, r in enumerate(res):
                w.writerow([model.kind, k, repr(float(theta)), repr(float(r))])
            worst = max(worst, float(np.max(res)))
    print(f"# max_residual={worst!r} tolerance={U_TOLERANCE!r}")
    if not worst <= U_TOLERANCE:
        print(f"U-identity breached: max residual {worst:.3g}", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def cmd_study(args):
    cfg = load_config(args.config)
    study = study_from(cfg, seed=args.seed)
    report = run_study(study, threads=args.threads)
    outdir = Path(args.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    emit_report(report, "json", outdir / f"{args.prefix}.json")
    emit_report(report, "csv", outdir / f"{args.prefix}.csv")
    if report.slopes is not None:
        print(f"pooled slope {report.slopes['pooled']['slope']:.4f} "
              f"(theory {report.slopes['theoretical']:.4f})", file=sys.stderr)
    return EXIT_OK


def cmd_oracle_compare(args):
    fitted = _load_estimator(args.estimator)
    cfg = load_config(args.config)
    model = mixing_from(cfg)
    if fitted.basis.a != model.recommended_a:
        raise InputError(f"estimator uses a={fitted.basis.a} but the {model.kind} "
                         f"model requires a={model.recommended_a}")
    oracle = BayesOracle(prior_from(cfg, model), model)
    ys = _points(args)
    lo, hi = model.x_support
    out = ["y,t_hat,t,abs_diff,flag\n"]
    max_diff = None
    for y in ys:
        if not (lo < y <= hi):
            print(f"warning: y={y} is outside the {model.kind} support", file=sys.stderr)
            out.append(f"{y!r},,,,outside_support\n")
            continue
        t_hat = float(fitted.predict(y))
        t = oracle.bayes_rule(y)
        diff = abs(t_hat - t)
        max_diff = diff if max_diff is None else max(max_diff, diff)
        out.append(f"{y!r},{t_hat!r},{t!r},{diff!r},\n")
    if max_diff is not None:
        out.append(f"# max_abs_diff={max_diff!r}\n")
    _write("".join(out), args.output)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="lagueb",
        description="Laguerre-series empirical Bayes estimation.",
        epilog=schema_help() + "\n\nexit codes: 0 ok, 2 input error, "
        "3 numerical failure, 4 verification failure",
        formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    fmt = argparse.RawDescriptionHelpFormatter

    p = sub.add_parser("fit", help="fit an estimator to a data file",
                       epilog=schema_help(), formatter_class=fmt)
    p.add_argument("--config", required=True, help="experiment config ([mixing], [estimator])")
    p.add_argument("--data", required=True, help="one observation per line, '#' comments")
    p.add_argument("--output", "-o", help="estimator JSON path (default: stdout)")
    p.add_argument("--M", type=int, help="truncation level override")
    p.add_argument("--delta", type=float, help="ridge size override")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="evaluate a fitted estimator")
    p.add_argument("--estimator", required=True, help="estimator JSON")
    p.add_argument("--y", type=float, nargs="*", help="query points")
    p.add_argument("--points", help="file of query points")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("verify-u", help="check the U_k identities by quadrature",
                       epilog=schema_help(), formatter_class=fmt)
    p.add_argument("--config", help="config with a [mixing] section")
    p.add_argument("--model", choices=[*MIXING_KINDS, "all"])
    p.add_argument("--alpha", type=float)
    p.add_argument("--lo", type=float)
    p.add_argument("--hi", type=float)
    p.add_argument("--theta-max", dest="theta_max", type=float)
    p.add_argument("--k-max", type=int, default=8)
    p.add_argument("--thetas", type=float, nargs="*")
    p.set_defaults(func=cmd_verify_u)

    p = sub.add_parser("study", help="run a Monte Carlo risk study",
                       epilog=schema_help(), formatter_class=fmt)
    p.add_argument("--config", required=True)
    p.add_argument("--output-dir", required=True)
    p.add_argument("--prefix", default="report")
    p.add_argument("--seed", type=int, help="override [study] master_seed")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.set_defaults(func=cmd_study)

    p = sub.add_parser("oracle-compare", help="compare an estimator with the Bayes rule",
                       epilog=schema_help(), formatter_class=fmt)
    p.add_argument("--estimator", required=True)
    p.add_argument("--config", required=True, help="config with [mixing] and [prior]")
    p.add_argument("--y", type=float, nargs="*")
    p.add_argument("--points")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_oracle_compare)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (NumericalError, QuadratureError, StudyError, NearZeroMarginalError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, InputError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
