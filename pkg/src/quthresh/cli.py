"""Command-line frontend.

Subcommands: ``qut`` (threshold only), ``fit`` (threshold + fit + refit),
``simulate`` / ``phase`` / ``sensitivity`` (campaigns), ``variance``
(noise-level estimation). Exit codes: 0 success, 2 input or usage problems,
3 domain violations (response outside the MLE existence domain, infinite
null quantile), 4 refit non-existence (the penalized fit is still emitted).

Every run writes its fully resolved configuration next to its outputs, and
re-feeding that file via --config reproduces the identical run. All outputs
are byte-identical across repeated seeded runs and across --workers values.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from .families import (
    DomainError,
    ProblemInstance,
    QutError,
    family_from_name,
)
from .qut import (
    BOOTSTRAP_DESIGN,
    FIXED_DESIGN,
    NullSampler,
    compute_qut,
    implied_level_best_subset,
    qut_pipeline_glm,
)
from .reportio import format_real, write_json
from .simlab import (
    PHASE_METHODS,
    TABLE_METHODS,
    PhaseGridSpec,
    ScenarioSpec,
    run_phase_campaign,
    run_sensitivity_study,
    run_table2_campaign,
)
from .solvers import (
    glm_lasso_fit,
    lasso_fit,
    mle_refit,
    null_mle,
    sqrt_lasso_fit,
)
from .variance import estimate_sigma2
from .zerothresh import PenaltySpec

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_DOMAIN = 3
EXIT_REFIT = 4

WORKERS_ENV = "QUTHRESH_WORKERS"


class InputError(Exception):
    """Malformed data or configuration; maps to exit code 2."""


def _resolve_alpha(value, p: int) -> float:
    """Numeric level in (0, 1), or "auto" for 1/sqrt(pi log P)."""
    if isinstance(value, str) and value.strip().lower() == "auto":
        if p < 2:
            raise InputError("--alpha auto needs at least two penalized columns")
        return implied_level_best_subset(p)
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise InputError(f"--alpha must be a number or 'auto', got {value!r}")
    if not 0.0 < out < 1.0:
        raise InputError("alpha must lie strictly in (0, 1)")
    return out


def _default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def load_table(path):
    """Comma-separated, first-row header, '.' decimals; missing values are
    rejected rather than imputed."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}")
    if len(rows) < 2:
        raise InputError("CSV needs a header row and at least one data row")
    header = [h.strip() for h in rows[0]]
    if len(set(header)) != len(header):
        raise InputError("duplicate column names in header")
    data = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise InputError(f"line {lineno}: expected {len(header)} fields")
        try:
            data.append([float(cell) for cell in row])
        except ValueError:
            raise InputError(f"line {lineno}: non-numeric or missing value")
    return header, np.array(data)


def build_instance(args):
    header, mat = load_table(args.data)
    if args.response_col not in header:
        raise InputError(f"response column {args.response_col!r} not found")
    x0_names = [c.strip() for c in (args.x0_cols or "").split(",") if c.strip()]
    for name in x0_names:
        if name not in header:
            raise InputError(f"unpenalized column {name!r} not found")
        if name == args.response_col:
            raise InputError("response cannot be an unpenalized column")
    y = mat[:, header.index(args.response_col)]
    family = family_from_name(args.family, getattr(args, "binomial_m", 1))
    # "auto": non-Gaussian likelihoods carry an unpenalized intercept (the
    # threshold pipeline estimates it); Gaussian runs stay as given.
    mode = getattr(args, "intercept", "auto")
    with_one = mode == "on" or (mode == "auto" and not family.is_gaussian)
    cols = [mat[:, header.index(c)] for c in x0_names]
    if with_one:
        cols = [np.ones(mat.shape[0])] + cols
    x0 = np.column_stack(cols) if cols else np.zeros((mat.shape[0], 0))
    x_names = [c for c in header if c != args.response_col and c not in x0_names]
    x = (np.column_stack([mat[:, header.index(c)] for c in x_names])
         if x_names else np.zeros((mat.shape[0], 0)))
    sigma = getattr(args, "sigma", None)
    try:
        instance = ProblemInstance(x0, x, y, family, sigma)
    except ValueError as exc:
        raise InputError(str(exc))
    return instance, x_names


def _resolve_sigma(instance, args):
    """Known sigma, or an estimate when requested (Gaussian only)."""
    if not instance.family.is_gaussian:
        return instance, None
    if args.sigma is not None:
        return instance, None
    if args.estimate_sigma is None:
        raise InputError("Gaussian runs need --sigma or --estimate-sigma")
    est = estimate_sigma2(instance, args.estimate_sigma.replace("-", "_"),
                          alpha=args.alpha, m=args.mc_samples,
                          seed=args.seed + 1, cv_folds=args.cv_folds,
                          workers=args.workers)
    inst = ProblemInstance(instance.x0, instance.x, instance.y,
                           instance.family, math.sqrt(est.sigma2))
    return inst, est


def _write_config(args, out_dir: Path, command: str) -> None:
    resolved = {k: v for k, v in sorted(vars(args).items())
                if k not in ("func", "config")}
    write_json(out_dir / f"{command}_config.json", resolved)


def _out_dir(args) -> Path:
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _design(args) -> str:
    return BOOTSTRAP_DESIGN if args.design == "random" else FIXED_DESIGN


def _penalty(args) -> PenaltySpec:
    if args.penalty == "sqrt-lasso":
        return PenaltySpec.sqrt_lasso()
    return PenaltySpec.lasso()


def cmd_qut(args) -> int:
    instance, _ = build_instance(args)
    args.alpha = _resolve_alpha(args.alpha, instance.p)
    instance, est = _resolve_sigma(instance, args)
    intercept = None
    if instance.p0 > 0:
        intercept = null_mle(instance)
        if intercept is None:
            raise DomainError("the intercept-constrained MLE does not exist")
    sampler = NullSampler.from_instance(
        instance, design=_design(args),
        sigma=instance.sigma if instance.family.is_gaussian else None,
        intercept_beta0=intercept, seed=args.seed)
    result = compute_qut(sampler, _penalty(args), args.alpha,
                         args.mc_samples, args.workers)
    out = _out_dir(args)
    payload = {
        "lambda_qut": result.lambda_qut,
        "alpha": result.alpha,
        "mc_samples": result.mc_samples,
        "infinite_fraction": result.infinite_fraction,
        "seed": result.seed,
        "design": args.design,
        "penalty": args.penalty,
        "sigma2_hat": est.sigma2 if est is not None else None,
    }
    write_json(out / "qut_result.json", payload)
    _write_config(args, out, "qut")
    print(f"lambda_qut={format_real(result.lambda_qut)} "
          f"alpha={format_real(result.alpha)} mc_samples={result.mc_samples} "
          f"infinite_fraction={format_real(result.infinite_fraction)}")
    if result.quantile_is_infinite:
        print("error: the null quantile is infinite", file=sys.stderr)
        return EXIT_DOMAIN
    return EXIT_OK


def cmd_fit(args) -> int:
    instance, x_names = build_instance(args)
    args.alpha = _resolve_alpha(args.alpha, instance.p)
    out = _out_dir(args)
    est = None
    refit_wanted = args.refit_mle == "on"
    if args.lam is not None:
        # Manual penalty override: no threshold computation.
        if args.penalty == "sqrt-lasso":
            fit = sqrt_lasso_fit(instance, args.lam)
        elif instance.family.is_gaussian:
            fit = lasso_fit(instance, args.lam)
        else:
            fit = glm_lasso_fit(instance, args.lam)
        refit = None
        refit_failed = False
        if refit_wanted:
            try:
                refit = mle_refit(instance, fit.support)
            except (QutError, ValueError):
                refit_failed = True
        threshold = None
    else:
        instance, est = _resolve_sigma(instance, args)
        pipe = qut_pipeline_glm(
            instance, args.alpha, args.mc_samples,
            penalty_kind="sqrt_lasso" if args.penalty == "sqrt-lasso"
            else "lasso",
            design=_design(args), seed=args.seed, workers=args.workers,
            refit=refit_wanted)
        fit, refit, refit_failed = pipe.penalized, pipe.refit, pipe.refit_failed
        threshold = pipe.threshold
    final = refit if (refit is not None and not refit_failed) else fit
    payload = {
        "lambda": fit.lam,
        "lambda_qut": threshold.lambda_qut if threshold else None,
        "alpha": args.alpha if threshold else None,
        "sigma2_hat": est.sigma2 if est is not None else None,
        "selected_columns": [x_names[i] for i in fit.support],
        "support": list(fit.support),
        "beta0": list(final.beta0),
        "beta_nonzero": {x_names[i]: final.beta[i] for i in final.support},
        "refit": refit_wanted,
        "refit_failed": refit_failed,
        "kkt_residual": fit.kkt_residual,
        "converged": fit.converged,
    }
    write_json(out / "fit_result.json", payload)
    _write_config(args, out, "fit")
    print(f"selected={len(fit.support)} lambda={format_real(fit.lam)} "
          f"columns={','.join(x_names[i] for i in fit.support) or '-'}")
    if refit_failed:
        print("error: likelihood refit does not exist; penalized fit emitted",
              file=sys.stderr)
        return EXIT_REFIT
    return EXIT_OK


def _methods_arg(text: str, allowed) -> list[str]:
    methods = [m.strip().replace("-", "_") for m in text.split(",") if m.strip()]
    for m in methods:
        if m not in allowed:
            raise InputError(f"unknown method {m!r}; choose from "
                             + ",".join(a.replace('_', '-') for a in allowed))
    if not methods:
        raise InputError("no methods given")
    return methods


def cmd_simulate(args) -> int:
    args.alpha = _resolve_alpha(args.alpha, args.p)
    try:
        spec = ScenarioSpec(args.n, args.p, args.theta, args.omega, args.snr,
                            family_from_name(args.family, args.binomial_m),
                            args.reps, args.seed)
    except ValueError as exc:
        raise InputError(str(exc))
    methods = _methods_arg(args.methods, TABLE_METHODS)
    report = run_table2_campaign([spec], methods, alpha=args.alpha,
                                 m=args.mc_samples, cv_folds=args.cv_folds,
                                 workers=args.workers)
    out = _out_dir(args)
    report.to_csv(out / "simulate_records.csv")
    report.to_json(out / "simulate_summary.json")
    _write_config(args, out, "simulate")
    print(report.format_summary())
    return EXIT_OK


def cmd_phase(args) -> int:
    args.alpha = _resolve_alpha(args.alpha, args.p)
    try:
        grid = PhaseGridSpec(
            args.p,
            tuple(int(v) for v in args.n_list.split(",") if v.strip()),
            tuple(float(v) for v in args.rho_list.split(",") if v.strip()),
            args.magnitude, args.reps, args.seed)
    except ValueError as exc:
        raise InputError(str(exc))
    methods = _methods_arg(args.methods, PHASE_METHODS)
    report = run_phase_campaign(grid, methods, alpha=args.alpha,
                                m=args.mc_samples, workers=args.workers)
    out = _out_dir(args)
    report.to_csv(out / "phase_records.csv")
    grid_rows = [{"delta": r["delta"], "rho": r["rho"],
                  "method": r["method"], "oir": r["oir_mean"]}
                 for r in report.summary]
    from .reportio import write_csv as _write_csv
    _write_csv(out / "phase_grid.csv", grid_rows)
    report.to_json(out / "phase_summary.json")
    _write_config(args, out, "phase")
    print(report.format_summary())
    return EXIT_OK


def cmd_variance(args) -> int:
    instance, _ = build_instance(args)
    args.alpha = _resolve_alpha(args.alpha, instance.p)
    est = estimate_sigma2(instance, args.method.replace("-", "_"),
                          alpha=args.alpha, m=args.mc_samples,
                          seed=args.seed, cv_folds=args.cv_folds,
                          workers=args.workers)
    out = _out_dir(args)
    write_json(out / "variance_result.json", {
        "sigma2": est.sigma2, "method": est.method,
        "diagnostics": {k: v for k, v in est.diagnostics.items()},
    })
    _write_config(args, out, "variance")
    print(f"sigma2={format_real(est.sigma2)} method={est.method}")
    return EXIT_OK


def cmd_sensitivity(args) -> int:
    args.alpha = _resolve_alpha(args.alpha, args.p)
    try:
        spec = ScenarioSpec(args.n, args.p, args.theta, args.omega, args.snr,
                            family_from_name("poisson"), args.reps, args.seed)
    except ValueError as exc:
        raise InputError(str(exc))
    report = run_sensitivity_study(spec, alpha=args.alpha,
                                   m=args.mc_samples, workers=args.workers)
    out = _out_dir(args)
    report.to_csv(out / "sensitivity_records.csv")
    report.to_json(out / "sensitivity_summary.json")
    _write_config(args, out, "sensitivity")
    print(report.format_summary())
    return EXIT_OK


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", default="0.05",
                   help="probability level in (0,1), or 'auto' for the "
                        "1/sqrt(pi log P) level; default 0.05")
    p.add_argument("--mc-samples", type=int, default=1000, dest="mc_samples")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--output", default="qut_out")
    p.add_argument("--config", default=None,
                   help="JSON file of flag defaults; explicit flags override")


def _add_data(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, help="CSV file with header row")
    p.add_argument("--response-col", required=True, dest="response_col")
    p.add_argument("--x0-cols", default="", dest="x0_cols",
                   help="comma list of unpenalized column names")
    p.add_argument("--intercept", default="auto",
                   choices=["auto", "on", "off"],
                   help="unpenalized intercept column; auto = on for "
                        "non-Gaussian families")
    p.add_argument("--family", default="gaussian",
                   choices=["gaussian", "bernoulli", "binomial", "poisson"])
    p.add_argument("--binomial-m", type=int, default=1, dest="binomial_m")
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--estimate-sigma", default=None, dest="estimate_sigma",
                   choices=["residual-cv", "rcv", "refitted-qut"])
    p.add_argument("--penalty", default="lasso",
                   choices=["lasso", "sqrt-lasso"])
    p.add_argument("--design", default="fixed", choices=["fixed", "random"])
    p.add_argument("--cv-folds", type=int, default=10, dest="cv_folds")


def _add_scenario(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--omega", type=float, default=0.0)
    p.add_argument("--snr", type=float, required=True)
    p.add_argument("--reps", type=int, default=100)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quthresh",
        description="Quantile universal threshold tools")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("qut", help="compute the threshold for a CSV dataset")
    _add_data(p)
    _add_common(p)
    p.set_defaults(func=cmd_qut)

    p = sub.add_parser("fit", help="threshold, fit, and refit on a CSV dataset")
    _add_data(p)
    _add_common(p)
    p.add_argument("--refit-mle", default="on", choices=["on", "off"],
                   dest="refit_mle")
    p.add_argument("--lambda", type=float, default=None, dest="lam",
                   help="manual penalty; skips the threshold computation")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("simulate", help="synthetic benchmark campaign")
    _add_scenario(p)
    p.add_argument("--family", default="gaussian",
                   choices=["gaussian", "bernoulli", "binomial", "poisson"])
    p.add_argument("--binomial-m", type=int, default=1, dest="binomial_m")
    p.add_argument("--methods", default="qut-lasso,cv-min,cv-1se")
    p.add_argument("--cv-folds", type=int, default=10, dest="cv_folds")
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("phase", help="screening phase-transition campaign")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--n-list", required=True, dest="n_list",
                   help="comma list of sample sizes")
    p.add_argument("--rho-list", dest="rho_list",
                   default="0.05,0.1,0.2,0.35,0.5,0.7,0.9")
    p.add_argument("--magnitude", type=float, default=10.0)
    p.add_argument("--reps", type=int, default=20)
    p.add_argument("--methods", default="oracle,qut-lasso,cv-min,cv-1se")
    _add_common(p)
    p.set_defaults(func=cmd_phase)

    p = sub.add_parser("variance", help="noise-variance estimation for a CSV")
    _add_data(p)
    p.add_argument("--method", default="refitted-qut",
                   choices=["residual-cv", "rcv", "refitted-qut"])
    _add_common(p)
    p.set_defaults(func=cmd_variance)

    p = sub.add_parser("sensitivity", help="intercept-sensitivity study")
    _add_scenario(p)
    _add_common(p)
    p.set_defaults(func=cmd_sensitivity)
    return parser


def _apply_config(parser, argv):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    known, _ = pre.parse_known_args(argv)
    if known.config:
        try:
            values = json.loads(Path(known.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config: {exc}")
        if not isinstance(values, dict):
            raise InputError("config must be a JSON object")
        sub_actions = [a for a in parser._actions
                       if isinstance(a, argparse._SubParsersAction)]
        for sp in sub_actions[0].choices.values():
            valid = {a.dest for a in sp._actions}
            sp.set_defaults(**{k: v for k, v in values.items()
                               if k in valid and k != "config"})


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
        if args.workers is None:
            args.workers = _default_workers()
        if args.workers < 1:
            raise InputError("--workers must be at least 1")
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
