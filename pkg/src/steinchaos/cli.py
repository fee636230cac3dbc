"""Command-line interface for the normal-approximation toolkit.

Subcommands
    stein-eq eval               f, f', residual of the Stein equation on a grid
    stein-eq verify-constants   sup-norm constants vs their certified bounds
    distance                    distance to N(0,1) from samples or a density
    bound indep-sum             Wasserstein bound vs simulation for sums
    bound gaussian-functional   theta * E|1 - T(Z)| bounds for psi(Z)
    bound chaos                 Theorem-style bound for a chaos functional
    chaos check                 exact-identity battery for a functional file
    emit-curve                  rate curves (bounds and empirical) as CSV

Exit codes: 0 on success, 1 on input or usage errors, 2 when a requested
assertion fails (a bound violated beyond its Monte Carlo slack, or an exact
identity broken).

Reports are byte-deterministic: the default seed comes from the
STEINCHAOS_SEED environment variable (falling back to 42), sampling is
blocked with one substream per block, and reports never include
timestamps or thread counts, so ``--threads`` changes wall time only.
When ``--out`` is given, report paths also render a matplotlib figure
next to the output file; ``--no-figure`` skips it.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from . import stein
from .chaos import (
    ORDER_CAP,
    annihilate,
    coeff_vector,
    functional_from_dict,
    functional_to_dict,
    ibp_check,
    inner_2p,
    load_functional,
    norm_2p,
    number_op,
    s_transform,
)
from .distances import (
    KOLMOGOROV,
    TOTAL_VARIATION,
    WASSERSTEIN,
    SampleSet,
    kolmogorov_to_normal,
    standardized_chi2_density,
    tv_to_normal_density,
    wasserstein_to_normal,
)
from .errors import BoundAssertionError, SteinChaosError, ValidationError
from .gauss import RandomStream
from .gaussian_functional import (
    builtin_functional,
    bound_theta_E1mT,
    chi2_bounds,
    simulate_functional,
    theta_choice,
)
from .hida_bound import bound_vs_empirical, theorem61_bound
from .indep_sums import (
    iid_rademacher_model,
    iid_uniform_model,
    load_model,
    scaled_chi2_model,
    simulate_sum,
    wasserstein_bound_indep,
)
from .reporting import (
    DEFAULT_SEED,
    SEED_ENV_VAR,
    RunConfig,
    figure_path,
    merge_tolerances,
    render_constants_figure,
    render_csv,
    render_curve_figure,
    render_density_gap_figure,
    render_distance_figure,
    render_json,
    render_stein_figure,
    report_payload,
    resolve_seed,
    write_text,
)

_METRIC_ALIASES = {
    "wasserstein": WASSERSTEIN,
    "w1": WASSERSTEIN,
    "ks": KOLMOGOROV,
    "kolmogorov": KOLMOGOROV,
    "tv": TOTAL_VARIATION,
    "total-variation": TOTAL_VARIATION,
    "total_variation": TOTAL_VARIATION,
}

_EVAL_CHOICES = ("indicator", "smoothed-indicator", "identity", "abs", "sin",
                 "cos", "sign")

_FAMILIES = ("bounded", "lipschitz", "indicator", "smoothed")


def canonical_metric(name: str) -> str:
    try:
        return _METRIC_ALIASES[name]
    except KeyError:
        raise ValidationError(
            f"unknown metric {name!r}; expected one of "
            f"{', '.join(sorted(_METRIC_ALIASES))}") from None


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; 2 is reserved for failed
    assertions here, so usage problems are remapped to exit 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_seed(p):
    p.add_argument(
        "--seed", type=int, default=None,
        help=f"RNG seed (default: ${SEED_ENV_VAR}, else {DEFAULT_SEED})")


def _add_threads(p):
    p.add_argument(
        "--threads", type=int, default=1,
        help="worker threads; output bytes are identical for any value")


def _add_tol(p):
    p.add_argument(
        "--tol", action="append", metavar="NAME=VALUE", default=None,
        help="override a named tolerance (repeatable)")


def _add_out(p, figure: bool):
    p.add_argument("--out", default=None,
                   help="output file (default: stdout)")
    if figure:
        p.add_argument("--no-figure", action="store_true",
                       help="do not render the companion figure")


def build_parser() -> _Parser:
    parser = _Parser(
        prog="steinchaos",
        description="Stein-method bounds for normal approximation, from "
                    "independent sums to Gaussian chaos functionals.")
    sub = parser.add_subparsers(dest="command", required=True,
                                metavar="COMMAND")

    # ----- stein-eq ------------------------------------------------------
    stein_p = sub.add_parser(
        "stein-eq", help="Stein equation solver and constant verification")
    stein_sub = stein_p.add_subparsers(dest="subcommand", required=True,
                                       metavar="SUBCOMMAND")

    eval_p = stein_sub.add_parser(
        "eval", help="emit w, f, fprime, residual on a grid as CSV")
    eval_p.add_argument("--h", default="indicator", choices=_EVAL_CHOICES,
                        help="test function h (default: indicator)")
    eval_p.add_argument("--x", type=float, default=0.0,
                        help="threshold for the indicator kinds")
    eval_p.add_argument("--eps", type=float, default=0.5,
                        help="smoothing width for smoothed-indicator")
    eval_p.add_argument("--lo", type=float, default=-6.0)
    eval_p.add_argument("--hi", type=float, default=6.0)
    eval_p.add_argument("--points", type=int, default=601)
    _add_out(eval_p, figure=True)
    eval_p.set_defaults(func=cmd_stein_eval)

    verify_p = stein_sub.add_parser(
        "verify-constants",
        help="check every sup-norm inequality; CSV of observed vs bound")
    verify_p.add_argument("--family", default="all",
                          choices=("all",) + _FAMILIES)
    _add_tol(verify_p)
    _add_out(verify_p, figure=True)
    verify_p.set_defaults(func=cmd_verify_constants)

    # ----- distance ------------------------------------------------------
    dist_p = sub.add_parser(
        "distance", help="distance to N(0,1) from samples or a density")
    dist_p.add_argument("--input", default=None,
                        help="CSV of samples, one real per line")
    dist_p.add_argument("--density", default=None, choices=("chi2",),
                        help="closed-form density family (total variation)")
    dist_p.add_argument("--n", type=int, default=None,
                        help="degrees of freedom for --density chi2")
    dist_p.add_argument("--metric", required=True,
                        choices=sorted(_METRIC_ALIASES))
    dist_p.add_argument("--bootstrap", type=int, default=0,
                        help="bootstrap resamples for a standard error")
    _add_seed(dist_p)
    _add_tol(dist_p)
    _add_out(dist_p, figure=True)
    dist_p.set_defaults(func=cmd_distance)

    # ----- bound ---------------------------------------------------------
    bound_p = sub.add_parser(
        "bound", help="normal-approximation bounds vs simulation")
    bound_sub = bound_p.add_subparsers(dest="subcommand", required=True,
                                       metavar="SUBCOMMAND")

    isum_p = bound_sub.add_parser(
        "indep-sum", help="Wasserstein bound 3 sum E|X|^3 for W = sum X_i")
    isum_p.add_argument("--model", default=None,
                        help="JSON model file: list of {kind, params}")
    isum_p.add_argument("--preset", default=None,
                        choices=("rademacher", "uniform", "chi2"),
                        help="built-in iid model family (needs --n)")
    isum_p.add_argument("--n", type=int, default=None,
                        help="summand count for --preset")
    isum_p.add_argument("--metric", default="wasserstein",
                        choices=("wasserstein", "w1"))
    isum_p.add_argument("--samples", type=int, default=1_000_000)
    isum_p.add_argument("--bootstrap", type=int, default=16)
    isum_p.add_argument("--assert", dest="assert_mode", action="store_true",
                        help="exit 2 if the empirical distance beats the "
                             "bound beyond 3 bootstrap errors")
    _add_seed(isum_p)
    _add_threads(isum_p)
    _add_out(isum_p, figure=False)
    isum_p.set_defaults(func=cmd_bound_indep_sum)

    gf_p = bound_sub.add_parser(
        "gaussian-functional",
        help="theta * E|1 - T(Z)| bound for W = psi(Z), builtin psi")
    gf_p.add_argument("--psi", required=True,
                      help="builtin:identity, builtin:cubic, "
                           "builtin:chi2_term, or builtin:chi2 (with --n)")
    gf_p.add_argument("--n", type=int, default=None,
                      help="summand count for the chi-square families")
    gf_p.add_argument("--metric", default="wasserstein",
                      choices=sorted(_METRIC_ALIASES))
    gf_p.add_argument("--samples", type=int, default=200_000,
                      help="empirical simulation size")
    gf_p.add_argument("--mc-samples", type=int, default=200_000,
                      help="Monte Carlo size for the bound cross-check")
    gf_p.add_argument("--bootstrap", type=int, default=16)
    gf_p.add_argument("--assert", dest="assert_mode", action="store_true")
    _add_seed(gf_p)
    _add_threads(gf_p)
    _add_out(gf_p, figure=False)
    gf_p.set_defaults(func=cmd_bound_gaussian_functional)

    chaos_b_p = bound_sub.add_parser(
        "chaos", help="theta * E|1 - Gamma| bound for a chaos functional")
    chaos_b_p.add_argument("--functional", required=True,
                           help="JSON functional file")
    chaos_b_p.add_argument("--metric", default="wasserstein",
                           choices=sorted(_METRIC_ALIASES))
    chaos_b_p.add_argument("--samples", type=int, default=1_000_000,
                           help="empirical simulation size")
    chaos_b_p.add_argument("--mc-samples", type=int, default=200_000,
                           help="Monte Carlo size for E|1 - Gamma|")
    chaos_b_p.add_argument("--bootstrap", type=int, default=16)
    chaos_b_p.add_argument("--normalize", action="store_true",
                           help="rescale phi to unit variance first")
    chaos_b_p.add_argument("--assert", dest="assert_mode",
                           action="store_true")
    _add_seed(chaos_b_p)
    _add_threads(chaos_b_p)
    _add_out(chaos_b_p, figure=False)
    chaos_b_p.set_defaults(func=cmd_bound_chaos)

    # ----- chaos ---------------------------------------------------------
    chaos_p = sub.add_parser(
        "chaos", help="chaos-expansion utilities")
    chaos_sub = chaos_p.add_subparsers(dest="subcommand", required=True,
                                       metavar="SUBCOMMAND")
    check_p = chaos_sub.add_parser(
        "check", help="run the exact-identity battery on a functional file")
    check_p.add_argument("--functional", required=True)
    _add_seed(check_p)
    _add_tol(check_p)
    _add_out(check_p, figure=False)
    check_p.set_defaults(func=cmd_chaos_check)

    # ----- emit-curve ----------------------------------------------------
    curve_p = sub.add_parser(
        "emit-curve", help="bounds and empirical distances across n, as CSV")
    curve_p.add_argument("--family", required=True,
                         choices=("chi2", "indep-sum"))
    curve_p.add_argument("--n-values", required=True,
                         help="comma-separated summand counts, e.g. 10,40,160")
    curve_p.add_argument("--samples", type=int, default=200_000)
    curve_p.add_argument("--bootstrap", type=int, default=16)
    _add_seed(curve_p)
    _add_threads(curve_p)
    _add_out(curve_p, figure=True)
    curve_p.set_defaults(func=cmd_emit_curve)

    return parser


# ---------------------------------------------------------------------------
# stein-eq
# ---------------------------------------------------------------------------


def _named_test_function(args) -> stein.TestFunction:
    if args.h == "indicator":
        return stein.indicator(args.x)
    if args.h == "smoothed-indicator":
        return stein.smoothed_indicator(args.x, args.eps)
    named = {}
    for family in ("lipschitz", "bounded"):
        for h in stein.builtin_family(family):
            named[h.name] = h
    return named[args.h]


def cmd_stein_eval(args) -> int:
    if not (math.isfinite(args.lo) and math.isfinite(args.hi)
            and args.lo < args.hi):
        raise ValidationError("need finite --lo < --hi")
    if args.points < 2:
        raise ValidationError("--points must be at least 2")
    h = _named_test_function(args)
    sol = stein.solve_stein(h)
    ws = np.linspace(args.lo, args.hi, args.points)
    f, fp = sol.eval_f_fprime(ws)
    residual = fp - ws * f - (np.asarray(h(ws), dtype=float) - sol.eh_z)
    rows = [(float(w), float(a), float(b), float(r))
            for w, a, b, r in zip(ws, f, fp, residual)]
    write_text(args.out, render_csv(["w", "f", "fprime", "residual"], rows))
    if args.out and not args.no_figure:
        render_stein_figure(figure_path(args.out), ws, f, fp,
                            title=f"Stein solution, h = {h.name}")
    return 0


def cmd_verify_constants(args) -> int:
    tolerances = merge_tolerances({"slack": 1e-9}, args.tol)
    slack = dict(tolerances)["slack"]
    families = _FAMILIES if args.family == "all" else (args.family,)
    rows = []
    labels, observed, bounds = [], [], []
    failed = 0
    for family in families:
        for h in stein.builtin_family(family):
            for check in stein.verify_constants(h, slack=slack):
                rows.append((check.kind, check.name, check.inequality,
                             check.observed, check.bound, check.passed))
                if check.applicable:
                    if not check.passed:
                        failed += 1
                    if check.bound is not None and check.observed is not None:
                        labels.append(f"{check.name}:{check.inequality}")
                        observed.append(check.observed)
                        bounds.append(check.bound)
    text = render_csv(["kind", "name", "inequality", "observed", "bound",
                       "passed"], rows)
    write_text(args.out, text)
    if args.out and not args.no_figure:
        render_constants_figure(figure_path(args.out), labels, observed,
                                bounds)
    if failed:
        print(f"steinchaos: {failed} inequality check(s) failed",
              file=sys.stderr)
        return 2
    return 0


# ---------------------------------------------------------------------------
# distance
# ---------------------------------------------------------------------------


def _read_samples(path: str) -> SampleSet:
    values = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            try:
                values.append(float(text))
            except ValueError:
                raise ValidationError(
                    f"samples file {path}: line {lineno}: "
                    f"not a real number: {text!r}") from None
    if not values:
        raise ValidationError(f"samples file {path}: no samples found")
    return SampleSet(np.asarray(values, dtype=float))


def cmd_distance(args) -> int:
    metric = canonical_metric(args.metric)
    if (args.input is None) == (args.density is None):
        raise ValidationError("pass exactly one of --input or --density")
    seed = resolve_seed(args.seed)
    tolerances = merge_tolerances({"tv_abs_tol": 1e-8}, args.tol)
    config = RunConfig(command="distance", seed=seed, samples=0,
                       tolerances=tolerances, out_path=args.out,
                       out_format="json")

    if args.density is not None:
        if metric != TOTAL_VARIATION:
            raise ValidationError(
                "--density computes the total variation metric; "
                "pass --metric tv")
        if args.n is None:
            raise ValidationError("--density chi2 requires --n")
        density, support = standardized_chi2_density(args.n)
        rep = tv_to_normal_density(density, support,
                                   abs_tol=config.tolerance("tv_abs_tol"))
        body = {
            "metric": rep.metric,
            "estimate": rep.estimate,
            "std_error": rep.std_error,
            "method": rep.method,
            "density": {"family": "chi2", "n": args.n},
            "n_samples": None,
        }
        write_text(args.out, render_json(report_payload(config, body)))
        if args.out and not args.no_figure:
            render_density_gap_figure(
                figure_path(args.out), density, support,
                title=f"standardized chi-square({args.n}) vs normal")
        return 0

    if metric == TOTAL_VARIATION:
        raise ValidationError(
            "total variation needs --density; samples support "
            "wasserstein and ks")
    sample = _read_samples(args.input)
    stream = RandomStream(seed)
    if metric == WASSERSTEIN:
        rep = wasserstein_to_normal(sample, bootstrap=args.bootstrap,
                                    stream=stream)
    else:
        rep = kolmogorov_to_normal(sample, bootstrap=args.bootstrap,
                                   stream=stream)
    body = {
        "metric": rep.metric,
        "estimate": rep.estimate,
        "std_error": rep.std_error,
        "method": rep.method,
        "density": None,
        "n_samples": sample.size,
    }
    write_text(args.out, render_json(report_payload(config, body)))
    if args.out and not args.no_figure:
        render_distance_figure(figure_path(args.out),
                               sample.order_statistics(),
                               title=f"empirical CDF vs normal "
                                     f"({sample.size} samples)")
    return 0


# ---------------------------------------------------------------------------
# bound indep-sum
# ---------------------------------------------------------------------------


def _emit_bound_report(config: RunConfig, body: dict, out: str | None,
                       assert_mode: bool, empirical: float | None,
                       bound: float, slack: float) -> int:
    write_text(out, render_json(report_payload(config, body)))
    if assert_mode and empirical is not None and empirical > bound + slack:
        print(f"steinchaos: empirical distance {empirical:.6g} exceeds "
              f"bound {bound:.6g} + {slack:.3g}", file=sys.stderr)
        return 2
    return 0


def cmd_bound_indep_sum(args) -> int:
    if (args.model is None) == (args.preset is None):
        raise ValidationError("pass exactly one of --model or --preset")
    if args.model is not None:
        model = load_model(args.model)
        model_desc = {"source": args.model, "terms": len(model.terms)}
    else:
        if args.n is None:
            raise ValidationError("--preset requires --n")
        factory = {"rademacher": iid_rademacher_model,
                   "uniform": iid_uniform_model,
                   "chi2": scaled_chi2_model}[args.preset]
        model = factory(args.n)
        model_desc = {"source": f"preset:{args.preset}", "n": args.n,
                      "terms": len(model.terms)}
    seed = resolve_seed(args.seed)
    config = RunConfig(command="bound indep-sum", seed=seed,
                       samples=args.samples, tolerances=(),
                       out_path=args.out, out_format="json")
    bound = wasserstein_bound_indep(model)
    stream = RandomStream(seed)
    sample = simulate_sum(model, stream.purpose(1), args.samples,
                          threads=args.threads)
    rep = wasserstein_to_normal(sample, bootstrap=args.bootstrap,
                                stream=stream.purpose(2))
    body = {
        "metric": WASSERSTEIN,
        "theta": None,
        "bound": bound,
        "empirical_distance": rep.estimate,
        "empirical_std_error": rep.std_error,
        "mc_std_error": None,
        "samples": args.samples,
        "method": f"third-moment bound; empirical by {rep.method}",
        "model": model_desc,
    }
    slack = 3.0 * (rep.std_error or 0.0)
    return _emit_bound_report(config, body, args.out, args.assert_mode,
                              rep.estimate, bound, slack)


# ---------------------------------------------------------------------------
# bound gaussian-functional
# ---------------------------------------------------------------------------


def _parse_builtin_psi(spec: str) -> str:
    prefix, sep, name = spec.partition(":")
    if prefix != "builtin" or not sep or not name:
        raise ValidationError(
            f"--psi must look like builtin:NAME, got {spec!r}")
    return name


def cmd_bound_gaussian_functional(args) -> int:
    name = _parse_builtin_psi(args.psi)
    metric = canonical_metric(args.metric)
    theta = theta_choice(metric)
    seed = resolve_seed(args.seed)
    config = RunConfig(command="bound gaussian-functional", seed=seed,
                       samples=args.samples, tolerances=(),
                       out_path=args.out, out_format="json")
    stream = RandomStream(seed)

    if name == "chi2":
        if args.n is None:
            raise ValidationError("builtin:chi2 requires --n")
        closed = chi2_bounds(args.n)
        bound = {WASSERSTEIN: closed.d_w, KOLMOGOROV: closed.d_k,
                 TOTAL_VARIATION: closed.d_tv}[metric]
        if metric == TOTAL_VARIATION:
            density, support = standardized_chi2_density(args.n)
            rep = tv_to_normal_density(density, support)
            empirical, emp_se, samples_used = rep.estimate, None, 0
            emp_method = rep.method
        else:
            sample = simulate_sum(scaled_chi2_model(args.n),
                                  stream.purpose(1), args.samples,
                                  threads=args.threads)
            estimator = (wasserstein_to_normal if metric == WASSERSTEIN
                         else kolmogorov_to_normal)
            rep = estimator(sample, bootstrap=args.bootstrap,
                            stream=stream.purpose(2))
            empirical, emp_se = rep.estimate, rep.std_error
            samples_used = args.samples
            emp_method = rep.method
        body = {
            "metric": metric,
            "theta": theta.value,
            "bound": bound,
            "var_t": closed.var_t,
            "e_abs_dev": None,
            "carre_mean": None,
            "empirical_distance": empirical,
            "empirical_std_error": emp_se,
            "mc_std_error": None,
            "samples": samples_used,
            "psi": args.psi,
            "n": args.n,
            "method": f"chi-square closed form; empirical by {emp_method}",
        }
        slack = 3.0 * (emp_se or 0.0)
        return _emit_bound_report(config, body, args.out, args.assert_mode,
                                  empirical, bound, slack)

    psi = builtin_functional(name, args.n)
    report = bound_theta_E1mT(psi, theta, stream=stream.purpose(0),
                              mc_samples=args.mc_samples)
    if metric == TOTAL_VARIATION:
        empirical, emp_se, samples_used = None, None, 0
        emp_method = ""
    else:
        sample = simulate_functional(psi, stream.purpose(1), args.samples,
                                     threads=args.threads)
        estimator = (wasserstein_to_normal if metric == WASSERSTEIN
                     else kolmogorov_to_normal)
        rep = estimator(sample, bootstrap=args.bootstrap,
                        stream=stream.purpose(2))
        empirical, emp_se = rep.estimate, rep.std_error
        samples_used = args.samples
        emp_method = f"; empirical by {rep.method}"
    body = {
        "metric": metric,
        "theta": theta.value,
        "bound": report.bound_value,
        "var_t": None,
        "e_abs_dev": report.e_abs_dev,
        "carre_mean": report.carre_mean,
        "empirical_distance": empirical,
        "empirical_std_error": emp_se,
        "mc_std_error": report.mc_std_error,
        "samples": samples_used,
        "mc_samples": report.samples,
        "psi": args.psi,
        "n": args.n,
        "method": report.method + emp_method,
    }
    slack = 3.0 * (emp_se or 0.0)
    return _emit_bound_report(config, body, args.out, args.assert_mode,
                              empirical, report.bound_value, slack)


# ---------------------------------------------------------------------------
# bound chaos
# ---------------------------------------------------------------------------


def _chaos_bound_body(report, samples: int, mc_samples: int) -> dict:
    return {
        "metric": report.metric.metric,
        "theta": report.metric.value,
        "bound": report.bound_value,
        "carre_mean": report.carre_mean,
        "e_abs_dev": report.e_abs_dev,
        "mc_std_error": report.mc_std_error,
        "samples": samples,
        "mc_samples": mc_samples,
        "empirical_distance": report.empirical_distance,
        "normalization_scale": report.normalization_scale,
        "method": report.method,
    }


def cmd_bound_chaos(args) -> int:
    phi = load_functional(args.functional)
    metric = canonical_metric(args.metric)
    theta = theta_choice(metric)
    seed = resolve_seed(args.seed)
    config = RunConfig(command="bound chaos", seed=seed,
                       samples=args.samples, tolerances=(),
                       out_path=args.out, out_format="json")
    stream = RandomStream(seed)

    if metric == TOTAL_VARIATION:
        if args.assert_mode:
            raise ValidationError(
                "--assert needs an empirical distance, which total "
                "variation does not provide; use wasserstein or ks")
        report = theorem61_bound(phi, theta, stream.purpose(0),
                                 args.mc_samples, normalize=args.normalize,
                                 threads=args.threads)
        body = _chaos_bound_body(report, 0, args.mc_samples)
        body["functional"] = args.functional
        write_text(args.out, render_json(report_payload(config, body)))
        return 0

    try:
        report = bound_vs_empirical(
            phi, theta, stream, args.samples, assert_mode=args.assert_mode,
            normalize=args.normalize, bootstrap=args.bootstrap,
            mc_samples=args.mc_samples, threads=args.threads)
    except BoundAssertionError as exc:
        # The report is still emitted so the violating run is inspectable.
        body = _chaos_bound_body(exc.report, args.samples, args.mc_samples)
        body["functional"] = args.functional
        write_text(args.out, render_json(report_payload(config, body)))
        print(f"steinchaos: {exc}", file=sys.stderr)
        return 2
    body = _chaos_bound_body(report, args.samples, args.mc_samples)
    body["functional"] = args.functional
    write_text(args.out, render_json(report_payload(config, body)))
    return 0


# ---------------------------------------------------------------------------
# chaos check
# ---------------------------------------------------------------------------


def cmd_chaos_check(args) -> int:
    phi = load_functional(args.functional)
    seed = resolve_seed(args.seed)
    tolerances = merge_tolerances({"identity_tol": 1e-12}, args.tol)
    config = RunConfig(command="chaos check", seed=seed, samples=0,
                       tolerances=tolerances, out_path=args.out,
                       out_format="json")
    tol = config.tolerance("identity_tol")

    order_energy = math.fsum(alpha.order * c * c for alpha, c in phi.terms)
    checks = []

    def record(name: str, lhs: float, rhs: float):
        err = abs(lhs - rhs)
        checks.append({"name": name, "lhs": lhs, "rhs": rhs,
                       "abs_error": err, "passed": bool(err <= tol)})

    record("parseval", norm_2p(phi, 0.0) ** 2,
           phi.expectation ** 2 + phi.variance)
    record("number-eigenrelation", inner_2p(number_op(phi), phi),
           order_energy)
    record("gradient-energy",
           math.fsum(norm_2p(annihilate(phi, j), 0.0) ** 2
                     for j in phi.active_coords),
           order_energy)
    record("s-transform-at-zero", s_transform(phi, coeff_vector({})),
           phi.expectation)
    if phi.max_order + 1 <= ORDER_CAP:
        gen = RandomStream(seed).generator()
        coords = phi.active_coords or (0,)
        h = coeff_vector({j: float(v) for j, v
                          in zip(coords, gen.standard_normal(len(coords)))})
        lhs, rhs = ibp_check(phi, h)
        record("integration-by-parts", lhs, rhs)
    roundtrip = functional_from_dict(functional_to_dict(phi))
    record("serialization-roundtrip",
           1.0, 1.0 if roundtrip.terms == phi.terms else 0.0)

    all_pass = all(c["passed"] for c in checks)
    body = {
        "functional": args.functional,
        "n_terms": phi.n_terms,
        "max_order": phi.max_order,
        "expectation": phi.expectation,
        "variance": phi.variance,
        "checks": checks,
        "all_pass": all_pass,
    }
    write_text(args.out, render_json(report_payload(config, body)))
    if not all_pass:
        bad = ", ".join(c["name"] for c in checks if not c["passed"])
        print(f"steinchaos: identity check(s) failed: {bad}",
              file=sys.stderr)
        return 2
    return 0


# ---------------------------------------------------------------------------
# emit-curve
# ---------------------------------------------------------------------------


def _parse_n_values(raw: str) -> list[int]:
    out = []
    for piece in raw.split(","):
        piece = piece.strip()
        if not piece:
            continue
        try:
            value = int(piece)
        except ValueError:
            raise ValidationError(
                f"--n-values entries must be integers, got {piece!r}"
            ) from None
        if value < 1:
            raise ValidationError("--n-values entries must be positive")
        out.append(value)
    if not out:
        raise ValidationError("--n-values is empty")
    return out


def emit_curve(family: str, n_values, samples: int, seed: int, *,
               bootstrap: int = 16, threads: int = 1) -> list[dict]:
    """One row per n: closed-form bounds next to empirical distances.

    Streams are keyed per n (purpose 2n for simulation, 2n + 1 for the
    bootstrap), so each row's bytes are independent of which other rows
    are requested and of the thread count.
    """
    if family not in ("chi2", "indep-sum"):
        raise ValidationError(f"unknown curve family {family!r}")
    stream = RandomStream(seed)
    rows = []
    for n in n_values:
        if family == "chi2":
            closed = chi2_bounds(n)
            model = scaled_chi2_model(n)
            d_w_bound, d_k_bound, d_tv_bound = (closed.d_w, closed.d_k,
                                                closed.d_tv)
        else:
            model = iid_rademacher_model(n)
            d_w_bound = wasserstein_bound_indep(model)
            d_k_bound = None
            d_tv_bound = None
        sample = simulate_sum(model, stream.purpose(2 * n), samples,
                              threads=threads)
        w_rep = wasserstein_to_normal(sample, bootstrap=bootstrap,
                                      stream=stream.purpose(2 * n + 1))
        k_rep = kolmogorov_to_normal(sample)
        rows.append({
            "n": n,
            "d_W_bound": d_w_bound,
            "d_K_bound": d_k_bound,
            "d_TV_bound": d_tv_bound,
            "empirical_d_W": w_rep.estimate,
            "empirical_d_K": k_rep.estimate,
            "mc_std_error": w_rep.std_error,
        })
    return rows


CURVE_COLUMNS = ["n", "d_W_bound", "d_K_bound", "d_TV_bound",
                 "empirical_d_W", "empirical_d_K", "mc_std_error"]


def cmd_emit_curve(args) -> int:
    n_values = _parse_n_values(args.n_values)
    seed = resolve_seed(args.seed)
    rows = emit_curve(args.family, n_values, args.samples, seed,
                      bootstrap=args.bootstrap, threads=args.threads)
    table = [tuple(row[col] for col in CURVE_COLUMNS) for row in rows]
    write_text(args.out, render_csv(CURVE_COLUMNS, table))
    if args.out and not args.no_figure:
        render_curve_figure(figure_path(args.out), rows, args.family)
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BoundAssertionError as exc:
        print(f"steinchaos: {exc}", file=sys.stderr)
        return 2
    except SteinChaosError as exc:
        print(f"steinchaos: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"steinchaos: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
