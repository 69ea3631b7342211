import argparse
import logging
import os
import re
import sys

import numpy as np
import pandas as pd

from . import log_setup, utils
from .error_models import ErrorModel
from .errors import DataError, DomainError, SpedError
from .export_manager import ExportManager, RunManifest, load_manifest, read_records
from .risk import (
    decompose_risk_estimate,
    empirical_spectrum,
    estimated_risk_curve,
    expected_decomposition,
    true_risk,
)
from .selection import (
    SELECTORS,
    Method,
    SelectionConfig,
    build_grid_for,
    check_sample_size,
    make_alpha_grid,
    n1_for,
    rate_b,
)
from .simulation import (
    SimSetting,
    draw_sample,
    metric_catastrophic,
    metric_mean_ratio,
    metric_mise_ratio,
    metric_quantile,
    records_for,
    replicate_rng,
    run_study,
    simulate_setting,
)
from .sped import PenaltyKernel, build_frequency_grid, estimate_density
from .targets import MARRON_WAND, mixture_name, mixture_pdf, mw_density

# Setup logging based on environment variable or default to WARN level
# before importing other modules.
log_level = os.getenv("LOG_LEVEL", "WARN")
log_setup.setup_logging(log_level)

logger = logging.getLogger(__name__)

USAGE_EXIT_CODE = 64
METRICS = ("catastrophic", "q99", "mean-ratio", "mise-ratio")
METHOD_CHOICES = [method.value for method in Method]
VALUE_OPTIONS = ("--xgrid", "-x")


class UsageArgumentParser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with code 64."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE_EXIT_CODE, f"{self.prog}: error: {message}\n")


def attach_option_values(argv, options=VALUE_OPTIONS):
    """
    Rewrite ``--xgrid VALUE`` as ``--xgrid=VALUE``.

    Grids such as ``-7,7,281`` start with a dash, which argparse would
    otherwise read as the next option.
    """
    joined, rest = [], list(argv)
    while rest:
        token = rest.pop(0)
        if token in options and rest:
            token = f"{options[0]}={rest.pop(0)}"
        joined.append(token)
    return joined


def _add_config_arguments(parser):
    group = parser.add_argument_group("penalty search")
    group.add_argument("--m", type=int, default=1, help="Penalty order (default 1)")
    group.add_argument(
        "--k", type=int, default=None, help="Smoothness order of the rate (default 1)"
    )
    group.add_argument("--iota", type=float, help="Lower grid factor (default 1e-3)")
    group.add_argument(
        "--lambda",
        dest="lambda_",
        type=float,
        help="Upper grid factor (default 1e3)",
    )
    group.add_argument(
        "--gridsize",
        dest="grid_size",
        type=int,
        help="Number of log-spaced penalties (default 100)",
    )
    group.add_argument(
        "--tolerance",
        type=float,
        help="Tail tolerance of the frequency grid (default 1e-10)",
    )
    group.add_argument(
        "--max-nodes",
        type=int,
        help="Largest frequency grid allowed (default 400000)",
    )


def _config_from(args):
    return SelectionConfig().with_overrides(
        k=args.k,
        iota=args.iota,
        lambda_=args.lambda_,
        grid_size=args.grid_size,
        m=args.m,
        quad_tolerance=args.tolerance,
        max_nodes=args.max_nodes,
    )


def _add_setting_arguments(parser):
    parser.add_argument(
        "--density",
        "-d",
        type=int,
        required=True,
        help="Marron-Wand target density, 1..8",
    )
    parser.add_argument("--n", "-n", type=int, required=True, help="Sample size")
    parser.add_argument(
        "--p",
        "-p",
        type=float,
        required=True,
        help="Share of Var(Y) due to noise, in (0, 1)",
    )
    parser.add_argument("--seed", "-s", type=int, default=0, help="Root seed")


def _parameters(args):
    return {
        key: value
        for key, value in vars(args).items()
        if key not in ("handler", "log_level")
    }


def _noise_model(sd):
    error = ErrorModel(sd)
    error.require_deconvolvable()
    return error


def _select(sample, error, config, method, manifest, n1=None):
    """Run one data-driven selection on an explicitly built, recorded grid."""
    method = Method(method)
    check_sample_size(method, sample.n)
    if method is Method.CROSS_VALIDATION:
        n_ref = sample.n
    else:
        n_ref = n1 if n1 is not None else n1_for(sample.n, config.n1_rule)
    grid = build_grid_for(make_alpha_grid(n_ref, config), error, config, sample.max_abs)
    manifest.add_grid(grid, "selection")
    if method is Method.SMALL_N:
        return SELECTORS[method](sample, error, config, grid=grid, n1=n1), grid
    return SELECTORS[method](sample, error, config, grid=grid), grid


def cmd_estimate(args):
    """Deconvolve a data file and write the estimated density."""
    config = _config_from(args)
    sample = utils.read_sample(args.input)
    error = _noise_model(args.noise_sd)
    manifest = RunManifest("estimate", _parameters(args))
    exporter = ExportManager(manifest)

    if args.alpha is not None:
        alpha = args.alpha
    else:
        result, _ = _select(sample, error, config, args.select, manifest)
        alpha = result.alpha_hat
    kernel = PenaltyKernel(alpha, config.m, error)

    if args.xgrid:
        x_points = utils.parse_xgrid(args.xgrid)
    else:
        spread = 3.0 * max(float(np.std(sample.values)), error.sd)
        x_points = np.linspace(
            sample.values.min() - spread, sample.values.max() + spread, 401
        )
    scale = max(sample.max_abs, float(np.max(np.abs(x_points))))
    grid = build_frequency_grid(
        kernel,
        tolerance=config.quad_tolerance,
        oscillation_scale=scale,
        max_nodes=config.max_nodes,
    )
    manifest.add_grid(grid, "estimate")
    f_hat = estimate_density(sample, kernel, x_points, grid)

    exporter.export_csv({"x": x_points, "f_hat": f_hat}, args.out)
    if args.svg:
        exporter.plot_lines(
            args.svg,
            [(None, x_points, f_hat, {"color": "tab:blue"})],
            "x",
            "estimated density",
        )
    exporter.export_manifest(args.out)
    logger.info(f"Estimated density at alpha={alpha:.6g}")
    print(f"alpha={alpha!r}")
    print("\033[94mDensity estimate written to: \033[0m", args.out)


def cmd_select(args):
    """Select the penalty for a data file."""
    config = _config_from(args)
    sample = utils.read_sample(args.input)
    error = _noise_model(args.noise_sd)
    manifest = RunManifest("select", _parameters(args))
    exporter = ExportManager(manifest)

    result, grid = _select(sample, error, config, args.method, manifest, n1=args.n1)
    if args.curve_out:
        # every rule writes R̂(α, n_ref)
        curve = estimated_risk_curve(
            sample, result.curve.alphas, result.n1, error, config.m, grid
        )
        exporter.export_csv(
            {"alpha": curve.alphas, "criterion": curve.values}, args.curve_out
        )
    exporter.export_csv(
        {
            "method": [result.method.value],
            "n": [sample.n],
            "n1": [result.n1],
            "alpha_prime": [result.alpha_prime],
            "alpha_hat": [result.alpha_hat],
        },
        args.out,
    )
    exporter.export_manifest(args.out)
    print(f"alpha_hat={result.alpha_hat!r}")


def _setting_from(args, n_sim, methods=tuple(Method)):
    return SimSetting(
        density_index=args.density,
        n=args.n,
        p=args.p,
        n_sim=n_sim,
        seed=args.seed,
        methods=methods,
        config=_config_from(args),
    )


def _write_records(exporter, run, output_path):
    setting, manifest = run.setting, exporter.manifest
    manifest.seed = setting.seed
    manifest.setting = {**setting.as_dict(), "oracle_alpha": run.oracle.alpha_hat}
    manifest.add_grid(run.oracle_grid, "oracle")
    manifest.quadrature.append(
        {
            "role": "replicate",
            "tolerance": setting.config.quad_tolerance,
            "max_nodes": setting.config.max_nodes,
            "range": run.replicate_grids,
        }
    )
    exporter.export_records(run.records, output_path)
    exporter.export_manifest(output_path)


def cmd_simulate(args):
    """Run the Monte Carlo study for one setting."""
    methods = utils.parse_list(args.methods, Method, "method")
    setting = _setting_from(args, args.nsim, methods)
    exporter = ExportManager(RunManifest("simulate", _parameters(args)))
    run = simulate_setting(setting, threads=args.threads, progress=not args.quiet)
    _write_records(exporter, run, args.out)
    print("\033[92mRecords written to: \033[0m", args.out)


def cmd_study(args):
    """Run the full factorial study, one records file per setting."""
    densities = utils.parse_list(args.densities, int, "density")
    ns = utils.parse_list(args.ns, int, "sample size")
    ps = utils.parse_list(args.ps, float, "noise share")
    methods = utils.parse_list(args.methods, Method, "method")
    config = _config_from(args)
    settings = [
        SimSetting(d, n, p, args.nsim, args.seed, methods, config)
        for d in densities
        for n in ns
        for p in ps
    ]
    logger.info(f"Study over {len(settings)} settings")
    for run in run_study(settings, args.threads, not args.quiet):
        setting = run.setting
        name = utils.setting_to_filename(setting.density_index, setting.n, setting.p)
        path = os.path.join(args.out_dir, name)
        exporter = ExportManager(RunManifest("study", _parameters(args)))
        _write_records(exporter, run, path)
    print("\033[92mStudy records written to: \033[0m", args.out_dir)


def _metric_level(name):
    match = re.fullmatch(r"q(\d{1,2})", name)
    if match:
        return int(match.group(1)) / 100
    return None


def _load_runs(paths):
    runs = []
    for path in paths:
        manifest = load_manifest(path)
        setting = manifest.get("setting")
        if not setting:
            raise DataError(f"manifest of {path} has no simulation setting")
        runs.append((setting, read_records(path)))
    return runs


def _metric_rows(metric, runs, baseline, threshold):
    rows = []
    for setting, records in runs:
        present = [m for m in Method if records_for(records, m)]
        base = baseline if baseline in present else present[0]
        for method in present:
            subset = records_for(records, method)
            row = {
                "density": setting["density_index"],
                "n": setting["n"],
                "p": setting["p"],
                "method": method.value,
            }
            if metric == "catastrophic":
                row["value"] = metric_catastrophic(subset, threshold)
            elif metric == "mean-ratio":
                row["value"], row["se"] = metric_mean_ratio(subset)
            elif metric == "mise-ratio":
                row["value"] = metric_mise_ratio(records_for(records, base), subset)
            else:
                row["value"] = metric_quantile(subset, _metric_level(metric))
            rows.append(row)
    return pd.DataFrame(rows)


def _markdown_pivot(frame):
    frame = frame.copy()
    if "se" in frame:
        pairs = zip(frame["value"], frame["se"])
        frame["value"] = [f"{v:.3g} ± {s:.2g}" for v, s in pairs]
    table = frame.pivot(index=["density", "n", "p"], columns="method", values="value")
    table.columns.name = None
    order = [m.value for m in Method if m.value in table.columns]
    return table[order].reset_index()


def _report_plots(exporter, runs, svg_dir):
    for setting, records in runs:
        name = f"d{setting['density_index']}_n{setting['n']}_p{setting['p']:g}"
        for method in (Method.SMALL_N, Method.CROSS_VALIDATION):
            subset = records_for(records, method)
            if not subset:
                continue
            exporter.plot_scatter(
                os.path.join(svg_dir, f"scatter_{name}_{method.value}.svg"),
                [r.alpha_hat for r in subset],
                [r.loss_ratio for r in subset],
                "selected alpha",
                "loss ratio",
                vline=setting.get("oracle_alpha"),
                hline=1.0,
            )
    groups = {}
    for setting, records in runs:
        for method in Method:
            subset = records_for(records, method)
            if method is Method.ORACLE or not subset:
                continue
            mean, se = metric_mean_ratio(subset)
            cell = (setting["density_index"], setting["p"])
            groups.setdefault(cell, {}).setdefault(method.value, []).append(
                (setting["n"], mean, se)
            )
    for (density, p), series in sorted(groups.items()):
        exporter.plot_errorbars(
            os.path.join(svg_dir, f"mean_ratio_d{density}_p{p:g}.svg"),
            {label: tuple(zip(*sorted(points))) for label, points in series.items()},
            "n",
            "mean loss ratio",
        )


def cmd_report(args):
    """Aggregate records files into metric tables."""
    metrics = utils.parse_list(args.metrics, str, "metric")
    for metric in metrics:
        if metric not in METRICS and _metric_level(metric) is None:
            raise DomainError(f"unknown metric: {metric!r}")
    baseline = Method(args.baseline)
    runs = _load_runs(args.inputs)
    exporter = ExportManager(RunManifest("report", _parameters(args)))
    tables = [
        (metric, _metric_rows(metric, runs, baseline, args.threshold))
        for metric in metrics
    ]
    if args.format == "csv":
        for metric, frame in tables:
            exporter.export_csv(frame, os.path.join(args.out, f"{metric}.csv"))
        manifest_anchor = os.path.join(args.out, "report")
    else:
        titled = [(_metric_title(m, args), _markdown_pivot(f)) for m, f in tables]
        exporter.export_markdown("Penalty selection report", titled, args.out)
        manifest_anchor = args.out
    if args.svg_dir:
        _report_plots(exporter, runs, args.svg_dir)
    exporter.export_manifest(manifest_anchor)
    print("\033[94mReport written to: \033[0m", args.out)


def _metric_title(metric, args):
    if metric == "catastrophic":
        return f"Probability of loss ratio above {args.threshold:g}"
    if metric == "mean-ratio":
        return "Mean loss ratio ± standard error"
    if metric == "mise-ratio":
        return f"MISE of {args.baseline} over MISE of each method"
    return f"{metric} quantile of the loss ratio"


def cmd_riskcurves(args):
    """Estimated risk curves at n and at n1 with the true curves overlaid."""
    setting = _setting_from(args, max(args.realizations, 1))
    config, target, error = setting.config, setting.target, setting.error
    n, n1 = setting.n, n1_for(setting.n, config.n1_rule)
    k = config.rate.k
    alphas = np.geomspace(
        config.iota * rate_b(n, k), config.lambda_ * rate_b(n1, k), config.grid_size
    )
    manifest = RunManifest("riskcurves", _parameters(args), seed=args.seed)
    exporter = ExportManager(manifest)

    true_grid = build_grid_for(
        alphas, error, config, max(1.0, 2 * target.max_abs_mean), target=target
    )
    manifest.add_grid(true_grid, "true")
    frames = [
        pd.DataFrame(
            {"realization": -1, "n1_kind": kind, "alpha": alphas, "value": values}
        )
        for kind, values in (
            ("true_full", true_risk(alphas, n, target, error, config.m, true_grid)),
            ("true_sqrt", true_risk(alphas, n1, target, error, config.m, true_grid)),
        )
    ]
    for r in range(args.realizations):
        sample = draw_sample(setting, replicate_rng(setting.seed, r))
        grid = build_grid_for(alphas, error, config, max(sample.max_abs, 1.0))
        spectrum = empirical_spectrum(sample, grid)
        for kind, size in (("full", n), ("sqrt", n1)):
            curve = estimated_risk_curve(
                sample, alphas, size, error, config.m, grid, spectrum
            )
            frames.append(
                pd.DataFrame(
                    {
                        "realization": r,
                        "n1_kind": kind,
                        "alpha": alphas,
                        "value": curve.values,
                    }
                )
            )
    frame = pd.concat(frames, ignore_index=True)
    exporter.export_csv(frame, args.out)
    if args.svg:
        _riskcurve_plot(exporter, frame, args.svg)
    exporter.export_manifest(args.out)
    print("\033[92mRisk curves written to: \033[0m", args.out)


def _riskcurve_plot(exporter, frame, svg_path):
    styles = {
        "full": {"color": "tab:red", "linewidth": 0.6, "alpha": 0.5},
        "sqrt": {"color": "tab:blue", "linewidth": 0.6, "alpha": 0.5},
        "true_full": {"color": "darkred", "linewidth": 2.0},
        "true_sqrt": {"color": "navy", "linewidth": 2.0},
    }
    series = []
    labelled = set()
    for (_, kind), part in frame.groupby(["realization", "n1_kind"], sort=True):
        label = None if kind in labelled else kind
        labelled.add(kind)
        series.append((label, part["alpha"], part["value"], styles[kind]))
    exporter.plot_lines(svg_path, series, "alpha", "estimated risk", logx=True)


def cmd_targets(args):
    """Tabulate the eight target densities."""
    x_points = utils.parse_xgrid(args.xgrid)
    exporter = ExportManager(RunManifest("targets", _parameters(args)))
    columns = {"x": x_points}
    for index in MARRON_WAND:
        columns[f"density_{index}"] = mixture_pdf(mw_density(index), x_points)
    exporter.export_csv(columns, args.out)
    if args.svg:
        series = [
            (
                f"{index}: {mixture_name(index)}",
                x_points,
                columns[f"density_{index}"],
                {},
            )
            for index in MARRON_WAND
        ]
        exporter.plot_lines(args.svg, series, "x", "density")
    exporter.export_manifest(args.out)
    print("\033[92mTarget densities written to: \033[0m", args.out)


def cmd_decompose(args):
    """Split the small-n criterion into bias and variance parts for one sample."""
    setting = _setting_from(args, 1)
    config, target, error = setting.config, setting.target, setting.error
    n1 = args.n1 if args.n1 is not None else n1_for(setting.n, config.n1_rule)
    if not 2 <= n1 <= setting.n:
        raise DomainError(f"n1 must lie in [2, n], got {n1}")
    alphas = make_alpha_grid(n1, config)
    manifest = RunManifest("decompose", _parameters(args), seed=args.seed)
    exporter = ExportManager(manifest)

    sample = draw_sample(setting, replicate_rng(setting.seed, 0))
    scale = max(sample.max_abs, 2 * target.max_abs_mean, 1.0)
    grid = build_grid_for(alphas, error, config, scale, target=target)
    manifest.add_grid(grid, "decompose")
    spectrum = empirical_spectrum(sample, grid)
    rows = []
    for alpha in alphas:
        parts = decompose_risk_estimate(
            sample, alpha, n1, error, config.m, grid, spectrum
        )
        b_expected, r_expected = expected_decomposition(
            alpha, n1, target, error, config.m, grid
        )
        rows.append(
            {
                "alpha": alpha,
                "b_hat": parts.b_hat,
                "v_over_n1": parts.v_over_n1,
                "r_hat": parts.total,
                "b_expected": b_expected,
                "r_expected": r_expected,
            }
        )
    frame = pd.DataFrame(rows)
    exporter.export_csv(frame, args.out)
    if args.svg:
        series = [
            ("estimated risk", frame["alpha"], frame["r_hat"], {"color": "black"}),
            ("bias estimate", frame["alpha"], frame["b_hat"], {"color": "tab:red"}),
            ("V / n1", frame["alpha"], frame["v_over_n1"], {"color": "tab:green"}),
            (
                "expected bias estimate",
                frame["alpha"],
                frame["b_expected"],
                {"color": "tab:red", "linestyle": "--"},
            ),
            (
                "true risk",
                frame["alpha"],
                frame["r_expected"],
                {"color": "black", "linestyle": "--"},
            ),
        ]
        exporter.plot_lines(args.svg, series, "alpha", "value", logx=True)
    exporter.export_manifest(args.out)
    print("\033[92mDecomposition written to: \033[0m", args.out)


def build_parser():
    """
    Build the command line parser.

    Returns:
        argparse.ArgumentParser: Parser with one sub-command per operation.
    """
    parser = UsageArgumentParser(
        description="Smoothness-penalized deconvolution with small-n penalty selection"
    )
    parser.add_argument(
        "--log-level",
        "-l",
        type=str.upper,
        choices=["DEBUG", "INFO", "WARN", "WARNING", "ERROR", "CRITICAL"],
        help="Logging level, overrides the LOG_LEVEL environment variable",
        default=None,
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    estimate = subparsers.add_parser("estimate", help="Deconvolve a data file")
    estimate.add_argument(
        "--input", "-i", required=True, help="One observation per line, '-' for stdin"
    )
    estimate.add_argument(
        "--noise-sd", type=float, required=True, help="Standard deviation of the noise"
    )
    choice = estimate.add_mutually_exclusive_group(required=True)
    choice.add_argument("--alpha", "-a", type=float, help="Fixed penalty")
    choice.add_argument(
        "--select",
        choices=[Method.SMALL_N.value, Method.CROSS_VALIDATION.value],
        help="Choose the penalty from the data",
    )
    estimate.add_argument(
        "--xgrid", "-x", help="Evaluation points as min,max,count (default: data range)"
    )
    estimate.add_argument("--out", "-o", required=True, help="Output CSV (x,f_hat)")
    estimate.add_argument("--svg", help="Optional SVG plot of the estimate")
    _add_config_arguments(estimate)
    estimate.set_defaults(handler=cmd_estimate)

    select = subparsers.add_parser("select", help="Select the penalty for a data file")
    select.add_argument(
        "--input", "-i", required=True, help="One observation per line, '-' for stdin"
    )
    select.add_argument(
        "--noise-sd", type=float, required=True, help="Standard deviation of the noise"
    )
    select.add_argument(
        "--method",
        choices=[Method.SMALL_N.value, Method.CROSS_VALIDATION.value],
        default=Method.SMALL_N.value,
        help="Selection rule (default small-n)",
    )
    select.add_argument("--curve-out", help="Optional CSV of the criterion curve")
    select.add_argument(
        "--out", "-o", default="selection.csv", help="Selection summary CSV"
    )
    select.add_argument("--n1", type=int, default=None, help=argparse.SUPPRESS)
    _add_config_arguments(select)
    select.set_defaults(handler=cmd_select)

    simulate = subparsers.add_parser("simulate", help="Monte Carlo run of one setting")
    _add_setting_arguments(simulate)
    simulate.add_argument("--nsim", type=int, required=True, help="Replicates")
    simulate.add_argument(
        "--methods",
        default="small-n,cv,oracle",
        help="Comma separated methods (default small-n,cv,oracle)",
    )
    simulate.add_argument("--out", "-o", required=True, help="Records CSV")
    simulate.add_argument("--threads", "-t", type=int, default=1, help="Processes")
    simulate.add_argument(
        "--quiet", "-q", action="store_true", help="Hide the progress bar"
    )
    _add_config_arguments(simulate)
    simulate.set_defaults(handler=cmd_simulate)

    study = subparsers.add_parser("study", help="Factorial Monte Carlo study")
    study.add_argument("--densities", default="1,2,3,4,5,6,7,8", help="Densities")
    study.add_argument("--ns", default="100,500,1000", help="Sample sizes")
    study.add_argument("--ps", default="0.1,0.3", help="Noise shares")
    study.add_argument("--nsim", type=int, required=True, help="Replicates")
    study.add_argument("--seed", "-s", type=int, default=0, help="Root seed")
    study.add_argument(
        "--methods",
        default="small-n,cv,oracle",
        help="Comma separated methods (default small-n,cv,oracle)",
    )
    study.add_argument("--out-dir", required=True, help="Folder for records files")
    study.add_argument("--threads", "-t", type=int, default=1, help="Processes")
    study.add_argument(
        "--quiet", "-q", action="store_true", help="Hide the progress bars"
    )
    _add_config_arguments(study)
    study.set_defaults(handler=cmd_study)

    report = subparsers.add_parser("report", help="Aggregate records into tables")
    report.add_argument(
        "--in", dest="inputs", nargs="+", required=True, help="Records CSV files"
    )
    report.add_argument(
        "--metrics",
        default=",".join(METRICS),
        help="Comma separated: catastrophic,q99,mean-ratio,mise-ratio",
    )
    report.add_argument("--format", choices=["csv", "md"], default="md")
    report.add_argument(
        "--out",
        "-o",
        required=True,
        help="Markdown file, or folder of per-metric CSV files with --format csv",
    )
    report.add_argument(
        "--baseline",
        choices=METHOD_CHOICES,
        default=Method.SMALL_N.value,
        help="Numerator of mise-ratio (default small-n)",
    )
    report.add_argument(
        "--threshold",
        type=float,
        default=10.0,
        help="Loss ratio counted as catastrophic (default 10)",
    )
    report.add_argument("--svg-dir", help="Folder for per-setting SVG plots")
    report.set_defaults(handler=cmd_report)

    riskcurves = subparsers.add_parser(
        "riskcurves", help="Estimated risk curves at n and at sqrt(n)"
    )
    _add_setting_arguments(riskcurves)
    riskcurves.add_argument(
        "--realizations", "-r", type=int, default=20, help="Simulated samples"
    )
    riskcurves.add_argument("--out", "-o", required=True, help="Long-format CSV")
    riskcurves.add_argument("--svg", help="Optional SVG overlay plot")
    _add_config_arguments(riskcurves)
    riskcurves.set_defaults(handler=cmd_riskcurves)

    targets = subparsers.add_parser("targets", help="Tabulate the target densities")
    targets.add_argument("--xgrid", "-x", default="-3,3,601", help="min,max,count")
    targets.add_argument("--out", "-o", required=True, help="Output CSV")
    targets.add_argument("--svg", help="Optional SVG plot")
    targets.set_defaults(handler=cmd_targets)

    decompose = subparsers.add_parser(
        "decompose", help="Bias and variance parts of the small-n criterion"
    )
    _add_setting_arguments(decompose)
    decompose.add_argument(
        "--n1", type=int, help="Reduced sample size (default ceil(sqrt(n)))"
    )
    decompose.add_argument("--out", "-o", required=True, help="Output CSV")
    decompose.add_argument("--svg", help="Optional SVG plot")
    _add_config_arguments(decompose)
    decompose.set_defaults(handler=cmd_decompose)

    return parser


def main():
    """
    Entry point of the sped-select command.

    Parses command line arguments, runs the sub-command and maps errors to exit
    codes: 2 data error, 64 usage, 65 precondition, 66 missing companion file.
    """
    parser = build_parser()

    try:
        import argcomplete

        argcomplete.autocomplete(parser)
    except ImportError:
        pass

    args = parser.parse_args(attach_option_values(sys.argv[1:]))
    if args.log_level:
        log_setup.setup_logging(args.log_level)
    logger.debug(f"Command line arguments parsed: {args}")

    if getattr(args, "realizations", 0) < 0:
        parser.error("--realizations must be >= 0")

    try:
        args.handler(args)
    except SpedError as exc:
        logger.debug("Command failed", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        sys.exit(exc.exit_code)


if __name__ == "__main__":
    main()
