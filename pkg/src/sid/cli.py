"""Command-line surface: single tests on CSV files, simulation studies,
parameter sweeps, and the censoring-independence variant.

Exit codes: 0 success, 1 data error (bad file contents, degenerate input,
calibration failure), 2 usage error (bad flags or flag combinations).
All commands are deterministic under a fixed --seed; test defaults to seed
1729, which is echoed in the JSON payload.
"""

from __future__ import annotations

import click

from .bootstrap import BetaSid, run_test
from .data import TestConfig, flip_censoring, ingest_csv
from .errors import SidError
from .kernels import GaussianKernel, LaplacianKernel, SmoothingSpec
from .report import (
    dumps_json,
    report_to_dict,
    sweep_to_dict,
    test_result_payload,
    write_json,
    write_report_csv,
    write_sweep_csv,
)
from .simulation import SCENARIOS, ScenarioSpec, monte_carlo, parse_method, power_sweep

DEFAULT_TEST_SEED = 1729

_SCENARIO_CHOICE = click.Choice(sorted(SCENARIOS))


@click.group()
def main():
    """Independence tests between a right-censored event time and covariates."""


def _comma_floats(text: str, flag: str) -> tuple[float, ...]:
    try:
        values = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise click.UsageError(f"{flag} must be a comma-separated list of numbers, got {text!r}")
    if not values:
        raise click.UsageError(f"{flag} must not be empty")
    return values


def _parse_methods(text: str) -> tuple[str, ...]:
    labels = tuple(part.strip() for part in text.split(",") if part.strip())
    if not labels:
        raise click.UsageError("--methods must name at least one method")
    for label in labels:
        try:
            parse_method(label)
        except ValueError as exc:
            raise click.UsageError(str(exc))
    return labels


_GRID_PARAMS = ("n", "theta", "p", "beta", "censoring")


def _parse_grid(text: str) -> tuple[str, tuple[float, ...]]:
    param, sep, rhs = text.partition("=")
    param = param.strip()
    if not sep or param not in _GRID_PARAMS:
        raise click.UsageError(
            f"--grid must look like param=start:stop:step or param=v1,v2,... with param in {_GRID_PARAMS}"
        )
    rhs = rhs.strip()
    if ":" in rhs:
        parts = rhs.split(":")
        if len(parts) != 3:
            raise click.UsageError(f"--grid range must be start:stop:step, got {rhs!r}")
        try:
            start, stop, step = (float(v) for v in parts)
        except ValueError:
            raise click.UsageError(f"--grid range must be numeric, got {rhs!r}")
        if step <= 0 or stop < start:
            raise click.UsageError("--grid range needs step > 0 and stop >= start")
        count = int((stop - start) / step + 1e-9) + 1
        values = tuple(round(start + i * step, 10) for i in range(count))
    else:
        values = _comma_floats(rhs, "--grid")
    if param in ("n", "p"):
        if any(v != int(v) or v < 1 for v in values):
            raise click.UsageError(f"--grid {param} values must be positive integers")
        values = tuple(int(v) for v in values)
    return param, values


def _build_test_config(kernel, beta, gamma, h, bootstrap_reps, alpha, seed, variant):
    if kernel == "beta":
        if gamma is not None:
            raise click.UsageError("--gamma applies to gauss/lap kernels, not --kernel beta")
        if beta is not None and not (0.0 < beta < 2.0):
            raise click.UsageError(f"--beta must lie in (0, 2), got {beta}")
        divergence = BetaSid(beta if beta is not None else 1.0)
        cov_kernel = None
    else:
        if beta is not None:
            raise click.UsageError("--beta requires --kernel beta")
        if gamma is not None and gamma <= 0:
            raise click.UsageError(f"--gamma must be positive, got {gamma}")
        cov_kernel = GaussianKernel(gamma) if kernel == "gauss" else LaplacianKernel(gamma)
        divergence = None
    if h is not None and h <= 0:
        raise click.UsageError(f"--h must be positive, got {h}")
    smoothing = SmoothingSpec(h) if h is not None else "auto"
    try:
        cfg = TestConfig(
            kernel=cov_kernel,
            smoothing=smoothing,
            bootstrap_reps=bootstrap_reps,
            alpha=alpha,
            seed=seed,
            bootstrap_variant=variant,
        )
    except ValueError as exc:
        raise click.UsageError(str(exc))
    return cfg, divergence


def _test_options(fn):
    decorators = [
        click.option("-i", "--input", "input_path", required=True, help="CSV file with one header row."),
        click.option("--time", "time_col", required=True, help="Name of the observed-time column."),
        click.option("--status", "status_col", required=True, help="Name of the 0/1 event indicator column."),
        click.option(
            "--cov",
            "covariate_cols",
            multiple=True,
            help="Covariate column (repeatable); default: every remaining column.",
        ),
        click.option("--kernel", type=click.Choice(["gauss", "lap", "beta"]), default="gauss", show_default=True),
        click.option("--beta", type=float, default=None, help="Exponent in (0, 2) for --kernel beta [default: 1]."),
        click.option("--gamma", type=float, default=None, help="Kernel scale; default: median heuristic."),
        click.option("--h", type=float, default=None, help="Smoothing bandwidth; default: normal-reference rule."),
        click.option("--B", "bootstrap_reps", type=int, default=2000, show_default=True, help="Bootstrap replicates."),
        click.option("--alpha", type=float, default=0.05, show_default=True),
        click.option("--variant", type=click.Choice(["v-wild", "u-wild"]), default="v-wild", show_default=True),
        click.option("--seed", type=int, default=DEFAULT_TEST_SEED, show_default=True),
        click.option("-o", "--output", type=click.Path(dir_okay=False), default=None, help="Also write the JSON here."),
    ]
    for dec in reversed(decorators):
        fn = dec(fn)
    return fn


def _run_csv_test(input_path, time_col, status_col, covariate_cols, cfg, divergence, output, flip):
    try:
        ds = ingest_csv(input_path, time_col, status_col, list(covariate_cols) or None)
        if flip:
            ds = flip_censoring(ds)
        result = run_test(ds, cfg, divergence=divergence)
    except (SidError, OSError) as exc:
        raise click.ClickException(str(exc))
    text = dumps_json(test_result_payload(result, cfg))
    click.echo(text, nl=False)
    if output is not None:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)


@main.command("test")
@_test_options
def cmd_test(input_path, time_col, status_col, covariate_cols, kernel, beta, gamma, h, bootstrap_reps, alpha, variant, seed, output):
    """Test independence of the event time and the covariates."""
    cfg, divergence = _build_test_config(kernel, beta, gamma, h, bootstrap_reps, alpha, seed, variant)
    _run_csv_test(input_path, time_col, status_col, covariate_cols, cfg, divergence, output, flip=False)


@main.command("censoring-test")
@_test_options
def cmd_censoring_test(input_path, time_col, status_col, covariate_cols, kernel, beta, gamma, h, bootstrap_reps, alpha, variant, seed, output):
    """Test independence of the censoring time and the covariates."""
    cfg, divergence = _build_test_config(kernel, beta, gamma, h, bootstrap_reps, alpha, seed, variant)
    _run_csv_test(input_path, time_col, status_col, covariate_cols, cfg, divergence, output, flip=True)


def _validate_scenario_flags(scenario, censoring, lam, theta, param=None):
    scen = SCENARIOS[scenario]
    if scen.lam_role == "fixed":
        if censoring is not None or lam is not None:
            raise click.UsageError(f"scenario {scenario} fixes its censoring law; drop --censoring/--lam")
    elif censoring is None and lam is None and param != "censoring":
        raise click.UsageError(f"scenario {scenario} needs --censoring or --lam")
    if censoring is not None and lam is not None:
        raise click.UsageError("--censoring and --lam are mutually exclusive")
    if scen.uses_theta and theta is None and param != "theta":
        raise click.UsageError(f"scenario {scenario} needs --theta")
    if not scen.uses_theta and theta is not None:
        raise click.UsageError(f"scenario {scenario} does not take --theta")


def _echo_rate_table(report):
    spec = report.spec
    head = f"scenario={spec.scenario} n={spec.n}"
    if spec.censoring is not None:
        head += f" censoring={spec.censoring:g}"
    if spec.lam is not None:
        head += f" lam={spec.lam:.6g}"
    if spec.theta is not None:
        head += f" theta={spec.theta:g}"
    head += f" reps={report.reps} B={report.bootstrap_reps} seed={report.seed}"
    click.echo(head)
    width = max(len(m) for m in report.methods)
    click.echo(f"{'method':<{width}}  {'alpha':>6}  {'rate':>6}")
    for method in report.methods:
        for alpha in report.alphas:
            click.echo(f"{method:<{width}}  {alpha:>6g}  {report.rate(method, alpha):>6.3f}")


def _write_outputs(base, payload, csv_writer, figure_renderer, no_figure):
    json_path = f"{base}.json"
    csv_path = f"{base}.csv"
    write_json(payload, json_path)
    csv_writer(csv_path)
    written = [json_path, csv_path]
    if not no_figure:
        png_path = f"{base}.png"
        figure_renderer(png_path)
        written.append(png_path)
    click.echo("wrote " + ", ".join(written))


@main.command("simulate")
@click.option("--scenario", type=_SCENARIO_CHOICE, required=True)
@click.option("--n", "n", type=int, required=True, help="Sample size per replicate.")
@click.option("--censoring", type=float, default=None, help="Target censoring fraction in (0, 1).")
@click.option("--lam", type=float, default=None, help="Censoring parameter; skips calibration.")
@click.option("--p", type=int, default=None, help="Covariate dimension (configurable scenarios only).")
@click.option("--theta", type=float, default=None, help="Signal strength (scenarios that take one).")
@click.option("--reps", type=int, default=200, show_default=True)
@click.option("--B", "bootstrap_reps", type=int, default=500, show_default=True)
@click.option("--alphas", default="0.05", show_default=True, help="Comma-separated levels.")
@click.option("--methods", default="sid-gauss", show_default=True, help="Comma-separated method labels.")
@click.option("--variant", type=click.Choice(["v-wild", "u-wild"]), default="v-wild", show_default=True)
@click.option("--seed", type=int, required=True)
@click.option("--threads", type=int, default=1, show_default=True)
@click.option("-o", "--output", default=None, help="Output base path [default: the scenario id].")
@click.option("--no-figure", is_flag=True, help="Skip the PNG figure.")
def cmd_simulate(scenario, n, censoring, lam, p, theta, reps, bootstrap_reps, alphas, methods, variant, seed, threads, output, no_figure):
    """Estimate rejection rates for one scenario; write JSON, CSV, and a figure."""
    _validate_scenario_flags(scenario, censoring, lam, theta)
    alphas = _comma_floats(alphas, "--alphas")
    method_labels = _parse_methods(methods)
    if reps < 1 or threads < 1:
        raise click.UsageError("--reps and --threads must be >= 1")
    try:
        spec = ScenarioSpec(scenario, n, censoring=censoring, p=p, theta=theta, lam=lam)
        cfg = TestConfig(bootstrap_reps=bootstrap_reps, alpha=alphas[0], seed=seed, bootstrap_variant=variant)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    try:
        report = monte_carlo(spec, method_labels, reps, cfg, alphas=alphas, threads=threads)
    except SidError as exc:
        raise click.ClickException(str(exc))
    _echo_rate_table(report)
    from .plots import render_report_figure

    _write_outputs(
        output or scenario,
        report_to_dict(report),
        lambda path: write_report_csv(report, path),
        lambda path: render_report_figure(report, path),
        no_figure,
    )


@main.command("sweep")
@click.option("--family", type=_SCENARIO_CHOICE, required=True, help="Scenario id swept along the grid.")
@click.option("--grid", required=True, help="param=start:stop:step or param=v1,v2,... (n, theta, p, beta, censoring).")
@click.option("--n", "n", type=int, default=None, help="Base sample size (required unless sweeping n).")
@click.option("--censoring", type=float, default=None)
@click.option("--lam", type=float, default=None)
@click.option("--p", type=int, default=None)
@click.option("--theta", type=float, default=None)
@click.option("--reps", type=int, default=200, show_default=True)
@click.option("--B", "bootstrap_reps", type=int, default=500, show_default=True)
@click.option("--alphas", default="0.05", show_default=True)
@click.option("--methods", default="sid-gauss", show_default=True, help="Ignored when sweeping beta.")
@click.option("--variant", type=click.Choice(["v-wild", "u-wild"]), default="v-wild", show_default=True)
@click.option("--seed", type=int, required=True)
@click.option("--threads", type=int, default=1, show_default=True)
@click.option("-o", "--output", default=None, help="Output base path [default: <family>-<param>-sweep].")
@click.option("--no-figure", is_flag=True, help="Skip the PNG figure.")
def cmd_sweep(family, grid, n, censoring, lam, p, theta, reps, bootstrap_reps, alphas, methods, variant, seed, threads, output, no_figure):
    """Run a scenario along a one-parameter grid; write power-curve data."""
    param, values = _parse_grid(grid)
    scen = SCENARIOS[family]
    if param == "theta" and not scen.uses_theta:
        raise click.UsageError(f"scenario {family} does not take theta")
    if param == "p" and not scen.p_configurable:
        raise click.UsageError(f"scenario {family} has a fixed covariate dimension")
    if param == "censoring" and scen.lam_role == "fixed":
        raise click.UsageError(f"scenario {family} fixes its censoring law")
    _validate_scenario_flags(family, censoring, lam, theta, param=param)
    alphas = _comma_floats(alphas, "--alphas")
    method_labels = _parse_methods(methods)
    if param == "beta" and any(not (0.0 < v < 2.0) for v in values):
        raise click.UsageError("--grid beta values must lie in (0, 2)")
    if reps < 1 or threads < 1:
        raise click.UsageError("--reps and --threads must be >= 1")
    if n is None:
        if param != "n":
            raise click.UsageError("--n is required unless the grid sweeps n")
        n = int(values[0])
    try:
        base = ScenarioSpec(family, n, censoring=censoring, p=p, theta=theta, lam=lam)
        cfg = TestConfig(bootstrap_reps=bootstrap_reps, alpha=alphas[0], seed=seed, bootstrap_variant=variant)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    try:
        sweep = power_sweep(base, param, values, method_labels, reps, cfg, alphas=alphas, threads=threads)
    except SidError as exc:
        raise click.ClickException(str(exc))
    for value, rep in zip(sweep.values, sweep.reports):
        click.echo(f"-- {param}={value:g}")
        _echo_rate_table(rep)
    from .plots import render_sweep_figure

    _write_outputs(
        output or f"{family}-{param}-sweep",
        sweep_to_dict(sweep),
        lambda path: write_sweep_csv(sweep, path),
        lambda path: render_sweep_figure(sweep, path),
        no_figure,
    )


if __name__ == "__main__":
    main()
