"""Command-line entry point.

Exit codes: 0 success, 1 validation failure, 2 bad configuration or input.
"""

from __future__ import annotations

import sys

import click

from .config import ESTIMATORS, ConfigError, load_config
from .harness import (RunResult, emit_outputs, plot_data, read_lags, recover, run_fdd,
                      run_monte_carlo)
from .validate import SUITES, run_validate


def _load(config, **overrides):
    try:
        cfg = load_config(config)
        if overrides.get("estimators") is not None:
            overrides["estimators"] = tuple(
                t.strip().lower() for t in overrides["estimators"].split(",") if t.strip())
        return cfg.with_overrides(**overrides)
    except (ConfigError, TypeError, ValueError) as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(2)


def _common(fn):
    fn = click.option("--config", type=click.Path(dir_okay=False), default=None,
                      help="INI configuration file.")(fn)
    fn = click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=None)(fn)
    fn = click.option("--out", type=click.Path(file_okay=False), default=None,
                      help="Output directory.")(fn)
    fn = click.option("--trials", type=click.IntRange(0), default=None)(fn)
    fn = click.option("--estimators", default=None,
                      help=f"Comma list from {','.join(ESTIMATORS)}.")(fn)
    return fn


def _summary(res: RunResult, metric_names):
    from .harness import aggregate
    for row in aggregate(res.rows, metric_names):
        click.echo(f"{row['estimator']:>5} {row['metric']:>4}  mean {row['mean']:.4g}  "
                   f"median {row['median']:.4g}  n {row['n']}  failures {row['failures']}")


@click.group()
def main():
    """Chebyshev-domain angular power spectrum estimation from array covariances."""


@main.command("montecarlo")
@_common
def montecarlo_cmd(config, seed, out, trials, estimators):
    """Monte-Carlo comparison of the estimators on random scenes."""
    cfg = _load(config, seed=seed, out=out, trials=trials, estimators=estimators)
    res = run_monte_carlo(cfg)
    paths = emit_outputs(res, cfg.out, "montecarlo")
    _summary(res, cfg.metrics)
    click.echo(f"{cfg.trials} trials in {res.wall_s:.1f} s; wrote {', '.join(map(str, paths))}")


@main.command("fdd")
@_common
def fdd_cmd(config, seed, out, trials, estimators):
    """Downlink covariance prediction from uplink lags."""
    cfg = _load(config, seed=seed, out=out, trials=trials, estimators=estimators)
    res = run_fdd(cfg)
    paths = emit_outputs(res, cfg.out, "fdd")
    _summary(res, ("nmse",))
    click.echo(f"{cfg.trials} users in {res.wall_s:.1f} s; wrote {', '.join(map(str, paths))}")


@main.command("recover")
@click.argument("lags", type=click.Path(exists=True, dir_okay=False))
@_common
def recover_cmd(lags, config, seed, out, trials, estimators):
    """Estimate the spectrum from one covariance file with rows m,re,im."""
    cfg = _load(config, seed=seed, out=out, trials=trials, estimators=estimators)
    try:
        r = read_lags(lags)
        paths = recover(r, cfg, cfg.out)
    except (ValueError, ConfigError) as exc:
        click.echo(f"input error: {exc}", err=True)
        sys.exit(2)
    click.echo("wrote " + ", ".join(map(str, paths)))


@main.command("plotdata")
@click.option("--trial", type=click.IntRange(0), default=0, show_default=True)
@_common
def plotdata_cmd(trial, config, seed, out, trials, estimators):
    """Truth and estimator samples for one Monte-Carlo trial."""
    cfg = _load(config, seed=seed, out=out, trials=trials, estimators=estimators)
    res = RunResult([], plot_data(cfg, trial))
    paths = emit_outputs(res, cfg.out, f"plot_trial{trial}")
    click.echo(f"wrote {paths[-1]}")


@main.command("validate")
@click.argument("suite", type=click.Choice(["all", *SUITES]), default="all")
@click.option("--seed", type=click.IntRange(0), default=0)
def validate_cmd(suite, seed):
    """Run numerical self-checks; exit 1 if any fails."""
    checks = run_validate(suite, seed)
    click.echo("suite,check,value,tol,passed")
    for c in checks:
        click.echo(f"{c.suite},{c.name.replace(',', ';')},{c.value:.3e},{c.tol:.1e},"
                   f"{'pass' if c.passed else 'FAIL'}")
    sys.exit(0 if all(c.passed for c in checks) else 1)


if __name__ == "__main__":
    main()
