"""Command-line interface for delayed flocking simulations and certificates."""

from __future__ import annotations

import json
import logging
import sys
import traceback
from collections.abc import Iterator
from contextlib import contextmanager
from pathlib import Path

import click
from rich.markup import escape

from .config import RuntimeSettings
from .errors import (
    ConfigurationError,
    DomainError,
    FlockingError,
    InsufficientDataError,
    NotCertifiableError,
    NumericBlowUpError,
    StateError,
    UsageError,
)
from .logger import get_logger, set_level
from .models import RunConfig
from .orchestrator import Orchestrator
from .services.config_loader import ConfigLoader
from .utils import to_jsonable

logger = get_logger()

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INVALID_INPUT = 2
EXIT_BLOW_UP = 3
EXIT_INTERRUPTED = 130

# Errors caused by the user's inputs rather than by the run itself.
_INPUT_ERRORS = (ConfigurationError, UsageError, DomainError, InsufficientDataError, StateError)


@contextmanager
def exit_codes() -> Iterator[None]:
    """Translate package errors into the documented process exit codes."""
    try:
        yield
    except KeyboardInterrupt:
        logger.warning("🛑 Execution interrupted by user")
        sys.exit(EXIT_INTERRUPTED)
    except NotCertifiableError as e:
        logger.error(f"❌ Not certifiable: {escape(str(e))}")
        sys.exit(EXIT_FAILED)
    except NumericBlowUpError as e:
        logger.error(f"💥 Numeric blow-up at t={e.time}: {escape(str(e))}")
        sys.exit(EXIT_BLOW_UP)
    except _INPUT_ERRORS as e:
        logger.error(f"❌ {e.__class__.__name__}: {escape(str(e))}")
        sys.exit(EXIT_INVALID_INPUT)
    except FlockingError as e:
        logger.error(f"❌ {e.__class__.__name__}: {escape(str(e))}")
        sys.exit(EXIT_FAILED)
    except (click.exceptions.Exit, click.ClickException):
        raise
    except Exception as e:
        logger.error(f"💥 Unexpected error: {escape(str(e))}")
        logger.debug(f"Full traceback: {escape(traceback.format_exc())}")
        sys.exit(EXIT_FAILED)


def load_run_config(ctx: click.Context, path: Path | None = None) -> RunConfig:
    """Config from ``path`` or the global ``--config``, with the ``--seed`` override applied."""
    path = path or ctx.obj.get("config")
    if path is None:
        raise click.UsageError("a config file is required (--config PATH)")
    config = ConfigLoader.load_config(path)
    seed = ctx.obj.get("seed")
    if seed is not None:
        config = config.with_seed(seed)
    return config


def output_dir(ctx: click.Context, command: str) -> Path:
    out = ctx.obj.get("out")
    if out is not None:
        return Path(out)
    settings: RuntimeSettings = ctx.obj["settings"]
    return settings.artifact_root / command


def parse_tau_list(raw: str) -> list[float]:
    """Comma- or space-separated floats."""
    items = [item for item in raw.replace(",", " ").split() if item]
    try:
        return [float(item) for item in items]
    except ValueError:
        raise UsageError(f"malformed tau list '{raw}'")


@click.group()
@click.option(
    "--config",
    "-c",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="Run configuration (YAML or JSON) or a run manifest",
)
@click.option("--out", "-o", type=click.Path(file_okay=False, path_type=Path), help="Output directory")
@click.option("--seed", type=click.IntRange(0, 2**64 - 1), help="Override the scenario seed")
@click.option("--verbose", "-v", count=True, help="Increase verbosity (use -v, -vv, or -vvv)")
@click.option("--quiet", "-q", is_flag=True, help="Suppress non-error output")
@click.pass_context
def cli(
    ctx: click.Context,
    config: Path | None,
    out: Path | None,
    seed: int | None,
    verbose: int,
    quiet: bool,
) -> None:
    """🐦 Delayed flocking CLI

    Simulate the Cucker-Smale model with heterogeneous pairwise delays, verify its
    dissipative inequalities and compute flocking certificates:
    • simulate / sweep: seeded runs with CSV diagnostics and JSON summaries
    • certify: sufficient-condition check and admissible delay bound
    • fit: exponential decay rate of a diagnostics CSV
    """
    if quiet:
        set_level(logging.WARNING)
    elif verbose >= 3:
        set_level(logging.DEBUG)
    else:
        set_level(logging.INFO)

    ctx.ensure_object(dict)
    with exit_codes():
        ctx.obj["settings"] = RuntimeSettings.from_env()
    ctx.obj.update({"config": config, "out": out, "seed": seed})


@cli.command()
@click.pass_context
def simulate(ctx: click.Context) -> None:
    """🚀 Simulate a scenario and write diagnostics, summary and manifest."""
    with exit_codes():
        config = load_run_config(ctx)
        out = output_dir(ctx, "simulate")
        orchestrator = Orchestrator(ctx.obj["settings"])
        outcome = orchestrator.simulate(config, out)
        last = outcome.result.final_record
        click.echo(f"final d_X={last.d_X:.6g} d_V={last.d_V:.6g} -> {out}")


@cli.command()
@click.pass_context
def certify(ctx: click.Context) -> None:
    """📜 Compute a flocking certificate; exit 1 when the condition fails on the grid."""
    with exit_codes():
        config = load_run_config(ctx)
        out = output_dir(ctx, "certify")
        certificate = Orchestrator(ctx.obj["settings"]).certify(config, out)
        click.echo(json.dumps(to_jsonable(certificate.model_dump()), indent=2, sort_keys=True))


@cli.command()
@click.option("--taus", required=True, help='Strictly increasing delays, e.g. "0.01,0.02,0.05"')
@click.option("--workers", "-w", type=click.IntRange(1, None), help="Worker processes")
@click.pass_context
def sweep(ctx: click.Context, taus: str, workers: int | None) -> None:
    """📈 Rescale the delay matrix over a list of tau_max values and simulate each."""
    with exit_codes():
        tau_list = parse_tau_list(taus)
        config = load_run_config(ctx)
        out = output_dir(ctx, "sweep")
        outcome = Orchestrator(ctx.obj["settings"]).sweep(config, tau_list, out, workers=workers)
        for row in outcome.rows:
            click.echo(
                f"tau={row.tau:g} final_d_V={row.final_d_V:.3e} flocked={row.flocked} "
                f"certified={row.certified} envelope_violated={row.envelope_violated}"
            )
        if outcome.certified_envelope_violations:
            logger.error("❌ A certified run violated its envelope")
            sys.exit(EXIT_FAILED)


@cli.command()
@click.argument("csv", type=click.Path(path_type=Path))
@click.option("--t-start", type=float, default=None, help="Start of the fit window [default: 5 tau]")
@click.option(
    "--tau",
    type=click.FloatRange(min=0.0),
    default=None,
    help="tau_max for the default window; read from summary.json next to the CSV when omitted",
)
@click.pass_context
def fit(ctx: click.Context, csv: Path, t_start: float | None, tau: float | None) -> None:
    """📉 Fit d_V(t) ~ C exp(-rate t) on a diagnostics CSV."""
    with exit_codes():
        outcome = Orchestrator(ctx.obj["settings"]).fit(csv, t_start, tau)
        line = (
            f"C={outcome.fit.amplitude:.10g} rate={outcome.fit.rate:.10g} "
            f"t_start={outcome.fit.t_start:.10g}"
        )
        if outcome.certified_rate is not None:
            verdict = "pass" if outcome.consistent else "fail"
            line += f" certified_rate={outcome.certified_rate:.10g} {verdict}"
        click.echo(line)


@cli.command()
@click.argument("config", required=False, type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.pass_context
def validate(ctx: click.Context, config: Path | None) -> None:
    """✅ Validate a run configuration without simulating."""
    with exit_codes():
        logger.banner("Configuration Validation")
        run_config = load_run_config(ctx, config)
        logger.success(f"✅ Configuration is valid: {escape(run_config.describe())}")


@cli.command()
@click.pass_context
def info(ctx: click.Context) -> None:
    """ℹ️  Display version, RNG algorithm, registered checks and the artifact root."""
    from . import __version__
    from .checks import registry
    from .constants import RNG_ALGORITHM

    logger.banner("Delayed Flocking")
    click.echo(f"version: {__version__}")
    click.echo(f"rng: {RNG_ALGORITHM}")
    click.echo(f"checks: {', '.join(registry.available())}")
    click.echo(f"artifact root: {ctx.obj['settings'].artifact_root}")


def app_main() -> None:
    """Entry-point used by the console script."""
    cli(obj={})
