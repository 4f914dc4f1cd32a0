"""CLI entrypoints for inclusion MPC."""

from __future__ import annotations

import logging
import sys
from collections.abc import Iterator
from contextlib import contextmanager
from pathlib import Path

import click

from inclusion_mpc import __version__
from inclusion_mpc.config import RunConfig, Settings, load_config, resolve_output_dir
from inclusion_mpc.errors import ConfigError, InclusionMpcError, VerificationFailure

UNEXPECTED_EXIT = 9

STATUS_COLORS = {"PASS": "green", "FAIL": "red", "ERROR": "magenta"}


def setup_logging(verbose: bool = False, quiet: bool = False) -> None:
    """Configure logging."""
    if verbose:
        level = logging.DEBUG
    elif quiet:
        level = logging.WARNING
    else:
        level = logging.getLevelName(Settings().log_level.upper())
        if not isinstance(level, int):
            level = logging.INFO
    logging.basicConfig(
        level=level,
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
        force=True,
    )


@contextmanager
def exit_codes(logger: logging.Logger) -> Iterator[None]:
    """Turn toolkit errors into their exit codes and anything else into 9."""
    try:
        yield
    except InclusionMpcError as e:
        logger.error(str(e))
        click.echo(f"Error: {e}", err=True)
        sys.exit(e.exit_code)
    except (click.exceptions.Exit, click.exceptions.Abort, click.ClickException):
        raise
    except Exception as e:
        logger.exception(f"Unexpected failure: {e}")
        click.echo(f"Unexpected error: {e}", err=True)
        sys.exit(UNEXPECTED_EXIT)


def _load(config: Path, seed: int | None, drop_inconsistent: bool = False) -> RunConfig:
    cfg = load_config(config)
    if seed is not None:
        cfg = cfg.with_overrides(seed=seed)
    if drop_inconsistent:
        inclusion = cfg.inclusion.model_copy(update={"drop_inconsistent": True})
        cfg = cfg.model_copy(update={"inclusion": inclusion})
    return cfg


def _echo(ctx: click.Context, message: str) -> None:
    if not ctx.obj.get("quiet"):
        click.echo(message)


@click.group()
@click.version_option(version=__version__, prog_name="imc")
@click.option("-v", "--verbose", is_flag=True, help="Enable debug logging")
@click.option("-q", "--quiet", is_flag=True, help="Warnings only, no progress output")
@click.pass_context
def main(ctx: click.Context, verbose: bool, quiet: bool) -> None:
    """Inclusion MPC - control of unknown systems from a single trajectory."""
    setup_logging(verbose, quiet)
    ctx.ensure_object(dict)
    ctx.obj["verbose"] = verbose
    ctx.obj["quiet"] = quiet


@main.command()
@click.argument("config", type=click.Path(path_type=Path))
@click.option("--out", type=click.Path(path_type=Path), help="Output directory")
@click.option("--seed", type=int, default=None, help="Override the configured seed")
@click.option(
    "--drop-inconsistent",
    is_flag=True,
    help="Drop samples that contradict the side information instead of failing",
)
@click.option("--plans", is_flag=True, help="Also write every horizon plan to plans.jsonl")
@click.pass_context
def run(
    ctx: click.Context,
    config: Path,
    out: Path | None,
    seed: int | None,
    drop_inconsistent: bool,
    plans: bool,
) -> None:
    """Run one closed-loop episode from a config file."""
    from inclusion_mpc.artifacts import ArtifactStore
    from inclusion_mpc.episode import run_episode
    from inclusion_mpc.harness.environments import get_environment

    logger = logging.getLogger("imc.run")
    with exit_codes(logger):
        cfg = _load(config, seed, drop_inconsistent)
        env = get_environment(cfg.environment)
        result = run_episode(env, cfg)
        store = ArtifactStore(resolve_output_dir(cfg, out))
        store.save_episode(result, cfg.dt or env.dt, plans=plans)

        summary = result.log.summary()
        _echo(ctx, f"{env.name} ({cfg.side_info}): {summary['steps']} steps")
        _echo(ctx, f"  total cost          {summary['total_cost']:.6g}")
        _echo(ctx, f"  final-quarter cost  {summary['final_quarter_cost']:.6g}")
        if summary["baseline_final_quarter_cost"] is not None:
            _echo(ctx, f"  zero-control        {summary['baseline_final_quarter_cost']:.6g}")
        _echo(ctx, f"  median step         {summary['median_ms']:.1f} ms")
        _echo(ctx, f"  artifacts           {store.root}")
        if result.log.violations:
            raise VerificationFailure(
                f"{result.log.violations} steps left their predicted reachable box"
            )


@main.command()
@click.argument("suite")
@click.option("--scale", type=float, default=1.0, show_default=True, help="Trial-count factor")
@click.option("--seed", type=int, default=0, show_default=True, help="Battery seed")
@click.option("--out", type=click.Path(path_type=Path), help="Directory for the JSON report")
@click.pass_context
def verify(ctx: click.Context, suite: str, scale: float, seed: int, out: Path | None) -> None:
    """Run a verification battery: interval, contraction, reach, scp or suboptimality.

    `theorem3` is accepted as another name for the suboptimality battery.
    """
    from inclusion_mpc.artifacts import ArtifactStore
    from inclusion_mpc.runner import BatteryRunner

    logger = logging.getLogger("imc.verify")
    with exit_codes(logger):
        if scale <= 0:
            raise ConfigError("--scale must be positive")
        store = ArtifactStore(out or Settings().output_dir)
        result = BatteryRunner.for_suite(suite, scale, seed, store).run()

        _echo(ctx, f"Suite {suite}: {result.overall_status}")
        for check in result.check_results:
            color = STATUS_COLORS.get(str(check.status), "white")
            if not ctx.obj.get("quiet"):
                click.secho(f"  [{check.status}] ", fg=color, nl=False)
                click.echo(f"{check.name}: {check.summary}")
        if result.overall_status.is_problem():
            failed = sum(1 for r in result.check_results if r.status.is_problem())
            raise VerificationFailure(f"suite {suite}: {failed} checks did not pass")


@main.command()
@click.argument("config", type=click.Path(path_type=Path))
@click.option("--out", type=click.Path(path_type=Path), help="Output directory")
@click.option("--seed", type=int, default=None, help="Override the configured seed")
@click.pass_context
def ablate(ctx: click.Context, config: Path, out: Path | None, seed: int | None) -> None:
    """Run the same episode under each side-information tier and compare."""
    from inclusion_mpc.ablation import run_ablation
    from inclusion_mpc.artifacts import ABLATION_COLUMNS, ArtifactStore
    from inclusion_mpc.harness.environments import get_environment

    logger = logging.getLogger("imc.ablate")
    with exit_codes(logger):
        cfg = _load(config, seed)
        env = get_environment(cfg.environment)
        result = run_ablation(env, cfg)
        store = ArtifactStore(resolve_output_dir(cfg, out))
        for tier, episode in result.episodes.items():
            store.save_episode(episode, cfg.dt or env.dt, prefix=f"{tier}-")
        path = store.save_ablation(result.rows)

        _echo(ctx, "  ".join(f"{c:>18}" for c in ABLATION_COLUMNS))
        for row in result.rows:
            cells = [
                f"{v:>18.6g}" if isinstance(v, float) else f"{v!s:>18}"
                for v in (row[c] for c in ABLATION_COLUMNS)
            ]
            _echo(ctx, "  ".join(cells))
        _echo(ctx, f"Wrote {path}")
        result.require_monotone()


if __name__ == "__main__":
    main()
