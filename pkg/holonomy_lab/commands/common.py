"""
Shared plumbing for the CLI commands: options, logging, config loading and
error reporting.
"""
import logging
from pathlib import Path
from typing import Callable, List, Optional

import typer
from pydantic import ValidationError
from rich.console import Console
from rich.logging import RichHandler

from .. import __version__, settings
from ..errors import ConfigError, HolonomyLabError, ToleranceFailure
from ..schemas import ErrorObject, Report, RunConfig
from ..utils.parser import load_config_values
from ..utils.report import finalize, write_json

logger = logging.getLogger(__name__)

CONFIG_OPTION = typer.Option(None, "--config", "-c", help="Flat KEY=value config file")
SET_OPTION = typer.Option(None, "--set", "-s", help="Override one config key, e.g. --set K=2048")
OUT_OPTION = typer.Option(None, "--out", "-o", help="Write the report to this path")
QUIET_OPTION = typer.Option(False, "--quiet", "-q", help="Only log warnings and errors")

Action = Callable[[RunConfig, Optional[str]], str]


def configure_logging(quiet: bool) -> None:
    """Rich console handler on the package logger, writing to stderr."""
    level = "WARNING" if quiet else settings.get_log_level("INFO")
    package_logger = logging.getLogger("holonomy_lab")
    package_logger.handlers.clear()
    package_logger.addHandler(RichHandler(console=Console(stderr=True), show_path=False))
    package_logger.setLevel(level)
    package_logger.propagate = False


def load_run_config(config_path: Optional[Path], overrides: Optional[List[str]]) -> RunConfig:
    """
    Raises:
        ConfigError: on unreadable files, unknown keys or invalid values
    """
    values = load_config_values(str(config_path) if config_path else None, overrides or [])
    try:
        return RunConfig.model_validate(values)
    except ValidationError as e:
        problems = [{"key": ".".join(str(part) for part in error["loc"]), "message": error["msg"]}
                    for error in e.errors()]
        raise ConfigError("invalid configuration", problems=problems)


def error_report(error: HolonomyLabError) -> Report:
    """The error alone, or the full report plus the error for tolerance failures."""
    detail = ErrorObject(**{k: v for k, v in error.to_dict().items() if k != "report"})
    report = error.context.get("report")
    if isinstance(error, ToleranceFailure) and isinstance(report, Report):
        return finalize(report.model_copy(update={"error": detail}))
    return Report(version=__version__, error=detail)


def execute(action: Action, config_path: Optional[Path], overrides: Optional[List[str]],
            out: Optional[Path], quiet: bool) -> None:
    """
    Load the config, run ``action`` and map failures to exit codes.

    The action writes its report to the target path (``--out`` or the
    config's ``output_path``) and returns the text; without a target the
    text goes to stdout. Errors are written to both.
    """
    configure_logging(quiet)
    target = str(out) if out else None
    try:
        config = load_run_config(config_path, overrides)
        target = target or config.output_path
        text = action(config, target)
    except HolonomyLabError as e:
        logger.error("%s: %s", type(e).__name__, e.detail)
        typer.echo(write_json(error_report(e), target), nl=False)
        raise typer.Exit(code=e.exit_code)

    if target:
        logger.info("report written to %s", target)
    else:
        typer.echo(text, nl=False)
