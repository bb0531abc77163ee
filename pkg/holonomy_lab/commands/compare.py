"""
Compare command: numeric holonomy against the closed form and/or propagation.
"""
from pathlib import Path
from typing import List, Optional

from .. import service
from ..schemas import RunConfig
from ..utils.report import finalize, write_json
from .common import CONFIG_OPTION, OUT_OPTION, QUIET_OPTION, SET_OPTION, execute


def _emit(config: RunConfig, target: Optional[str]) -> str:
    return write_json(finalize(service.compare_report(config)), target)


def compare(
    config: Optional[Path] = CONFIG_OPTION,
    overrides: Optional[List[str]] = SET_OPTION,
    out: Optional[Path] = OUT_OPTION,
    quiet: bool = QUIET_OPTION,
):
    """
    Report distances to the oracles; exit code 4 if any exceeds its tolerance.
    """
    execute(_emit, config, overrides, out, quiet)
