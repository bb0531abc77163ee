"""
Propagate command: brute-force adiabatic evolution around the loop.
"""
from pathlib import Path
from typing import List, Optional

from .. import service
from ..schemas import RunConfig
from ..utils.report import finalize, write_json
from .common import CONFIG_OPTION, OUT_OPTION, QUIET_OPTION, SET_OPTION, execute


def _emit(config: RunConfig, target: Optional[str]) -> str:
    return write_json(finalize(service.propagate_report(config)), target)


def propagate(
    config: Optional[Path] = CONFIG_OPTION,
    overrides: Optional[List[str]] = SET_OPTION,
    out: Optional[Path] = OUT_OPTION,
    quiet: bool = QUIET_OPTION,
):
    """
    Evolve for N_periods periods, strip dynamical phases, report M_numeric.
    """
    execute(_emit, config, overrides, out, quiet)
