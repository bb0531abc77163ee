"""
Spectrum command: tracked quasienergies along a sweep, as CSV.
"""
from pathlib import Path
from typing import List, Optional

from .. import service
from ..schemas import RunConfig
from ..utils.report import write_csv
from .common import CONFIG_OPTION, OUT_OPTION, QUIET_OPTION, SET_OPTION, execute


def _emit(config: RunConfig, target: Optional[str]) -> str:
    return write_csv(service.spectrum_table(config), target)


def spectrum(
    config: Optional[Path] = CONFIG_OPTION,
    overrides: Optional[List[str]] = SET_OPTION,
    out: Optional[Path] = OUT_OPTION,
    quiet: bool = QUIET_OPTION,
):
    """
    Sweep one coordinate (sweep_axis, sweep_span) and tabulate the bands.
    """
    execute(_emit, config, overrides, out, quiet)
