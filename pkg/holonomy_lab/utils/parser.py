"""
Utility functions for parsing configuration input.
"""
import re
from typing import Dict, Iterable, List, Optional

import numpy as np
from dotenv import dotenv_values

from ..errors import ConfigError

_PI_LITERAL = re.compile(
    r"^\s*(?P<sign>[-+])?\s*(?P<coef>\d+(\.\d*)?|\.\d+)?\s*\*?\s*pi\s*(/\s*(?P<den>\d+(\.\d*)?))?\s*$",
    re.IGNORECASE,
)


def parse_angle(raw: str) -> float:
    """
    Parse a real number or a multiple of pi.

    Handles plain floats ("0.7", "1e-3") and pi literals
    ("pi", "-pi/2", "0.25*pi", "2pi", "3*pi/4").

    Raises:
        ConfigError: for anything else
    """
    text = raw.strip()
    try:
        return float(text)
    except ValueError:
        pass

    match = _PI_LITERAL.match(text)
    if not match:
        raise ConfigError(f"cannot parse '{raw}' as a number or multiple of pi", value=raw)
    value = np.pi
    if match.group("coef"):
        value *= float(match.group("coef"))
    if match.group("den"):
        value /= float(match.group("den"))
    if match.group("sign") == "-":
        value = -value
    return float(value)


def parse_list(raw: str) -> List[str]:
    """Comma-separated list, blanks dropped."""
    return [item.strip() for item in raw.split(",") if item.strip()]


def parse_waypoints(raw: str) -> List[List[float]]:
    """
    Parse ``"a,b,c; d,e,f; ..."`` into coordinate lists.

    Raises:
        ConfigError: on ragged rows or unparsable entries
    """
    rows = [row for row in raw.split(";") if row.strip()]
    points = [[parse_angle(item) for item in parse_list(row)] for row in rows]
    if len(points) < 2:
        raise ConfigError("waypoints need at least two points", waypoints=raw)
    widths = {len(point) for point in points}
    if len(widths) != 1:
        raise ConfigError("waypoints have differing numbers of coordinates", waypoints=raw)
    return points


def parse_overrides(items: Iterable[str]) -> Dict[str, str]:
    """
    Parse repeatable ``key=value`` overrides.

    Raises:
        ConfigError: if an item has no '=' or an empty key
    """
    overrides: Dict[str, str] = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"override '{item}' is not of the form key=value", override=item)
        overrides[key.strip()] = value.strip()
    return overrides


def load_config_values(path: Optional[str], overrides: Iterable[str] = ()) -> Dict[str, str]:
    """
    Read the flat KEY=value config file and apply overrides (later wins).

    Raises:
        ConfigError: if the file is missing or a key has no value
    """
    values: Dict[str, str] = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as handle:
                raw_values = dotenv_values(stream=handle)
        except OSError as e:
            raise ConfigError(f"cannot read config file '{path}': {e}", path=str(path))
        for key, value in raw_values.items():
            if value is None:
                raise ConfigError(f"config key '{key}' has no value", key=key)
            values[key] = value
    values.update(parse_overrides(overrides))
    return values
