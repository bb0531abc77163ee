"""
Report emission: pydantic reports as JSON with a canonical hash, CSV spectra.
"""
import datetime as dt
import hashlib
import json
from pathlib import Path
from typing import Any, Dict, Optional, TypeVar

import numpy as np
import pandas as pd
from pydantic import BaseModel

VOLATILE_KEYS = ("generated_at", "canonical_hash")

ReportModel = TypeVar("ReportModel", bound=BaseModel)


def encode_complex(z) -> list:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def encode_matrix(m) -> list:
    """Row-major nested lists with each entry as [re, im]."""
    return [[encode_complex(z) for z in row] for row in np.asarray(m, dtype=complex)]


def encode_phase(phase) -> Any:
    """{re, im} for a scalar phase, the encoded matrix for a degenerate block."""
    if np.ndim(phase) == 0:
        z = complex(phase)
        return {"re": float(z.real), "im": float(z.imag)}
    return encode_matrix(phase)


def canonical_hash(payload: Dict[str, Any]) -> str:
    """sha256 of the sorted, compact JSON form, ignoring volatile keys."""
    stable = {k: v for k, v in payload.items() if k not in VOLATILE_KEYS}
    text = json.dumps(stable, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def timestamp() -> str:
    return dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds")


def finalize(report: ReportModel) -> ReportModel:
    """Copy of the report with its canonical hash and timestamp set."""
    payload = report.model_dump(mode="json")
    return report.model_copy(update={"canonical_hash": canonical_hash(payload),
                                     "generated_at": timestamp()})


def dump_json(report: BaseModel) -> str:
    return json.dumps(report.model_dump(mode="json"), indent=2, sort_keys=True) + "\n"


def write_json(report: BaseModel, path: Optional[str]) -> str:
    """Write to ``path`` when given; always return the text."""
    text = dump_json(report)
    if path:
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text, encoding="utf-8")
    return text


def write_csv(frame: pd.DataFrame, path: Optional[str]) -> str:
    """Write the table to ``path`` when given; always return the CSV text."""
    text = frame.to_csv(index=False, float_format="%.12g", lineterminator="\n")
    if path:
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text, encoding="utf-8")
    return text
