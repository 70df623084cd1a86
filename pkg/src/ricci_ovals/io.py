"""CSV and JSON artifacts written by the laboratory."""

import json
import logging
import os
from typing import Any, Dict, Iterable, Mapping, Optional

import numpy as np
import pandas as pd

from .exceptions import GridError
from .geometry import CurvatureFields, ProfileGrid

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
FLOAT_FORMAT = "%.17g"


def _to_builtin(value: Any):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, (set, frozenset, tuple)):
        return list(value)
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def write_table(path: str, columns: Mapping[str, Iterable[float]]) -> str:
    """Write equally long columns to ``path`` as CSV, creating parent directories."""
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    frame = pd.DataFrame({name: np.asarray(values) for name, values in columns.items()})
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    logger.info(f"Wrote {len(frame)} rows to {path}")
    return path


def read_table(path: str, required: Iterable[str]) -> pd.DataFrame:
    frame = pd.read_csv(path)
    missing = [name for name in required if name not in frame.columns]
    if missing:
        raise GridError(f"{path} is missing columns: {', '.join(missing)}")
    return frame


def summary_document(payload: Mapping[str, Any], config: Optional[Mapping[str, Any]] = None) -> Dict[str, Any]:
    """Attach the schema version and the run configuration to a result payload."""
    document = {"schema": SCHEMA_VERSION, "config": dict(config or {})}
    document.update(payload)
    return document


def dumps(document: Mapping[str, Any]) -> str:
    """Deterministic JSON text for a summary document."""
    return json.dumps(document, indent=2, sort_keys=True, default=_to_builtin)


def write_json(path: str, payload: Mapping[str, Any], config: Optional[Mapping[str, Any]] = None) -> str:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(dumps(summary_document(payload, config)))
        f.write("\n")
    logger.info(f"Successfully saved summary to {path}")
    return path


def write_profile(path: str, p: ProfileGrid) -> str:
    return write_table(path, {"s": p.s, "psi": p.psi})


def read_profile(path: str, t: float = 0.0) -> ProfileGrid:
    frame = read_table(path, ("s", "psi"))
    return ProfileGrid(s=frame["s"].to_numpy(), psi=frame["psi"].to_numpy(), t=t)


def write_curvatures(path: str, p: ProfileGrid, fields: CurvatureFields) -> str:
    return write_table(path, {"s": p.s, "K0": fields.K0, "K1": fields.K1, "R": fields.R, "Q": fields.Q})
