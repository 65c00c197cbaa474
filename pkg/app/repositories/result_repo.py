"""
Result Repository
Persistence for experiment results: one CSV table per run plus a JSON
metadata sidecar.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Tuple

import numpy as np
import pandas as pd

from app.core.exceptions import OutputError
from app.schemas.experiment import ExperimentResult

logger = logging.getLogger(__name__)

# 17 significant digits round-trip any double
FLOAT_FORMAT = "%.17g"


def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, complex):
        return [value.real, value.imag]
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


class ResultRepository:

    @staticmethod
    def save(result: ExperimentResult, output_dir: str) -> Tuple[Path, Path]:
        out = Path(output_dir)
        csv_path = out / f"{result.kind}.csv"
        json_path = out / f"{result.kind}.json"
        try:
            out.mkdir(parents=True, exist_ok=True)
            ResultRepository.emit_csv(result.rows, result.columns, csv_path)
            sidecar = {"kind": result.kind, "columns": result.columns, "rows": result.rows, "metadata": result.metadata}
            json_path.write_text(json.dumps(sidecar, indent=2, default=_json_default), encoding="utf-8")
        except OSError as exc:
            raise OutputError(f"cannot write results to {out}: {exc}") from exc
        logger.info("wrote %d rows to %s", len(result.rows), csv_path)
        return csv_path, json_path

    @staticmethod
    def emit_csv(rows: List[Dict[str, Any]], columns: List[str], path: Path) -> None:
        """Header row plus one line per row; reals with 17 significant digits."""
        missing = {key for row in rows for key in row} - set(columns)
        if missing:
            raise OutputError(f"rows carry fields outside the schema: {sorted(missing)}")
        pd.DataFrame(rows, columns=columns).to_csv(path, index=False, float_format=FLOAT_FORMAT)

    @staticmethod
    def load_csv(path) -> pd.DataFrame:
        try:
            return pd.read_csv(path, float_precision="round_trip")
        except OSError as exc:
            raise OutputError(f"cannot read {path}: {exc}") from exc
