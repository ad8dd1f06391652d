import json
import logging
from pathlib import Path
from typing import Any, List, Sequence, Union

import numpy as np
import pandas as pd

from lazyvi.repositories.base import BaseJsonRepository
from lazyvi.schemas.estimate import ESTIMATE_CSV_COLUMNS, ViEstimate
from lazyvi.schemas.roar import RoarCurve
from lazyvi.schemas.run import CoverageRow, ExperimentResult, RunManifest
from lazyvi.schemas.shapley import ShapleyEstimate


logger = logging.getLogger(__name__)

RESULTS_CSV = "results.csv"
RESULTS_JSON = "results.json"
TIMINGS_CSV = "timings.csv"
COVERAGE_CSV = "coverage.csv"
MANIFEST_JSON = "manifest.json"

# Columns that identify a row in timings.csv
TIMING_KEYS = ["seed", "rho", "width", "t", "variable", "method", "coalition_method"]


def _to_builtin(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"Cannot serialize {type(value).__name__}")


class ResultRepository(BaseJsonRepository[RunManifest]):
    """Writes run outputs under one output directory"""

    def __init__(self, root: Union[str, Path]):
        super().__init__(RunManifest, root)

    def _write_csv(self, name: str, frame: pd.DataFrame) -> Path:
        path = self.path(name)
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, lineterminator="\n")
        return path

    def write_results(self, result: ExperimentResult) -> List[Path]:
        """
        results.csv without wall-clock, so reruns are byte-identical;
        results.json and timings.csv carry the timings
        """
        frame = pd.DataFrame(result.rows)
        written = [self._write_csv(RESULTS_CSV, frame.drop(columns=["seconds"], errors="ignore"))]

        if "seconds" in frame.columns:
            keys = [c for c in TIMING_KEYS if c in frame.columns]
            written.append(self._write_csv(TIMINGS_CSV, frame[keys + ["seconds"]]))

        if result.coverage:
            written.append(self.write_coverage(result.coverage))

        if result.estimates:
            written.extend(self.write_estimates(result.estimates))

        for name, estimate in result.shapley.items():
            written.extend(self.write_shapley(estimate, name))

        for name, curve in result.roar.items():
            written.append(self.write_roar(curve, name))

        payload = {
            "experiment": result.experiment.value,
            "rows": result.rows,
            "coverage": [row.model_dump(mode="json") for row in result.coverage],
            "summary": result.summary,
        }
        path = self.path(RESULTS_JSON)
        path.write_text(
            json.dumps(payload, indent=2, sort_keys=True, default=_to_builtin) + "\n",
            encoding="utf-8",
        )
        written.append(path)
        logger.info(f"Wrote {len(result.rows)} result rows to {self.root}")
        return written

    def write_coverage(self, rows: Sequence[CoverageRow]) -> Path:
        frame = pd.DataFrame([row.model_dump(mode="json", exclude_none=True) for row in rows])
        return self._write_csv(COVERAGE_CSV, frame)

    def write_manifest(self, manifest: RunManifest) -> Path:
        return self.save(MANIFEST_JSON, manifest)

    def write_estimates(self, estimates: Sequence[ViEstimate], name: str = "estimates") -> List[Path]:
        rows = [estimate.to_row() for estimate in estimates]
        csv_path = self._write_csv(f"{name}.csv", pd.DataFrame(rows, columns=ESTIMATE_CSV_COLUMNS))
        json_path = self.write_json(
            f"{name}.json", [estimate.model_dump(mode="json") for estimate in estimates]
        )
        return [csv_path, json_path]

    def write_shapley(self, estimate: ShapleyEstimate, name: str = "shapley") -> List[Path]:
        csv_path = self._write_csv(
            f"{name}.csv", pd.DataFrame(estimate.to_rows(), columns=["feature", "psi", "se"])
        )
        json_path = self.write_json(f"{name}.json", estimate.model_dump(mode="json"))
        return [csv_path, json_path]

    def write_roar(self, curve: RoarCurve, name: str = "roar") -> Path:
        frame = pd.DataFrame(curve.to_rows(), columns=["t", "method", "mse", "seconds"])
        return self._write_csv(f"{name}.csv", frame)
