import logging
from pathlib import Path
from typing import Union

import numpy as np
import pandas as pd

from lazyvi.core.exceptions import (
    DataException,
    EmptyDatasetException,
    MissingColumnException,
    ParseException,
)
from lazyvi.models.dataset import Dataset


logger = logging.getLogger(__name__)


class DatasetRepository:
    """Loads datasets from CSV files"""

    def load_csv(self, path: Union[str, Path], response_column: str) -> Dataset:
        """
        Read a numeric CSV with a header row

        Features keep file order with the response column excluded. Row numbers
        in errors count data rows from 1, not counting the header.
        """
        path = Path(path)
        try:
            frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
        except FileNotFoundError:
            raise DataException(f"Data file {path} not found")
        except pd.errors.EmptyDataError:
            raise EmptyDatasetException(f"Data file {path} is empty")
        except pd.errors.ParserError as e:
            raise DataException(f"Could not parse {path}: {str(e)}")

        if response_column not in frame.columns:
            raise MissingColumnException(response_column)
        if frame.empty:
            raise EmptyDatasetException(f"Data file {path} has no rows")

        numeric = frame.apply(lambda column: pd.to_numeric(column.str.strip(), errors="coerce"))
        bad = numeric.isna().to_numpy()
        if bad.any():
            rows, cols = np.nonzero(bad)
            row, col = int(rows[0]), int(cols[0])
            column = frame.columns[col]
            raise ParseException(row + 1, column, frame.iat[row, col])

        features = [c for c in frame.columns if c != response_column]
        dataset = Dataset.from_arrays(
            numeric[features].to_numpy(dtype=float),
            numeric[response_column].to_numpy(dtype=float),
            feature_names=features,
            metadata={"source": str(path), "response": response_column},
        )
        logger.info(f"Loaded {dataset.n} rows x {dataset.p} features from {path}")
        return dataset
