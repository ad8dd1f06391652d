from dataclasses import dataclass, field, replace
import logging
from typing import Any, Dict, Iterable, Optional, Tuple

import numpy as np

from lazyvi.core.exceptions import (
    BadSizeException,
    DimensionMismatchException,
    IndexOutOfRangeException,
)
from lazyvi.core.numerics import RngLike, make_rng
from lazyvi.utils.validators import is_valid_index


logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Dataset:
    X: np.ndarray
    y: np.ndarray
    column_means: np.ndarray
    feature_names: Optional[Tuple[str, ...]] = None
    metadata: Dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.X.ndim != 2:
            raise DimensionMismatchException(f"X must be 2-D, got shape {self.X.shape}")
        if self.X.shape[0] != self.y.shape[0]:
            raise DimensionMismatchException(
                f"X has {self.X.shape[0]} rows but y has {self.y.shape[0]} entries"
            )
        if self.column_means.shape != (self.X.shape[1],):
            raise DimensionMismatchException(
                f"column_means has shape {self.column_means.shape}, expected ({self.p},)"
            )
        if self.feature_names is not None and len(self.feature_names) != self.p:
            raise DimensionMismatchException(
                f"{len(self.feature_names)} feature names for {self.p} columns"
            )
        for array in (self.X, self.y, self.column_means):
            array.setflags(write=False)

    @classmethod
    def from_arrays(
        cls,
        X,
        y,
        feature_names: Optional[Iterable[str]] = None,
        column_means: Optional[np.ndarray] = None,
        metadata: Optional[Dict[str, Any]] = None,
    ) -> "Dataset":
        """Build a dataset, computing column means from X unless given"""
        X = np.array(X, dtype=float, copy=True)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        y = np.array(y, dtype=float, copy=True).reshape(-1)
        if column_means is None:
            column_means = X.mean(axis=0) if X.shape[0] else np.zeros(X.shape[1])
        return cls(
            X=X,
            y=y,
            column_means=np.array(column_means, dtype=float, copy=True),
            feature_names=tuple(feature_names) if feature_names is not None else None,
            metadata=dict(metadata or {}),
        )

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def name_of(self, j: int) -> str:
        return self.feature_names[j] if self.feature_names else f"X{j + 1}"

    def subset(self, rows: np.ndarray, column_means: Optional[np.ndarray] = None) -> "Dataset":
        """Rows of this dataset, carrying the given (or current) column means"""
        means = self.column_means if column_means is None else column_means
        return Dataset.from_arrays(
            self.X[rows],
            self.y[rows],
            feature_names=self.feature_names,
            column_means=means,
            metadata=self.metadata,
        )


@dataclass(frozen=True, eq=False)
class Split:
    train: Dataset
    test: Dataset
    train_index: np.ndarray
    test_index: np.ndarray

    @property
    def n1(self) -> int:
        return self.train.n

    @property
    def n2(self) -> int:
        return self.test.n

    @property
    def p(self) -> int:
        return self.train.p

    def map(self, transform) -> "Split":
        """Apply the same dataset transform to both parts"""
        return replace(self, train=transform(self.train), test=transform(self.test))


def dropout_transform(d: Dataset, j: int) -> Dataset:
    """Replace column j by column_means[j]; everything else is untouched"""
    if not is_valid_index(j, d.p):
        raise IndexOutOfRangeException(j, d.p)
    X = np.array(d.X, copy=True)
    X[:, j] = d.column_means[j]
    return replace(d, X=X, y=np.array(d.y, copy=True), column_means=np.array(d.column_means))


def mask_features(d: Dataset, columns: Iterable[int]) -> Dataset:
    """Mean-impute every column in ``columns`` by repeated dropout_transform"""
    out = d
    for j in sorted(set(int(c) for c in columns)):
        out = dropout_transform(out, j)
    return out


def split(d: Dataset, n1: int, rng: RngLike = None) -> Split:
    """
    Uniformly random train/test partition with n1 training rows

    Both parts carry the training column means, so imputation at test time
    uses training statistics.
    """
    if not 0 < n1 < d.n:
        raise BadSizeException(f"Training size must satisfy 0 < n1 < n={d.n}, got {n1}")

    order = make_rng(rng).permutation(d.n)
    train_index = np.sort(order[:n1])
    test_index = np.sort(order[n1:])

    train_means = d.X[train_index].mean(axis=0)
    train = d.subset(train_index, column_means=train_means)
    test = d.subset(test_index, column_means=train_means)
    logger.debug(f"Split n={d.n} into n1={n1}, n2={d.n - n1}")
    return Split(train=train, test=test, train_index=train_index, test_index=test_index)
