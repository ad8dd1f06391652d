from typing import Iterable

import numpy as np


def is_finite_array(values) -> bool:
    """Check that every entry is finite"""
    return bool(np.all(np.isfinite(np.asarray(values, dtype=float))))


def is_probability(p: float) -> bool:
    """Check that p lies in the open interval (0, 1)"""
    return 0.0 < p < 1.0


def is_valid_index(j: int, size: int) -> bool:
    """Validate a feature index"""
    return isinstance(j, (int, np.integer)) and 0 <= j < size


def is_valid_subset(columns: Iterable[int], size: int) -> bool:
    """Validate a set of feature indices"""
    return all(is_valid_index(j, size) for j in columns)


def is_square(a: np.ndarray) -> bool:
    return a.ndim == 2 and a.shape[0] == a.shape[1]


def is_symmetric(a: np.ndarray, tol: float = 1e-10) -> bool:
    """Check symmetry relative to the largest entry"""
    if not is_square(a):
        return False
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    return bool(np.all(np.abs(a - a.T) <= tol * scale))


def is_permutation(indices: Iterable[int], size: int) -> bool:
    """Check that indices form a permutation of range(size)"""
    values = list(indices)
    return len(values) == size and sorted(values) == list(range(size))
