import logging
from typing import Literal, Optional, Union

import numpy as np
from scipy import linalg
from scipy.stats import norm

from lazyvi.core.exceptions import (
    DimensionMismatchException,
    NonFiniteInputException,
    NotPositiveDefiniteException,
    OutOfRangeException,
)
from lazyvi.utils.validators import is_finite_array, is_probability, is_symmetric


logger = logging.getLogger(__name__)

# Pivots at or below this (relative to the largest diagonal entry) mean the
# covariance is degenerate, e.g. rho = 1.
SPD_PIVOT_TOL = 1e-10

RngSeed = Union[int, np.integer]
RngLike = Union[RngSeed, np.random.Generator, None]


def make_rng(seed: RngLike = None) -> np.random.Generator:
    """Build a PCG64 generator; generators are passed through unchanged"""
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is not None and int(seed) < 0:
        raise OutOfRangeException(f"Seed must be a 64-bit unsigned integer, got {seed}")
    return np.random.default_rng(None if seed is None else int(seed))


def cholesky(a: np.ndarray) -> np.ndarray:
    """
    Lower-triangular L with L @ L.T == a

    Raises:
        NotPositiveDefiniteException: a is not symmetric, or a pivot is <= 1e-10
            relative to the largest diagonal entry
    """
    a = np.asarray(a, dtype=float)
    if not is_finite_array(a):
        raise NonFiniteInputException("Matrix contains non-finite entries")
    if not is_symmetric(a, tol=SPD_PIVOT_TOL):
        raise NotPositiveDefiniteException("Matrix is not symmetric")
    if a.shape[0] == 0:
        return a.copy()

    try:
        lower = linalg.cholesky(a, lower=True)
    except linalg.LinAlgError as e:
        raise NotPositiveDefiniteException(f"Cholesky failed: {e}")

    scale = max(1.0, float(np.max(np.abs(np.diag(a)))))
    pivots = np.diag(lower) ** 2
    if np.any(pivots <= SPD_PIVOT_TOL * scale):
        k = int(np.argmin(pivots))
        raise NotPositiveDefiniteException(
            f"Pivot {k} is {pivots[k]:.3e}; matrix is numerically singular"
        )
    return lower


def _solve_spd(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    c, low = linalg.cho_factor(a, lower=True, check_finite=False)
    return linalg.cho_solve((c, low), b, check_finite=False)


def ridge_solve(
    phi: np.ndarray,
    e: np.ndarray,
    lam: float,
    method: Literal["auto", "primal", "dual"] = "auto",
) -> np.ndarray:
    """
    Minimizer of (1/n) * ||e - phi @ w||^2 + lam * ||w||^2

    The primal path solves (phi.T phi + n lam I) w = phi.T e and is used when
    M <= n; the dual path computes w = phi.T (phi phi.T + n lam I)^-1 e.
    """
    phi = np.asarray(phi, dtype=float)
    e = np.asarray(e, dtype=float).reshape(-1)
    if phi.ndim != 2 or phi.shape[0] != e.shape[0]:
        raise DimensionMismatchException(
            f"Feature matrix {phi.shape} does not match residuals of length {e.shape[0]}"
        )
    n, m = phi.shape
    if n < 1 or m < 1:
        raise DimensionMismatchException("Ridge problem needs n >= 1 and M >= 1")
    if not lam > 0:
        raise OutOfRangeException(f"Ridge penalty must be positive, got {lam}")
    if not (is_finite_array(phi) and is_finite_array(e)):
        raise NonFiniteInputException("Ridge inputs contain non-finite entries")

    shift = n * float(lam)
    if method == "auto":
        method = "primal" if m <= n else "dual"

    if method == "primal":
        gram = phi.T @ phi
        gram.flat[:: m + 1] += shift
        return _solve_spd(gram, phi.T @ e)

    kernel = phi @ phi.T
    kernel.flat[:: n + 1] += shift
    return phi.T @ _solve_spd(kernel, e)


def mvn_sample(
    mean: np.ndarray, sigma: np.ndarray, n: int, rng: RngLike = None
) -> np.ndarray:
    """Draw n rows from N(mean, sigma) via the Cholesky factor of sigma"""
    mean = np.asarray(mean, dtype=float).reshape(-1)
    sigma = np.asarray(sigma, dtype=float)
    p = mean.shape[0]
    if sigma.shape != (p, p):
        raise DimensionMismatchException(
            f"Covariance {sigma.shape} does not match mean of length {p}"
        )
    lower = cholesky(sigma)
    if n == 0:
        return np.empty((0, p))
    z = make_rng(rng).standard_normal((n, p))
    return z @ lower.T + mean


def normal_quantile(p: float) -> float:
    """Inverse standard normal CDF"""
    if not is_probability(p):
        raise OutOfRangeException(f"Quantile level must lie in (0, 1), got {p}")
    return float(norm.ppf(p))


def normal_cdf(x: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    return norm.cdf(x)


def correlated_covariance(p: int, pairs: Optional[dict] = None) -> np.ndarray:
    """Identity covariance with the given off-diagonal (i, j) -> value entries"""
    sigma = np.eye(p)
    for (i, j), value in (pairs or {}).items():
        sigma[i, j] = sigma[j, i] = value
    return sigma
