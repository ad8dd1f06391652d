import logging
from typing import Tuple

import numpy as np
from scipy import linalg

from lazyvi.core.exceptions import (
    IndexOutOfRangeException,
    MissingBetaException,
    NotPositiveDefiniteException,
    OutOfRangeException,
)
from lazyvi.core.numerics import cholesky, correlated_covariance
from lazyvi.schemas.analytic import LinearModelSpec
from lazyvi.services.simulation_service import DEFAULT_NOISE_SD, LINEAR_CORR_BETA
from lazyvi.utils.validators import is_valid_index


logger = logging.getLogger(__name__)


def _spd_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return linalg.cho_solve((cholesky(a), True), b)


def _partition(spec: LinearModelSpec, j: int):
    """(Sigma_jj, gamma, S, remaining indices) for feature j"""
    if not is_valid_index(j, spec.p):
        raise IndexOutOfRangeException(j, spec.p)
    sigma = spec.sigma_array
    rest = [k for k in range(spec.p) if k != j]
    return sigma[j, j], sigma[j, rest], sigma[np.ix_(rest, rest)], rest


def _conditional_terms(spec: LinearModelSpec, j: int) -> Tuple[float, float, np.ndarray, list]:
    """(Sigma_jj, q, S^-1 gamma, rest); checks that Sigma is SPD"""
    cholesky(spec.sigma_array)
    sigma_jj, gamma, rest_cov, rest = _partition(spec, j)
    if not rest:
        return sigma_jj, 0.0, np.zeros(0), rest
    s_inv_gamma = _spd_solve(rest_cov, gamma)
    return sigma_jj, float(gamma @ s_inv_gamma), s_inv_gamma, rest


def example1_vi(beta1: float, beta2: float, rho: float, sigma: float) -> float:
    """
    Retrain VI of X1 when Y = beta1 X1 + beta2 X2 with Var(X1) = Var(X2) = sigma^2

    beta1^2 Var(X1 | X2) = beta1^2 (1 - rho^2) sigma^2; beta2 does not enter.
    """
    if abs(rho) >= 1:
        raise OutOfRangeException(f"Correlation must satisfy |rho| < 1, got {rho}")
    if sigma <= 0:
        raise OutOfRangeException(f"sigma must be > 0, got {sigma}")
    return beta1**2 * (1 - rho**2) * sigma**2


def population_beta(spec: LinearModelSpec) -> np.ndarray:
    """beta* solving Sigma beta = E(XY)"""
    return _spd_solve(spec.sigma_array, spec.exy_array)


def dropout_retrain_gap(spec: LinearModelSpec, j: int) -> float:
    """
    Population difference between the dropout and retrain VI of feature j

    q / (Sigma_jj - q)^2 * [E(X_j Y) - gamma' S^-1 E(X_-j Y)]^2
    """
    sigma_jj, q, s_inv_gamma, rest = _conditional_terms(spec, j)
    if not rest:
        return 0.0
    residual_var = sigma_jj - q
    if residual_var <= 0:
        raise NotPositiveDefiniteException(f"Var(X_{j} | X_-{j}) is not positive")
    exy = spec.exy_array
    bracket = exy[j] - s_inv_gamma @ exy[rest]
    return float(q / residual_var**2 * bracket**2)


def linear_truth_vis(spec: LinearModelSpec, j: int) -> Tuple[float, float]:
    """
    (retrain VI, dropout VI) of feature j under the linear truth

    beta_j^2 (Sigma_jj - q) and beta_j^2 Sigma_jj, with q = gamma' S^-1 gamma,
    gamma = Sigma[j, -j] and S the covariance of the other features.
    """
    if spec.beta_true is None:
        raise MissingBetaException()
    sigma_jj, q, _, _ = _conditional_terms(spec, j)
    beta_j = spec.beta_true[j]
    return beta_j**2 * (sigma_jj - q), beta_j**2 * sigma_jj


def linear_corr_spec(rho: float, noise_sd: float = DEFAULT_NOISE_SD) -> LinearModelSpec:
    """Population spec of the correlated linear simulation"""
    if abs(rho) >= 1:
        raise OutOfRangeException(f"Correlation must satisfy |rho| < 1, got {rho}")
    sigma = correlated_covariance(len(LINEAR_CORR_BETA), {(0, 1): rho})
    return LinearModelSpec.from_linear_truth(sigma, LINEAR_CORR_BETA, noise_var=noise_sd**2)
