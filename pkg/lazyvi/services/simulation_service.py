import logging
from typing import Dict, Optional

import numpy as np
from scipy.special import expit

from lazyvi.core.exceptions import OutOfRangeException
from lazyvi.core.numerics import RngLike, correlated_covariance, make_rng, mvn_sample, normal_cdf
from lazyvi.models.dataset import Dataset


logger = logging.getLogger(__name__)

LINEAR_CORR_BETA = (1.5, 1.2, 1.0, 0.0, 0.0, 0.0)
BINARY_PROBIT_BETA = (2.5, 3.5, 0.0, 0.0)
SPARSE_BETA_HEAD = (5.0, 4.0, 3.0, 2.0, 1.0)

DEFAULT_NOISE_SD = 0.1
DEFAULT_TEACHER_WIDTH = 50
DEFAULT_SIGMA_W = 0.3


def _check_n(n: int) -> None:
    if n < 1:
        raise OutOfRangeException(f"Sample size must be >= 1, got {n}")


def _check_rho(rho: float) -> None:
    if not -1.0 < rho < 1.0:
        raise OutOfRangeException(f"Correlation must satisfy |rho| < 1, got {rho}")


def sparse_beta(p: int) -> np.ndarray:
    """(5, 4, 3, 2, 1, 0, ..., 0) truncated or padded to length p"""
    beta = np.zeros(p)
    head = min(p, len(SPARSE_BETA_HEAD))
    beta[:head] = SPARSE_BETA_HEAD[:head]
    return beta


def gen_linear_corr(
    n: int, rho: float, rng: RngLike = None, noise_sd: float = DEFAULT_NOISE_SD
) -> Dataset:
    """Y = 1.5 X1 + 1.2 X2 + X3 + eps with X ~ N(0, I6), Corr(X1, X2) = rho"""
    _check_n(n)
    _check_rho(rho)
    gen = make_rng(rng)
    beta = np.array(LINEAR_CORR_BETA)
    sigma = correlated_covariance(len(beta), {(0, 1): rho})
    X = mvn_sample(np.zeros(len(beta)), sigma, n, gen)
    y = X @ beta + noise_sd * gen.standard_normal(n)
    return Dataset.from_arrays(
        X,
        y,
        metadata={"generator": "linear_corr", "rho": rho, "beta": beta.tolist(), "noise_sd": noise_sd},
    )


def gen_binary_probit(n: int, rng: RngLike = None) -> Dataset:
    """X ~ N(0, I4), Y ~ Bernoulli(Phi(X beta)) with beta = (2.5, 3.5, 0, 0)"""
    _check_n(n)
    gen = make_rng(rng)
    beta = np.array(BINARY_PROBIT_BETA)
    X = gen.standard_normal((n, len(beta)))
    prob = normal_cdf(X @ beta)
    y = (gen.uniform(size=n) < prob).astype(float)
    return Dataset.from_arrays(X, y, metadata={"generator": "binary_probit", "beta": beta.tolist()})


def sample_teacher(
    beta: np.ndarray,
    width: int = DEFAULT_TEACHER_WIDTH,
    sigma_w: float = DEFAULT_SIGMA_W,
    rng: RngLike = None,
) -> Dict[str, np.ndarray]:
    """Teacher network weights: W[:, j] ~ N(beta_j, sigma_w^2), V ~ N(0, 1) of length width"""
    if width < 1:
        raise OutOfRangeException(f"Teacher width must be >= 1, got {width}")
    if sigma_w < 0:
        raise OutOfRangeException(f"sigma_w must be >= 0, got {sigma_w}")
    gen = make_rng(rng)
    beta = np.asarray(beta, dtype=float)
    W = beta[None, :] + sigma_w * gen.standard_normal((width, beta.shape[0]))
    V = gen.standard_normal(width)
    return {"W": W, "V": V}


def gen_highdim_teacher(
    n: int,
    sigma_w: float = DEFAULT_SIGMA_W,
    rng: RngLike = None,
    width: int = DEFAULT_TEACHER_WIDTH,
    p: int = 100,
    rho: float = 0.5,
    noise_sd: float = DEFAULT_NOISE_SD,
) -> Dataset:
    """
    Y = V relu(W X) + eps from a randomly drawn one-hidden-layer teacher

    X ~ N(0, Sigma) with unit variances and Corr(X1, X2) = rho. The teacher is
    drawn first from the stream, then X, then the noise.
    """
    _check_n(n)
    _check_rho(rho)
    if p < 2:
        raise OutOfRangeException(f"High-dimensional regime needs p >= 2, got {p}")
    gen = make_rng(rng)
    beta = sparse_beta(p)
    teacher = sample_teacher(beta, width=width, sigma_w=sigma_w, rng=gen)

    sigma = correlated_covariance(p, {(0, 1): rho})
    X = mvn_sample(np.zeros(p), sigma, n, gen)
    y = np.maximum(X @ teacher["W"].T, 0.0) @ teacher["V"] + noise_sd * gen.standard_normal(n)
    return Dataset.from_arrays(
        X,
        y,
        metadata={
            "generator": "highdim_teacher",
            "beta": beta.tolist(),
            "sigma_w": sigma_w,
            "width": width,
            "rho": rho,
            "noise_sd": noise_sd,
            "teacher": teacher,
        },
    )


def gen_logistic_sparse(
    n: int, rng: RngLike = None, rho: float = 0.75, p: int = 100
) -> Dataset:
    """X ~ N(0, Sigma) with Corr(X1, X2) = rho, logit P(Y = 1) = X beta"""
    _check_n(n)
    _check_rho(rho)
    if p < 1:
        raise OutOfRangeException(f"p must be >= 1, got {p}")
    gen = make_rng(rng)
    beta = sparse_beta(p)
    pairs = {(0, 1): rho} if p >= 2 else None
    X = mvn_sample(np.zeros(p), correlated_covariance(p, pairs), n, gen)
    y = (gen.uniform(size=n) < expit(X @ beta)).astype(float)
    return Dataset.from_arrays(
        X, y, metadata={"generator": "logistic_sparse", "rho": rho, "beta": beta.tolist()}
    )


def linear_corr_variance(rho: float, noise_sd: Optional[float] = DEFAULT_NOISE_SD) -> float:
    """Var(Y) for gen_linear_corr"""
    b1, b2, b3 = LINEAR_CORR_BETA[:3]
    return b1**2 + b2**2 + b3**2 + 2 * b1 * b2 * rho + (noise_sd or 0.0) ** 2
