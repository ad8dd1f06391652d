from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class LinearModelSpec(BaseModel):
    """Second moments of a mean-zero (X, Y) pair, optionally with a linear truth"""

    model_config = ConfigDict(frozen=True)

    sigma: List[List[float]] = Field(..., description="Cov(X), p x p")
    exy: List[float] = Field(..., description="E(XY), length p")
    beta_true: Optional[List[float]] = Field(default=None, description="Y = X beta + eps")
    noise_var: float = Field(default=0.0, ge=0)

    @model_validator(mode="after")
    def validate_shapes(self) -> "LinearModelSpec":
        p = len(self.exy)
        if len(self.sigma) != p or any(len(row) != p for row in self.sigma):
            raise ValueError(f"sigma must be {p} x {p} to match exy")
        if self.beta_true is not None and len(self.beta_true) != p:
            raise ValueError(f"beta_true must have length {p}")
        return self

    @classmethod
    def from_linear_truth(cls, sigma, beta, noise_var: float = 0.0) -> "LinearModelSpec":
        """E(XY) = Sigma beta for Y = X beta + eps"""
        sigma = np.asarray(sigma, dtype=float)
        beta = np.asarray(beta, dtype=float)
        return cls(
            sigma=sigma.tolist(),
            exy=(sigma @ beta).tolist(),
            beta_true=beta.tolist(),
            noise_var=noise_var,
        )

    @property
    def p(self) -> int:
        return len(self.exy)

    @property
    def sigma_array(self) -> np.ndarray:
        return np.asarray(self.sigma, dtype=float)

    @property
    def exy_array(self) -> np.ndarray:
        return np.asarray(self.exy, dtype=float)
