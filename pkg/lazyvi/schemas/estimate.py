from typing import List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator

from lazyvi.core.config import settings
from lazyvi.models.enums import LazyInit, VIMethod


ESTIMATE_CSV_COLUMNS = ["variable", "method", "vi", "se", "ci_lo", "ci_hi", "lambda", "seconds"]


class LazyConfig(BaseModel):
    """Ridge penalty selection for the lazy correction"""

    model_config = ConfigDict(frozen=True)

    lambda_grid: Optional[List[float]] = Field(
        default=None,
        description="Candidate penalties; None scales the default grid by sqrt(n1/1000)",
    )
    fixed_lambda: Optional[float] = Field(
        default=None, gt=0, description="Skip cross-validation and use this penalty"
    )
    cv_folds: int = Field(default=settings.DEFAULT_CV_FOLDS, ge=2)
    fold_seed: int = Field(default=0, ge=0)
    alpha: float = Field(default=settings.DEFAULT_ALPHA, gt=0, lt=1)
    init: LazyInit = LazyInit.FULL
    init_seed: int = Field(default=0, ge=0)

    @field_validator("lambda_grid")
    @classmethod
    def validate_grid(cls, v: Optional[List[float]]) -> Optional[List[float]]:
        if v is None:
            return v
        if not v:
            raise ValueError("lambda_grid must be nonempty")
        if any(lam <= 0 for lam in v):
            raise ValueError("lambda_grid entries must be positive")
        return sorted(float(lam) for lam in v)

    def grid_for(self, n1: int) -> List[float]:
        """Penalty candidates for a training set of n1 rows"""
        if self.lambda_grid is not None:
            return list(self.lambda_grid)
        scale = (n1 / settings.LAMBDA_REFERENCE_N) ** 0.5
        return [m * scale for m in settings.DEFAULT_LAMBDA_MULTIPLIERS]


class ViEstimate(BaseModel):
    """Variable importance estimate with its Wald interval"""

    variable: int = Field(..., ge=0)
    vi_hat: float
    tau_hat: float = Field(..., ge=0)
    ci: Tuple[float, float]
    alpha: float = Field(default=settings.DEFAULT_ALPHA, gt=0, lt=1)
    seconds: float = Field(default=0.0, ge=0)
    method: VIMethod
    lambda_used: Optional[float] = None
    feature_name: Optional[str] = None
    # Per-sample skill differences t_i; vi_hat is their mean
    terms: Optional[List[float]] = Field(default=None, exclude=True, repr=False)

    @property
    def ci_lo(self) -> float:
        return self.ci[0]

    @property
    def ci_hi(self) -> float:
        return self.ci[1]

    def covers(self, truth: float) -> bool:
        return self.ci[0] <= truth <= self.ci[1]

    def to_row(self) -> dict:
        return {
            "variable": self.variable,
            "method": self.method.value,
            "vi": self.vi_hat,
            "se": self.tau_hat,
            "ci_lo": self.ci[0],
            "ci_hi": self.ci[1],
            "lambda": self.lambda_used,
            "seconds": self.seconds,
        }
